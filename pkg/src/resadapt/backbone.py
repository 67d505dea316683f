"""Frozen toy dual encoder over token sequences.

Each encoder is a random embedding table plus a stack of frozen attention
layers applied with a residual skip (x <- x + attn(x)), mean-pooled over
positions and L2-normalized. Image-like inputs are token sequences; the
text side encodes 4-token class templates (3 fixed prefix tokens plus one
class token). Adapters or prompts may be attached to the first layers of a
stack; with fresh residual adapters the encoder output is bit-identical to
the frozen one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .attention import (
    Adapter,
    FrozenAttention,
    PromptBaseline,
    frozen_attn_backward,
    frozen_attn_with_cache,
    prepend_attn_backward,
    prepend_attn_with_cache,
    random_frozen_attention,
    residual_attn_backward,
    residual_attn_with_cache,
)
from .errors import ContractError, ShapeError
from .numkernel import make_rng

TEMPLATE_PREFIX = (0, 1, 2)


@dataclass(frozen=True)
class ClassTemplate:
    """Text-side description of one class: fixed prefix + class token."""

    prefix: tuple[int, ...]
    class_token: int

    def __post_init__(self):
        if len(self.prefix) != 3:
            raise ShapeError("template prefix must have exactly 3 tokens")

    def token_ids(self) -> np.ndarray:
        return np.array(self.prefix + (self.class_token,), dtype=np.int64)


@dataclass(frozen=True)
class EncoderStack:
    """Immutable encoder: embedding table (vocab, d) + frozen layers."""

    embed: np.ndarray
    layers: tuple[FrozenAttention, ...]

    @property
    def vocab(self) -> int:
        return self.embed.shape[0]

    @property
    def d(self) -> int:
        return self.embed.shape[1]

    @property
    def depth(self) -> int:
        return len(self.layers)


@dataclass(frozen=True)
class DualEncoder:
    """Image-like and text-like encoder pair sharing vocab and width."""

    image: EncoderStack
    text: EncoderStack


def build_encoder(vocab: int, d: int, depth: int, rng: np.random.Generator) -> EncoderStack:
    """Random frozen encoder: embeddings N(0, 1), depth attention layers."""
    if vocab < 1 or d < 1 or depth < 1:
        raise ShapeError("vocab, d, and depth must be positive")
    embed = rng.normal(0.0, 1.0, size=(vocab, d))
    layers = tuple(random_frozen_attention(d, rng) for _ in range(depth))
    return EncoderStack(embed=embed, layers=layers)


def build_dual_encoder(vocab: int, d: int, depth: int, seed: int) -> DualEncoder:
    """Two towers over one shared embedding table.

    Sharing the table is what gives the frozen pair its zero-shot ability:
    a class token contributes the same vector on both sides, and the
    residual skips carry it through each tower, so image features correlate
    with the matching template feature. The attention stacks themselves are
    independently random.
    """
    rng = make_rng(seed, 77)
    embed = rng.normal(0.0, 1.0, size=(vocab, d))
    image_layers = tuple(random_frozen_attention(d, rng) for _ in range(depth))
    text_layers = tuple(random_frozen_attention(d, rng) for _ in range(depth))
    return DualEncoder(
        image=EncoderStack(embed=embed, layers=image_layers),
        text=EncoderStack(embed=embed, layers=text_layers),
    )


@dataclass(frozen=True)
class EncoderSpec:
    """Everything needed to rebuild a dual encoder bit-for-bit."""

    vocab: int = 256
    d: int = 32
    depth: int = 2
    seed: int = 0

    def __post_init__(self):
        if min(self.vocab, self.d, self.depth) < 1:
            raise ContractError(
                f"vocab, d, depth must be >= 1, got ({self.vocab}, {self.d}, {self.depth})"
            )
        if self.seed < 0:
            raise ContractError("seed must be non-negative")

    def build(self) -> DualEncoder:
        return build_dual_encoder(self.vocab, self.d, self.depth, self.seed)


def _check_ids(token_ids, vocab: int) -> np.ndarray:
    ids = np.asarray(token_ids, dtype=np.int64)
    if ids.ndim not in (1, 2):
        raise ShapeError(f"token ids must be 1-D or 2-D, got shape {ids.shape}")
    if ids.size == 0:
        raise ShapeError("empty token sequence")
    if np.any(ids < 0) or np.any(ids >= vocab):
        raise IndexError(f"token id outside [0, {vocab})")
    return ids


@dataclass
class EncodeCache:
    layer_caches: list  # one cache per layer, tagged by branch kind
    kinds: list[str]
    pooled_raw: np.ndarray
    norms: np.ndarray
    feats: np.ndarray


def _apply_layer(x, layer, attach, w):
    if attach is None:
        out, cache = frozen_attn_with_cache(x, layer)
        return x + out, cache, "frozen"
    if isinstance(attach, Adapter):
        out, cache = residual_attn_with_cache(x, layer, attach, w)
        return x + out, cache, "residual"
    if isinstance(attach, PromptBaseline):
        out, cache = prepend_attn_with_cache(x, layer, attach)
        return x + out, cache, "prepend"
    raise ContractError(f"unsupported per-layer attachment {type(attach).__name__}")


def encode_with_cache(
    token_ids,
    stack: EncoderStack,
    adapters: Sequence[Adapter | PromptBaseline] | None = None,
    w=1.0,
) -> tuple[np.ndarray, EncodeCache]:
    """Forward pass keeping intermediates for the training backward."""
    ids = _check_ids(token_ids, stack.vocab)
    if adapters is not None and len(adapters) > stack.depth:
        raise ShapeError(f"{len(adapters)} attachments for a depth-{stack.depth} stack")
    x = stack.embed[ids]
    caches, kinds = [], []
    for i, layer in enumerate(stack.layers):
        attach = adapters[i] if adapters is not None and i < len(adapters) else None
        x, cache, kind = _apply_layer(x, layer, attach, w)
        caches.append(cache)
        kinds.append(kind)
    pooled = x.mean(axis=-2)
    norms = np.linalg.norm(pooled, axis=-1, keepdims=True)
    if np.any(norms == 0.0):
        raise ContractError("pooled feature has zero norm, cannot normalize")
    feats = pooled / norms
    return feats, EncodeCache(
        layer_caches=caches, kinds=kinds, pooled_raw=pooled, norms=norms, feats=feats
    )


def encode_backward(cache: EncodeCache, d_feats: np.ndarray) -> list:
    """Backward to the trainable attachments.

    Returns a per-layer list: None for plain frozen layers, (d_k_r, d_v_r)
    for residual adapters, d_prompt for prepend prompts. Gradients are
    summed over the batch. Embeddings are frozen, so propagation stops
    below layer 0.
    """
    # Through L2 normalization: f = u / |u|, du = (df - f (f . df)) / |u|.
    f = cache.feats
    inner = (f * d_feats).sum(axis=-1, keepdims=True)
    d_pooled = (d_feats - f * inner) / cache.norms
    # Through the mean pool: every position receives d_pooled / L.
    seq_len = cache.layer_caches[-1].out.shape[-2] if cache.kinds[-1] != "prepend" else None
    if seq_len is None:
        seq_len = cache.layer_caches[-1].frozen.x.shape[-2] - cache.layer_caches[-1].l
    d_x = np.repeat(np.expand_dims(d_pooled / seq_len, -2), seq_len, axis=-2)
    grads: list = [None] * len(cache.layer_caches)
    for i in range(len(cache.layer_caches) - 1, -1, -1):
        kind, layer_cache = cache.kinds[i], cache.layer_caches[i]
        if kind == "frozen":
            d_attn_in = frozen_attn_backward(layer_cache, d_x)
        elif kind == "residual":
            d_attn_in, d_k_r, d_v_r = residual_attn_backward(layer_cache, d_x)
            grads[i] = (d_k_r, d_v_r)
        else:
            d_attn_in, d_prompt = prepend_attn_backward(layer_cache, d_x)
            grads[i] = d_prompt
        # Residual skip: x_{i+1} = x_i + attn(x_i).
        d_x = d_x + d_attn_in
    return grads


def encode(
    token_ids,
    stack: EncoderStack,
    adapters: Sequence[Adapter | PromptBaseline] | None = None,
    w=1.0,
) -> np.ndarray:
    """Unit-norm feature of a token sequence (or a batch of them).

    token_ids may be (L,) for a single sequence or (B, L) for a batch; the
    result is (d,) or (B, d). For batches, w may be one weight per sample.
    """
    feats, _ = encode_with_cache(token_ids, stack, adapters, w)
    return feats


def class_embeddings(
    classes: Sequence[ClassTemplate],
    stack: EncoderStack,
    adapters: Sequence[Adapter | PromptBaseline] | None = None,
    w=1.0,
) -> np.ndarray:
    """Encode each class template; returns (K, d) in the given class order."""
    if len(classes) == 0:
        raise ShapeError("need at least one class template")
    ids = np.stack([c.token_ids() for c in classes])
    return encode(ids, stack, adapters, w)


def logits(feature: np.ndarray, text_embs: np.ndarray, logit_scale: float = 100.0) -> np.ndarray:
    """Scaled cosine logits of one feature row against (K, d) class embeddings.

    Both sides must already be unit-norm (checked within 1e-9), so the dot
    products are cosines and logit_scale is the only temperature.
    """
    feature = np.asarray(feature, dtype=np.float64)
    text_embs = np.asarray(text_embs, dtype=np.float64)
    if logit_scale <= 0.0:
        raise ContractError("logit_scale must be positive")
    if feature.ndim != 1 or text_embs.ndim != 2 or text_embs.shape[1] != feature.shape[0]:
        raise ShapeError(f"incompatible shapes {feature.shape} and {text_embs.shape}")
    if abs(float(np.linalg.norm(feature)) - 1.0) > 1e-9:
        raise ContractError("feature is not unit norm")
    if np.any(np.abs(np.linalg.norm(text_embs, axis=1) - 1.0) > 1e-9):
        raise ContractError("class embeddings are not unit norm")
    return logit_scale * (text_embs @ feature)
