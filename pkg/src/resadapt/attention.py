"""Frozen single-head attention plus the two parameter-efficient branches.

Three forward flavors over a frozen attention layer:

  frozen_forward    the layer as shipped, no trainable parts
  prepend_forward   learned prompt rows concatenated before the input,
                    full self-attention, prompt output rows discarded
  residual_forward  a separate attention readout over learned keys K_r and
                    values V_r, added to the frozen output scaled by w

The residual branch with V_r = 0 contributes an exactly-zero matrix, so a
freshly initialized adapter leaves the layer output bit-identical to the
frozen one at any weight w. All forwards accept a single (L, d) sequence
or a batched (B, L, d) stack; backward helpers return parameter gradients
summed over the batch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, ShapeError
from .numkernel import softmax_backward, softmax_rows


@dataclass(frozen=True)
class FrozenAttention:
    """Immutable single-head attention parameters (weights d x d, biases d)."""

    w_q: np.ndarray
    w_k: np.ndarray
    w_v: np.ndarray
    b_q: np.ndarray
    b_k: np.ndarray
    b_v: np.ndarray

    def __post_init__(self):
        d = self.w_q.shape[0]
        for name in ("w_q", "w_k", "w_v"):
            w = getattr(self, name)
            if w.shape != (d, d):
                raise ShapeError(f"{name} must be ({d}, {d}), got {w.shape}")
        for name in ("b_q", "b_k", "b_v"):
            b = getattr(self, name)
            if b.shape != (d,):
                raise ShapeError(f"{name} must be ({d},), got {b.shape}")

    @property
    def d(self) -> int:
        return self.w_q.shape[0]


@dataclass(frozen=True)
class Adapter:
    """Residual-branch parameters: keys k_r and values v_r, both (l, d).

    Instances are immutable; training replaces them wholesale.
    """

    k_r: np.ndarray
    v_r: np.ndarray

    def __post_init__(self):
        if self.k_r.ndim != 2 or self.k_r.shape != self.v_r.shape:
            raise ShapeError(
                f"k_r and v_r must share an (l, d) shape, got {self.k_r.shape} and {self.v_r.shape}"
            )

    @property
    def l(self) -> int:
        return self.k_r.shape[0]

    @property
    def d(self) -> int:
        return self.k_r.shape[1]


@dataclass(frozen=True)
class PromptBaseline:
    """Prepend-baseline parameters: l learned prompt rows of width d."""

    p: np.ndarray

    def __post_init__(self):
        if self.p.ndim != 2:
            raise ShapeError(f"prompt must be (l, d), got {self.p.shape}")

    @property
    def l(self) -> int:
        return self.p.shape[0]

    @property
    def d(self) -> int:
        return self.p.shape[1]


def random_frozen_attention(d: int, rng: np.random.Generator) -> FrozenAttention:
    """Random frozen layer: weights N(0, 1/sqrt(d)), biases N(0, 0.1)."""
    scale = 1.0 / np.sqrt(d)
    return FrozenAttention(
        w_q=rng.normal(0.0, scale, size=(d, d)),
        w_k=rng.normal(0.0, scale, size=(d, d)),
        w_v=rng.normal(0.0, scale, size=(d, d)),
        b_q=rng.normal(0.0, 0.1, size=d),
        b_k=rng.normal(0.0, 0.1, size=d),
        b_v=rng.normal(0.0, 0.1, size=d),
    )


def init_adapter(l: int, d: int, bound: float, rng: np.random.Generator) -> Adapter:
    """Fresh adapter: k_r uniform on [-bound, bound), v_r all zeros.

    Zero values make the residual branch an exact identity at any w, so a
    new adapter cannot disturb the frozen model. The uniform keys break
    the gradient degeneracy that an all-zero start would suffer from.
    """
    if l < 1 or d < 1:
        raise ShapeError("adapter dims must be positive")
    if bound < 0.0:
        raise ContractError("bound must be non-negative")
    k_r = rng.uniform(-bound, bound, size=(l, d))
    return Adapter(k_r=k_r, v_r=np.zeros((l, d)))


def init_adapter_ablation(l: int, d: int, bound: float, rng: np.random.Generator) -> Adapter:
    """Ablation initializer: BOTH k_r and v_r uniform on [-bound, bound).

    Nonzero values mean the branch perturbs the frozen output from step
    zero; exists to measure what zero-init buys.
    """
    if l < 1 or d < 1:
        raise ShapeError("adapter dims must be positive")
    if bound < 0.0:
        raise ContractError("bound must be non-negative")
    return Adapter(
        k_r=rng.uniform(-bound, bound, size=(l, d)),
        v_r=rng.uniform(-bound, bound, size=(l, d)),
    )


def _check_seq(x: np.ndarray, d: int, what: str = "input") -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim not in (2, 3) or x.shape[-1] != d:
        raise ShapeError(f"{what} must be (L, {d}) or (B, L, {d}), got {x.shape}")
    return x


def _sum_batch(g: np.ndarray) -> np.ndarray:
    # Parameter gradients are shared across a batch; collapse leading axes.
    if g.ndim == 2:
        return g
    return g.reshape(-1, g.shape[-2], g.shape[-1]).sum(axis=0)


@dataclass
class FrozenCache:
    x: np.ndarray
    p: FrozenAttention
    q: np.ndarray
    k: np.ndarray
    v: np.ndarray
    attn: np.ndarray
    out: np.ndarray


def frozen_attn_with_cache(x: np.ndarray, p: FrozenAttention) -> tuple[np.ndarray, FrozenCache]:
    x = _check_seq(x, p.d)
    inv_sqrt_d = 1.0 / np.sqrt(p.d)
    q = x @ p.w_q + p.b_q
    k = x @ p.w_k + p.b_k
    v = x @ p.w_v + p.b_v
    scores = (q @ np.swapaxes(k, -1, -2)) * inv_sqrt_d
    attn = softmax_rows(scores)
    out = attn @ v
    return out, FrozenCache(x=x, p=p, q=q, k=k, v=v, attn=attn, out=out)


def frozen_attn_backward(cache: FrozenCache, d_out: np.ndarray) -> np.ndarray:
    """Gradient of <d_out, out> with respect to the layer input x."""
    p = cache.p
    inv_sqrt_d = 1.0 / np.sqrt(p.d)
    d_v = np.swapaxes(cache.attn, -1, -2) @ d_out
    d_attn = d_out @ np.swapaxes(cache.v, -1, -2)
    d_scores = softmax_backward(cache.attn, d_attn)
    d_q = (d_scores @ cache.k) * inv_sqrt_d
    d_k = (np.swapaxes(d_scores, -1, -2) @ cache.q) * inv_sqrt_d
    return d_q @ p.w_q.T + d_k @ p.w_k.T + d_v @ p.w_v.T


def frozen_forward(x: np.ndarray, p: FrozenAttention) -> np.ndarray:
    """softmax(Q K^T / sqrt(d)) V with Q = x W_q + b_q etc."""
    out, _ = frozen_attn_with_cache(x, p)
    return out


@dataclass
class ResidualCache:
    frozen: FrozenCache
    a: Adapter
    w: np.ndarray | float
    attn_r: np.ndarray
    out: np.ndarray


def _check_weight(w) -> np.ndarray | float:
    w_arr = np.asarray(w, dtype=np.float64)
    if np.any(w_arr < 0.0) or np.any(w_arr > 1.0):
        raise ContractError(f"residual weight must lie in [0, 1], got {w}")
    return float(w_arr) if w_arr.ndim == 0 else w_arr


def _broadcast_weight(w, out_r: np.ndarray):
    # Scalar w, or one weight per batch element for (B, L, d) inputs.
    if isinstance(w, float):
        return w
    if out_r.ndim != 3 or w.shape != (out_r.shape[0],):
        raise ShapeError(f"per-sample weights {w.shape} do not match batch {out_r.shape}")
    return w[:, None, None]


def residual_attn_with_cache(
    x: np.ndarray, p: FrozenAttention, a: Adapter, w
) -> tuple[np.ndarray, ResidualCache]:
    if a.d != p.d:
        raise ShapeError(f"adapter width {a.d} does not match layer width {p.d}")
    w = _check_weight(w)
    out_f, fc = frozen_attn_with_cache(x, p)
    inv_sqrt_d = 1.0 / np.sqrt(p.d)
    scores_r = (fc.q @ a.k_r.T) * inv_sqrt_d
    attn_r = softmax_rows(scores_r)
    out_r = attn_r @ a.v_r
    out = out_f + _broadcast_weight(w, out_r) * out_r
    return out, ResidualCache(frozen=fc, a=a, w=w, attn_r=attn_r, out=out)


def residual_attn_backward(
    cache: ResidualCache, d_out: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Backward through the residual layer.

    Returns (d_x, d_k_r, d_v_r) for the scalar <d_out, out>. The frozen
    output receives d_out unchanged; the residual branch receives w d_out
    and routes it into the adapter parameters and, through the shared
    query, back into x.
    """
    fc = cache.frozen
    a = cache.a
    inv_sqrt_d = 1.0 / np.sqrt(fc.p.d)
    wd = _broadcast_weight(cache.w, d_out) * d_out
    d_v_r = _sum_batch(np.swapaxes(cache.attn_r, -1, -2) @ wd)
    d_attn_r = wd @ a.v_r.T
    d_scores_r = softmax_backward(cache.attn_r, d_attn_r)
    d_k_r = _sum_batch(np.swapaxes(d_scores_r, -1, -2) @ fc.q) * inv_sqrt_d
    d_q_r = (d_scores_r @ a.k_r) * inv_sqrt_d
    d_x = frozen_attn_backward(fc, d_out) + d_q_r @ fc.p.w_q.T
    return d_x, d_k_r, d_v_r


def residual_forward(x: np.ndarray, p: FrozenAttention, a: Adapter, w) -> np.ndarray:
    """Frozen output plus w times the adapter readout softmax(Q k_r^T / sqrt(d)) v_r.

    The frozen term is computed by the same code path as frozen_forward,
    so with v_r = 0 the result is bit-identical to the frozen layer.
    """
    out, _ = residual_attn_with_cache(x, p, a, w)
    return out


def adapter_grads(
    x: np.ndarray, p: FrozenAttention, a: Adapter, w, d_out: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Analytic gradients of <d_out, residual_forward(x, p, a, w)> in (k_r, v_r).

    d_v_r = w A^T d_out with A the residual attention matrix; d_k_r routes
    w d_out through the values and the softmax Jacobian back to the keys.
    """
    _, cache = residual_attn_with_cache(x, p, a, w)
    d_out = np.asarray(d_out, dtype=np.float64)
    if d_out.shape != cache.out.shape:
        raise ShapeError(f"d_out shape {d_out.shape} does not match output {cache.out.shape}")
    _, d_k_r, d_v_r = residual_attn_backward(cache, d_out)
    return d_k_r, d_v_r


@dataclass
class PrependCache:
    frozen: FrozenCache
    l: int


def prepend_attn_with_cache(
    x: np.ndarray, p: FrozenAttention, prompt: PromptBaseline
) -> tuple[np.ndarray, PrependCache]:
    if prompt.d != p.d:
        raise ShapeError(f"prompt width {prompt.d} does not match layer width {p.d}")
    x = _check_seq(x, p.d)
    rows = prompt.p
    if x.ndim == 3:
        rows = np.broadcast_to(rows, (x.shape[0],) + rows.shape)
    x_cat = np.concatenate([rows, x], axis=-2)
    out_cat, fc = frozen_attn_with_cache(x_cat, p)
    return out_cat[..., prompt.l :, :], PrependCache(frozen=fc, l=prompt.l)


def prepend_attn_backward(
    cache: PrependCache, d_out: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Backward through the prepend layer: returns (d_x, d_prompt)."""
    pad_shape = d_out.shape[:-2] + (cache.l,) + d_out.shape[-1:]
    d_cat = np.concatenate([np.zeros(pad_shape), d_out], axis=-2)
    d_x_cat = frozen_attn_backward(cache.frozen, d_cat)
    return d_x_cat[..., cache.l :, :], _sum_batch(d_x_cat[..., : cache.l, :])


def prepend_forward(x: np.ndarray, p: FrozenAttention, prompt: PromptBaseline) -> np.ndarray:
    """Self-attention over [prompt; x], keeping only the last L output rows.

    Every kept row attends over prompt and input rows jointly, so a nonzero
    prompt changes the output; there is no weight that turns it off.
    """
    out, _ = prepend_attn_with_cache(x, p, prompt)
    return out
