"""Shared fixtures: tiny deterministic encoders and adapters."""

import numpy as np
import pytest

from resadapt.attention import init_adapter, random_frozen_attention
from resadapt.backbone import EncoderSpec
from resadapt.numkernel import make_rng


@pytest.fixture(scope="session")
def small_encoder():
    # d=8, depth=2, vocab=64: big enough to exercise everything, fast to run
    return EncoderSpec(vocab=64, d=8, depth=2, seed=0).build()


@pytest.fixture(scope="session")
def default_encoder():
    return EncoderSpec().build()


@pytest.fixture()
def rng():
    return make_rng(12345)


@pytest.fixture()
def frozen_d4():
    return random_frozen_attention(4, make_rng(7))


@pytest.fixture()
def fresh_adapter_d4():
    return init_adapter(l=2, d=4, bound=0.02, rng=make_rng(8))


def random_seq(rng: np.random.Generator, length: int, d: int) -> np.ndarray:
    return rng.normal(size=(length, d))
