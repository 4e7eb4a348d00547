import numpy as np
import pytest

from memlab import synth
from memlab.imagecore import Encoding, Image


@pytest.fixture(scope="session")
def corpus():
    """The 20-card synthetic corpus used by the descriptor/operator tests."""
    return synth.make_corpus(n=20, size=128, seed=7)


@pytest.fixture(scope="session")
def textured_card():
    """One mid-toned textured card with visible structure."""
    rng = np.random.default_rng(11)
    return synth.texture_card(96, rng, smooth_sigma=2.0)


def constant_image(value, size=16):
    arr = np.full((size, size, 3), value, dtype=np.uint8)
    return Image.from_array(arr, Encoding.SRGB8)


def random_srgb(rng, h, w):
    return Image.from_array(
        rng.integers(0, 256, (h, w, 3), dtype=np.uint8).astype(np.uint8),
        Encoding.SRGB8,
    )
