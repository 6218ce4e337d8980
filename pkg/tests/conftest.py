from __future__ import annotations

import numpy as np
import pytest

from vqeval.yuv import FramePlanar


def make_frame(luma: np.ndarray, bit_depth: int = 8) -> FramePlanar:
    """Wrap a luma array (chroma planes zeroed) for metric tests."""
    luma = np.asarray(luma)
    h, w = luma.shape
    dtype = np.uint8 if bit_depth == 8 else np.uint16
    chroma = np.zeros((h // 2, w // 2), dtype=dtype)
    return FramePlanar(luma.astype(dtype), chroma, chroma.copy(), bit_depth)


@pytest.fixture
def rng():
    return np.random.default_rng(0xC0DEC)


def random_frame(rng, height: int, width: int, bit_depth: int = 8) -> FramePlanar:
    peak = 2 ** bit_depth - 1
    return make_frame(rng.integers(0, peak + 1, size=(height, width)), bit_depth)
