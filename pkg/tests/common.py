"""Shared helpers for the test suite.

Random bandlimited signals are built here independently of the package's
synthesis module (raw numpy spectrum construction), so tests that certify
the operators do not lean on the code under test.
"""

import numpy as np

from bandex import GridShape, Region, Signal, region_from_rect


def rng(seed):
    return np.random.Generator(np.random.Philox(seed))


def random_signal(shape: GridShape, seed) -> Signal:
    return Signal(shape, rng(seed).standard_normal(shape.dims))


def random_bandlimited_values(support, seed) -> np.ndarray:
    """White noise filtered to the support mask, built with raw numpy only."""
    noise = rng(seed).standard_normal(support.shape.dims)
    spectrum = np.fft.fftn(noise)
    spectrum[~support.mask] = 0.0
    return np.fft.ifftn(spectrum).real


def random_region(shape: GridShape, seed) -> Region:
    """Random in-bounds axis-aligned box."""
    g = rng(seed)
    corner, extent = [], []
    for d in shape.dims:
        e = int(g.integers(1, d + 1))
        c = int(g.integers(0, d - e + 1))
        corner.append(c)
        extent.append(e)
    return region_from_rect(shape, corner, extent)


def relative_diff(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(a - b)) / max(float(np.linalg.norm(b)), 1e-300)
