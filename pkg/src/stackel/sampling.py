"""Deterministic low-discrepancy sample sets inside a coordinate box."""

from __future__ import annotations

import numpy as np
from scipy.stats import qmc

DEFAULT_SEED = 0x5EED_57AC_CE10_2024 & 0xFFFF_FFFF_FFFF_FFFF
DEFAULT_MARGIN = 0.05


def shrink_box(box, margin: float = DEFAULT_MARGIN):
    """Pull each interval in by ``margin`` of its width on both sides."""
    if not 0 <= margin < 0.5:
        raise ValueError("margin must lie in [0, 0.5)")
    out = []
    for lo, hi in box:
        lo, hi = float(lo), float(hi)
        if not hi > lo:
            raise ValueError(f"empty interval [{lo}, {hi}]")
        w = hi - lo
        out.append((lo + margin * w, hi - margin * w))
    return out


def sample_box(box, n: int, seed: int = DEFAULT_SEED, margin: float = DEFAULT_MARGIN) -> np.ndarray:
    """Scrambled Halton points, one row per sample, one column per interval."""
    box = shrink_box(box, margin)
    d = len(box)
    if n <= 0:
        return np.empty((0, d))
    sampler = qmc.Halton(d=d, scramble=True, seed=np.random.default_rng(seed))
    unit = sampler.random(n)
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])
    return lo + unit * (hi - lo)


def random_momenta(n: int, dim: int, seed: int = DEFAULT_SEED, scale: float = 1.0) -> np.ndarray:
    rng = np.random.default_rng(seed ^ 0x9E3779B97F4A7C15)
    return scale * rng.uniform(-1.0, 1.0, size=(n, dim))


def rng(seed: int = DEFAULT_SEED, stream: int = 0) -> np.random.Generator:
    return np.random.default_rng([seed, stream])
