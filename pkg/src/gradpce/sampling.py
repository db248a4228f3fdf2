"""Reproducible random sampling of the measures the bases are built on.

All draws go through numpy's counter-based Philox generator keyed by a 64-bit
seed, so a (seed, trial) pair pins every sample exactly, independent of
execution order or thread count.  Chebyshev points use the exact inverse CDF
z = cos(pi*u); general Jacobi/Beta points invert the regularized incomplete
beta function by bisection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import betainc

from .polynomials import Measure

_MASK64 = (1 << 64) - 1
_BETA_BISECT_TOL = 1e-12


def _splitmix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def split_stream(seed: int, trial: int) -> int:
    """Derive an independent 64-bit stream key for one trial.

    The map is a bijection composition, so distinct trials under the same
    seed never collide.
    """
    if trial < 0:
        raise ValueError("trial index must be nonnegative")
    return _splitmix64(_splitmix64(seed & _MASK64) ^ (trial & _MASK64))


def generator(seed: int) -> np.random.Generator:
    """Philox generator keyed by a 64-bit seed."""
    return np.random.Generator(np.random.Philox(key=seed & _MASK64))


def _beta_inverse_cdf(u: np.ndarray, a: float, b: float) -> np.ndarray:
    """Invert I_t(a, b) = u on [0, 1] by bisection."""
    lo = np.zeros_like(u)
    hi = np.ones_like(u)
    # Each step halves the bracket; stop below the absolute tolerance.
    steps = int(math.ceil(-math.log2(_BETA_BISECT_TOL))) + 2
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        below = betainc(a, b, mid) < u
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class SampleBatch:
    """Points drawn i.i.d. from one measure, with their provenance."""

    measure: Measure
    seed: int
    points: np.ndarray = field(repr=False)  # (N, d)

    def __post_init__(self):
        if self.points.ndim != 2:
            raise ValueError("points must be a 2-d array")

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def subset(self, count: int) -> "SampleBatch":
        """First ``count`` points as a batch with the same provenance."""
        if not 0 < count <= len(self):
            raise ValueError("subset size out of range")
        return SampleBatch(self.measure, self.seed, self.points[:count])

    def to_csv(self, path) -> None:
        """One row per sample, 17 significant digits."""
        with Path(path).open("w") as fh:
            for row in self.points:
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def sample(measure: Measure, dim: int, count: int, seed: int) -> SampleBatch:
    """Draw ``count`` i.i.d. points of dimension ``dim`` from ``measure``.

    Supported measures: chebyshev (arcsine), uniform, general jacobi (via the
    Beta distribution), and the standard gaussian.
    """
    if dim < 1:
        raise ValueError("dimension must be at least 1")
    if count < 1:
        raise ValueError("sample count must be at least 1")
    rng = generator(seed)
    if measure.kind == "gaussian":
        pts = rng.standard_normal((count, dim))
    else:
        u = rng.random((count, dim))
        p = measure.params
        if p.alpha == -0.5 and p.beta == -0.5:
            pts = np.cos(math.pi * u)
        elif p.alpha == 0.0 and p.beta == 0.0:
            pts = 2.0 * u - 1.0
        else:
            # x = 2t - 1 maps Beta(beta+1, alpha+1) in t to the Jacobi density in x.
            pts = 2.0 * _beta_inverse_cdf(u, p.beta + 1.0, p.alpha + 1.0) - 1.0
    return SampleBatch(measure, seed, pts)
