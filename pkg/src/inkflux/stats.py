"""Deterministic statistical kernels: quantiles, Gaussian KDE, KS statistic,
and the seeded random-number generator used by every simulation.

The generator is counter-based (SplitMix64 finalizer over ``seed + n*GAMMA``)
so streams are bit-identical across runs and platforms, and ``split`` yields
independent child streams without consuming draws from the parent.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import EmptySamples, TooFewSamples

_MASK64 = (1 << 64) - 1
# SplitMix64 constants (Steele, Lea & Flood 2014).
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
# Salt applied to the seed before deriving split children, so that child 0
# does not replay the parent stream.
_SPLIT_SALT = 0xD1B54A32D192ED03

_TWO_PI = 2.0 * math.pi
_INV_2_53 = 1.0 / (1 << 53)


def _mix64(z: int) -> int:
    z &= _MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return z ^ (z >> 31)


class SeededRng:
    """Counter-based 64-bit generator with deterministic splitting.

    The n-th output is ``mix64(seed + n*GAMMA)``; the only mutable state is
    the counter, so a generator never aliases its children and identical
    seeds give identical streams everywhere.
    """

    __slots__ = ("seed", "_counter")

    def __init__(self, seed: int):
        self.seed = seed & _MASK64
        self._counter = 0

    def next_u64(self) -> int:
        self._counter += 1
        return _mix64((self.seed + self._counter * _GAMMA) & _MASK64)

    def next_uniform(self) -> float:
        """A float in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * _INV_2_53

    def split(self, index: int) -> "SeededRng":
        """Independent child stream; a pure function of (seed, index)."""
        child_seed = _mix64(((self.seed ^ _SPLIT_SALT) + (index + 1) * _GAMMA) & _MASK64)
        return SeededRng(child_seed)

    # Derived draws -- all defined in terms of next_uniform so the stream
    # layout is fully specified by the counts of uniforms consumed.

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.next_uniform()

    def next_int(self, bound: int) -> int:
        """Uniform int in [0, bound). Floor-based; fine at simulation scale."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        return min(int(self.next_uniform() * bound), bound - 1)

    def int_between(self, lo: int, hi: int) -> int:
        """Uniform int in [lo, hi] inclusive."""
        return lo + self.next_int(hi - lo + 1)

    def next_exponential(self, mean: float) -> float:
        u = self.next_uniform()
        return -mean * math.log1p(-u)

    def next_normal(self) -> float:
        """Standard normal via Box-Muller (consumes two uniforms)."""
        u1 = self.next_uniform()
        u2 = self.next_uniform()
        return math.sqrt(-2.0 * math.log1p(-u1)) * math.cos(_TWO_PI * u2)

    def next_lognormal(self, mu: float, sigma: float) -> float:
        return math.exp(mu + sigma * self.next_normal())

    def weighted_index(self, weights: Sequence[float]) -> int:
        """Index drawn with probability proportional to the given weights."""
        total = float(sum(weights))
        if total <= 0.0:
            raise ValueError("weights must have positive sum")
        x = self.next_uniform() * total
        acc = 0.0
        for i, w in enumerate(weights):
            acc += w
            if x < acc:
                return i
        return len(weights) - 1

    def shuffled(self, items: Sequence) -> list:
        """Fisher-Yates shuffle of a copy of ``items``."""
        out = list(items)
        for i in range(len(out) - 1, 0, -1):
            j = self.next_int(i + 1)
            out[i], out[j] = out[j], out[i]
        return out


def quantiles(samples: Sequence[float], qs: Sequence[float]) -> list[float]:
    """Linear-interpolation quantiles: h = (n-1)q on the sorted data."""
    if len(samples) == 0:
        raise EmptySamples("quantiles over empty samples")
    for q in qs:
        if not 0.0 <= q <= 1.0:
            raise ValueError(f"quantile {q} outside [0, 1]")
    data = sorted(float(x) for x in samples)
    n = len(data)
    out = []
    for q in qs:
        h = (n - 1) * q
        lo = math.floor(h)
        hi = min(lo + 1, n - 1)
        out.append(data[lo] + (h - lo) * (data[hi] - data[lo]))
    return out


@dataclass(frozen=True)
class KdeCurve:
    """A Gaussian kernel density estimate sampled on a regular grid."""

    grid: tuple[float, ...]
    density: tuple[float, ...]
    bandwidth: float
    clip: Optional[tuple[float, float]] = None

    def evaluate(self, xs: Sequence[float]) -> list[float]:
        """Interpolate the stored curve at arbitrary points."""
        return list(np.interp(xs, self.grid, self.density))


def silverman_bandwidth(samples: Sequence[float]) -> float:
    """0.9*min(sigma, IQR/1.349)*n^(-1/5); falls back to 1.06*sigma*n^(-1/5)
    when the IQR is zero and to 1e-6 when sigma is zero."""
    data = np.asarray(samples, dtype=float)
    n = data.size
    sigma = float(np.std(data, ddof=1)) if n > 1 else 0.0
    if sigma == 0.0:
        return 1e-6
    q25, q75 = quantiles(list(data), [0.25, 0.75])
    iqr = q75 - q25
    if iqr == 0.0:
        return 1.06 * sigma * n ** (-0.2)
    return 0.9 * min(sigma, iqr / 1.349) * n ** (-0.2)


def gaussian_kde(
    samples: Sequence[float],
    bandwidth: Optional[float] = None,
    grid_points: int = 256,
    clip: Optional[tuple[float, float]] = None,
) -> KdeCurve:
    """Gaussian KDE with each curve normalised independently.

    Clipping moves out-of-range samples onto the bounds (mass is retained,
    not dropped). The grid spans the sample range extended by 4 bandwidths
    on each side, which keeps the trapezoidal integral within 1e-3 of one.
    """
    if grid_points < 16:
        raise ValueError("grid_points must be >= 16")
    data = np.asarray(samples, dtype=float)
    if clip is not None:
        lo, hi = clip
        if not lo < hi:
            raise ValueError("clip bounds must satisfy lo < hi")
        data = np.clip(data, lo, hi)
    if data.size < 2:
        raise TooFewSamples(f"KDE needs >= 2 samples, got {data.size}")
    h = float(bandwidth) if bandwidth is not None else silverman_bandwidth(data)
    if h <= 0.0:
        raise ValueError("bandwidth must be positive")
    grid = np.linspace(data.min() - 4.0 * h, data.max() + 4.0 * h, grid_points)
    z = (grid[:, None] - data[None, :]) / h
    density = np.exp(-0.5 * z * z).sum(axis=1) / (data.size * h * math.sqrt(_TWO_PI))
    return KdeCurve(
        grid=tuple(float(g) for g in grid),
        density=tuple(float(d) for d in density),
        bandwidth=h,
        clip=clip,
    )


def ks_statistic(a: Sequence[float], b: Sequence[float]) -> float:
    """Two-sample Kolmogorov-Smirnov statistic: sup |ECDF_a - ECDF_b|."""
    if len(a) == 0 or len(b) == 0:
        raise EmptySamples("KS statistic over empty samples")
    xa = np.sort(np.asarray(a, dtype=float))
    xb = np.sort(np.asarray(b, dtype=float))
    merged = np.concatenate([xa, xb])
    fa = np.searchsorted(xa, merged, side="right") / xa.size
    fb = np.searchsorted(xb, merged, side="right") / xb.size
    return float(np.abs(fa - fb).max())


def ks_critical_value(alpha: float, n: int, m: int) -> float:
    """Asymptotic two-sample KS rejection threshold at level ``alpha``."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    if n <= 0 or m <= 0:
        raise EmptySamples("KS critical value needs positive sample sizes")
    c = math.sqrt(-0.5 * math.log(alpha / 2.0))
    return c * math.sqrt((n + m) / (n * m))
