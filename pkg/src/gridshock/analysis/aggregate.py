"""Annual total-LOS distributions built by convolving per-day distributions."""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from gridshock.errors import BinMismatch

DEFAULT_BINS = 200


@dataclass(frozen=True)
class BinnedDistribution:
    """Probability mass on the grid ``0, w, 2w, ...``."""

    width: float
    masses: np.ndarray

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError("bin width must be positive")
        object.__setattr__(self, "masses", np.asarray(self.masses, dtype=float))

    @property
    def values(self) -> np.ndarray:
        return np.arange(len(self.masses)) * self.width

    @property
    def mean(self) -> float:
        return float(np.dot(self.values, self.masses))

    @property
    def variance(self) -> float:
        return float(np.dot((self.values - self.mean) ** 2, self.masses))

    def quantile(self, q: float) -> float:
        cdf = np.cumsum(self.masses)
        i = int(np.searchsorted(cdf, q * cdf[-1] - 1e-12, side="left"))
        return float(min(i, len(self.masses) - 1) * self.width)

    def is_zero(self) -> bool:
        return len(self.masses) == 1 or not np.any(self.masses[1:])


def default_bin_width(samples, n_bins: int = DEFAULT_BINS) -> float:
    top = float(np.max(samples)) if len(samples) else 0.0
    return top / n_bins if top > 0 else 1.0


def bin_samples(samples, width: float) -> BinnedDistribution:
    """Histogram samples onto the grid; each sample goes to its nearest grid point."""
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise ValueError("no samples to bin")
    if np.any(samples < 0):
        raise ValueError("LOS samples must be non-negative")
    idx = np.floor(samples / width + 0.5).astype(int)
    masses = np.bincount(idx) / samples.size
    return BinnedDistribution(width, masses)


def _trim(m: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(m)
    return m[: nz[-1] + 1] if nz.size else m[:1]


def _power(m: np.ndarray, n: int) -> np.ndarray:
    """n-fold self-convolution by repeated squaring."""
    out = np.array([1.0])
    base = m
    while n:
        if n & 1:
            out = _trim(np.convolve(out, base))
        n >>= 1
        if n:
            base = _trim(np.convolve(base, base))
    return out


@dataclass(frozen=True)
class AnnualLos:
    year: object
    distribution: BinnedDistribution
    mean: float
    q05: float
    q95: float


def convolve_annual(day_distributions: Sequence, year=None, bin_width: float | None = None) -> AnnualLos:
    """Sum independent daily LOS distributions, each repeated ``count`` times.

    ``day_distributions`` holds ``(count, dist)`` pairs where ``dist`` is a
    ``BinnedDistribution`` or anything with a ``samples`` array (those are
    binned at ``bin_width``, by default the largest sample over 200).
    """
    items = list(day_distributions)
    raw = [d.samples for _, d in items if not isinstance(d, BinnedDistribution)]
    if raw and bin_width is None:
        bin_width = default_bin_width(np.concatenate(raw))
    binned = []
    for count, d in items:
        if count < 1:
            raise ValueError("cluster counts must be >= 1")
        b = d if isinstance(d, BinnedDistribution) else bin_samples(d.samples, bin_width)
        binned.append((int(count), b))

    widths = {b.width for _, b in binned}
    if bin_width is not None:
        widths.add(bin_width)
    if not widths:
        width = 1.0
    else:
        width = next(iter(widths))
        if any(not math.isclose(w, width, rel_tol=1e-12) for w in widths):
            raise BinMismatch(f"distributions use different bin widths: {sorted(widths)}")

    total = np.array([1.0])
    for count, b in binned:
        if b.is_zero():
            continue
        total = _trim(np.convolve(total, _power(b.masses, count)))
    total = total / total.sum()
    dist = BinnedDistribution(width, total)
    return AnnualLos(year, dist, dist.mean, dist.quantile(0.05), dist.quantile(0.95))
