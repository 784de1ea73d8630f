"""Seeded K-means over per-day hazard feature vectors."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from gridshock.errors import InvalidK


@dataclass(frozen=True)
class DayFeatureMatrix:
    """One row per day; columns follow ``asset_ids``."""

    dates: tuple
    values: np.ndarray
    asset_ids: tuple = ()

    def __post_init__(self):
        values = np.atleast_2d(np.asarray(self.values, dtype=float))
        if values.shape[0] != len(self.dates):
            raise ValueError("one feature row is required per date")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "dates", tuple(self.dates))

    @classmethod
    def from_conditions(cls, dates: Sequence, conditions: Sequence) -> "DayFeatureMatrix":
        """Stack per-asset weather values (``LocalConditions``) in canonical asset order."""
        if not conditions:
            raise ValueError("no days given")
        assets = tuple(sorted(conditions[0].omega))
        rows = [[c.omega[a] for a in assets] for c in conditions]
        return cls(tuple(dates), np.array(rows, dtype=float), assets)


@dataclass
class Clustering:
    k: int
    assignments: dict
    centroids: np.ndarray
    representatives: dict
    sizes: dict
    inertia: float
    n_iter: int
    inertia_history: list


def _plusplus(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(x)
    centres = [x[rng.integers(n)]]
    d2 = ((x - centres[0]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0:
            i = int(rng.integers(n))
        else:
            i = int(np.searchsorted(np.cumsum(d2), rng.random() * total, side="right"))
            i = min(i, n - 1)
        centres.append(x[i])
        d2 = np.minimum(d2, ((x - x[i]) ** 2).sum(axis=1))
    return np.array(centres, dtype=float)


def _sq_dists(x, centres):
    return ((x[:, None, :] - centres[None, :, :]) ** 2).sum(axis=2)


def kmeans_days(features: DayFeatureMatrix, k: int = 10, seed: int = 0, max_iter: int = 300) -> Clustering:
    """Lloyd's algorithm with k-means++ seeding.

    Iterates until the assignment stops changing or ``max_iter`` is hit.
    A cluster that empties is re-seeded on the point farthest from its
    current centroid.  The representative of each cluster is the member
    day nearest its centroid.
    """
    x = features.values
    n = len(x)
    if n == 0:
        raise InvalidK("no days to cluster")
    if not 1 <= k <= n:
        raise InvalidK(f"k={k} must lie in [1, {n}]")
    rng = np.random.default_rng(seed)
    centres = _plusplus(x, k, rng)
    labels = np.full(n, -1)
    history = []
    it = 0
    for it in range(1, max_iter + 1):
        d = _sq_dists(x, centres)
        new = d.argmin(axis=1)
        for c in range(k):
            if not np.any(new == c):
                own = d[np.arange(n), new].copy()
                counts = np.bincount(new, minlength=k)
                own[counts[new] <= 1] = -1.0  # never empty another cluster
                far = int(own.argmax())
                centres[c] = x[far]
                new[far] = c
                d = _sq_dists(x, centres)
        history.append(float(d[np.arange(n), new].sum()))
        if np.array_equal(new, labels):
            break
        labels = new
        centres = np.array([x[labels == c].mean(axis=0) for c in range(k)])

    d = _sq_dists(x, centres)
    inertia = float(d[np.arange(n), labels].sum())
    reps, sizes = {}, {}
    for c in range(k):
        members = np.flatnonzero(labels == c)
        sizes[c] = int(len(members))
        reps[c] = features.dates[int(members[d[members, c].argmin()])]
    return Clustering(
        k=k,
        assignments={features.dates[i]: int(labels[i]) for i in range(n)},
        centroids=centres,
        representatives=reps,
        sizes=sizes,
        inertia=inertia,
        n_iter=it,
        inertia_history=history,
    )
