"""Two-sample rank statistics for comparing LOS samples."""

from __future__ import annotations

import math
from collections.abc import Sequence
from functools import lru_cache
from typing import NamedTuple

from gridshock.errors import EmptySample

EXACT_MAX_N = 16
P_FLOOR = 1e-4


class MannWhitneyResult(NamedTuple):
    u: float
    p_value: float
    method: str


def midranks(values: Sequence[float]) -> list[float]:
    """1-based ranks; tied values share the mean of their positions."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        r = (i + j) / 2.0 + 1.0
        for m in range(i, j + 1):
            ranks[order[m]] = r
        i = j + 1
    return ranks


@lru_cache(maxsize=None)
def _u_counts(n1: int, n2: int) -> tuple[int, ...]:
    """Number of orderings giving each U = 0..n1*n2 (no ties)."""
    if n1 == 0 or n2 == 0:
        return (1,)
    # the largest observation belongs either to sample 1 (adds n2) or sample 2
    a = _u_counts(n1 - 1, n2)
    b = _u_counts(n1, n2 - 1)
    out = [0] * (n1 * n2 + 1)
    for u, c in enumerate(a):
        out[u + n2] += c
    for u, c in enumerate(b):
        out[u] += c
    return tuple(out)


def _exact_p(u: float, n1: int, n2: int) -> float:
    counts = _u_counts(n1, n2)
    total = sum(counts)
    k = int(round(u))
    lower = sum(counts[: k + 1]) / total
    upper = sum(counts[k:]) / total
    return min(1.0, 2.0 * min(lower, upper))


def _normal_p(u: float, n1: int, n2: int, ranks: Sequence[float]) -> float:
    n = n1 + n2
    ties = {}
    for r in ranks:
        ties[r] = ties.get(r, 0) + 1
    tie_term = sum(t**3 - t for t in ties.values()) / (n * (n - 1)) if n > 1 else 0.0
    var = n1 * n2 / 12.0 * ((n + 1) - tie_term)
    if var <= 0:
        return 1.0
    z = max(abs(u - n1 * n2 / 2.0) - 0.5, 0.0) / math.sqrt(var)
    return min(1.0, math.erfc(z / math.sqrt(2.0)))


def mann_whitney_u(sample_a: Sequence[float], sample_b: Sequence[float], method: str = "auto") -> MannWhitneyResult:
    """Mann-Whitney U of ``sample_a`` against ``sample_b`` with a two-sided p-value.

    ``U`` counts pairs with a > b (ties count one half).  The p-value is exact
    for small untied samples (total size <= 16) and otherwise uses the normal
    approximation with tie and continuity corrections.
    """
    a, b = list(map(float, sample_a)), list(map(float, sample_b))
    if not a or not b:
        raise EmptySample("both samples must be non-empty")
    n1, n2 = len(a), len(b)
    ranks = midranks(a + b)
    u = sum(ranks[:n1]) - n1 * (n1 + 1) / 2.0
    has_ties = len(set(ranks)) < len(ranks)
    if method == "auto":
        method = "exact" if (n1 + n2 <= EXACT_MAX_N and not has_ties) else "asymptotic"
    if method == "exact":
        if has_ties:
            raise ValueError("exact p-values require untied samples")
        return MannWhitneyResult(u, _exact_p(u, n1, n2), "exact")
    if method == "asymptotic":
        return MannWhitneyResult(u, _normal_p(u, n1, n2, ranks), "asymptotic")
    raise ValueError(f"unknown method {method!r}")


def format_p_value(p: float, floor: float = P_FLOOR) -> float:
    """p-value as reported in tables: anything below ``floor`` is shown as ``floor``."""
    return max(p, floor)
