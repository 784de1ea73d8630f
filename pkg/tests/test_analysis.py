import datetime as dt
import itertools

import numpy as np
import pytest
import scipy.signal
import scipy.stats
from hypothesis import given, settings
from hypothesis import strategies as st

from gridshock.analysis import (
    BinnedDistribution,
    DayFeatureMatrix,
    bin_samples,
    convolve_annual,
    format_p_value,
    kmeans_days,
    mann_whitney_u,
    midranks,
    savitzky_golay,
)
from gridshock.errors import BinMismatch, EmptySample, InvalidFilter, InvalidK
from gridshock.simulate import LosDistribution
from oracles import exact_mwu_p_brute, u_statistic_brute


def days(n):
    return tuple(dt.date(2000, 5, 1) + dt.timedelta(days=i) for i in range(n))


def two_clouds(seed, n=30, dim=4, sep=10.0):
    rng = np.random.default_rng(seed)
    a = rng.normal(0.0, 1.0, (n, dim))
    b = rng.normal(0.0, 1.0, (n, dim))
    b[:, 0] += sep
    return np.vstack([a, b]), np.array([0] * n + [1] * n)


# ------------------------------------------------------------- clustering


@pytest.mark.parametrize("seed", range(5))
def test_kmeans_splits_clouds(seed):
    x, truth = two_clouds(seed)
    res = kmeans_days(DayFeatureMatrix(days(len(x)), x), k=2, seed=seed)
    labels = np.array([res.assignments[d] for d in days(len(x))])
    # same partition up to relabelling
    assert len(set(zip(labels, truth))) == 2
    # exhaustive nearest-centroid check
    d2 = ((x[:, None, :] - res.centroids[None, :, :]) ** 2).sum(axis=2)
    assert (d2.argmin(axis=1) == labels).all()


def test_kmeans_trivial_cases():
    same = np.tile([1.0, 2.0, 3.0], (6, 1))
    one = kmeans_days(DayFeatureMatrix(days(6), same), k=1, seed=0)
    assert np.array_equal(one.centroids[0], [1.0, 2.0, 3.0]) and one.inertia == 0.0
    x = np.arange(12.0).reshape(6, 2) ** 2
    each = kmeans_days(DayFeatureMatrix(days(6), x), k=6, seed=0)
    assert each.inertia == 0.0 and sorted(each.sizes.values()) == [1] * 6
    with pytest.raises(InvalidK):
        kmeans_days(DayFeatureMatrix(days(6), x), k=7, seed=0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 6))
def test_kmeans_invariants(seed, k):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(25, 3))
    d = days(25)
    res = kmeans_days(DayFeatureMatrix(d, x), k=k, seed=seed)
    hist = res.inertia_history
    assert all(b <= a + 1e-9 for a, b in zip(hist, hist[1:]))
    assert set(res.assignments) == set(d)
    assert sum(res.sizes.values()) == 25
    for c, rep in res.representatives.items():
        assert res.assignments[rep] == c
        members = [i for i, day in enumerate(d) if res.assignments[day] == c]
        dist = ((x[members] - res.centroids[c]) ** 2).sum(axis=1)
        assert ((x[d.index(rep)] - res.centroids[c]) ** 2).sum() == dist.min()
    again = kmeans_days(DayFeatureMatrix(d, x), k=k, seed=seed)
    assert again.assignments == res.assignments


# ------------------------------------------------------------ aggregation


def test_delta_convolution():
    a = BinnedDistribution(0.5, np.eye(1, 7, 6)[0])  # delta at 3.0
    b = BinnedDistribution(0.5, np.eye(1, 5, 4)[0])  # delta at 2.0
    annual = convolve_annual([(1, a), (1, b)])
    assert annual.mean == 5.0 and annual.q05 == 5.0 and annual.q95 == 5.0
    assert convolve_annual([(4, a)]).mean == 12.0


def test_mean_additivity_and_mass():
    rng = np.random.default_rng(2)
    dists = [(c, LosDistribution(rng.gamma(2.0, s, 250))) for c, s in [(3, 1.0), (5, 0.4), (1, 2.5)]]
    annual = convolve_annual(dists, bin_width=0.05)
    expected = sum(c * d.mean for c, d in dists)
    assert abs(annual.mean - expected) <= 0.05
    assert annual.distribution.masses.sum() == pytest.approx(1.0, abs=1e-9)
    assert annual.q05 <= annual.mean <= annual.q95


def test_variance_additivity():
    rng = np.random.default_rng(3)
    w = 0.02
    a, b = bin_samples(rng.gamma(2.0, 1.0, 250), w), bin_samples(rng.uniform(0, 3, 250), w)
    annual = convolve_annual([(2, a), (3, b)])
    assert annual.distribution.variance == pytest.approx(2 * a.variance + 3 * b.variance, rel=1e-9)


def test_convolution_matches_monte_carlo():
    rng = np.random.default_rng(4)
    x, y = rng.gamma(2.0, 1.0, 250), rng.lognormal(0.0, 0.5, 250)
    w = 0.05
    annual = convolve_annual([(1, LosDistribution(x)), (1, LosDistribution(y))], bin_width=w)
    # Monte Carlo oracle: resampled pairwise sums of the same binned values
    xb = np.floor(x / w + 0.5) * w
    yb = np.floor(y / w + 0.5) * w
    mc = rng.choice(xb, 100_000) + rng.choice(yb, 100_000)
    for q in (0.05, 0.25, 0.5, 0.75, 0.95):
        assert abs(annual.distribution.quantile(q) - np.quantile(mc, q)) <= w


def test_zero_days_are_skipped_and_bins_checked():
    z = BinnedDistribution(1.0, np.array([1.0]))
    a = BinnedDistribution(1.0, np.array([0.5, 0.5]))
    assert convolve_annual([(10, z), (1, a)]).mean == 0.5
    with pytest.raises(BinMismatch):
        convolve_annual([(1, a), (1, BinnedDistribution(0.5, np.array([0.5, 0.5])))])


# -------------------------------------------------------------- statistics


def test_mwu_examples():
    r = mann_whitney_u([1, 2], [3, 4])
    assert r.u == 0 and r.p_value == pytest.approx(1 / 3, abs=1e-15) and r.method == "exact"
    tied = mann_whitney_u([1, 2, 3], [1, 2, 3])
    assert tied.u == 4.5 and tied.p_value == pytest.approx(1.0, abs=1e-9)
    far = mann_whitney_u(range(1, 21), range(101, 121))
    assert far.p_value < 1e-4 and format_p_value(far.p_value) == 1e-4
    with pytest.raises(EmptySample):
        mann_whitney_u([], [1])


def test_midranks():
    assert midranks([10, 20, 20, 30]) == [1.0, 2.5, 2.5, 4.0]


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 50), min_size=1, max_size=6), st.lists(st.integers(0, 50), min_size=1, max_size=6))
def test_mwu_u_and_exact_p_against_enumeration(a, b):
    r = mann_whitney_u(a, b)
    assert r.u == u_statistic_brute(a, b)
    if len(set(a + b)) == len(a + b):
        assert r.method == "exact"
        assert r.p_value == pytest.approx(exact_mwu_p_brute(a, b), abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0, 10), min_size=1, max_size=25), st.lists(st.floats(0, 10), min_size=1, max_size=25))
def test_mwu_symmetric(a, b):
    ab, ba = mann_whitney_u(a, b), mann_whitney_u(b, a)
    assert ba.u == pytest.approx(len(a) * len(b) - ab.u)
    assert ba.p_value == pytest.approx(ab.p_value, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 30), min_size=5, max_size=30), st.lists(st.integers(0, 30), min_size=5, max_size=30))
def test_mwu_asymptotic_matches_scipy(a, b):
    ours = mann_whitney_u(a, b, method="asymptotic")
    ref = scipy.stats.mannwhitneyu(a, b, alternative="two-sided", use_continuity=True, method="asymptotic")
    assert ours.u == ref.statistic
    assert ours.p_value == pytest.approx(ref.pvalue, abs=1e-12)


def test_mwu_exact_matches_scipy():
    rng = np.random.default_rng(0)
    for n1, n2 in [(3, 5), (8, 8), (2, 14), (7, 9)]:
        # integers against half-integers, so no ties
        a, b = rng.permutation(100)[:n1], rng.permutation(100)[:n2] + 0.5
        ref = scipy.stats.mannwhitneyu(a, b, alternative="two-sided", method="exact")
        assert mann_whitney_u(a, b).p_value == pytest.approx(ref.pvalue, abs=1e-12)


def test_normal_branch_tail_agreement_for_8_by_8():
    # the normal branch tracks the exact one closely where decisions are made
    rows = []
    for left in itertools.combinations(range(16), 8):
        a = list(left)
        b = [i for i in range(16) if i not in left]
        exact = mann_whitney_u(a, b, "exact").p_value
        if exact <= 0.1:
            rows.append(abs(mann_whitney_u(a, b, "asymptotic").p_value - exact))
    assert max(rows) <= 0.005


# --------------------------------------------------------------- smoothing


@pytest.mark.parametrize("window,order", [(5, 2), (7, 3), (9, 1), (11, 4), (3, 0)])
def test_sg_reproduces_polynomials(window, order):
    t = np.linspace(-3, 4, 40)
    for deg in range(order + 1):
        y = 1.5 + 0 * t + sum((0.7 - 0.2 * j) * t ** (j + 1) for j in range(deg))
        assert np.max(np.abs(savitzky_golay(y, window, order) - y)) <= 1e-9


def test_sg_examples():
    assert np.allclose(savitzky_golay(np.full(9, 4.0), 5, 2), 4.0, atol=1e-12, rtol=0)
    ramp = np.arange(12.0)
    assert np.allclose(savitzky_golay(ramp, 7, 1), ramp, atol=1e-12, rtol=0)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([(5, 2), (7, 3), (9, 2), (11, 5), (3, 1)]))
def test_sg_matches_scipy(seed, wo):
    window, order = wo
    y = np.random.default_rng(seed).normal(size=30)
    ref = scipy.signal.savgol_filter(y, window, order, mode="interp")
    assert np.allclose(savitzky_golay(y, window, order), ref, atol=1e-10, rtol=0)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-5, 5), st.floats(-5, 5))
def test_sg_linear(seed, a, b):
    rng = np.random.default_rng(seed)
    x, y = rng.normal(size=20), rng.normal(size=20)
    lhs = savitzky_golay(a * x + b * y, 7, 2)
    rhs = a * savitzky_golay(x, 7, 2) + b * savitzky_golay(y, 7, 2)
    assert np.allclose(lhs, rhs, atol=1e-9, rtol=0)


def test_sg_rejects_bad_parameters():
    for window, order, n in [(4, 2, 10), (5, 5, 10), (11, 2, 10), (0, 0, 10), (5, -1, 10)]:
        with pytest.raises(InvalidFilter):
            savitzky_golay(np.zeros(n), window, order)
