import math

import numpy as np
import pytest

from cflml.metric import Metric
from cflml.neighborhood import (
    FilterKind,
    NeighborhoodStats,
    build_omega,
    compute_stats,
    default_capacity,
    filter_weight,
    instance_stats,
    neighbor_radii,
    neighbor_radius,
)
from oracles import brute_omega, scalar_stats


def test_omega_collinear():
    x = np.array([[0.0], [1.0], [3.0]])
    om = build_omega(x, [0, 0, 1], Metric.identity(1), 2)
    assert om.omega[0].tolist() == [1, 2]
    assert om.omega[2].tolist() == [1, 0]


def test_omega_saturates():
    x = np.random.default_rng(0).standard_normal((6, 2))
    om = build_omega(x, np.zeros(6, int), Metric.identity(2), 100)
    for i in range(6):
        assert sorted(om.omega[i].tolist()) == [j for j in range(6) if j != i]


def test_omega_ties_to_smaller_index():
    x = np.array([[0.0], [1.0], [-1.0], [2.0]])
    om = build_omega(x, np.zeros(4, int), Metric.identity(1), 3)
    assert om.omega[0].tolist() == [1, 2, 3]


def test_omega_matches_brute_force():
    x = np.random.default_rng(1).standard_normal((50, 3))
    om = build_omega(x, np.zeros(50, int), Metric.identity(3), 10)
    assert om.omega.tolist() == brute_omega(x.tolist(), 10)
    assert all(i not in row for i, row in enumerate(om.omega.tolist()))


def test_default_capacity():
    assert default_capacity(1000, 3) == 50
    assert default_capacity(1000, 20) == 100
    assert default_capacity(30, 3) == 29


def test_filter_values():
    for kind in FilterKind:
        assert filter_weight(kind, 0.0, 2.0) == 1.0
    assert filter_weight("gaussian", 4.0, 2.0) == pytest.approx(math.exp(-0.5), abs=1e-15)
    assert filter_weight("gaussian", 1.0, 1.0) == pytest.approx(0.60653, abs=1e-5)
    assert filter_weight("butterworth", 4.0, 2.0) == 0.5


@pytest.mark.parametrize("kind", list(FilterKind))
def test_filter_strictly_decreasing(kind):
    grid = np.linspace(1e-6, 20.0, 2000)
    for sigma in (0.3, 1.0, 3.0):
        w = filter_weight(kind, grid, sigma)
        assert np.all(np.diff(w) < 0)
        assert np.all((w > 0) & (w <= 1))


def test_radius_examples():
    d2 = np.array([[1.0, 9.0, 0.25]])
    same = np.array([[True, True, False]])
    assert neighbor_radii(d2, same, 2)[0] == 2.0
    assert neighbor_radii(np.array([[0.25, 4.0]]), np.array([[True, True]]), 1)[0] == 0.5


def test_radius_duplicate_points_clamped():
    d2 = np.array([[0.0, 5.0], [4.0, 1.0]])
    same = np.array([[True, False], [True, True]])
    sig = neighbor_radii(d2, same, 1)
    assert sig[1] == 1.0
    assert sig[0] == pytest.approx(1e-8 * 0.5)
    assert sig[0] > 0


def test_radius_fallback_median():
    d2 = np.array([[1.0], [4.0], [9.0], [16.0]])
    same = np.array([[True], [True], [True], [False]])
    sig = neighbor_radii(d2, same, 1)
    assert sig[3] == 2.0


def test_neighbor_radius_single(planted6):
    x, y = planted6
    om = build_omega(x, y, Metric.identity(2), 5)
    ref = scalar_stats(0, x.tolist(), y.tolist(), np.eye(2).tolist(), 2, om.omega[0].tolist())
    assert neighbor_radius(0, Metric.identity(2), 2, om, y, x) == pytest.approx(ref["sigma"], rel=1e-14)


def test_symmetric_mass_gives_half():
    x = np.array([[0.0, 0.0], [1.0, 0.0], [-1.0, 0.0]])
    y = np.array([0, 0, 1])
    om = build_omega(x, y, Metric.identity(2), 2)
    s = instance_stats(0, Metric.identity(2), 1, om, y, x)
    assert s.p_S == s.p_D
    assert s.w == 0.5


def test_pure_neighborhood_zero_ambiguity():
    x = np.array([[0.0], [1.0], [2.0], [10.0]])
    y = np.array([0, 0, 0, 1])
    om = build_omega(x, y, Metric.identity(1), 2)
    s = instance_stats(0, Metric.identity(1), 1, om, y, x)
    assert s.w == 0.0


@pytest.mark.parametrize("kind", ["gaussian", "butterworth"])
@pytest.mark.parametrize("center", ["weighted", "self"])
@pytest.mark.parametrize("L", [np.eye(2), np.array([[1.3, -0.4], [0.2, 0.7]]), np.array([[0.5, 2.0]])])
def test_stats_match_scalar_formulas(planted6, kind, center, L):
    x, y = planted6
    om = build_omega(x, y, Metric.identity(2), 5)
    st = compute_stats(x, y, Metric(L), 2, om, kind, center)
    for i in range(6):
        ref = scalar_stats(i, x.tolist(), y.tolist(), L.tolist(), 2, om.omega[i].tolist(), kind, center)
        got = st.instance(i)
        for key in ("sigma", "p_S", "p_D", "p_N", "w"):
            assert getattr(got, key) == pytest.approx(ref[key], rel=1e-12, abs=1e-15)
        np.testing.assert_allclose(got.center, ref["center"], rtol=1e-12, atol=1e-15)


def random_problem(seed, n_pts=40, n=3, classes=3, cap=12):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n_pts, n))
    y = rng.integers(0, classes, n_pts)
    om = build_omega(x, y, Metric.identity(n), cap)
    L = rng.standard_normal((int(rng.integers(1, n + 1)), n))
    return x, y, om, Metric(L)


@pytest.mark.parametrize("seed", range(10))
def test_stats_invariants(seed):
    x, y, om, m = random_problem(seed)
    st = compute_stats(x, y, m, 3, om, "gaussian", "weighted")
    assert np.all(st.sigma > 0)
    assert np.array_equal(st.p_N, st.p_S + st.p_D)
    assert np.all((st.w >= 0) & (st.w <= 1))
    has_diff = (~st.same).any(axis=1)
    assert np.array_equal(st.w == 0, ~has_diff)
    for i in range(x.shape[0]):
        members = om.omega[i][st.same[i]]
        if members.size == 0:
            continue
        bary = np.where(st.same[i], st.p[i], 0.0)[st.same[i]] / st.p_S[i]
        assert np.all(bary >= 0)
        assert abs(bary.sum() - 1) < 1e-12
        np.testing.assert_allclose(bary @ x[members], st.center[i], atol=1e-12)


def test_center_fallback_without_same_class():
    x = np.array([[0.0], [1.0], [2.0], [3.0]])
    y = np.array([0, 1, 1, 1])
    om = build_omega(x, y, Metric.identity(1), 3)
    st = compute_stats(x, y, Metric.identity(1), 1, om)
    assert st.center[0, 0] == 0.0
    assert st.p_S[0] == 0.0
    assert st.w[0] == 1.0


def test_combine_picks_rows():
    x, y, om, m = random_problem(3)
    a = compute_stats(x, y, Metric.identity(3), 3, om)
    b = compute_stats(x, y, m, 3, om)
    pick = np.arange(x.shape[0]) % 2
    mix = NeighborhoodStats.combine([a, b], pick)
    for i in range(x.shape[0]):
        src = (a, b)[pick[i]]
        assert mix.w[i] == src.w[i]
        assert np.array_equal(mix.p[i], src.p[i])
