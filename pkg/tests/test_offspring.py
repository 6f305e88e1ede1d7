import numpy as np
import pytest

from cflml import linalg
from cflml.metric import Metric
from cflml.neighborhood import build_omega, compute_stats
from cflml.offspring import ScatterPair, assemble, scatter_for_instance, solve_child
from oracles import scalar_stats, sqrt_gen_eig
from test_neighborhood import random_problem


def test_single_same_neighbor_self_center():
    x = np.array([[0.0, 0.0], [1.0, 2.0]])
    y = np.array([0, 0])
    om = build_omega(x, y, Metric.identity(2), 1)
    st = compute_stats(x, y, Metric.identity(2), 1, om, center_mode="self")
    m_d, m_s, m_n = scatter_for_instance(0, st, om, x)
    v = np.array([-1.0, -2.0])
    np.testing.assert_allclose(m_s, np.outer(v, v), rtol=1e-15)
    assert not m_d.any()
    np.testing.assert_allclose(m_n, m_s, rtol=1e-15)


def test_coincident_points_zero_scatter():
    x = np.array([[1.0, 1.0]] * 3)
    y = np.array([0, 0, 1])
    om = build_omega(x, y, Metric.identity(2), 2)
    st = compute_stats(x, y, Metric.identity(2), 1, om)
    for mat in scatter_for_instance(0, st, om, x):
        assert not mat.any()


@pytest.mark.parametrize("center", ["weighted", "self"])
@pytest.mark.parametrize("kind", ["gaussian", "butterworth"])
def test_scatter_matches_scalar_formula(planted6, center, kind):
    x, y = planted6
    L = np.array([[1.1, 0.3], [-0.2, 0.8]])
    om = build_omega(x, y, Metric.identity(2), 5)
    st = compute_stats(x, y, Metric(L), 2, om, kind, center)
    for i in range(6):
        ref = scalar_stats(i, x.tolist(), y.tolist(), L.tolist(), 2, om.omega[i].tolist(), kind, center)
        m_d, m_s, m_n = scatter_for_instance(i, st, om, x)
        np.testing.assert_allclose(m_d, ref["M_D"], rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(m_s, ref["M_S"], rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(m_n, ref["M_N"], rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("seed", range(8))
def test_mass_identity(seed):
    x, y, om, m = random_problem(seed)
    st = compute_stats(x, y, m, 3, om)
    for i in range(x.shape[0]):
        m_d, m_s, m_n = scatter_for_instance(i, st, om, x)
        if st.p_N[i] == 0:
            continue
        mix = (st.p_S[i] * m_s + st.p_D[i] * m_d) / st.p_N[i]
        np.testing.assert_allclose(m_n, mix, rtol=1e-12, atol=1e-12 * max(1.0, np.abs(m_n).max()))


def test_assemble_single_active(planted6):
    x, y = planted6
    om = build_omega(x, y, Metric.identity(2), 5)
    st = compute_stats(x, y, Metric.identity(2), 2, om)
    mask = np.zeros(6, bool)
    mask[2] = True
    sp = assemble(st, om, x, st.w, mask)
    m_d, m_s, m_n = scatter_for_instance(2, st, om, x)
    np.testing.assert_allclose(sp.B, st.w[2] * (m_d - m_s), rtol=1e-13, atol=1e-15)
    np.testing.assert_allclose(sp.C, st.w[2] * m_n, rtol=1e-13, atol=1e-15)
    assert sp.active_count == 1


def test_assemble_zero_weights_fail(planted6):
    x, y = planted6
    om = build_omega(x, y, Metric.identity(2), 5)
    st = compute_stats(x, y, Metric.identity(2), 2, om)
    sp = assemble(st, om, x, np.zeros(6), np.ones(6, bool))
    assert sp.failed and sp.active_count == 0
    assert not sp.B.any() and not sp.C.any()
    assert solve_child(sp) is None


def test_assemble_two_instances_hand_sum(planted6):
    x, y = planted6
    L = np.array([[0.9, 0.2], [0.1, 1.4]])
    om = build_omega(x, y, Metric.identity(2), 5)
    st = compute_stats(x, y, Metric(L), 2, om)
    mask = np.zeros(6, bool)
    mask[[1, 4]] = True
    sp = assemble(st, om, x, st.w, mask)
    b = np.zeros((2, 2))
    c = np.zeros((2, 2))
    for i in (1, 4):
        ref = scalar_stats(i, x.tolist(), y.tolist(), L.tolist(), 2, om.omega[i].tolist())
        b += ref["w"] * (ref["M_D"] - ref["M_S"])
        c += ref["w"] * ref["M_N"]
    np.testing.assert_allclose(sp.B, b, rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(sp.C, c, rtol=1e-12, atol=1e-14)


def test_solve_child_diagonal():
    child = solve_child(ScatterPair(np.diag([2.0, -1.0]), np.eye(2), 1))
    assert child.L.shape == (1, 2)
    np.testing.assert_allclose(np.abs(child.L), [[2.0, 0.0]], atol=1e-7)


def test_solve_child_negative_spectrum():
    c = np.array([[2.0, 0.3], [0.3, 1.0]])
    assert solve_child(ScatterPair(-c, c, 3)) is None


def test_solve_child_mcap():
    child = solve_child(ScatterPair(np.diag([3.0, 2.0, 1.0]), np.eye(3), 1), m_cap=2)
    assert child.m == 2


def test_solve_child_planted_top_pair(rng):
    for _ in range(20):
        n = int(rng.integers(2, 7))
        g = rng.standard_normal((n, n + 2))
        c = g @ g.T
        eps = 1e-8 * np.trace(c) / n
        cr = c + eps * np.eye(n)
        # C-orthonormal basis, planted well-separated spectrum
        k = np.linalg.cholesky(cr)
        q, _ = np.linalg.qr(rng.standard_normal((n, n)))
        ybasis = np.linalg.solve(k.T, q)
        lam = np.r_[5.0, np.linspace(2.0, -1.0, n - 1)]
        b = cr @ ybasis @ np.diag(lam) @ ybasis.T @ cr
        b = 0.5 * (b + b.T)
        child = solve_child(ScatterPair(b, c, 1))
        lam_o, y_o = sqrt_gen_eig(b, c, eps)
        top = child.L[0]
        assert np.linalg.norm(top) == pytest.approx(lam_o[0] * np.linalg.norm(y_o[:, 0]), rel=1e-6)
        cos = abs(top @ y_o[:, 0]) / (np.linalg.norm(top) * np.linalg.norm(y_o[:, 0]))
        assert cos == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("seed", range(10))
def test_every_solve_is_c_orthonormal_and_traces_eigenvalues(seed):
    x, y, om, m = random_problem(seed, n_pts=60, n=4)
    st = compute_stats(x, y, m, 3, om)
    sp = assemble(st, om, x, st.w, st.w > 0.1)
    child = solve_child(sp)
    if child is None:
        pytest.skip("no positive spectrum for this draw")
    res = linalg.positive_truncate(linalg.gen_eig_sym_definite(sp.B, sp.C))
    ymat = child.L / res.eigenvalues[:, None]
    n = x.shape[1]
    cr = sp.C + 1e-8 * np.trace(sp.C) / n * np.eye(n)
    np.testing.assert_allclose(ymat @ cr @ ymat.T, np.eye(child.m), atol=1e-8)
    assert np.trace(ymat @ sp.B @ ymat.T) == pytest.approx(res.eigenvalues.sum(), abs=1e-8)
