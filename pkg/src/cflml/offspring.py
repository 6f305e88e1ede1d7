"""Weighted scatter assembly and the closed-form child-metric solve."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .metric import Metric
from .neighborhood import NeighborhoodStats, OmegaCache

_ROW_BLOCK = 512


@dataclass(frozen=True, eq=False)
class ScatterPair:
    B: np.ndarray
    C: np.ndarray
    active_count: int

    @property
    def failed(self) -> bool:
        return self.active_count == 0 or not np.any(self.C)


def _normalized(p: np.ndarray, mass: np.ndarray) -> np.ndarray:
    # p / mass row-wise; dividing first keeps subnormal masses from overflowing
    mass = np.broadcast_to(mass[:, None], p.shape)
    return np.divide(p, mass, out=np.zeros_like(p), where=mass > 0)


def scatter_for_instance(i: int, stats: NeighborhoodStats, omega: OmegaCache, train):
    """Normalized scatter matrices ``(M_D, M_S, M_N)`` of one instance.

    Outer products are of offsets ``center_i - x_j`` in input coordinates,
    weighted by the filter values computed in metric space.
    """
    train = np.asarray(train, dtype=float)
    nbr = omega.omega[i]
    off = stats.center[i][None, :] - train[nbr]
    p = stats.p[i]
    same = stats.same[i]
    n = train.shape[1]

    def mean_outer(mask, mass):
        if mass <= 0:
            return np.zeros((n, n))
        q = np.where(mask, p, 0.0) / mass
        return (off.T * q) @ off

    m_s = mean_outer(same, stats.p_S[i])
    m_d = mean_outer(~same, stats.p_D[i])
    m_n = mean_outer(np.ones_like(same), stats.p_N[i])
    return m_d, m_s, m_n


def assemble(stats: NeighborhoodStats, omega: OmegaCache, train, weights, active_mask) -> ScatterPair:
    """``B = sum_i w_i (M_D_i - M_S_i)`` and ``C = sum_i w_i M_N_i`` over active instances."""
    train = np.asarray(train, dtype=float)
    weights = np.asarray(weights, dtype=float)
    active = np.asarray(active_mask, dtype=bool) & (weights > 0)
    n = train.shape[1]
    b = np.zeros((n, n))
    c = np.zeros((n, n))
    rows = np.flatnonzero(active)
    if rows.size == 0:
        return ScatterPair(b, c, 0)

    for lo in range(0, rows.size, _ROW_BLOCK):
        r = rows[lo:lo + _ROW_BLOCK]
        off = stats.center[r][:, None, :] - train[omega.omega[r]]
        same = stats.same[r]
        p = stats.p[r]
        wr = weights[r, None]
        coef_b = wr * np.where(same, -_normalized(p, stats.p_S[r]), _normalized(p, stats.p_D[r]))
        coef_c = wr * _normalized(p, stats.p_N[r])
        b += np.einsum("ij,ijk,ijl->kl", coef_b, off, off)
        c += np.einsum("ij,ijk,ijl->kl", coef_c, off, off)
    return ScatterPair(linalg.symmetrize(b), linalg.symmetrize(c), int(rows.size))


def solve_child(
    sp: ScatterPair,
    m_cap: int | None = None,
    ridge: float = linalg.DEFAULT_RIDGE,
    rel_cutoff: float = linalg.DEFAULT_CUTOFF,
    id: int = 0,
) -> Metric | None:
    """Child metric with rows ``lam_k * y_k``, or ``None`` if no positive eigenvalue survives."""
    if sp.failed:
        return None
    res = linalg.positive_truncate(linalg.gen_eig_sym_definite(sp.B, sp.C, ridge), rel_cutoff)
    if res.retained == 0:
        return None
    vals, vecs = res.eigenvalues, res.eigenvectors
    if m_cap is not None:
        vals, vecs = vals[:m_cap], vecs[:, :m_cap]
    return Metric((vecs * vals).T, id)
