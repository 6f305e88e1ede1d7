"""Candidate-neighbor cache, neighbor radii, filter weights and ambiguities.

All per-instance quantities are restricted to the precomputed candidate set
``omega[i]`` (built once under the initial metric). Sums run over the stored
order of ``omega[i]`` so results do not depend on evaluation schedule.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .metric import Metric

_ROW_BLOCK = 256


class FilterKind(str, enum.Enum):
    GAUSSIAN = "gaussian"
    BUTTERWORTH = "butterworth"


class CenterMode(str, enum.Enum):
    WEIGHTED = "weighted"
    SELF = "self"


def default_capacity(n_train: int, k: int) -> int:
    return max(1, min(n_train - 1, max(50, 5 * k)))


@dataclass(frozen=True)
class OmegaCache:
    omega: np.ndarray  # (N, capacity) int
    built_under: int = 0

    @property
    def capacity(self) -> int:
        return self.omega.shape[1]


def _sorted_neighbors(z_query: np.ndarray, z_ref: np.ndarray, count: int, exclude_self: bool):
    """Row-wise ``count`` nearest reference indices, ties to the smaller index."""
    out = np.empty((z_query.shape[0], count), dtype=np.intp)
    for lo in range(0, z_query.shape[0], _ROW_BLOCK):
        hi = min(lo + _ROW_BLOCK, z_query.shape[0])
        diff = z_query[lo:hi, None, :] - z_ref[None, :, :]
        d2 = np.einsum("ijk,ijk->ij", diff, diff)
        if exclude_self:
            d2[np.arange(hi - lo), np.arange(lo, hi)] = np.inf
        out[lo:hi] = np.argsort(d2, axis=1, kind="stable")[:, :count]
    return out


def build_omega(train, labels, metric: Metric, capacity: int) -> OmegaCache:
    train = np.asarray(train, dtype=float)
    n_train = train.shape[0]
    if n_train < 2:
        raise ValueError("need at least two training instances")
    if capacity < 1:
        raise ValueError("capacity must be >= 1")
    count = min(capacity, n_train - 1)
    z = metric.transform(train)
    omega = _sorted_neighbors(z, z, count, exclude_self=True)
    omega.setflags(write=False)
    return OmegaCache(omega, metric.id)


def filter_weight(kind: FilterKind | str, dist_sq, sigma):
    """Gaussian ``exp(-d^2 / 2 sigma^2)`` or fourth-order Butterworth ``1 / (1 + (d/sigma)^4)``."""
    ratio = np.asarray(dist_sq, dtype=float) / np.square(np.asarray(sigma, dtype=float))
    if FilterKind(kind) is FilterKind.GAUSSIAN:
        return np.exp(-0.5 * ratio)
    return 1.0 / (1.0 + ratio * ratio)


@dataclass(frozen=True)
class InstanceStats:
    sigma: float
    p_S: float
    p_D: float
    p_N: float
    w: float
    center: np.ndarray


@dataclass(frozen=True, eq=False)
class NeighborhoodStats:
    """Per-instance statistics for every training instance under one metric (or a mix)."""

    dist_sq: np.ndarray  # (N, c) metric distances to omega members
    same: np.ndarray  # (N, c) bool, omega member shares the label
    sigma: np.ndarray  # (N,)
    p: np.ndarray  # (N, c) filter weights
    p_S: np.ndarray
    p_D: np.ndarray
    p_N: np.ndarray
    w: np.ndarray
    center: np.ndarray  # (N, n)

    def instance(self, i: int) -> InstanceStats:
        return InstanceStats(
            float(self.sigma[i]), float(self.p_S[i]), float(self.p_D[i]),
            float(self.p_N[i]), float(self.w[i]), self.center[i].copy(),
        )

    @staticmethod
    def combine(per_metric: list[NeighborhoodStats], pick: np.ndarray) -> NeighborhoodStats:
        """Row ``i`` of the result is row ``i`` of ``per_metric[pick[i]]``."""
        pick = np.asarray(pick, dtype=int)
        rows = np.arange(pick.size)

        def take(name):
            stack = np.stack([getattr(s, name) for s in per_metric])
            return stack[pick, rows]

        return NeighborhoodStats(*(take(f) for f in (
            "dist_sq", "same", "sigma", "p", "p_S", "p_D", "p_N", "w", "center")))


def neighbor_radii(dist_sq: np.ndarray, same: np.ndarray, k: int) -> np.ndarray:
    """Mean distance to the ``k`` nearest same-class candidates, with fallbacks.

    Instances without any same-class candidate get the median of the defined
    radii; every radius is floored at ``1e-8`` times the mean radius.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    d = np.where(same, np.sqrt(dist_sq), np.inf)
    d = np.sort(d, axis=1)[:, :k]
    finite = np.isfinite(d)
    counts = finite.sum(axis=1)
    total = np.where(finite, d, 0.0).sum(axis=1)
    defined = counts > 0
    sigma = np.zeros(d.shape[0])
    sigma[defined] = total[defined] / counts[defined]
    if defined.any():
        sigma[~defined] = np.median(sigma[defined])
    else:
        allmean = np.sqrt(dist_sq).mean() if dist_sq.size else 1.0
        sigma[:] = allmean if allmean > 0 else 1.0
    scale = sigma.mean()
    floor = 1e-8 * scale if scale > 0 else 1e-8
    return np.maximum(sigma, floor)


def neighbor_radius(i: int, metric: Metric, k: int, omega: OmegaCache, labels, train) -> float:
    """Radius of one instance (computes the global fallback statistics)."""
    d2, same = _omega_distances(np.asarray(train, dtype=float), np.asarray(labels), metric, omega)
    return float(neighbor_radii(d2, same, k)[i])


def _omega_distances(train, labels, metric: Metric, omega: OmegaCache):
    z = metric.transform(train)
    om = omega.omega
    d2 = np.empty(om.shape)
    for lo in range(0, om.shape[0], _ROW_BLOCK):
        hi = min(lo + _ROW_BLOCK, om.shape[0])
        diff = z[lo:hi, None, :] - z[om[lo:hi]]
        d2[lo:hi] = np.einsum("ijk,ijk->ij", diff, diff)
    same = labels[om] == labels[:, None]
    return d2, same


def compute_stats(
    train,
    labels,
    metric: Metric,
    k: int,
    omega: OmegaCache,
    kind: FilterKind | str = FilterKind.GAUSSIAN,
    center_mode: CenterMode | str = CenterMode.WEIGHTED,
) -> NeighborhoodStats:
    train = np.asarray(train, dtype=float)
    labels = np.asarray(labels)
    d2, same = _omega_distances(train, labels, metric, omega)
    sigma = neighbor_radii(d2, same, k)
    p = filter_weight(kind, d2, sigma[:, None])

    p_S = np.where(same, p, 0.0).sum(axis=1)
    p_D = np.where(same, 0.0, p).sum(axis=1)
    p_N = p_S + p_D
    w = np.divide(p_D, p_N, out=np.zeros_like(p_D), where=p_N > 0)

    if CenterMode(center_mode) is CenterMode.WEIGHTED:
        ps = np.where(same, p, 0.0)
        acc = np.einsum("ij,ijk->ik", ps, train[omega.omega])
        has = p_S > 0
        center = train.copy()
        center[has] = acc[has] / p_S[has, None]
    else:
        center = train.copy()
    return NeighborhoodStats(d2, same, sigma, p, p_S, p_D, p_N, w, center)


def instance_stats(
    i: int,
    metric: Metric,
    k: int,
    omega: OmegaCache,
    labels,
    train,
    kind: FilterKind | str = FilterKind.GAUSSIAN,
    center_mode: CenterMode | str = CenterMode.WEIGHTED,
) -> InstanceStats:
    return compute_stats(train, labels, metric, k, omega, kind, center_mode).instance(i)
