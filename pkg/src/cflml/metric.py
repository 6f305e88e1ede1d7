"""Mahalanobis metrics stored in factor form ``A = L.T @ L``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class Metric:
    L: np.ndarray
    id: int = 0

    def __post_init__(self):
        L = np.array(self.L, dtype=float, ndmin=2)
        if L.ndim != 2 or L.shape[0] < 1:
            raise ValueError(f"L must be a non-empty m x n matrix, got shape {L.shape}")
        if L.shape[0] > L.shape[1]:
            raise ValueError(f"L has more rows than columns: {L.shape}")
        if not np.all(np.isfinite(L)):
            raise ValueError("L has non-finite entries")
        L.setflags(write=False)
        object.__setattr__(self, "L", L)

    @classmethod
    def identity(cls, n: int, id: int = 0) -> Metric:
        return cls(np.eye(n), id)

    @property
    def m(self) -> int:
        return self.L.shape[0]

    @property
    def n(self) -> int:
        return self.L.shape[1]

    @property
    def A(self) -> np.ndarray:
        return self.L.T @ self.L

    def with_id(self, id: int) -> Metric:
        return Metric(self.L, id)

    def _check(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n:
            raise ValueError(f"expected {self.n} features, got {x.shape[-1]}")
        return x

    def transform(self, x) -> np.ndarray:
        """Map a vector (or row-stacked matrix) into the metric space."""
        return self._check(x) @ self.L.T

    def dist_sq(self, x, y) -> float | np.ndarray:
        d = self.transform(self._check(x) - self._check(y))
        return np.sum(d * d, axis=-1)


def transform(metric: Metric, x) -> np.ndarray:
    return metric.transform(x)


def dist_sq(metric: Metric, x, y):
    return metric.dist_sq(x, y)
