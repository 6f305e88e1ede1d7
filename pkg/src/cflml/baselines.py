"""Euclidean, PCA and Fisher-LDA reference metrics."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import linalg
from .dataset import Dataset
from .metric import Metric


class BaselineKind(str, enum.Enum):
    EUCLIDEAN = "euclidean"
    PCA = "pca"
    LDA = "lda"


@dataclass(frozen=True)
class Baseline:
    kind: BaselineKind
    target_dim: int | None = None


def pca_directions(x) -> tuple[np.ndarray, np.ndarray]:
    """Covariance eigenvalues (descending) and principal directions as rows."""
    x = np.asarray(x, dtype=float)
    centered = x - x.mean(axis=0)
    cov = centered.T @ centered / x.shape[0]
    vals, vecs = linalg.sym_eig(cov)
    return vals, vecs.T


def scatter_matrices(x, labels) -> tuple[np.ndarray, np.ndarray]:
    """Between-class and within-class scatter."""
    x = np.asarray(x, dtype=float)
    labels = np.asarray(labels)
    mu = x.mean(axis=0)
    n = x.shape[1]
    s_b = np.zeros((n, n))
    s_w = np.zeros((n, n))
    for c in np.unique(labels):
        xc = x[labels == c]
        d = xc.mean(axis=0) - mu
        s_b += xc.shape[0] * np.outer(d, d)
        centered = xc - xc.mean(axis=0)
        s_w += centered.T @ centered
    return s_b, s_w


def fit_baseline(kind: Baseline | BaselineKind | str, train, labels, ridge: float = linalg.DEFAULT_RIDGE) -> Metric:
    if not isinstance(kind, Baseline):
        kind = Baseline(BaselineKind(kind))
    train = np.asarray(train, dtype=float)
    n = train.shape[1]
    d = kind.target_dim
    if d is not None and not 1 <= d <= n:
        raise ValueError(f"target_dim must lie in [1, {n}]")

    if kind.kind is BaselineKind.EUCLIDEAN:
        return Metric.identity(n)
    if kind.kind is BaselineKind.PCA:
        _, rows = pca_directions(train)
        return Metric(rows[: d or n])

    n_classes = np.unique(labels).size
    if n_classes < 2:
        raise ValueError("LDA needs at least two classes")
    s_b, s_w = scatter_matrices(train, labels)
    res = linalg.gen_eig_sym_definite(s_b, s_w, ridge)
    keep = min(n_classes - 1, d or n, n)
    return Metric(res.eigenvectors[:, :keep].T)


def pca_reduce(data: Dataset, target_dim: int, fit_idx=None) -> Dataset:
    """Project every instance onto the top principal directions of ``fit_idx`` rows."""
    if not 1 <= target_dim <= data.n:
        raise ValueError(f"target_dim must lie in [1, {data.n}]")
    fit_idx = np.arange(data.N) if fit_idx is None else np.asarray(fit_idx, dtype=int)
    rows = data.instances[fit_idx]
    _, dirs = pca_directions(rows)
    proj = (data.instances - rows.mean(axis=0)) @ dirs[:target_dim].T
    return Dataset(proj, data.labels, data.class_names)
