"""Multi-metric kNN classification.

A query first picks a metric: for each metric ``t`` it counts how many of its
``k`` nearest training instances under ``t`` are themselves associated with
``t``; the largest count wins (ties to the older metric). The label is then
the majority vote of the ``k`` neighbors under the chosen metric, with label
ties resolved by the nearest neighbor among the tied classes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .dataset import Standardizer
from .metric import Metric
from .neighborhood import FilterKind, _sorted_neighbors

if TYPE_CHECKING:
    from .group import MetricGroup


def knn_query(metric: Metric, query, train, k: int) -> np.ndarray:
    """Indices of the ``k`` nearest training rows, ties to the smaller index."""
    train = np.asarray(train, dtype=float)
    if k > train.shape[0]:
        raise ValueError(f"k={k} exceeds the {train.shape[0]} training instances")
    q = np.atleast_2d(np.asarray(query, dtype=float))
    nbrs = _sorted_neighbors(metric.transform(q), metric.transform(train), k, exclude_self=False)
    return nbrs[0] if np.ndim(query) == 1 else nbrs


def knn_batch(metrics: Sequence[Metric], queries, train, k: int) -> np.ndarray:
    """``(T, q, k)`` neighbor indices of every query under every metric."""
    train = np.asarray(train, dtype=float)
    queries = np.asarray(queries, dtype=float)
    if k > train.shape[0]:
        raise ValueError(f"k={k} exceeds the {train.shape[0]} training instances")
    return np.stack([
        _sorted_neighbors(m.transform(queries), m.transform(train), k, exclude_self=False)
        for m in metrics
    ])


def choose_metrics(neighbors: np.ndarray, association) -> tuple[np.ndarray, np.ndarray]:
    """Metric chosen per query plus the ``(q, T)`` association counts."""
    association = np.asarray(association)
    n_metrics = neighbors.shape[0]
    if n_metrics == 1:
        return np.zeros(neighbors.shape[1], dtype=int), np.full((neighbors.shape[1], 1), neighbors.shape[2])
    counts = np.stack(
        [(association[neighbors[t]] == t).sum(axis=1) for t in range(n_metrics)], axis=1
    )
    return np.argmax(counts, axis=1), counts


def vote(neighbor_labels: np.ndarray, n_classes: int) -> tuple[np.ndarray, np.ndarray]:
    """Majority labels for rows of neighbor labels sorted nearest-first."""
    q = neighbor_labels.shape[0]
    tallies = np.zeros((q, n_classes), dtype=int)
    np.add.at(tallies, (np.repeat(np.arange(q), neighbor_labels.shape[1]), neighbor_labels.ravel()), 1)
    best = tallies.max(axis=1, keepdims=True)
    tied = tallies == best
    # first neighbor (nearest) whose class is among the tied maxima
    is_tied = np.take_along_axis(tied, neighbor_labels, axis=1)
    first = np.argmax(is_tied, axis=1)
    return neighbor_labels[np.arange(q), first], tallies


def classify_batch(metrics, association, queries, train, train_labels, k: int, n_classes: int):
    """Labels and chosen metric indices for standardized ``queries``."""
    nbrs = knn_batch(metrics, queries, train, k)
    chosen, _ = choose_metrics(nbrs, association)
    used = nbrs[chosen, np.arange(nbrs.shape[1])]
    labels, _ = vote(np.asarray(train_labels)[used], n_classes)
    return labels, chosen


def error_rate(predicted, truth) -> float:
    predicted = np.asarray(predicted)
    truth = np.asarray(truth)
    if truth.size == 0:
        raise ValueError("cannot evaluate on an empty set")
    return float(np.mean(predicted != truth))


@dataclass(frozen=True)
class Prediction:
    label: int
    chosen_metric: int
    neighbor_ids: np.ndarray
    vote_counts: np.ndarray


@dataclass(frozen=True, eq=False)
class Model:
    group: MetricGroup
    standardizer: Standardizer
    train_instances: np.ndarray  # standardized
    train_labels: np.ndarray
    k: int
    class_names: tuple[str, ...]
    filter: FilterKind = FilterKind.GAUSSIAN
    center_mode: str = "weighted"

    def __post_init__(self):
        if len(self.group.association) != self.train_instances.shape[0]:
            raise ValueError("association length must match the training instance count")
        if np.any(np.asarray(self.group.association) >= len(self.group.metrics)):
            raise ValueError("association refers to a missing metric")

    @property
    def n_features(self) -> int:
        return self.train_instances.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def _prepare(self, raw) -> np.ndarray:
        raw = np.asarray(raw, dtype=float)
        if raw.shape[-1] != self.n_features:
            raise ValueError(f"model expects {self.n_features} features, got {raw.shape[-1]}")
        return self.standardizer.transform(raw)

    def predict_batch(self, raw) -> np.ndarray:
        z = self._prepare(np.atleast_2d(raw))
        labels, _ = classify_batch(
            self.group.metrics, self.group.association, z,
            self.train_instances, self.train_labels, self.k, self.n_classes,
        )
        return labels


def select_metric(model: Model, query) -> int:
    """Index of the metric a standardized query is routed to."""
    if len(model.group.metrics) == 1:
        return 0
    nbrs = knn_batch(model.group.metrics, np.atleast_2d(query), model.train_instances, model.k)
    chosen, _ = choose_metrics(nbrs, model.group.association)
    return int(chosen[0])


def predict(model: Model, query_raw) -> Prediction:
    z = model._prepare(query_raw)
    t = select_metric(model, z)
    nbrs = knn_query(model.group.metrics[t], z, model.train_instances, model.k)
    labels, tallies = vote(np.asarray(model.train_labels)[nbrs][None, :], model.n_classes)
    return Prediction(int(labels[0]), t, nbrs, tallies[0])


def evaluate(model: Model, instances, labels) -> float:
    """Fraction of misclassified rows (``instances`` are raw, unstandardized)."""
    labels = np.asarray(labels)
    if labels.size == 0:
        raise ValueError("cannot evaluate on an empty set")
    return error_rate(model.predict_batch(instances), labels)
