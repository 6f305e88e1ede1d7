"""Metric groups and the stochastic local search that grows them."""

from __future__ import annotations

import enum
import logging
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import classify
from .dataset import Dataset, Standardizer, fit_standardizer
from .metric import Metric
from .neighborhood import (
    CenterMode,
    FilterKind,
    NeighborhoodStats,
    OmegaCache,
    build_omega,
    compute_stats,
    default_capacity,
)
from .offspring import assemble, solve_child

log = logging.getLogger(__name__)

DEFAULT_THETA = 0.1


class Strategy(str, enum.Enum):
    RADICAL = "radical"
    CONSERVATIVE = "conservative"


class Variant(str, enum.Enum):
    CFLML1 = "cflml1"
    CFLML3 = "cflml3"
    EM = "em"


@dataclass(frozen=True, eq=False)
class MetricGroup:
    metrics: tuple[Metric, ...]
    member_w: np.ndarray  # (T, N) ambiguity of every instance under every member
    theta: float = DEFAULT_THETA

    def __post_init__(self):
        mw = np.atleast_2d(np.asarray(self.member_w, dtype=float))
        if mw.shape[0] != len(self.metrics):
            raise ValueError("need one ambiguity row per metric")
        object.__setattr__(self, "member_w", mw)

    @property
    def association(self) -> np.ndarray:
        # argmin returns the first minimum: ties go to the older metric
        return np.argmin(self.member_w, axis=0)

    @property
    def group_w(self) -> np.ndarray:
        return self.member_w.min(axis=0)

    def __len__(self) -> int:
        return len(self.metrics)

    def append(self, metric: Metric, w) -> MetricGroup:
        metric = metric.with_id(len(self.metrics))
        return replace(self, metrics=self.metrics + (metric,), member_w=np.vstack([self.member_w, w]))


def recompute_association(
    metrics,
    train,
    labels,
    omega: OmegaCache,
    k: int,
    kind=FilterKind.GAUSSIAN,
    center_mode=CenterMode.WEIGHTED,
    theta: float = DEFAULT_THETA,
) -> MetricGroup:
    ws = [compute_stats(train, labels, m, k, omega, kind, center_mode).w for m in metrics]
    return MetricGroup(tuple(m.with_id(t) for t, m in enumerate(metrics)), np.array(ws), theta)


def active_set(group: MetricGroup) -> np.ndarray:
    return group.group_w > group.theta


@dataclass(frozen=True)
class EvolutionConfig:
    strategy: Strategy = Strategy.RADICAL
    max_metrics: int | None = None  # None: unlimited
    backtrace_max: int = 5
    k: int = 3
    filter: FilterKind = FilterKind.GAUSSIAN
    center_mode: CenterMode = CenterMode.WEIGHTED
    theta: float = DEFAULT_THETA
    omega_capacity: int | None = None
    m_cap: int | None = None
    subsample: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.backtrace_max < 1:
            raise ValueError("backtrace_max must be >= 1")
        if self.max_metrics is not None and self.max_metrics < 1:
            raise ValueError("max_metrics must be >= 1")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not 0 < self.subsample <= 1:
            raise ValueError("subsample must lie in (0, 1]")


@dataclass
class TrainReport:
    accepted_metrics: int = 0
    attempts: int = 0
    validation_error_per_step: list[float] = field(default_factory=list)
    accepted_steps: list[int] = field(default_factory=list)
    final_val_error: float = float("nan")
    wall_time: float = 0.0
    fallback: bool = False

    def summary(self) -> dict:
        return {
            "accepted_metrics": self.accepted_metrics,
            "attempts": self.attempts,
            "final_val_error": self.final_val_error,
            "validation_error_per_step": self.validation_error_per_step,
            "fallback_to_initial_metric": self.fallback,
            "wall_time_s": round(self.wall_time, 3),
        }


class _Learner:
    """Shared state for one training run on standardized data."""

    def __init__(self, train, labels, cfg: EvolutionConfig, n_classes: int):
        self.x = np.asarray(train, dtype=float)
        self.y = np.asarray(labels, dtype=int)
        self.cfg = cfg
        self.n_classes = n_classes
        cap = cfg.omega_capacity or default_capacity(self.x.shape[0], cfg.k)
        self.initial = Metric.identity(self.x.shape[1])
        self.omega = build_omega(self.x, self.y, self.initial, cap)

    def stats(self, metric: Metric) -> NeighborhoodStats:
        return compute_stats(self.x, self.y, metric, self.cfg.k, self.omega, self.cfg.filter, self.cfg.center_mode)

    def child(self, stats: NeighborhoodStats, mask) -> Metric | None:
        sp = assemble(stats, self.omega, self.x, stats.w, mask)
        return solve_child(sp, self.cfg.m_cap)

    def retry_mask(self, mask, rng):
        return mask & (rng.random(mask.size) < self.cfg.subsample)

    def val_error(self, group: MetricGroup, val_x, val_y) -> float:
        k = min(self.cfg.k, self.x.shape[0])
        pred, _ = classify.classify_batch(group.metrics, group.association, val_x, self.x, self.y, k, self.n_classes)
        return classify.error_rate(pred, val_y)


def evolve(train, labels, val, val_labels, cfg: EvolutionConfig, n_classes: int | None = None):
    """Grow a metric group from the identity metric.

    Each step solves a child from the parent weighting over the currently
    active instances and keeps it only if the multi-metric validation error
    strictly drops. Retries after a rejection draw a random subsample of the
    active instances so that successive attempts differ.
    """
    t0 = time.perf_counter()
    labels = np.asarray(labels, dtype=int)
    n_classes = n_classes or int(max(labels.max(), np.max(val_labels)) + 1)
    lr = _Learner(train, labels, cfg, n_classes)
    rng = np.random.default_rng(cfg.seed)
    val = np.asarray(val, dtype=float)
    val_labels = np.asarray(val_labels, dtype=int)

    stats = [lr.stats(lr.initial)]
    group = MetricGroup((lr.initial,), stats[0].w[None, :], cfg.theta)
    best = lr.val_error(group, val, val_labels)
    report = TrainReport(validation_error_per_step=[best], accepted_steps=[0])
    parent = 0
    backtrace = 0
    cap = cfg.max_metrics if cfg.max_metrics is not None else np.inf

    while len(group) < cap and backtrace < cfg.backtrace_max:
        if cfg.strategy is Strategy.RADICAL:
            weighting = stats[parent]
        else:
            weighting = NeighborhoodStats.combine(stats, group.association)
        mask = active_set(group)
        if backtrace > 0 and cfg.subsample < 1:
            mask = lr.retry_mask(mask, rng)
        report.attempts += 1
        child = lr.child(weighting, mask)
        if child is None:
            backtrace += 1
            report.validation_error_per_step.append(best)
            log.debug("attempt %d: no positive spectrum", report.attempts)
            continue
        child_stats = lr.stats(child)
        candidate = group.append(child, child_stats.w)
        err = lr.val_error(candidate, val, val_labels)
        report.validation_error_per_step.append(err)
        log.debug("attempt %d: val error %.4f (best %.4f)", report.attempts, err, best)
        if err < best:
            group, best = candidate, err
            stats.append(child_stats)
            parent = len(group) - 1
            backtrace = 0
            report.accepted_steps.append(report.attempts)
        else:
            backtrace += 1

    report.accepted_metrics = len(group) - 1
    report.final_val_error = best
    report.wall_time = time.perf_counter() - t0
    return group, report


def single_child(train, labels, cfg: EvolutionConfig):
    """One closed-form solve from the identity metric, used standalone."""
    t0 = time.perf_counter()
    lr = _Learner(train, labels, cfg, int(np.max(labels)) + 1)
    st = lr.stats(lr.initial)
    group0 = MetricGroup((lr.initial,), st.w[None, :], cfg.theta)
    child = lr.child(st, active_set(group0))
    report = TrainReport(attempts=1)
    if child is None:
        log.warning("closed-form solve produced no positive spectrum; keeping the identity metric")
        report.fallback = True
        group = group0
    else:
        group = MetricGroup((child.with_id(0),), lr.stats(child).w[None, :], cfg.theta)
        report.accepted_metrics = 1
    report.wall_time = time.perf_counter() - t0
    return group, report


def variant_config(variant: Variant | str, cfg: EvolutionConfig) -> EvolutionConfig:
    variant = Variant(variant)
    if variant is Variant.CFLML3:
        return replace(cfg, max_metrics=3 if cfg.max_metrics is None else min(3, cfg.max_metrics))
    if variant is Variant.EM:
        return replace(cfg, max_metrics=None)
    return cfg


def train_variant(
    variant: Variant | str,
    data: Dataset,
    fit_idx,
    val_idx,
    cfg: EvolutionConfig,
    standardizer: Standardizer | None = None,
):
    """Train one CFLML flavour and wrap it as a classifier.

    ``fit_idx`` rows build the metrics and are the classifier's reference
    set; ``val_idx`` rows only drive acceptance during evolution.
    """
    variant = Variant(variant)
    fit_idx = np.asarray(fit_idx, dtype=int)
    val_idx = np.asarray(val_idx, dtype=int)
    if standardizer is None:
        standardizer = fit_standardizer(data, np.concatenate([fit_idx, val_idx]))
    x = standardizer.transform(data.instances[fit_idx])
    y = data.labels[fit_idx]
    cfg = variant_config(variant, cfg)
    k = min(cfg.k, x.shape[0])
    if variant is Variant.CFLML1:
        group, report = single_child(x, y, cfg)
    else:
        if val_idx.size == 0:
            raise ValueError("evolution needs a non-empty validation set")
        vx = standardizer.transform(data.instances[val_idx])
        group, report = evolve(x, y, vx, data.labels[val_idx], cfg, data.C)
    model = classify.Model(group, standardizer, x, y, k, data.class_names, cfg.filter, CenterMode(cfg.center_mode).value)
    return model, report
