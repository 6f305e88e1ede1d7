"""Repeated random-split benchmark comparing baselines and CFLML variants."""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field, replace
from typing import Iterable

import numpy as np

from . import classify
from .baselines import Baseline, BaselineKind, fit_baseline
from .dataset import Dataset, SplitSpec, Standardizer, fit_standardizer, split
from .group import EvolutionConfig, MetricGroup, Variant, train_variant

BASELINES = tuple(b.value for b in BaselineKind)
VARIANTS = tuple(v.value for v in Variant)
METHODS = BASELINES + VARIANTS


def parse_methods(text: str) -> list[str]:
    methods = [m.strip().lower() for m in text.split(",") if m.strip()]
    unknown = [m for m in methods if m not in METHODS]
    if unknown:
        raise ValueError(f"unknown method(s): {', '.join(unknown)}; choose from {', '.join(METHODS)}")
    if not methods:
        raise ValueError("no methods given")
    return methods


def parse_k_map(text: str | None) -> dict[str, int]:
    """``"lda=3,cflml1=9"`` -> ``{"lda": 3, "cflml1": 9}``."""
    out: dict[str, int] = {}
    if not text:
        return out
    for item in text.split(","):
        if not item.strip():
            continue
        name, _, val = item.partition("=")
        name = name.strip().lower()
        if name not in METHODS or not val.strip():
            raise ValueError(f"bad --k-map entry {item!r}")
        out[name] = int(val)
    return out


@dataclass
class MethodResult:
    errors: list[float] = field(default_factory=list)  # fractions, one per repeat
    seconds: list[float] = field(default_factory=list)

    @property
    def mean_pct(self) -> float:
        return 100.0 * float(np.mean(self.errors))

    @property
    def std_pct(self) -> float:
        return 100.0 * float(np.std(self.errors))


@dataclass
class BenchReport:
    dataset: str
    repeats: int
    methods: dict[str, MethodResult]

    def table(self) -> str:
        names = list(self.methods)
        cells = [f"{self.methods[m].mean_pct:.2f}({self.methods[m].std_pct:.2f})" for m in names]
        width = [max(len(a), len(b)) for a, b in zip(names, cells)]
        label_w = max(len(self.dataset), len("Data Set"))
        head = "  ".join(["Data Set".ljust(label_w)] + [n.rjust(w) for n, w in zip(names, width)])
        row = "  ".join([self.dataset.ljust(label_w)] + [c.rjust(w) for c, w in zip(cells, width)])
        return head + "\n" + row

    def timing(self) -> str:
        return "  ".join(f"{m}={sum(r.seconds):.2f}s" for m, r in self.methods.items())

    def as_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "repeats": self.repeats,
            "methods": {
                m: {
                    "mean_pct": r.mean_pct,
                    "std_pct": r.std_pct,
                    "errors": r.errors,
                    "seconds": r.seconds,
                }
                for m, r in self.methods.items()
            },
        }

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["repeat", *self.methods])
            for r in range(self.repeats):
                w.writerow([r, *(f"{res.errors[r]!r}" for res in self.methods.values())])


def _baseline_model(kind: str, data: Dataset, train_idx, std: Standardizer, k: int, pca_dim: int | None):
    x = std.transform(data.instances[train_idx])
    y = data.labels[train_idx]
    target = pca_dim if kind == BaselineKind.PCA.value else None
    metric = fit_baseline(Baseline(BaselineKind(kind), target), x, y)
    group = MetricGroup((metric,), np.zeros((1, x.shape[0])))
    return classify.Model(group, std, x, y, min(k, x.shape[0]), data.class_names)


def run_repeat(
    data: Dataset,
    methods: Iterable[str],
    seed: int,
    cfg: EvolutionConfig,
    k_map: dict[str, int] | None = None,
    pca_dim: int | None = None,
    scale: bool = True,
    split_spec: SplitSpec | None = None,
) -> dict[str, tuple[float, float]]:
    """Error fraction and seconds per method on one shared split."""
    k_map = k_map or {}
    spec = replace(split_spec or SplitSpec(), seed=seed)
    train_idx, val_idx, test_idx = split(data, spec)
    fit_idx = np.setdiff1d(train_idx, val_idx)
    std = fit_standardizer(data, train_idx) if scale else Standardizer.identity(data.n)
    test_x, test_y = data.instances[test_idx], data.labels[test_idx]
    out = {}
    for method in methods:
        k = k_map.get(method, cfg.k)
        t0 = time.perf_counter()
        if method in BASELINES:
            model = _baseline_model(method, data, train_idx, std, k, pca_dim)
        else:
            model, _ = train_variant(method, data, fit_idx, val_idx, replace(cfg, k=k, seed=seed), std)
        err = classify.evaluate(model, test_x, test_y)
        out[method] = (err, time.perf_counter() - t0)
    return out


def run_bench(
    data: Dataset,
    methods: Iterable[str],
    repeats: int = 10,
    seed: int = 0,
    cfg: EvolutionConfig | None = None,
    k_map: dict[str, int] | None = None,
    pca_dim: int | None = None,
    scale: bool = True,
    name: str = "data",
    split_spec: SplitSpec | None = None,
) -> BenchReport:
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    methods = list(methods)
    cfg = cfg or EvolutionConfig()
    results = {m: MethodResult() for m in methods}
    for r in range(repeats):
        for m, (err, secs) in run_repeat(data, methods, seed + r, cfg, k_map, pca_dim, scale, split_spec).items():
            results[m].errors.append(err)
            results[m].seconds.append(secs)
    return BenchReport(name, repeats, results)
