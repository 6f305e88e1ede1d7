"""CSV ingestion, label encoding, z-scoring and seeded train/validation/test splits."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np


class DataError(ValueError):
    """Raised for malformed or unusable input data."""


@dataclass(frozen=True)
class Dataset:
    instances: np.ndarray
    labels: np.ndarray
    class_names: tuple[str, ...]
    feature_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        x = np.asarray(self.instances, dtype=float)
        y = np.asarray(self.labels, dtype=int)
        if x.ndim != 2:
            raise DataError(f"instances must be 2-D, got shape {x.shape}")
        if y.shape != (x.shape[0],):
            raise DataError("labels must have one entry per instance")
        if not np.all(np.isfinite(x)):
            raise DataError("instances contain non-finite values")
        n_classes = len(self.class_names)
        if y.size and (y.min() < 0 or y.max() >= n_classes):
            raise DataError("label id out of range")
        if set(np.unique(y).tolist()) != set(range(n_classes)):
            raise DataError("every class id must occur at least once")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "instances", x)
        object.__setattr__(self, "labels", y)

    @property
    def N(self) -> int:
        return self.instances.shape[0]

    @property
    def n(self) -> int:
        return self.instances.shape[1]

    @property
    def C(self) -> int:
        return len(self.class_names)


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def load_csv(path, has_header: bool | None = None, label_column: int = -1) -> Dataset:
    """Read a comma-separated file into a :class:`Dataset`.

    Labels are encoded in order of first appearance. ``has_header=None``
    sniffs the first row: it is a header if any feature cell is non-numeric.
    ``label_column`` may be negative (python indexing, default last column).
    """
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise DataError(f"{path}: no data rows")

    width = len(rows[0])
    if width < 2:
        raise DataError(f"{path}: need at least one feature column and a label column")
    lab = label_column if label_column >= 0 else width + label_column
    if not 0 <= lab < width:
        raise DataError(f"{path}: label column {label_column} out of range for {width} columns")
    feat_cols = [c for c in range(width) if c != lab]

    if has_header is None:
        has_header = not all(_is_number(rows[0][c].strip()) for c in feat_cols)
    header = rows[0] if has_header else None
    body = rows[1:] if has_header else rows
    first_line = 2 if has_header else 1

    x = np.empty((len(body), len(feat_cols)))
    names: list[str] = []
    codes: dict[str, int] = {}
    y = np.empty(len(body), dtype=int)
    for r, row in enumerate(body):
        line = first_line + r
        if len(row) != width:
            raise DataError(f"{path}: ragged row at line {line}: expected {width} columns, got {len(row)}")
        for out_c, c in enumerate(feat_cols):
            cell = row[c].strip()
            if cell == "" or cell == "?":
                raise DataError(f"{path}: missing value at line {line}, column {c + 1}")
            try:
                x[r, out_c] = float(cell)
            except ValueError:
                raise DataError(f"{path}: non-numeric value {cell!r} at line {line}, column {c + 1}") from None
        label = row[lab].strip()
        if label not in codes:
            codes[label] = len(names)
            names.append(label)
        y[r] = codes[label]
    if not np.all(np.isfinite(x)):
        bad = np.argwhere(~np.isfinite(x))[0]
        raise DataError(f"{path}: non-finite value at line {first_line + bad[0]}, column {feat_cols[bad[1]] + 1}")

    feature_names = tuple(header[c].strip() for c in feat_cols) if header else ()
    return Dataset(x, y, tuple(names), feature_names)


def bundled_path(name: str) -> Path:
    """Path of a dataset shipped with the package (``iris``, ``wine``, ``balance``)."""
    p = resources.files("cflml").joinpath("datasets", f"{name}.csv")
    return Path(str(p))


def load_bundled(name: str) -> Dataset:
    return load_csv(bundled_path(name), has_header=True)


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray

    def transform(self, x) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.mean) / self.scale

    def inverse_transform(self, z) -> np.ndarray:
        return np.asarray(z, dtype=float) * self.scale + self.mean

    @classmethod
    def identity(cls, n: int) -> Standardizer:
        return cls(np.zeros(n), np.ones(n))


def fit_standardizer(data: Dataset, train_idx) -> Standardizer:
    train_idx = np.asarray(train_idx, dtype=int)
    if train_idx.size == 0:
        raise DataError("cannot fit a standardizer on an empty index list")
    rows = data.instances[train_idx]
    mean = rows.mean(axis=0)
    scale = rows.std(axis=0)
    # relative test: a constant column can carry rounding noise in its std
    tiny = scale <= 1e-12 * np.maximum(1.0, np.abs(mean))
    scale[tiny] = 1.0
    return Standardizer(mean, scale)


@dataclass(frozen=True)
class SplitSpec:
    seed: int = 0
    train_frac: float = 0.80
    val_frac_of_train: float = 0.15
    stratified: bool = True


def _holdout(idx: np.ndarray, labels: np.ndarray | None, frac: float, rng: np.random.Generator) -> np.ndarray:
    """Draw ``ceil(frac * len(idx))`` members of ``idx``, stratified by ``labels`` if given.

    Per-class quotas use largest-remainder rounding, so each class's share is
    within one instance of ``frac`` times its size.
    """
    total = int(np.ceil(frac * idx.size - 1e-9))
    if labels is None:
        return rng.permutation(idx)[:total]
    classes, counts = np.unique(labels, return_counts=True)
    exact = total * counts / idx.size
    quota = np.floor(exact).astype(int)
    # stable order: larger remainder first, then smaller class id
    for c in np.argsort(-(exact - quota), kind="stable")[: total - quota.sum()]:
        quota[c] += 1
    picked = [rng.permutation(idx[labels == c])[:q] for c, q in zip(classes, quota)]
    return np.concatenate(picked) if picked else np.empty(0, dtype=int)


def split(data: Dataset, spec: SplitSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(train_idx, val_idx, test_idx)``, each sorted ascending.

    ``val_idx`` is a subset of ``train_idx``; the metric learner fits on
    ``setdiff(train_idx, val_idx)`` and selects on ``val_idx``.
    """
    if not 0 < spec.train_frac < 1 or not 0 <= spec.val_frac_of_train < 1:
        raise DataError("split fractions must lie in (0, 1)")
    if spec.stratified:
        counts = np.bincount(data.labels, minlength=data.C)
        lonely = np.flatnonzero(counts < 2)
        if lonely.size:
            raise DataError(f"class {data.class_names[lonely[0]]!r} has a single instance; cannot stratify")
    rng = np.random.default_rng(spec.seed)
    idx = np.arange(data.N)
    test = _holdout(idx, data.labels if spec.stratified else None, 1.0 - spec.train_frac, rng)
    train = np.setdiff1d(idx, test)
    val = _holdout(train, data.labels[train] if spec.stratified else None, spec.val_frac_of_train, rng)
    return train, np.sort(val), np.sort(test)
