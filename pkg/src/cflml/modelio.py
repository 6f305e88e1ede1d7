"""Self-contained JSON model files.

Floats are written with ``repr`` precision (the ``json`` default), so a
save/load cycle reproduces every array bit for bit.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .classify import Model
from .dataset import Standardizer, load_csv
from .group import MetricGroup
from .metric import Metric
from .neighborhood import FilterKind

FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    pass


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _floats(a) -> list:
    return [float(v) for v in np.asarray(a, dtype=float).ravel()]


def model_to_dict(model: Model, extra: dict | None = None, data_ref: dict | None = None) -> dict:
    """Serializable form of a model.

    With ``data_ref`` (``{"path", "sha256", "rows", "has_header", "label_column"}``)
    the training instances are not embedded; they are re-read and re-standardized
    from the referenced file on load.
    """
    g = model.group
    doc = {
        "format_version": FORMAT_VERSION,
        "metrics": [{"m": m.m, "n": m.n, "L": _floats(m.L)} for m in g.metrics],
        "associations": [int(a) for a in g.association],
        "ambiguities": [_floats(row) for row in g.member_w],
        "standardizer": {"mean": _floats(model.standardizer.mean), "scale": _floats(model.standardizer.scale)},
        "class_names": list(model.class_names),
        "labels": [int(v) for v in model.train_labels],
        "hyperparameters": {
            "k": int(model.k),
            "filter": FilterKind(model.filter).value,
            "center_mode": str(model.center_mode),
            "theta": float(g.theta),
        },
    }
    if data_ref is None:
        doc["train_instances"] = {
            "rows": int(model.train_instances.shape[0]),
            "cols": int(model.train_instances.shape[1]),
            "values": _floats(model.train_instances),
        }
    else:
        doc["data_ref"] = data_ref
    if extra:
        doc["info"] = extra
    return doc


def dumps(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def save_model(path, model: Model, extra: dict | None = None, data_ref: dict | None = None) -> None:
    Path(path).write_text(dumps(model_to_dict(model, extra, data_ref)), encoding="utf-8")


def model_from_dict(doc: dict, base_dir: Path | None = None) -> Model:
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model format version {version!r}")
    try:
        metrics = tuple(
            Metric(np.array(m["L"], dtype=float).reshape(m["m"], m["n"]), t)
            for t, m in enumerate(doc["metrics"])
        )
        member_w = np.array(doc["ambiguities"], dtype=float).reshape(len(metrics), -1)
        hp = doc["hyperparameters"]
        group = MetricGroup(metrics, member_w, float(hp["theta"]))
        if [int(a) for a in group.association] != list(doc["associations"]):
            raise ModelFormatError("associations disagree with stored ambiguities")
        std = Standardizer(
            np.array(doc["standardizer"]["mean"], dtype=float),
            np.array(doc["standardizer"]["scale"], dtype=float),
        )
        labels = np.array(doc["labels"], dtype=int)
        if "train_instances" in doc:
            ti = doc["train_instances"]
            train = np.array(ti["values"], dtype=float).reshape(ti["rows"], ti["cols"])
        else:
            train = _resolve_data_ref(doc["data_ref"], std, base_dir)
        return Model(
            group, std, train, labels, int(hp["k"]), tuple(doc["class_names"]),
            FilterKind(hp["filter"]), hp["center_mode"],
        )
    except (KeyError, TypeError) as exc:
        raise ModelFormatError(f"malformed model file: {exc}") from exc


def _resolve_data_ref(ref: dict, std: Standardizer, base_dir: Path | None) -> np.ndarray:
    path = Path(ref["path"])
    if not path.is_absolute() and base_dir is not None:
        path = base_dir / path
    if not path.exists():
        raise ModelFormatError(f"referenced data file {path} not found")
    digest = file_sha256(path)
    if digest != ref["sha256"]:
        raise ModelFormatError(f"referenced data file {path} changed (sha256 mismatch)")
    data = load_csv(path, ref.get("has_header"), ref.get("label_column", -1))
    rows = np.array(ref["rows"], dtype=int)
    return std.transform(data.instances[rows])


def load_model(path) -> Model:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"cannot read model {path}: {exc}") from exc
    return model_from_dict(doc, path.parent)


def load_info(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8")).get("info", {})
