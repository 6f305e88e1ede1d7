"""Command-line interface: ``cflml train | eval | bench``.

Exit codes: 0 success, 1 usage or data error, 2 training failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import bench, classify, modelio
from .dataset import DataError, SplitSpec, Standardizer, fit_standardizer, load_csv, split
from .group import EvolutionConfig, Strategy, Variant, train_variant
from .neighborhood import CenterMode, FilterKind

EXIT_OK, EXIT_DATA, EXIT_TRAIN = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_DATA, f"{self.prog}: error: {message}\n")


def _data_args(p):
    p.add_argument("--data", required=True, help="CSV file, label in the last column by default")
    p.add_argument("--label-col", type=int, default=-1, help="label column index (negative counts from the end)")
    header = p.add_mutually_exclusive_group()
    header.add_argument("--header", dest="header", action="store_true", default=None)
    header.add_argument("--no-header", dest="header", action="store_false")


def _learn_args(p):
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--filter", choices=[f.value for f in FilterKind], default="gaussian")
    p.add_argument("--center", choices=[c.value for c in CenterMode], default="weighted")
    p.add_argument("--strategy", choices=[s.value for s in Strategy], default="radical")
    p.add_argument("--max-metrics", type=int, default=None)
    p.add_argument("--backtrace", type=int, default=5)
    p.add_argument("--theta", type=float, default=0.1)
    p.add_argument("--omega", type=int, default=None, help="candidate-neighbor capacity")
    p.add_argument("--mcap", type=int, default=None, help="cap on rows of a learned metric")
    p.add_argument("--subsample", type=float, default=0.5, help="keep fraction of active instances on retries")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scale", choices=["zscore", "none"], default="zscore")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cflml", description="Multiple closed-form local metric learning for kNN.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    tr = sub.add_parser("train", help="learn a metric group and write a model file")
    _data_args(tr)
    _learn_args(tr)
    tr.add_argument("--variant", choices=[v.value for v in Variant], default="cflml3")
    tr.add_argument("--out", required=True)
    tr.add_argument("--data-ref", action="store_true", help="store a path + hash instead of embedding the training rows")

    ev = sub.add_parser("eval", help="error rate of a model on a dataset")
    ev.add_argument("--model", required=True)
    _data_args(ev)
    ev.add_argument("--rows", choices=["all", "train", "fit", "val", "test"], default="all",
                    help="subset of rows, re-derived from the split stored in the model")

    be = sub.add_parser("bench", help="repeated-split comparison table")
    _data_args(be)
    _learn_args(be)
    be.add_argument("--methods", default="euclidean,pca,lda,cflml1,cflml3,em")
    be.add_argument("--repeats", type=int, default=10)
    be.add_argument("--k-map", default=None, help="per-method k, e.g. lda=3,cflml1=9")
    be.add_argument("--pca-dim", type=int, default=None)
    be.add_argument("--name", default=None, help="row label (default: data file stem)")
    be.add_argument("--csv", default=None, help="write per-repeat errors to this CSV")
    be.add_argument("--json", default=None, help="write the full report as JSON")
    return parser


def _config(a) -> EvolutionConfig:
    return EvolutionConfig(
        strategy=Strategy(a.strategy),
        max_metrics=a.max_metrics,
        backtrace_max=a.backtrace,
        k=a.k,
        filter=FilterKind(a.filter),
        center_mode=CenterMode(a.center),
        theta=a.theta,
        omega_capacity=a.omega,
        m_cap=a.mcap,
        subsample=a.subsample,
        seed=a.seed,
    )


def cmd_train(a) -> int:
    data = load_csv(a.data, a.header, a.label_col)
    cfg = _config(a)
    spec = SplitSpec(seed=a.seed)
    train_idx, val_idx, _ = split(data, spec)
    fit_idx = np.setdiff1d(train_idx, val_idx)
    std = fit_standardizer(data, train_idx) if a.scale == "zscore" else Standardizer.identity(data.n)
    model, report = train_variant(a.variant, data, fit_idx, val_idx, cfg, std)

    info = {
        "variant": a.variant,
        "strategy": a.strategy,
        "split": {"seed": spec.seed, "train_frac": spec.train_frac,
                  "val_frac_of_train": spec.val_frac_of_train, "stratified": spec.stratified},
        "backtrace": a.backtrace,
        "max_metrics": a.max_metrics,
        "omega": a.omega,
        "mcap": a.mcap,
        "subsample": a.subsample,
        "scale": a.scale,
    }
    ref = None
    if a.data_ref:
        ref = {
            "path": str(Path(a.data).resolve()),
            "sha256": modelio.file_sha256(a.data),
            "rows": [int(i) for i in fit_idx],
            "has_header": a.header,
            "label_column": a.label_col,
        }
    modelio.save_model(a.out, model, info, ref)
    summary = report.summary()
    summary["metrics"] = len(model.group)
    print(json.dumps(summary, indent=2))
    if report.fallback:
        print("training failed: no positive spectrum, wrote the identity metric instead", file=sys.stderr)
        return EXIT_TRAIN
    return EXIT_OK


def cmd_eval(a) -> int:
    model = modelio.load_model(a.model)
    data = load_csv(a.data, a.header, a.label_col)
    if data.n != model.n_features:
        print(f"dimension mismatch: model expects {model.n_features} features, data has {data.n}", file=sys.stderr)
        return EXIT_DATA
    rows = np.arange(data.N)
    if a.rows != "all":
        sp = modelio.load_info(a.model).get("split")
        if sp is None:
            print("model carries no split information; use --rows all", file=sys.stderr)
            return EXIT_DATA
        train_idx, val_idx, test_idx = split(data, SplitSpec(**sp))
        rows = {"train": train_idx, "fit": np.setdiff1d(train_idx, val_idx),
                "val": val_idx, "test": test_idx}[a.rows]
    # class ids in the model index its own vocabulary; remap by name
    names = {name: i for i, name in enumerate(model.class_names)}
    truth = np.array([names.get(data.class_names[c], -1) for c in data.labels[rows]])
    err = classify.evaluate(model, data.instances[rows], truth)
    print(f"{100.0 * err:.2f}")
    return EXIT_OK


def cmd_bench(a) -> int:
    try:
        methods = bench.parse_methods(a.methods)
        k_map = bench.parse_k_map(a.k_map)
    except ValueError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_DATA
    if a.repeats < 1:
        print("--repeats must be >= 1", file=sys.stderr)
        return EXIT_DATA
    data = load_csv(a.data, a.header, a.label_col)
    report = bench.run_bench(
        data, methods, a.repeats, a.seed, _config(a), k_map, a.pca_dim,
        scale=a.scale == "zscore", name=a.name or Path(a.data).stem,
    )
    print(report.table())
    print(f"time: {report.timing()}", file=sys.stderr)
    if a.csv:
        report.write_csv(a.csv)
    if a.json:
        Path(a.json).write_text(json.dumps(report.as_dict(), indent=2) + "\n")
    return EXIT_OK


COMMANDS = {"train": cmd_train, "eval": cmd_eval, "bench": cmd_bench}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (DataError, modelio.ModelFormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ArithmeticError as exc:
        print(f"training failed: {exc}", file=sys.stderr)
        return EXIT_TRAIN


if __name__ == "__main__":
    sys.exit(main())
