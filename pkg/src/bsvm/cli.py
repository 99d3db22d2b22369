"""Command-line entry point: ``bsvm {train,predict,complexity,benchmark,compare}``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 solver error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .complexity import fraction_borderline
from .data import Encoding, Scaler, class_weights, fit_scaler, load_csv, read_raw_csv
from .decomposition import run_decomposition, write_trace
from .errors import BsvmError, DataError, InfeasibleNuError, InvalidInputError, SolverError
from .evaluation import benchmark_run
from .kernels import KernelSpec
from .metrics import confusion_metrics
from .model import VARIANTS, TrainConfig, decision_function, fit, load_model, save_model
from .solver import SolverSettings
from .stats import wilcoxon_signed_rank

DEFAULT_SEED = 42
EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_SOLVER = 0, 1, 2, 3

log = logging.getLogger("bsvm")

# defaults applied after merging the --config file, so flags > config > defaults
DEFAULTS = {
    "variant": "soft_margin", "kernel": "rbf", "C": 1.0, "gamma": "scale", "nu": None,
    "degree": 3, "coef0": 0.0, "weights": None, "priority_order": "desc",
    "seed": DEFAULT_SEED, "seeds": None, "n1_threshold": None, "label_column": None,
    "positive_label": None, "missing_policy": "drop", "encoding_policy": "onehot",
    "variants": ",".join(VARIANTS), "max_iterations": 100_000, "tolerance": 1e-3,
}


class UsageError(Exception):
    pass


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with option defaults (flags win)")
    common.add_argument("-v", "--verbose", action="count", default=0)
    common.add_argument("--seed", type=int)
    common.add_argument("--out")

    data_opts = argparse.ArgumentParser(add_help=False)
    data_opts.add_argument("--data")
    data_opts.add_argument("--label-column")
    data_opts.add_argument("--positive-label")
    data_opts.add_argument("--missing-policy", choices=["drop", "impute"])
    data_opts.add_argument("--encoding-policy", choices=["onehot", "strict"])

    model_opts = argparse.ArgumentParser(add_help=False)
    model_opts.add_argument("--variant", choices=VARIANTS)
    model_opts.add_argument("--kernel", choices=["linear", "polynomial", "rbf"])
    model_opts.add_argument("--C", type=float, dest="C")
    model_opts.add_argument("--gamma", help="positive number or 'scale'")
    model_opts.add_argument("--degree", type=int)
    model_opts.add_argument("--coef0", type=float)
    model_opts.add_argument("--nu", type=float)
    model_opts.add_argument("--weights", help="'auto', 'none' or a map like '1:2.5,-1:0.625'")
    model_opts.add_argument("--priority-order", choices=["desc", "asc"])
    model_opts.add_argument("--max-iterations", type=int)
    model_opts.add_argument("--tolerance", type=float)

    p = argparse.ArgumentParser(prog="bsvm", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    t = sub.add_parser("train", parents=[common, data_opts, model_opts],
                       help="fit a model and write it as JSON")
    t.add_argument("--trace", help="JSONL file for the proposed variant's iteration trace")
    pr = sub.add_parser("predict", parents=[common, data_opts], help="score a CSV with a saved model")
    pr.add_argument("--model", required=True)
    sub.add_parser("complexity", parents=[common, data_opts], help="N1 of a dataset")
    b = sub.add_parser("benchmark", parents=[common], help="grid-searched benchmark over a manifest")
    b.add_argument("--manifest")
    b.add_argument("--variants", help="comma-separated variant list")
    b.add_argument("--seeds", help="comma-separated seeds (default: --seed)")
    b.add_argument("--n1-threshold", type=float)
    c = sub.add_parser("compare", parents=[common], help="Wilcoxon signed-rank test")
    c.add_argument("--report", help="benchmark report JSON")
    c.add_argument("--a", help="variant name (with --report) or comma-separated scores")
    c.add_argument("--b", help="variant name (with --report) or comma-separated scores")
    return p


def _merge(args: argparse.Namespace) -> dict:
    opts = dict(DEFAULTS)
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise UsageError(f"no such config file: {args.config}") from None
        except json.JSONDecodeError as exc:
            raise UsageError(f"config {args.config} is not valid JSON: {exc}") from None
        if not isinstance(cfg, dict):
            raise UsageError("config file must hold a JSON object")
        opts.update({k.replace("-", "_"): v for k, v in cfg.items()})
    opts.update({k: v for k, v in vars(args).items() if v is not None})
    return opts


def _require(opts: dict, *keys: str) -> None:
    missing = [k for k in keys if not opts.get(k)]
    if missing:
        raise UsageError(f"{opts['command']} needs --{', --'.join(k.replace('_', '-') for k in missing)}")


def _parse_weights(raw, labels) -> dict | None:
    if raw is None or raw == "none":
        return None
    if raw == "auto":
        return class_weights(labels)
    if isinstance(raw, dict):
        items = raw.items()
    else:
        try:
            items = [part.split(":") for part in str(raw).split(",")]
        except ValueError:
            raise UsageError(f"cannot parse --weights {raw!r}") from None
    try:
        return {int(k): float(v) for k, v in items}
    except (TypeError, ValueError):
        raise UsageError(f"cannot parse --weights {raw!r}") from None


def _train_config(opts: dict, labels) -> TrainConfig:
    gamma = opts["gamma"]
    if gamma in (None, "scale"):
        gamma = None
    else:
        try:
            gamma = float(gamma)
        except ValueError:
            raise UsageError(f"--gamma must be a number or 'scale', got {gamma!r}") from None
    kernel = KernelSpec(kind=opts["kernel"], gamma=gamma, degree=int(opts["degree"]),
                        coef0=float(opts["coef0"]))
    variant = opts["variant"]
    weights = opts["weights"]
    if weights is None and variant in ("weighted", "proposed"):
        weights = "auto"
    solver = SolverSettings(kkt_tolerance=float(opts["tolerance"]),
                            max_iterations=int(opts["max_iterations"]))
    return TrainConfig(variant=variant, C=float(opts["C"]), nu=opts["nu"], kernel=kernel,
                       class_weights=_parse_weights(weights, labels), solver=solver,
                       priority_order=opts["priority_order"])


def _load(opts: dict):
    return load_csv(opts["data"], label_column=opts["label_column"],
                    positive_label=opts["positive_label"], missing_policy=opts["missing_policy"],
                    encoding_policy=opts["encoding_policy"])


def _emit(obj, out=None) -> None:
    text = json.dumps(obj, indent=1, sort_keys=True)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def cmd_train(opts: dict) -> int:
    _require(opts, "data")
    ds = _load(opts)
    scaler = fit_scaler(ds.features)
    train = ds.with_features(scaler.transform(ds.features))
    config = _train_config(opts, ds.labels)
    if config.variant == "proposed":
        model, trace = run_decomposition(train, config)
        if opts.get("trace"):
            write_trace(trace, opts["trace"])
    else:
        model = fit(train, config)
    label_column = opts["label_column"] or read_raw_csv(opts["data"]).columns[-1]
    model = replace(model, preprocessing={
        "encoding": ds.encoding.to_dict(), "scaler": scaler.to_dict(),
        "label_column": label_column, "positive_label": ds.positive_label_name,
    })
    out = opts.get("out") or "model.json"
    save_model(model, out)
    report = confusion_metrics(train.labels, model.predict(train.features))
    _emit({"model": str(out), "variant": config.variant, "n_train": len(train),
           "n_support": model.n_support, "converged": model.training_meta.get("converged"),
           "train_metrics": report.to_dict()})
    return EXIT_OK


def cmd_predict(opts: dict) -> int:
    _require(opts, "data", "model")
    model = load_model(opts["model"])
    pre = model.preprocessing or {}
    frame = read_raw_csv(opts["data"])
    header = list(frame.columns)
    if "encoding" in pre:
        enc = Encoding.from_dict(pre["encoding"])
        expected = list(enc.columns)
        allowed = (expected, expected + [pre.get("label_column")])
        if header not in [list(a) for a in allowed]:
            raise DataError(f"column mismatch: expected {expected} (optionally followed by "
                            f"{pre.get('label_column')!r}), got {header}")
        X = enc.transform(frame[expected]) if len(frame) else np.zeros((0, model.n_features))
    else:
        if len(header) != model.n_features:
            raise DataError(f"expected {model.n_features} feature columns, got {len(header)}")
        X = frame.apply(lambda s: s.astype(float)).to_numpy(float) if len(frame) else np.zeros((0, model.n_features))
    if "scaler" in pre and len(X):
        X = Scaler.from_dict(pre["scaler"]).transform(X)
    f = np.atleast_1d(decision_function(model, X)) if len(X) else np.zeros(0)
    lines = ["label,decision_value"] + [f"{1 if v >= 0 else -1},{v!r}" for v in f.tolist()]
    text = "\n".join(lines) + "\n"
    if opts.get("out"):
        Path(opts["out"]).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_complexity(opts: dict) -> int:
    _require(opts, "data")
    rep = fraction_borderline(_load(opts))
    _emit({"n1": rep.n1, "mst_edge_count": rep.mst_edge_count,
           "cross_class_edges": rep.cross_class_edges, "mst_weight": rep.mst_weight}, opts.get("out"))
    return EXIT_OK


def _seed_list(opts: dict) -> list[int]:
    if opts.get("seeds") is None:
        return [int(opts["seed"])]
    raw = opts["seeds"]
    try:
        return [int(s) for s in raw] if isinstance(raw, list) else [int(s) for s in str(raw).split(",")]
    except ValueError:
        raise UsageError(f"cannot parse --seeds {raw!r}") from None


def cmd_benchmark(opts: dict) -> int:
    _require(opts, "manifest")
    variants = opts["variants"]
    variants = variants if isinstance(variants, list) else [v.strip() for v in variants.split(",")]
    unknown = [v for v in variants if v not in VARIANTS]
    if unknown:
        raise UsageError(f"unknown variants {unknown}; choose from {list(VARIANTS)}")
    report = benchmark_run(opts["manifest"], variants, _seed_list(opts),
                           n1_threshold=opts["n1_threshold"])
    out = Path(opts.get("out") or "benchmark")
    out.mkdir(parents=True, exist_ok=True)
    report.write_json(out / "report.json")
    report.write_csv(out)
    summary = {
        "report": str(out / "report.json"),
        "rows": [{k: r.get(k) for k in ("dataset", "variant", "status", "test_score", "n_sv")}
                 for r in report.rows],
        "excluded": report.excluded,
        "wilcoxon": [{k: w.get(k) for k in ("scenario", "variant_a", "variant_b", "status",
                                             "p_value", "significant")} for w in report.wilcoxon],
    }
    _emit(summary)
    if report.rows and all(r["status"] != "ok" for r in report.rows):
        log.error("every benchmark row failed")
        return EXIT_SOLVER
    if not report.rows and not report.excluded:
        log.error("no dataset could be evaluated")
        return EXIT_DATA
    return EXIT_OK


def _scores(raw: str) -> list[float]:
    try:
        return [float(s) for s in raw.split(",")]
    except ValueError:
        raise UsageError(f"cannot parse score list {raw!r}") from None


def cmd_compare(opts: dict) -> int:
    _require(opts, "a", "b")
    if opts.get("report"):
        doc = json.loads(Path(opts["report"]).read_text(encoding="utf-8"))
        vectors = doc.get("score_vectors", {})
        for v in (opts["a"], opts["b"]):
            if v not in vectors:
                raise UsageError(f"variant {v!r} not in report (has {sorted(vectors)})")
        a, b = vectors[opts["a"]], vectors[opts["b"]]
    else:
        a, b = _scores(opts["a"]), _scores(opts["b"])
    res = wilcoxon_signed_rank(a, b)
    out = res.to_dict()
    out["significant"] = res.p_value < 0.05
    _emit(out, opts.get("out"))
    return EXIT_OK


COMMANDS = {"train": cmd_train, "predict": cmd_predict, "complexity": cmd_complexity,
            "benchmark": cmd_benchmark, "compare": cmd_compare}


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="bsvm: %(levelname)s: %(message)s")
    try:
        opts = _merge(args)
        return COMMANDS[args.command](opts)
    except UsageError as exc:
        print(f"bsvm: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"bsvm: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (InfeasibleNuError, SolverError) as exc:
        print(f"bsvm: solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except InvalidInputError as exc:
        print(f"bsvm: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BsvmError as exc:
        print(f"bsvm: error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
