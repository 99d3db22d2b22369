"""Grid search, benchmark runs and the serialized benchmark report."""
from __future__ import annotations

import csv
import gc
import json
import os
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .complexity import fraction_borderline
from .data import (Dataset, class_weights, load_manifest, load_manifest_entry, standardize,
                   stratified_split)
from .errors import BsvmError, InfeasibleNuError, InvalidInputError
from .metrics import confusion_metrics, score
from .model import VARIANTS, SvmModel, TrainConfig, decision_function, fit
from .stats import wilcoxon_signed_rank

C_GRID = (0.1, 1.0, 10.0, 100.0)
GAMMA_GRID = (1.0, 0.1, 0.01, 0.001)
NU_GRID = (0.1, 0.75, 1.0)
DEFAULT_GRIDS = {"C": C_GRID, "gamma": GAMMA_GRID, "nu": NU_GRID}

REPORT_FORMAT = "bsvm-benchmark/1"
PREDICT_REPEATS = 100
PREDICT_BLOCKS = 7
OBJECTIVES = {"imbalance": "minority_f1", "noise": "accuracy"}


def worker_count(default: int = 1) -> int:
    """Worker cap from ``BSVM_THREADS`` (falls back to ``default``)."""
    raw = os.environ.get("BSVM_THREADS")
    if not raw:
        return default
    try:
        return max(1, int(raw))
    except ValueError:
        raise InvalidInputError(f"BSVM_THREADS must be an integer, got {raw!r}") from None


def enumerate_grid(variant: str, grids: Mapping[str, Sequence[float]] | None = None) -> list[dict]:
    """Grid cells in search order: the penalty (C or nu) outermost, gamma inner.

    Values are visited in the order listed, so the default grids run C
    ascending and gamma descending.
    """
    grids = dict(DEFAULT_GRIDS if grids is None else grids)
    outer = "nu" if variant == "nu_svc" else "C"
    for key in (outer, "gamma"):
        if not grids.get(key):
            raise InvalidInputError(f"grid {key!r} is empty")
    return [{outer: float(p), "gamma": float(g)} for p in grids[outer] for g in grids["gamma"]]


@dataclass
class GridRow:
    params: dict
    validation_score: float | None
    status: str  # ok | infeasible | nonconverged | failed
    message: str = ""

    def to_dict(self) -> dict:
        return {"params": self.params, "validation_score": self.validation_score,
                "status": self.status, "message": self.message}


@dataclass
class GridSearchResult:
    best_params: TrainConfig
    best_score: float
    table: list[GridRow]
    best_model: SvmModel | None = field(default=None, repr=False)
    seed: int = 42

    def table_dicts(self) -> list[dict]:
        return [r.to_dict() for r in self.table]


def _cell_config(base: TrainConfig, variant: str, params: dict) -> TrainConfig:
    kernel = replace(base.kernel, kind="rbf", gamma=params["gamma"])
    if variant == "nu_svc":
        return replace(base, variant=variant, nu=params["nu"], kernel=kernel)
    return replace(base, variant=variant, C=params["C"], kernel=kernel)


def _run_cell(train: Dataset, val: Dataset, config: TrainConfig, params: dict, objective: str):
    try:
        model = fit(train, config)
    except InfeasibleNuError as exc:
        return GridRow(params, None, "infeasible", str(exc)), None
    except BsvmError as exc:
        return GridRow(params, None, "failed", str(exc)), None
    if not model.training_meta.get("converged", True):
        return GridRow(params, None, "nonconverged", "solver hit max_iterations"), None
    pred = model.predict(val.features)
    s = score(confusion_metrics(val.labels, pred), objective)
    return GridRow(params, s, "ok"), model


def grid_search(train: Dataset, val: Dataset, variant: str,
                grids: Mapping[str, Sequence[float]] | None = None,
                objective: str = "accuracy", seed: int = 42,
                base_config: TrainConfig | None = None, workers: int | None = None
                ) -> GridSearchResult:
    """Fit every RBF grid cell on ``train`` and keep the best score on ``val``.

    Failed cells are recorded in the table and skipped. Ties go to the
    earliest cell in :func:`enumerate_grid` order. Fits are deterministic,
    so ``seed`` is only recorded for provenance.
    """
    if variant not in VARIANTS:
        raise InvalidInputError(f"unknown variant {variant!r}")
    if objective not in ("minority_f1", "accuracy"):
        raise InvalidInputError(f"unknown objective {objective!r}")
    cells = enumerate_grid(variant, grids)
    if base_config is None:
        weights = class_weights(train) if variant in ("weighted", "proposed") else None
        base_config = TrainConfig(variant="soft_margin", class_weights=weights)
    configs = [_cell_config(base_config, variant, p) for p in cells]

    def run(k):
        return _run_cell(train, val, configs[k], cells[k], objective)

    workers = worker_count() if workers is None else workers
    if workers > 1 and len(cells) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, range(len(cells))))
    else:
        results = [run(k) for k in range(len(cells))]

    best = None
    for k, (row, _) in enumerate(results):
        if row.status == "ok" and (best is None or row.validation_score > results[best][0].validation_score):
            best = k
    table = [r for r, _ in results]
    if best is None:
        raise InvalidInputError(
            "every grid cell failed: " + "; ".join(f"{r.params} {r.status}" for r in table))
    return GridSearchResult(configs[best], table[best].validation_score, table,
                            results[best][1], seed)


def predict_times(models: Sequence[SvmModel], X, repeats: int = PREDICT_REPEATS,
                  blocks: int = PREDICT_BLOCKS) -> list[float]:
    """Wall-clock seconds of one single-row decision-function call per model.

    Models are timed in alternating blocks so they share machine conditions.
    Each block takes the median of ``repeats`` single-row calls and each
    model reports its smallest block median.
    """
    X = np.asarray(X, dtype=float)
    if X.shape[0] == 0:
        raise InvalidInputError("need at least one row to time predictions")
    repeats = max(repeats, PREDICT_REPEATS)
    rows = [X[k % X.shape[0]][None, :] for k in range(repeats)]
    for model in models:
        for row in rows[:10]:  # warm caches before timing
            decision_function(model, row)
    best = [float("inf")] * len(models)
    gc_was_enabled = gc.isenabled()
    gc.disable()
    try:
        for _ in range(max(1, blocks)):
            for i, model in enumerate(models):
                times = []
                for row in rows:
                    t0 = time.perf_counter()
                    decision_function(model, row)
                    times.append(time.perf_counter() - t0)
                best[i] = min(best[i], statistics.median(times))
    finally:
        if gc_was_enabled:
            gc.enable()
    return [float(t) for t in best]


def per_sample_predict_time(model: SvmModel, X, repeats: int = PREDICT_REPEATS,
                            blocks: int = PREDICT_BLOCKS) -> float:
    """Wall-clock seconds of one single-row decision-function call."""
    return predict_times([model], X, repeats, blocks)[0]


def _metric_summary(report) -> dict:
    pos = report.per_class[1]
    return {"accuracy": report.accuracy, "minority_precision": pos["precision"],
            "minority_recall": pos["recall"], "minority_f1": pos["f1"],
            "macro_precision": report.macro["precision"], "macro_recall": report.macro["recall"],
            "macro_f1": report.macro["f1"]}


def _fit_seed(dataset: Dataset, variant: str, seed: int, scenario: str,
              grids, workers: int | None):
    objective = OBJECTIVES[scenario]
    train, test = stratified_split(dataset, 0.8, seed)
    fit_part, val = stratified_split(train, 0.8, seed + 1)
    fit_s, val_s, scaler = standardize(fit_part, val)
    test_s = test.with_features(scaler.transform(test.features))
    gs = grid_search(fit_s, val_s, variant, grids, objective, seed, workers=workers)
    model = gs.best_model
    test_rep = confusion_metrics(test_s.labels, model.predict(test_s.features))
    train_rep = confusion_metrics(fit_s.labels, model.predict(fit_s.features))
    n_fit = len(fit_s)
    out = {
        "seed": seed,
        "best_params": gs.best_params.to_dict(),
        "validation_score": gs.best_score,
        "grid": gs.table_dicts(),
        "test": _metric_summary(test_rep),
        "train": _metric_summary(train_rep),
        "test_score": score(test_rep, objective),
        "n_sv": model.n_support,
        "sv_pct": 100.0 * model.n_support / n_fit,
        "n_fit": n_fit,
        "train_time": float(model.training_meta.get("train_time", float("nan"))),
    }
    if variant == "proposed":
        out["active_size"] = model.training_meta.get("active_size")
    return out, model, test_s.features


def evaluate_seed(dataset: Dataset, variant: str, seed: int, scenario: str = "imbalance",
                  grids=None, workers: int | None = None) -> dict:
    """Split, standardize, grid-search and score one variant for one seed.

    The test split uses ``seed`` and the fit/validation split of the
    training part uses ``seed + 1``. The best grid model is scored as is.
    """
    out, model, X_test = _fit_seed(dataset, variant, seed, scenario, grids, workers)
    out["predict_time"] = per_sample_predict_time(model, X_test)
    return out


def _mean(rows: list[dict], *path) -> float:
    vals = []
    for r in rows:
        v = r
        for p in path:
            v = v[p]
        vals.append(v)
    return float(np.mean(vals))


@dataclass
class BenchmarkReport:
    rows: list[dict]
    wilcoxon: list[dict]
    score_vectors: dict[str, list[float]]
    datasets: list[str]
    excluded: list[dict]
    failures: list[dict]
    seeds: list[int]
    variants: list[str]
    n1_threshold: float | None = None

    def to_dict(self) -> dict:
        return {"format": REPORT_FORMAT, "seeds": self.seeds, "variants": self.variants,
                "n1_threshold": self.n1_threshold, "datasets": self.datasets,
                "excluded": self.excluded, "failures": self.failures, "rows": self.rows,
                "score_vectors": self.score_vectors, "wilcoxon": self.wilcoxon}

    def write_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=1, sort_keys=True)
            fh.write("\n")

    def write_csv(self, directory) -> list[Path]:
        """Metrics, timing and Wilcoxon tables as flat CSV files."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        metric_keys = ["accuracy", "minority_precision", "minority_recall", "minority_f1",
                       "macro_precision", "macro_recall", "macro_f1"]
        tables = {
            "metrics.csv": (["dataset", "scenario", "variant", "status"]
                            + [f"train_{k}" for k in metric_keys]
                            + [f"test_{k}" for k in metric_keys]),
            "timing.csv": ["dataset", "variant", "status", "train_time", "predict_time",
                           "n_sv", "sv_pct"],
            "wilcoxon.csv": ["scenario", "metric", "variant_a", "variant_b", "n_datasets",
                             "status", "statistic", "p_value", "method", "significant"],
        }
        written = []
        for name, cols in tables.items():
            src = self.wilcoxon if name == "wilcoxon.csv" else self.rows
            path = directory / name
            with open(path, "w", newline="", encoding="utf-8") as fh:
                w = csv.DictWriter(fh, fieldnames=cols, extrasaction="ignore")
                w.writeheader()
                for r in src:
                    flat = dict(r)
                    for part in ("train", "test"):
                        for k, v in (r.get(part) or {}).items():
                            flat[f"{part}_{k}"] = v
                    w.writerow(flat)
            written.append(path)
        return written


def _wilcoxon_rows(rows: list[dict], variants: list[str]) -> list[dict]:
    """One row per scenario and baseline, pairing each baseline with the
    proposed variant (or with the first variant when it is absent)."""
    reference = "proposed" if "proposed" in variants else variants[0]
    out = []
    scenarios = sorted({r["scenario"] for r in rows})
    for scenario in scenarios:
        ok = {}
        for r in rows:
            if r["scenario"] == scenario and r["status"] == "ok":
                ok.setdefault(r["dataset"], {})[r["variant"]] = r["test_score"]
        for other in variants:
            if other == reference:
                continue
            names = [d for d in ok if reference in ok[d] and other in ok[d]]
            a = [ok[d][reference] for d in names]
            b = [ok[d][other] for d in names]
            row = {"scenario": scenario, "metric": OBJECTIVES[scenario],
                   "variant_a": reference, "variant_b": other, "n_datasets": len(names),
                   "datasets": names, "scores_a": a, "scores_b": b}
            try:
                res = wilcoxon_signed_rank(a, b)
            except InvalidInputError as exc:
                row.update(status="insufficient", statistic=None, p_value=None, method=None,
                           significant=False, message=str(exc))
            else:
                row.update(status="ok", statistic=res.statistic, p_value=res.p_value,
                           method=res.method, significant=res.p_value < 0.05,
                           mean_difference=float(np.mean(np.subtract(a, b))))
            out.append(row)
    return out


def benchmark_run(manifest, variants: Sequence[str], seeds: Sequence[int],
                  n1_threshold: float | None = None, grids=None,
                  workers: int | None = None) -> BenchmarkReport:
    """Grid-search every variant on every manifest dataset for every seed.

    ``manifest`` is a manifest path or an already loaded entry list. Each
    entry may set ``scenario`` to ``imbalance`` (minority F1, the default)
    or ``noise`` (accuracy). With ``n1_threshold`` set, datasets whose N1
    is not above the threshold are excluded and listed.
    """
    variants = list(variants)
    seeds = [int(s) for s in seeds]
    if not variants or not seeds:
        raise InvalidInputError("benchmark_run needs at least one variant and one seed")
    for v in variants:
        if v not in VARIANTS:
            raise InvalidInputError(f"unknown variant {v!r}")
    entries = load_manifest(manifest) if isinstance(manifest, (str, os.PathLike)) else list(manifest)

    rows, excluded, failures, names = [], [], [], []
    for entry in entries:
        name = entry.get("name") or Path(entry.get("path", f"dataset{len(names)}")).stem
        scenario = entry.get("scenario", "imbalance")
        if scenario not in OBJECTIVES:
            failures.append({"dataset": name, "error": f"unknown scenario {scenario!r}"})
            continue
        try:
            ds = entry["dataset"] if "dataset" in entry else load_manifest_entry(entry)
            n1 = fraction_borderline(ds).n1
        except BsvmError as exc:
            failures.append({"dataset": name, "error": str(exc)})
            continue
        if n1_threshold is not None and not n1 > n1_threshold:
            excluded.append({"dataset": name, "n1": n1})
            continue
        names.append(name)
        per_seed = {v: [] for v in variants}
        errors: dict[str, str] = {}
        for seed in seeds:
            fitted = []
            for variant in variants:
                if variant in errors:
                    continue
                try:
                    rec, model, X_test = _fit_seed(ds, variant, seed, scenario, grids, workers)
                except BsvmError as exc:
                    errors[variant] = str(exc)
                    continue
                per_seed[variant].append(rec)
                fitted.append((rec, model))
            if fitted:
                # every variant sees the same split, so time them side by side
                times = predict_times([m for _, m in fitted], X_test)
                for (rec, _), t in zip(fitted, times):
                    rec["predict_time"] = t
        for variant in variants:
            row = {"dataset": name, "scenario": scenario, "variant": variant, "n1": n1}
            if variant in errors:
                row.update(status="failed", error=errors[variant])
                failures.append({"dataset": name, "variant": variant, "error": errors[variant]})
                rows.append(row)
                continue
            runs = per_seed[variant]
            row.update(
                status="ok", seeds=runs,
                test_score=_mean(runs, "test_score"),
                train={k: _mean(runs, "train", k) for k in runs[0]["train"]},
                test={k: _mean(runs, "test", k) for k in runs[0]["test"]},
                n_sv=_mean(runs, "n_sv"), sv_pct=_mean(runs, "sv_pct"),
                train_time=_mean(runs, "train_time"),
                predict_time=_mean(runs, "predict_time"),
            )
            rows.append(row)

    # paired vectors only over datasets where every variant succeeded
    complete = [d for d in names
                if all(any(r["dataset"] == d and r["variant"] == v and r["status"] == "ok"
                           for r in rows) for v in variants)]
    vectors = {v: [next(r["test_score"] for r in rows if r["dataset"] == d and r["variant"] == v)
                   for d in complete] for v in variants}
    return BenchmarkReport(rows=rows, wilcoxon=_wilcoxon_rows(rows, variants),
                           score_vectors=vectors, datasets=complete, excluded=excluded,
                           failures=failures, seeds=seeds, variants=variants,
                           n1_threshold=n1_threshold)


def strip_timing(obj):
    """Copy of a report dict without wall-clock fields (for determinism checks)."""
    if isinstance(obj, dict):
        return {k: strip_timing(v) for k, v in obj.items() if not k.endswith("_time")}
    if isinstance(obj, list):
        return [strip_timing(v) for v in obj]
    return obj
