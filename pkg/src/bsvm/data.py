"""Dataset ingestion and preprocessing."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np
import pandas as pd

from .errors import DataError, InvalidInputError


@dataclass
class Encoding:
    """How raw CSV columns become the numeric feature matrix.

    Kept with trained models so that prediction inputs are encoded exactly
    like the training file.
    """

    columns: list[str]
    categories: dict[str, list[str]] = field(default_factory=dict)
    fill_values: dict[str, float | str] = field(default_factory=dict)

    @property
    def feature_names(self) -> list[str]:
        names = []
        for col in self.columns:
            if col in self.categories:
                names.extend(f"{col}={level}" for level in self.categories[col])
            else:
                names.append(col)
        return names

    def transform(self, frame: pd.DataFrame) -> np.ndarray:
        blocks = []
        for col in self.columns:
            values = frame[col]
            if col in self.fill_values:
                values = values.fillna(self.fill_values[col])
            if col in self.categories:
                levels = self.categories[col]
                as_str = values.astype(str)
                unknown = set(as_str.unique()) - set(levels)
                if unknown:
                    raise DataError(f"column {col!r} has unseen levels {sorted(unknown)}")
                blocks.append(np.stack([(as_str == lv).to_numpy(float) for lv in levels], axis=1))
            else:
                num = pd.to_numeric(values, errors="coerce").to_numpy(float)
                if not np.all(np.isfinite(num)):
                    raise DataError(f"column {col!r} has missing or non-numeric values")
                blocks.append(num[:, None])
        if not blocks:
            return np.zeros((len(frame), 0))
        return np.hstack(blocks)

    def to_dict(self) -> dict:
        return {"columns": self.columns, "categories": self.categories,
                "fill_values": self.fill_values}

    @classmethod
    def from_dict(cls, d: dict) -> "Encoding":
        return cls(list(d["columns"]), dict(d.get("categories", {})),
                   dict(d.get("fill_values", {})))


@dataclass
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    feature_names: list[str] = field(default_factory=list)
    source_id: str = ""
    positive_label_name: str = "+1"
    encoding: Encoding | None = None

    def __post_init__(self):
        self.features = np.atleast_2d(np.asarray(self.features, dtype=float))
        self.labels = np.asarray(self.labels, dtype=float).ravel()
        if self.features.shape[0] != self.labels.shape[0]:
            raise InvalidInputError("features and labels disagree on the number of rows")
        if not np.all((self.labels == 1) | (self.labels == -1)):
            raise InvalidInputError("labels must be -1 or +1")
        if not self.feature_names:
            self.feature_names = [f"x{i}" for i in range(self.features.shape[1])]

    def __len__(self):
        return self.labels.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=int)
        return Dataset(self.features[idx], self.labels[idx], list(self.feature_names),
                       self.source_id, self.positive_label_name, self.encoding)

    def with_features(self, features) -> "Dataset":
        return Dataset(features, self.labels, list(self.feature_names), self.source_id,
                       self.positive_label_name, self.encoding)


def _is_numeric(series: pd.Series) -> bool:
    present = series.dropna()
    if present.empty:
        return True
    return bool(pd.to_numeric(present, errors="coerce").notna().all())


def read_raw_csv(path, delimiter: str = ",") -> pd.DataFrame:
    try:
        frame = pd.read_csv(path, sep=delimiter, encoding="utf-8", dtype=str,
                            keep_default_na=True, na_values=["?", ""], skipinitialspace=True)
    except FileNotFoundError:
        raise DataError(f"no such file: {path}") from None
    except (pd.errors.ParserError, UnicodeDecodeError, pd.errors.EmptyDataError) as exc:
        raise DataError(f"cannot parse {path}: {exc}") from None
    frame.columns = [str(c).strip() for c in frame.columns]
    return frame


def load_csv(path, label_column: str | None = None, positive_label: str | None = None,
             missing_policy: Literal["drop", "impute"] = "drop",
             encoding_policy: Literal["onehot", "strict"] = "onehot",
             delimiter: str = ",") -> Dataset:
    """Load a binary classification CSV (header row required).

    The label column defaults to the last column. Labels map to +1 for
    ``positive_label`` or, when it is not given, for the minority class.
    ``missing_policy="drop"`` removes incomplete rows; ``"impute"`` fills
    numeric cells with the column mean and symbolic cells with the mode.
    ``encoding_policy="strict"`` rejects non-numeric feature columns instead
    of one-hot encoding them.
    """
    frame = read_raw_csv(path, delimiter)
    if frame.shape[1] < 2:
        raise DataError(f"{path}: need at least one feature column and a label column")
    label_column = label_column or frame.columns[-1]
    if label_column not in frame.columns:
        raise DataError(f"{path}: label column {label_column!r} not found")
    if missing_policy not in ("drop", "impute"):
        raise InvalidInputError(f"unknown missing_policy {missing_policy!r}")

    frame = frame[frame[label_column].notna()]
    columns = [c for c in frame.columns if c != label_column]
    if missing_policy == "drop":
        frame = frame.dropna(subset=columns)
    if frame.empty:
        raise DataError(f"{path}: no rows left after removing missing values")

    raw_labels = frame[label_column].astype(str).str.strip()
    counts = raw_labels.value_counts()
    if len(counts) != 2:
        raise DataError(f"{path}: expected exactly two label values, found {sorted(counts.index)}")
    if positive_label is None:
        # minority is positive; ties resolved by sorted label name
        positive_label = sorted(counts.index, key=lambda v: (counts[v], v))[0]
    elif str(positive_label) not in counts.index:
        raise DataError(f"{path}: positive label {positive_label!r} not among {sorted(counts.index)}")
    labels = np.where(raw_labels == str(positive_label), 1.0, -1.0)

    categories, fills = {}, {}
    for col in columns:
        series = frame[col]
        if _is_numeric(series):
            if missing_policy == "impute" and series.isna().any():
                fills[col] = float(pd.to_numeric(series).mean())
            continue
        if encoding_policy == "strict":
            raise DataError(f"{path}: column {col!r} is not numeric (strict encoding)")
        if encoding_policy != "onehot":
            raise InvalidInputError(f"unknown encoding_policy {encoding_policy!r}")
        as_str = series.dropna().astype(str)
        if missing_policy == "impute" and series.isna().any():
            fills[col] = as_str.mode().sort_values().iloc[0]
        categories[col] = sorted(as_str.unique())
    enc = Encoding(columns, categories, fills)
    X = enc.transform(frame)
    return Dataset(X, labels, enc.feature_names, source_id=str(Path(path).stem),
                   positive_label_name=str(positive_label), encoding=enc)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def stratified_split(dataset: Dataset, ratio: float = 0.8, seed: int = 42):
    """Per-class shuffled split; each class contributes round(ratio * n_class) to train."""
    if not 0 < ratio < 1:
        raise InvalidInputError("ratio must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    train_idx, test_idx = [], []
    for cls in (1.0, -1.0):
        members = np.flatnonzero(dataset.labels == cls)
        if members.size < 2:
            raise InvalidInputError(
                f"class {int(cls):+d} has {members.size} sample(s); at least 2 are needed to stratify")
        members = rng.permutation(members)
        k = _round_half_up(ratio * members.size)
        train_idx.append(members[:k])
        test_idx.append(members[k:])
    train_idx = np.sort(np.concatenate(train_idx))
    test_idx = np.sort(np.concatenate(test_idx))
    return dataset.subset(train_idx), dataset.subset(test_idx)


def stratified_split_indices(labels, ratio: float = 0.8, seed: int = 42):
    ds = Dataset(np.arange(len(labels))[:, None], labels)
    train, test = stratified_split(ds, ratio, seed)
    return train.features[:, 0].astype(int), test.features[:, 0].astype(int)


def class_weights(dataset_or_labels) -> dict[int, float]:
    """Balanced weights ``n / (k * n_c)`` with k = 2."""
    y = np.asarray(getattr(dataset_or_labels, "labels", dataset_or_labels))
    n = y.shape[0]
    n_pos, n_neg = int(np.sum(y > 0)), int(np.sum(y < 0))
    if n_pos == 0 or n_neg == 0:
        raise InvalidInputError("class_weights needs both classes")
    return {1: n / (2 * n_pos), -1: n / (2 * n_neg)}


@dataclass
class Scaler:
    mean: np.ndarray
    scale: np.ndarray

    def transform(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.mean) / self.scale

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "scale": self.scale.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Scaler":
        return cls(np.asarray(d["mean"], float), np.asarray(d["scale"], float))


def fit_scaler(X) -> Scaler:
    X = np.asarray(X, dtype=float)
    if X.shape[0] == 0:
        raise InvalidInputError("cannot standardize an empty training set")
    mean = X.mean(axis=0)
    std = X.std(axis=0, ddof=1) if X.shape[0] > 1 else np.zeros(X.shape[1])
    constant = ~(std > 0)
    # constant columns pass through untouched
    return Scaler(np.where(constant, 0.0, mean), np.where(constant, 1.0, std))


def standardize(train: Dataset, test: Dataset | None = None):
    """Zero mean, unit sample std (ddof=1) per feature, fitted on ``train`` only."""
    scaler = fit_scaler(train.features)
    train_s = train.with_features(scaler.transform(train.features))
    test_s = None if test is None else test.with_features(scaler.transform(test.features))
    return train_s, test_s, scaler


def load_manifest(path) -> list[dict]:
    """Read a JSON manifest: a list of dataset entries (or ``{"datasets": [...]}``).

    Relative ``path`` entries are resolved against the manifest's folder.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise DataError(f"no such manifest: {path}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"manifest {path} is not valid JSON: {exc}") from None
    entries = doc["datasets"] if isinstance(doc, dict) else doc
    out = []
    for entry in entries:
        if "path" not in entry:
            raise DataError(f"manifest entry without 'path': {entry}")
        e = dict(entry)
        p = Path(e["path"])
        e["path"] = str(p if p.is_absolute() else path.parent / p)
        out.append(e)
    return out


def load_manifest_entry(entry: dict) -> Dataset:
    ds = load_csv(entry["path"], label_column=entry.get("label_column"),
                  positive_label=entry.get("positive_label"),
                  missing_policy=entry.get("missing_policy", "drop"),
                  encoding_policy=entry.get("encoding_policy", "onehot"),
                  delimiter=entry.get("delimiter", ","))
    if entry.get("name"):
        ds.source_id = entry["name"]
    return ds
