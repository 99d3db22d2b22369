"""Synthetic scenes for the imbalance/outlier and noisy-overlap scenarios."""
from __future__ import annotations

import numpy as np

from .data import Dataset

# majority (-1) sits above, minority (+1) to the lower right
MAJORITY_CENTER = (0.0, 1.5)
MINORITY_CENTER = (1.5, -0.5)
OUTLIER_POINT = (-0.5, 2.5)


def imbalance_scene(seed: int, n_majority: int = 40, imbalance_ratio: float = 2.0,
                    spread: float = 0.8, n_test: int = 300):
    """Two Gaussian blobs with ``imbalance_ratio`` majority:minority and one
    minority-labelled outlier placed inside the majority blob.

    Returns ``(train, test, outlier_index)``; the outlier is the last
    training row and the test set has the same class ratio but no outlier.
    """
    rng = np.random.default_rng(seed)
    n_minority = int(round(n_majority / imbalance_ratio))

    def draw(n_maj, n_min):
        maj = rng.normal(MAJORITY_CENTER, spread, size=(n_maj, 2))
        mnr = rng.normal(MINORITY_CENTER, spread, size=(n_min, 2))
        return np.vstack([maj, mnr]), np.r_[-np.ones(n_maj), np.ones(n_min)]

    X, y = draw(n_majority, n_minority)
    X = np.vstack([X, OUTLIER_POINT])
    y = np.r_[y, 1.0]
    test_min = int(round(n_test / (1 + imbalance_ratio)))
    Xt, yt = draw(n_test - test_min, test_min)
    return (Dataset(X, y, source_id=f"imbalance-{seed}"),
            Dataset(Xt, yt, source_id=f"imbalance-{seed}-test"), len(y) - 1)


def noise_scene(seed: int, n_train: int = 200, separation: float = 1.0, n_test: int = 1000):
    """Two unit-variance Gaussian classes whose centres are ``separation`` apart.

    Labels are balanced in expectation; with the default separation the
    Bayes accuracy is about 0.69.
    """
    rng = np.random.default_rng(seed)

    def draw(n):
        y = np.where(rng.random(n) < 0.5, 1.0, -1.0)
        X = rng.normal(size=(n, 2)) + np.outer(y, [separation / 2.0, 0.0])
        return X, y

    X, y = draw(n_train)
    Xt, yt = draw(n_test)
    return (Dataset(X, y, source_id=f"noise-{seed}"),
            Dataset(Xt, yt, source_id=f"noise-{seed}-test"))


def toy_outlier_scene() -> tuple[Dataset, int]:
    """Ten fixed points: six majority, three minority and a minority-labelled
    outlier sitting among the majority. Returns ``(dataset, outlier_index)``.
    """
    X = np.array([
        [-1.0, 2.0], [0.0, 2.5], [0.8, 2.3], [-0.5, 1.2], [0.4, 1.5], [-1.2, 1.0],
        [1.5, -0.3], [2.2, 0.2], [1.8, -1.0],
        [-0.3, 1.8],
    ])
    y = np.array([-1, -1, -1, -1, -1, -1, 1, 1, 1, 1], dtype=float)
    return Dataset(X, y, source_id="toy-outlier"), 9


def write_csv(dataset: Dataset, path, label_names=("A", "B")) -> None:
    """Write features plus a ``label`` column; -1 -> label_names[0], +1 -> [1]."""
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(list(dataset.feature_names) + ["label"])
        for row, lab in zip(dataset.features, dataset.labels):
            w.writerow([repr(float(v)) for v in row] + [label_names[int(lab > 0)]])
