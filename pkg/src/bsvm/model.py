"""Model assembly: fitting, bias recovery, prediction and diagnostics."""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, replace
from typing import Literal, Mapping

import numpy as np

from .errors import InvalidInputError
from .kernels import KernelSpec, gram_matrix, kernel_matrix
from .solver import DualSolution, SolverSettings, solve_c_svm_dual, solve_nu_svm_dual

Variant = Literal["soft_margin", "weighted", "nu_svc", "proposed"]
VARIANTS = ("soft_margin", "weighted", "nu_svc", "proposed")
MODEL_FORMAT = "bsvm-model/1"

# alpha_i counts as a support vector above SV_RELATIVE_THRESHOLD * C_i
SV_RELATIVE_THRESHOLD = 1e-8


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for one fit.

    ``class_weights`` maps +1/-1 to the per-class weight. It scales the box
    of the weighted variant and drives the candidate priorities of the
    proposed variant.

    ``subproblem_box`` sets how the hard-margin subproblem of the proposed
    variant is bounded: ``"soft"`` keeps the ``C * w_y`` box of the soft fit
    (a subset only counts as separable when a hard-margin solution exists
    inside that box), ``"surrogate"`` uses ``hard_margin_multiplier`` times
    the largest class weight for every sample.
    """

    variant: Variant = "soft_margin"
    C: float = 1.0
    class_weights: Mapping[int, float] | None = None
    nu: float | None = None
    kernel: KernelSpec = field(default_factory=KernelSpec)
    solver: SolverSettings = field(default_factory=SolverSettings)
    hard_margin_multiplier: float = 1e6
    hard_margin_tolerance: float = 1e-7
    subproblem_box: Literal["soft", "surrogate"] = "soft"
    priority_order: Literal["desc", "asc"] = "desc"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise InvalidInputError(f"unknown variant {self.variant!r}")
        if self.variant == "nu_svc":
            if self.nu is None or not 0 < self.nu <= 1:
                raise InvalidInputError("nu_svc needs nu in (0, 1]")
        elif not self.C > 0:
            raise InvalidInputError(f"C must be positive, got {self.C}")
        if self.variant == "weighted" and self.class_weights is None:
            raise InvalidInputError("the weighted variant needs class_weights")
        if self.class_weights is not None:
            w = {int(k): float(v) for k, v in self.class_weights.items()}
            if set(w) != {1, -1} or min(w.values()) <= 0:
                raise InvalidInputError("class_weights must give a positive weight for +1 and -1")
            object.__setattr__(self, "class_weights", w)
        if not self.hard_margin_multiplier > 0:
            raise InvalidInputError("hard_margin_multiplier must be positive")
        if self.subproblem_box not in ("soft", "surrogate"):
            raise InvalidInputError("subproblem_box must be 'soft' or 'surrogate'")
        if self.priority_order not in ("desc", "asc"):
            raise InvalidInputError("priority_order must be 'desc' or 'asc'")

    def weight_of(self, label) -> float:
        if self.class_weights is None:
            return 1.0
        return self.class_weights[int(label)]

    def penalties(self, y) -> np.ndarray:
        """Per-sample box used by the soft fits of this variant."""
        y = np.asarray(y)
        if self.variant in ("weighted", "proposed") and self.class_weights is not None:
            return self.C * np.where(y > 0, self.class_weights[1], self.class_weights[-1])
        return np.full(y.shape[0], float(self.C))

    def hard_margin_penalty(self) -> float:
        top = 1.0 if self.class_weights is None else max(self.class_weights.values())
        return self.hard_margin_multiplier * top

    def subproblem_penalties(self, y) -> np.ndarray:
        if self.subproblem_box == "soft":
            return self.penalties(y)
        return np.full(np.shape(y)[0], self.hard_margin_penalty())

    def hard_margin_settings(self) -> SolverSettings:
        return replace(self.solver,
                       kkt_tolerance=min(self.solver.kkt_tolerance, self.hard_margin_tolerance))

    def to_dict(self) -> dict:
        return {
            "variant": self.variant, "C": self.C, "nu": self.nu,
            "class_weights": None if self.class_weights is None
            else {str(k): v for k, v in sorted(self.class_weights.items())},
            "kernel": self.kernel.to_dict(),
            "priority_order": self.priority_order,
            "subproblem_box": self.subproblem_box,
        }


@dataclass(frozen=True)
class SvmModel:
    support_vectors: np.ndarray
    sv_coefficients: np.ndarray
    bias: float
    kernel: KernelSpec
    rho: float | None = None
    training_meta: dict = field(default_factory=dict)
    support_indices: np.ndarray | None = None
    preprocessing: dict | None = None

    @property
    def n_support(self) -> int:
        return int(self.support_vectors.shape[0])

    @property
    def n_features(self) -> int:
        return int(self.support_vectors.shape[1])

    def decision_function(self, X):
        return decision_function(self, X)

    def predict(self, X):
        return predict(self, X)


@dataclass
class TrainingDiagnostics:
    decision_values: np.ndarray
    slacks: np.ndarray
    violation_flags: np.ndarray
    priorities: np.ndarray | None = None


def _as_xy(dataset):
    X = np.asarray(dataset.features, dtype=float)
    y = np.asarray(dataset.labels, dtype=float)
    return X, y


def check_binary(y) -> None:
    y = np.asarray(y)
    if not np.all((y == 1) | (y == -1)):
        raise InvalidInputError("labels must be -1 or +1")
    if not (np.any(y > 0) and np.any(y < 0)):
        raise InvalidInputError("training data must contain both classes")


def recover_bias(gram_sv, y, coef, alphas, upper) -> float:
    """Average ``y_s - sum_i a_i y_i K(x_s, x_i)`` over the free support vectors.

    ``gram_sv`` is ``K[:, sv]`` for every training row. With no free support
    vector the bias is the midpoint of the interval allowed by the bounded
    multipliers.
    """
    offsets = y - gram_sv @ coef
    tol = SV_RELATIVE_THRESHOLD * upper
    at_lower = alphas <= tol
    at_upper = alphas >= upper - tol
    free = ~(at_lower | at_upper)
    if np.any(free):
        return float(offsets[free].mean())
    lower_side = (at_lower & (y > 0)) | (at_upper & (y < 0))
    upper_side = (at_lower & (y < 0)) | (at_upper & (y > 0))
    lo = offsets[lower_side].max() if lower_side.any() else None
    hi = offsets[upper_side].min() if upper_side.any() else None
    if lo is None:
        return float(hi)
    if hi is None:
        return float(lo)
    return float(0.5 * (lo + hi))


def model_from_dual(X, y, gram, solution: DualSolution, upper, kernel: KernelSpec,
                    variant: str, sv_scale=None, train_time: float = 0.0) -> SvmModel:
    """Build a model from a C-SVM dual solution.

    ``sv_scale`` is the per-sample penalty the SV threshold is relative to;
    it defaults to ``upper``.
    """
    a = solution.alphas
    scale = upper if sv_scale is None else sv_scale
    sv = np.flatnonzero(a > SV_RELATIVE_THRESHOLD * scale)
    if sv.size == 0:
        raise InvalidInputError("the fit produced no support vectors")
    coef = a[sv] * y[sv]
    bias = recover_bias(gram[:, sv], y, coef, a, upper)
    return SvmModel(
        support_vectors=X[sv].copy(), sv_coefficients=coef, bias=bias, kernel=kernel,
        support_indices=sv,
        training_meta={"variant": variant, "n_train": int(len(y)), "train_time": train_time,
                       "converged": solution.converged, "iterations": solution.iterations},
    )


def fit_c_svm(X, y, kernel: KernelSpec, penalties, settings: SolverSettings, variant: str,
              gram=None, sv_scale=None) -> SvmModel:
    """C-SVM fit on arrays; ``kernel`` must already be resolved."""
    start = time.perf_counter()
    if gram is None:
        gram = gram_matrix(kernel, X)
    upper = np.broadcast_to(np.asarray(penalties, dtype=float), y.shape)
    sol = solve_c_svm_dual(gram, y, upper, settings)
    return model_from_dual(X, y, gram, sol, upper, kernel, variant, sv_scale,
                           time.perf_counter() - start)


def fit_nu_svm(X, y, kernel: KernelSpec, nu: float, settings: SolverSettings) -> SvmModel:
    start = time.perf_counter()
    gram = gram_matrix(kernel, X)
    sol = solve_nu_svm_dual(gram, y, nu, settings)
    n = len(y)
    sv = np.flatnonzero(sol.alphas > SV_RELATIVE_THRESHOLD / n)
    # rescale so the margin sits at |f| = 1 like the other variants
    scale = sol.rho if sol.rho > 1e-12 else 1.0
    return SvmModel(
        support_vectors=X[sv].copy(), sv_coefficients=sol.alphas[sv] * y[sv] / scale,
        bias=sol.bias / scale, kernel=kernel, rho=sol.rho, support_indices=sv,
        training_meta={"variant": "nu_svc", "n_train": n,
                       "train_time": time.perf_counter() - start,
                       "converged": sol.converged, "iterations": sol.iterations},
    )


def fit(dataset, config: TrainConfig) -> SvmModel:
    """Train the variant named in ``config`` on ``dataset``."""
    X, y = _as_xy(dataset)
    check_binary(y)
    kernel = config.kernel.resolve(X)
    if config.variant == "proposed":
        from .decomposition import run_decomposition

        model, _ = run_decomposition(dataset, config)
        return model
    if config.variant == "nu_svc":
        return fit_nu_svm(X, y, kernel, config.nu, config.solver)
    return fit_c_svm(X, y, kernel, config.penalties(y), config.solver, config.variant)


def _rows(model: SvmModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != model.n_features:
        raise InvalidInputError(
            f"dimension mismatch: model has {model.n_features} features, input has {X.shape[1]}")
    return X


def decision_function(model: SvmModel, X):
    """``sum_i a_i y_i K(x, x_i) + b``; a scalar for a single feature vector."""
    single = np.ndim(X) == 1
    X = _rows(model, X)
    if X.shape[0] == 0:
        return np.zeros(0)
    f = kernel_matrix(model.kernel, X, model.support_vectors) @ model.sv_coefficients + model.bias
    return float(f[0]) if single else f


def predict(model: SvmModel, X) -> np.ndarray:
    """Sign of the decision function; a value of exactly 0 maps to +1."""
    f = np.atleast_1d(decision_function(model, X))
    return np.where(f >= 0, 1, -1)


def diagnostics(model: SvmModel, dataset, weights: Mapping[int, float] | None = None) -> TrainingDiagnostics:
    X, y = _as_xy(dataset)
    d = np.atleast_1d(decision_function(model, X))
    slack = np.maximum(0.0, 1.0 - y * d)
    prio = None
    if weights is not None:
        w = np.where(y > 0, weights[1], weights[-1])
        prio = np.abs(d) / w
    return TrainingDiagnostics(decision_values=d, slacks=slack, violation_flags=slack > 0,
                               priorities=prio)


# --- serialization -------------------------------------------------------

_PERSISTED_META = ("variant", "n_train", "converged", "iterations")


def model_to_dict(model: SvmModel) -> dict:
    meta = {k: model.training_meta[k] for k in _PERSISTED_META if k in model.training_meta}
    return {
        "format": MODEL_FORMAT,
        "kernel": model.kernel.to_dict(),
        "support_vectors": model.support_vectors.tolist(),
        "sv_coefficients": model.sv_coefficients.tolist(),
        "bias": model.bias,
        "rho": model.rho,
        "support_indices": None if model.support_indices is None
        else [int(i) for i in model.support_indices],
        "training_meta": meta,
        "preprocessing": model.preprocessing,
    }


def model_from_dict(d: dict) -> SvmModel:
    if d.get("format") != MODEL_FORMAT:
        raise InvalidInputError(f"unsupported model format {d.get('format')!r}")
    sv = np.asarray(d["support_vectors"], dtype=float)
    if sv.ndim == 1:
        sv = sv.reshape(0, 0) if sv.size == 0 else sv[None, :]
    idx = d.get("support_indices")
    return SvmModel(
        support_vectors=sv, sv_coefficients=np.asarray(d["sv_coefficients"], dtype=float),
        bias=float(d["bias"]), kernel=KernelSpec.from_dict(d["kernel"]), rho=d.get("rho"),
        training_meta=dict(d.get("training_meta", {})),
        support_indices=None if idx is None else np.asarray(idx, dtype=int),
        preprocessing=d.get("preprocessing"),
    )


def save_model(model: SvmModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_model(path) -> SvmModel:
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
