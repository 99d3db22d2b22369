"""Kernel functions and Gram matrices."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Literal

import numpy as np
from scipy.spatial.distance import cdist

from .errors import InvalidInputError

KernelKind = Literal["linear", "polynomial", "rbf"]


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family and its parameters.

    ``gamma=None`` means "scale": ``1 / (n_features * X.var())`` resolved
    against the training matrix by :meth:`resolve`.
    """

    kind: KernelKind = "rbf"
    gamma: float | None = None
    degree: int = 3
    coef0: float = 0.0

    def __post_init__(self):
        if self.kind not in ("linear", "polynomial", "rbf"):
            raise InvalidInputError(f"unknown kernel kind {self.kind!r}")
        if self.kind != "linear" and self.gamma is not None and not self.gamma > 0:
            raise InvalidInputError(f"gamma must be positive, got {self.gamma}")
        if self.kind == "polynomial" and int(self.degree) < 1:
            raise InvalidInputError(f"degree must be >= 1, got {self.degree}")

    def resolve(self, X) -> "KernelSpec":
        """Return a copy with ``gamma`` fixed from the training data."""
        if self.gamma is not None or self.kind == "linear":
            return self
        X = np.asarray(X, dtype=float)
        var = X.var() if X.size else 0.0
        gamma = 1.0 / (X.shape[1] * var) if var > 0 else 1.0
        return replace(self, gamma=float(gamma))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "gamma": self.gamma,
                "degree": int(self.degree), "coef0": float(self.coef0)}

    @classmethod
    def from_dict(cls, d: dict) -> "KernelSpec":
        return cls(kind=d["kind"], gamma=d.get("gamma"),
                   degree=int(d.get("degree", 3)), coef0=float(d.get("coef0", 0.0)))


def _gamma(spec: KernelSpec) -> float:
    if spec.gamma is None:
        raise InvalidInputError("kernel gamma is unresolved; call KernelSpec.resolve(X) first")
    return spec.gamma


def eval_kernel(spec: KernelSpec, x, y) -> float:
    """K(x, y) for a single pair of feature vectors."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise InvalidInputError(f"dimension mismatch: {x.shape[0]} vs {y.shape[0]}")
    if spec.kind == "linear":
        return float(x @ y)
    if spec.kind == "polynomial":
        return float((_gamma(spec) * (x @ y) + spec.coef0) ** spec.degree)
    diff = x - y
    return float(np.exp(-_gamma(spec) * (diff @ diff)))


def kernel_matrix(spec: KernelSpec, A, B) -> np.ndarray:
    """Cross-kernel matrix ``K[i, j] = K(A[i], B[j])``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if A.shape[1] != B.shape[1]:
        raise InvalidInputError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    if spec.kind == "linear":
        return A @ B.T
    if spec.kind == "polynomial":
        return (_gamma(spec) * (A @ B.T) + spec.coef0) ** spec.degree
    if A.shape[0] == 1:
        # single-row prediction: skip cdist's per-call validation overhead
        diff = B - A[0]
        return np.exp(-_gamma(spec) * (diff * diff).sum(axis=1))[None, :]
    # cdist evaluates each pair directly, so K[i, j] == K[j, i] bit for bit
    return np.exp(-_gamma(spec) * cdist(A, B, "sqeuclidean"))


def gram_matrix(spec: KernelSpec, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] < 1:
        raise InvalidInputError("gram_matrix needs at least one row")
    G = kernel_matrix(spec, X, X)
    # BLAS may round x_i.x_j and x_j.x_i differently
    if spec.kind != "rbf":
        G = np.triu(G) + np.triu(G, 1).T
    return G
