"""SMO solvers for the C-SVM and nu-SVM duals.

Both duals are handled in minimisation form::

    min  0.5 * a' Q a - p' a     s.t.  y' a = 0,  0 <= a_i <= u_i

with ``Q[i, j] = y_i y_j K(x_i, x_j)``. Working pairs are chosen by the
maximal-violating-pair rule; ties go to the lowest sample index.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numba
import numpy as np

from .errors import InfeasibleNuError, InvalidInputError

TAU = 1e-12


@dataclass(frozen=True)
class SolverSettings:
    kkt_tolerance: float = 1e-3
    max_iterations: int = 100_000
    working_set_rule: Literal["max_violating_pair"] = "max_violating_pair"

    def __post_init__(self):
        if not self.kkt_tolerance > 0:
            raise InvalidInputError("kkt_tolerance must be positive")
        if int(self.max_iterations) < 1:
            raise InvalidInputError("max_iterations must be >= 1")
        if self.working_set_rule != "max_violating_pair":
            raise InvalidInputError(f"unsupported working_set_rule {self.working_set_rule!r}")


@dataclass
class DualSolution:
    """Result of a dual solve.

    ``objective`` is the minimised dual value ``0.5 a'Qa - sum(a)`` for the
    C-SVM and ``0.5 a'Qa`` for the nu-SVM. For the nu-SVM the multipliers are
    on the ``0 <= a_i <= 1/n``, ``sum(a) = nu`` scale and ``rho``/``bias``
    are set.
    """

    alphas: np.ndarray
    objective: float
    iterations: int
    converged: bool
    rho: float | None = None
    bias: float | None = None


@numba.njit(cache=True, nogil=True)
def _update_pair(Q, y, upper, alpha, grad, i, j):
    Ci = upper[i]
    Cj = upper[j]
    old_i = alpha[i]
    old_j = alpha[j]
    if y[i] != y[j]:
        quad = Q[i, i] + Q[j, j] + 2.0 * Q[i, j]
        if quad <= 0.0:
            quad = TAU
        delta = (-grad[i] - grad[j]) / quad
        diff = alpha[i] - alpha[j]
        alpha[i] += delta
        alpha[j] += delta
        if diff > 0.0:
            if alpha[j] < 0.0:
                alpha[j] = 0.0
                alpha[i] = diff
        else:
            if alpha[i] < 0.0:
                alpha[i] = 0.0
                alpha[j] = -diff
        if diff > Ci - Cj:
            if alpha[i] > Ci:
                alpha[i] = Ci
                alpha[j] = Ci - diff
        else:
            if alpha[j] > Cj:
                alpha[j] = Cj
                alpha[i] = Cj + diff
    else:
        quad = Q[i, i] + Q[j, j] - 2.0 * Q[i, j]
        if quad <= 0.0:
            quad = TAU
        delta = (grad[i] - grad[j]) / quad
        total = alpha[i] + alpha[j]
        alpha[i] -= delta
        alpha[j] += delta
        if total > Ci:
            if alpha[i] > Ci:
                alpha[i] = Ci
                alpha[j] = total - Ci
        else:
            if alpha[j] < 0.0:
                alpha[j] = 0.0
                alpha[i] = total
        if total > Cj:
            if alpha[j] > Cj:
                alpha[j] = Cj
                alpha[i] = total - Cj
        else:
            if alpha[i] < 0.0:
                alpha[i] = 0.0
                alpha[j] = total
    di = alpha[i] - old_i
    dj = alpha[j] - old_j
    for k in range(alpha.shape[0]):
        grad[k] += Q[k, i] * di + Q[k, j] * dj


@numba.njit(cache=True, nogil=True)
def _smo_c(Q, y, upper, alpha, grad, tol, max_iter):
    n = alpha.shape[0]
    it = 0
    while True:
        gmax = -np.inf
        gmin = np.inf
        i = -1
        j = -1
        for t in range(n):
            v = -y[t] * grad[t]
            if (y[t] > 0 and alpha[t] < upper[t]) or (y[t] < 0 and alpha[t] > 0.0):
                if v > gmax:
                    gmax = v
                    i = t
            if (y[t] < 0 and alpha[t] < upper[t]) or (y[t] > 0 and alpha[t] > 0.0):
                if v < gmin:
                    gmin = v
                    j = t
        if i < 0 or j < 0 or gmax - gmin < tol:
            return it, True
        if it >= max_iter:
            return it, False
        _update_pair(Q, y, upper, alpha, grad, i, j)
        it += 1


@numba.njit(cache=True, nogil=True)
def _smo_nu(Q, y, upper, alpha, grad, tol, max_iter):
    n = alpha.shape[0]
    it = 0
    while True:
        best_gap = -np.inf
        bi = -1
        bj = -1
        for cls in (1.0, -1.0):
            gmax = -np.inf
            gmin = np.inf
            i = -1
            j = -1
            for t in range(n):
                if y[t] != cls:
                    continue
                v = -y[t] * grad[t]
                if (cls > 0 and alpha[t] < upper[t]) or (cls < 0 and alpha[t] > 0.0):
                    if v > gmax:
                        gmax = v
                        i = t
                if (cls < 0 and alpha[t] < upper[t]) or (cls > 0 and alpha[t] > 0.0):
                    if v < gmin:
                        gmin = v
                        j = t
            if i >= 0 and j >= 0 and gmax - gmin > best_gap:
                best_gap = gmax - gmin
                bi = i
                bj = j
        if bi < 0 or best_gap < tol:
            return it, True
        if it >= max_iter:
            return it, False
        _update_pair(Q, y, upper, alpha, grad, bi, bj)
        it += 1


def _check_labels(labels, n):
    y = np.asarray(labels, dtype=float).ravel()
    if y.shape[0] != n:
        raise InvalidInputError(f"{y.shape[0]} labels for a {n}x{n} gram matrix")
    if not np.all((y == 1.0) | (y == -1.0)):
        raise InvalidInputError("labels must be -1 or +1")
    if not (np.any(y > 0) and np.any(y < 0)):
        raise InvalidInputError("both classes must be present")
    return y


def _check_gram(gram):
    K = np.ascontiguousarray(gram, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise InvalidInputError("gram matrix must be square")
    return K


def dual_objective(gram, labels, alphas) -> float:
    """0.5 a'Qa - sum(a) for the C-SVM dual."""
    y = np.asarray(labels, dtype=float)
    ay = np.asarray(alphas, dtype=float) * y
    return float(0.5 * ay @ np.asarray(gram) @ ay - np.sum(alphas))


def solve_c_svm_dual(gram, labels, penalties, settings: SolverSettings | None = None) -> DualSolution:
    """Solve the C-SVM dual with a per-sample box ``0 <= a_i <= penalties[i]``.

    Non-convergence within ``settings.max_iterations`` is reported through
    ``converged=False``, not raised.
    """
    settings = settings or SolverSettings()
    K = _check_gram(gram)
    n = K.shape[0]
    y = _check_labels(labels, n)
    upper = np.broadcast_to(np.asarray(penalties, dtype=float), (n,)).copy()
    if not np.all(upper > 0):
        raise InvalidInputError("penalties must be positive")

    Q = np.ascontiguousarray(y[:, None] * y[None, :] * K)
    alpha = np.zeros(n)
    grad = -np.ones(n)
    it, ok = _smo_c(Q, y, upper, alpha, grad, float(settings.kkt_tolerance),
                    int(settings.max_iterations))
    obj = float(0.5 * alpha @ Q @ alpha - alpha.sum())
    return DualSolution(alphas=alpha, objective=obj, iterations=int(it), converged=bool(ok))


def nu_bound(labels) -> float:
    """Largest feasible nu, ``2 * min(n_pos, n_neg) / n``."""
    y = np.asarray(labels)
    return 2.0 * min(int(np.sum(y > 0)), int(np.sum(y < 0))) / y.shape[0]


def _nu_offsets(y, upper, alpha, grad):
    # per-class estimates of (rho - y*b), libsvm's r1 and r2
    out = []
    for cls in (1.0, -1.0):
        m = y == cls
        a, g, u = alpha[m], grad[m], upper[m]
        free = (a > 0) & (a < u)
        if np.any(free):
            out.append(float(g[free].mean()))
            continue
        at_upper = g[a >= u]
        at_lower = g[a <= 0]
        lb = at_upper.max() if at_upper.size else None
        ub = at_lower.min() if at_lower.size else None
        if lb is not None and ub is not None:
            out.append(0.5 * (lb + ub))
        else:
            out.append(float(lb if lb is not None else ub))
    return out


def solve_nu_svm_dual(gram, labels, nu: float, settings: SolverSettings | None = None) -> DualSolution:
    """Solve the nu-SVM dual.

    Raises
    ------
    InfeasibleNuError
        If ``nu`` exceeds ``2 * min(n_pos, n_neg) / n``.
    """
    settings = settings or SolverSettings()
    K = _check_gram(gram)
    n = K.shape[0]
    y = _check_labels(labels, n)
    bound = nu_bound(y)
    if not 0 < nu <= bound + 1e-12:
        raise InfeasibleNuError(nu, bound)

    # libsvm scaling: 0 <= a_i <= 1, sum over each class = nu*n/2
    upper = np.ones(n)
    alpha = np.zeros(n)
    remaining = {1.0: nu * n / 2.0, -1.0: nu * n / 2.0}
    for t in range(n):
        a = min(1.0, remaining[y[t]])
        alpha[t] = a
        remaining[y[t]] -= a
    Q = np.ascontiguousarray(y[:, None] * y[None, :] * K)
    grad = Q @ alpha
    it, ok = _smo_nu(Q, y, upper, alpha, grad, float(settings.kkt_tolerance),
                     int(settings.max_iterations))

    r_pos, r_neg = _nu_offsets(y, upper, alpha, grad)
    # offsets are n*(rho - b) and n*(rho + b)
    rho = 0.5 * (r_pos + r_neg) / n
    bias = 0.5 * (r_neg - r_pos) / n
    scaled = alpha / n
    obj = float(0.5 * scaled @ Q @ scaled)
    return DualSolution(alphas=scaled, objective=obj, iterations=int(it), converged=bool(ok),
                        rho=float(rho), bias=float(bias))


def kkt_violation_report(gram, labels, penalties, solution) -> float:
    """Largest KKT violation of a C-SVM dual point.

    Combines the maximal-violating-pair gap with any breach of the box or of
    ``y'a = 0``. Zero at an exact optimum.
    """
    K = np.asarray(gram, dtype=float)
    y = np.asarray(labels, dtype=float)
    a = np.asarray(getattr(solution, "alphas", solution), dtype=float)
    if a.shape[0] != K.shape[0]:
        raise InvalidInputError("solution length does not match the gram matrix")
    u = np.broadcast_to(np.asarray(penalties, dtype=float), a.shape)
    grad = y * (K @ (a * y)) - 1.0
    v = -y * grad
    up = ((y > 0) & (a < u)) | ((y < 0) & (a > 0))
    low = ((y < 0) & (a < u)) | ((y > 0) & (a > 0))
    gap = 0.0
    if up.any() and low.any():
        gap = max(0.0, float(v[up].max() - v[low].min()))
    box = max(0.0, float(np.max(-a)), float(np.max(a - u)))
    eq = abs(float(a @ y))
    return max(gap, box, eq)
