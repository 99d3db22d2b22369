"""Count-of-violations SVM trained by master/subproblem decomposition.

The subproblem is a hard-margin SVM on the *active* set (samples currently
classified perfectly). The master step ranks the excluded *candidates* by
``|f(x_i)| / w_{y_i}`` and admits the first one whose insertion keeps the
active set perfectly separable (optimality cut). A trial that breaks
separability is rolled back (feasibility cut). The loop stops when the
candidate set is empty or no candidate can be admitted.
"""
from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field, replace
from typing import Literal

import numpy as np

from .errors import InvalidInputError
from .kernels import gram_matrix
from .model import SvmModel, TrainConfig, check_binary, fit_c_svm, predict

# active samples must keep y * f(x) >= 1 - MARGIN_TOLERANCE
MARGIN_TOLERANCE = 1e-6


@dataclass
class IterationRecord:
    added_index: int | None
    attempts: int
    priorities_snapshot: dict[int, float]
    cut: Literal["optimality", "exhausted"]
    subproblem_objective: float
    active_size: int = 0

    def to_json(self) -> str:
        d = asdict(self)
        d["priorities_snapshot"] = {str(k): v for k, v in self.priorities_snapshot.items()}
        return json.dumps(d, sort_keys=True)


@dataclass
class BendersState:
    """Active/candidate partition of the training rows plus the loop trace.

    Indices refer to rows of the original training set.
    """

    X: np.ndarray
    y: np.ndarray
    active: np.ndarray
    candidates: np.ndarray
    iteration: int = 0
    break_flag: bool = False
    trace: list[IterationRecord] = field(default_factory=list)
    model: SvmModel | None = None
    n_fits: int = 0
    initial_model: SvmModel | None = None
    gram: np.ndarray | None = field(default=None, repr=False)
    box_scale: float | None = 1.0
    pruned: int = 0

    @property
    def active_X(self):
        return self.X[self.active]

    @property
    def active_y(self):
        return self.y[self.active]

    @property
    def candidate_X(self):
        return self.X[self.candidates]

    @property
    def candidate_y(self):
        return self.y[self.candidates]


def _subproblem(state: BendersState, idx: np.ndarray, config: TrainConfig) -> SvmModel:
    """Hard-margin fit on training rows ``idx`` within the state's box."""
    state.n_fits += 1
    X, y = state.X[idx], state.y[idx]
    gram = state.gram[np.ix_(idx, idx)]
    if state.box_scale is None:
        upper = replace(config, subproblem_box="surrogate").subproblem_penalties(y)
    else:
        upper = state.box_scale * config.penalties(y)
    # SV threshold stays relative to C * w_y even under the inflated surrogate box
    return fit_c_svm(X, y, config.kernel, upper, config.hard_margin_settings(), "proposed",
                     gram=gram, sv_scale=config.penalties(y))


def _objective(model: SvmModel) -> float:
    # 0.5 * ||w||^2 expressed through the support vectors
    K = gram_matrix(model.kernel, model.support_vectors)
    c = model.sv_coefficients
    return float(0.5 * c @ K @ c)


def separates(model: SvmModel, X, y) -> bool:
    """True when every row is on its side of the boundary with margin >= 1."""
    f = model.decision_function(X)
    return bool(np.all(predict(model, X) == y) and np.all(y * f >= 1.0 - MARGIN_TOLERANCE))


def initial_solution(dataset, config: TrainConfig) -> BendersState:
    """Fit a soft-margin model on everything and split off the violators.

    Rows that are misclassified or inside the margin (beyond
    ``MARGIN_TOLERANCE``) become candidates. If
    that empties a class from the active set, the class's row with the
    largest ``y * f(x)`` stays active.
    """
    X = np.asarray(dataset.features, dtype=float)
    y = np.asarray(dataset.labels, dtype=float)
    check_binary(y)
    config = _resolved(config, X)
    kernel = config.kernel
    gram = gram_matrix(kernel, X)
    init = fit_c_svm(X, y, kernel, config.penalties(y), config.solver, "soft_margin", gram=gram)
    margin = y * init.decision_function(X)
    excluded = (predict(init, X) != y) | (margin < 1.0 - MARGIN_TOLERANCE)
    for cls in (1.0, -1.0):
        members = np.flatnonzero(y == cls)
        if not np.any(~excluded[members]):
            keep = members[np.argmax(margin[members])]
            excluded[keep] = False
    state = BendersState(X=X, y=y, active=np.flatnonzero(~excluded),
                         candidates=np.flatnonzero(excluded), gram=gram,
                         box_scale=1.0 if config.subproblem_box == "soft" else None)
    state.initial_model = init
    state.n_fits = 1
    _make_separable(state, config)
    return state


def _make_separable(state: BendersState, config: TrainConfig) -> None:
    """Shrink the initial active set until its own subproblem separates it.

    The soft fit's margins do not guarantee a hard-margin solution inside
    the ``C * w_y`` box. The worst-margin active row moves back to the
    candidates, one at a time, while its class keeps another member. If
    that floor is reached without separation, the original active set is
    restored and the box grows tenfold (up to the hard-margin surrogate).
    """
    original = (state.active.copy(), state.candidates.copy())
    while True:
        model = _subproblem(state, state.active, config)
        if separates(model, state.active_X, state.active_y):
            state.model = model
            return
        ay = state.active_y
        margin = ay * np.atleast_1d(model.decision_function(state.active_X))
        movable = [k for k in np.argsort(margin, kind="stable")
                   if np.sum(ay == ay[k]) > 1 and margin[k] < 1.0 - MARGIN_TOLERANCE]
        if movable:
            k = movable[0]
            state.candidates = np.sort(np.append(state.candidates, state.active[k]))
            state.active = np.delete(state.active, k)
            state.pruned += 1
        elif state.box_scale is not None:
            state.active, state.candidates = original[0].copy(), original[1].copy()
            state.pruned = 0
            state.box_scale *= 10.0
            if state.box_scale >= config.hard_margin_multiplier:
                state.box_scale = None
        else:
            # coincident rows with opposite labels; nothing left to drop
            state.model = model
            return


def candidate_priorities(model: SvmModel, candidates_X, candidates_y, weights=None,
                         order: Literal["desc", "asc"] = "desc", indices=None):
    """Rank candidates by ``|f(x_i)| / w_{y_i}``.

    Returns ``(index, priority)`` pairs sorted in ``order``; equal priorities
    keep ascending index order.
    """
    cy = np.asarray(candidates_y)
    indices = np.arange(len(cy)) if indices is None else np.asarray(indices)
    if len(cy) == 0:
        return []
    d = np.atleast_1d(model.decision_function(candidates_X))
    w = np.ones(len(cy)) if weights is None else np.where(cy > 0, weights[1], weights[-1])
    c = np.abs(d) / w
    sign = -1.0 if order == "desc" else 1.0
    ranked = sorted(zip(indices.tolist(), c.tolist()), key=lambda t: (sign * t[1], t[0]))
    return ranked


def _resolved(config: TrainConfig, X) -> TrainConfig:
    kernel = config.kernel.resolve(X)
    return config if kernel is config.kernel else replace(config, kernel=kernel)


def extend_samples(state: BendersState, config: TrainConfig) -> BendersState:
    """One master/subproblem round; mutates and returns ``state``."""
    if state.candidates.size == 0:
        raise InvalidInputError("extend_samples needs a non-empty candidate set")
    config = _resolved(config, state.X)
    if state.model is None:
        state.model = _subproblem(state, state.active, config)
    model = state.model

    cX, cy = state.candidate_X, state.candidate_y
    f = np.atleast_1d(model.decision_function(cX))
    correct = (predict(model, cX) == cy) & (cy * f >= 1.0 - MARGIN_TOLERANCE)
    pending = ~correct
    ranked = candidate_priorities(model, cX[pending], cy[pending], config.class_weights,
                                  config.priority_order, indices=state.candidates[pending])
    snapshot = {i: c for i, c in ranked}
    objective = _objective(model)

    attempts = 0
    for idx, _ in ranked:
        trial = np.sort(np.append(state.active, idx))
        trial_model = _subproblem(state, trial, config)
        if separates(trial_model, state.X[trial], state.y[trial]):
            state.active = trial
            state.candidates = state.candidates[state.candidates != idx]
            state.model = trial_model
            state.iteration += 1
            state.trace.append(IterationRecord(idx, attempts, snapshot, "optimality", objective,
                                               int(trial.size)))
            return state
        # feasibility cut: the trial model is discarded, the previous one stays
        attempts += 1

    state.iteration += 1
    state.break_flag = True
    state.trace.append(IterationRecord(None, attempts, snapshot, "exhausted", objective,
                                       int(state.active.size)))
    return state


def decompose(dataset, config: TrainConfig) -> BendersState:
    """Run the full loop and return the final state (model on ``state.model``)."""
    start = time.perf_counter()
    config = _resolved(config, np.asarray(dataset.features, dtype=float))
    state = initial_solution(dataset, config)
    while state.candidates.size > 0 and not state.break_flag:
        extend_samples(state, config)
    if state.model is None:
        state.model = _subproblem(state, state.active, config)
    final = state.model
    meta = dict(final.training_meta)
    meta.update({
        "variant": "proposed", "n_train": int(len(state.y)),
        "train_time": time.perf_counter() - start,
        "active_size": int(state.active.size), "candidate_size": int(state.candidates.size),
        "rounds": state.iteration, "subproblem_fits": state.n_fits,
        "break": state.break_flag, "initial_pruned": state.pruned,
        "box_scale": state.box_scale,
    })
    # support indices are reported against the original training rows
    state.model = replace(final, support_indices=state.active[final.support_indices],
                          training_meta=meta)
    return state


def run_decomposition(dataset, config: TrainConfig):
    """Train the proposed model. Returns ``(model, trace)``."""
    state = decompose(dataset, config)
    return state.model, state.trace


def write_trace(trace, path) -> None:
    """One JSON object per line, one line per round."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in trace:
            fh.write(rec.to_json() + "\n")
