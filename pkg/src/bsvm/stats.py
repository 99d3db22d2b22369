"""Wilcoxon signed-rank test with an exact null distribution for small samples."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import InvalidInputError

EXACT_MAX_N = 25
MIN_NONZERO = 5


@dataclass
class WilcoxonResult:
    statistic: float
    p_value: float
    n_effective: int
    method: str
    t_plus: float = 0.0
    t_minus: float = 0.0

    def to_dict(self) -> dict:
        return {"statistic": self.statistic, "p_value": self.p_value,
                "n_effective": self.n_effective, "method": self.method,
                "t_plus": self.t_plus, "t_minus": self.t_minus}


def signed_ranks(a, b):
    """Drop zero differences, rank |d| with average ranks for ties.

    Returns ``(ranks, signs)``.
    """
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    d = d[d != 0]
    return rankdata(np.abs(d)), np.sign(d)


def exact_null_counts(doubled_ranks) -> np.ndarray:
    """Number of sign assignments giving each value of 2*T+.

    ``counts[s]`` is how many of the ``2**n`` assignments have a doubled
    positive-rank sum of ``s``. Built one rank at a time, so it equals the
    full enumeration.
    """
    total = int(sum(doubled_ranks))
    counts = np.zeros(total + 1, dtype=object)
    counts[0] = 1
    for r in doubled_ranks:
        r = int(r)
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[:total + 1 - r]
        counts = counts + shifted
    return counts


def wilcoxon_signed_rank(scores_a, scores_b, method: str = "auto") -> WilcoxonResult:
    """Two-sided paired Wilcoxon signed-rank test.

    Zero differences are discarded and tied magnitudes share the average
    rank. ``W`` is the smaller of the positive and negative rank sums. For
    ``n <= 25`` non-zero differences the p-value is ``P(min(T+, T-) <= W)``
    under the exact sign-flip null; above that a tie-corrected normal
    approximation is used.
    """
    a = np.asarray(scores_a, dtype=float)
    b = np.asarray(scores_b, dtype=float)
    if a.shape != b.shape:
        raise InvalidInputError("score vectors must have equal length")
    ranks, signs = signed_ranks(a, b)
    n = ranks.shape[0]
    if n == 0:
        raise InvalidInputError("no non-zero differences between the paired scores")
    if n < MIN_NONZERO:
        raise InvalidInputError(f"need at least {MIN_NONZERO} non-zero differences, got {n}")
    t_plus = float(ranks[signs > 0].sum())
    t_minus = float(ranks[signs < 0].sum())
    w = min(t_plus, t_minus)
    if method == "auto":
        method = "exact" if n <= EXACT_MAX_N else "normal_approx"

    if method == "exact":
        doubled = np.rint(2 * ranks).astype(int)
        counts = exact_null_counts(doubled)
        total2 = int(doubled.sum())
        w2 = int(round(2 * w))
        # min(T+, T-) <= W  <=>  T+ <= W  or  T+ >= S - W
        hits = sum(int(c) for s, c in enumerate(counts) if s <= w2 or s >= total2 - w2)
        p = hits / 2 ** n
    elif method == "normal_approx":
        mean = n * (n + 1) / 4.0
        _, tie_sizes = np.unique(ranks, return_counts=True)
        var = n * (n + 1) * (2 * n + 1) / 24.0 - float(np.sum(tie_sizes ** 3 - tie_sizes)) / 48.0
        z = (w - mean) / math.sqrt(var)
        p = min(1.0, math.erfc(-z / math.sqrt(2.0)))
    else:
        raise InvalidInputError(f"unknown method {method!r}")
    return WilcoxonResult(statistic=w, p_value=float(p), n_effective=n, method=method,
                          t_plus=t_plus, t_minus=t_minus)
