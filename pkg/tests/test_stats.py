import numpy as np
import pytest
from hypothesis import given, strategies as st

from bsvm.errors import InvalidInputError
from bsvm.stats import exact_null_counts, signed_ranks, wilcoxon_signed_rank

from oracles import wilcoxon_enumeration


def test_all_positive_eight():
    r = wilcoxon_signed_rank(np.arange(1, 9) + 0.5, np.zeros(8))
    assert r.statistic == 0 and r.p_value == 0.0078125 and r.method == "exact"
    assert r.n_effective == 8


def test_identical_rejected():
    with pytest.raises(InvalidInputError):
        wilcoxon_signed_rank([1, 2, 3, 4, 5], [1, 2, 3, 4, 5])


def test_too_few_nonzero():
    with pytest.raises(InvalidInputError):
        wilcoxon_signed_rank([1, 2, 3, 4, 5, 6], [1, 2, 3, 0, 0, 0])


def test_length_mismatch():
    with pytest.raises(InvalidInputError):
        wilcoxon_signed_rank([1, 2, 3, 4, 5], [1, 2, 3, 4])


def test_frozen_enumeration(oracle_fixtures):
    for case in oracle_fixtures["wilcoxon"]:
        r = wilcoxon_signed_rank(case["a"], case["b"])
        assert r.statistic == case["W"] and r.p_value == case["p"]


def test_oracle_reproduces_frozen_values(oracle_fixtures):
    for case in oracle_fixtures["wilcoxon"][:15]:
        assert wilcoxon_enumeration(case["a"], case["b"]) == (case["W"], case["p"])


@given(st.lists(st.integers(-6, 6), min_size=5, max_size=11), st.integers(0, 10**6))
def test_matches_enumeration(diffs, seed):
    if sum(d != 0 for d in diffs) < 5:
        return
    b = np.random.default_rng(seed).integers(0, 9, size=len(diffs)).astype(float)
    a = b + np.array(diffs, float)
    r = wilcoxon_signed_rank(a, b)
    w, p = wilcoxon_enumeration(a.tolist(), b.tolist())
    assert (r.statistic, r.p_value) == (w, p)


@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=6, max_size=30))
def test_antisymmetry(diffs):
    a = np.array(diffs)
    if np.count_nonzero(a) < 5:
        return
    r1 = wilcoxon_signed_rank(a, np.zeros_like(a))
    r2 = wilcoxon_signed_rank(np.zeros_like(a), a)
    assert r1.p_value == r2.p_value
    assert (r1.t_plus, r1.t_minus) == (r2.t_minus, r2.t_plus)
    assert 0 < r1.p_value <= 1


def test_normal_approximation_for_large_n():
    rng = np.random.default_rng(1)
    a = rng.normal(0.3, 1, 40)
    r = wilcoxon_signed_rank(a, np.zeros(40))
    assert r.method == "normal_approx" and r.n_effective == 40
    sp = pytest.importorskip("scipy.stats")
    ref = sp.wilcoxon(a, np.zeros(40), method="approx", correction=False)
    assert r.p_value == pytest.approx(ref.pvalue, rel=1e-9)
    assert r.statistic == ref.statistic


def test_exact_null_total():
    counts = exact_null_counts(np.array([2, 4, 6, 8]))
    assert sum(counts) == 16


def test_signed_ranks_average_ties():
    ranks, signs = signed_ranks([3, 1, 0, 5], [1, 3, 0, 4])[:2]
    assert sorted(ranks.tolist()) == [1.0, 2.5, 2.5]
