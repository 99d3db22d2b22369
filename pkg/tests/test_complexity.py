import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bsvm.complexity import fraction_borderline, prim_mst
from bsvm.data import Dataset

from oracles import kruskal, mst_exhaustive, n1_oracle, prufer_trees


def test_collinear_example():
    ds = Dataset(np.array([[0.0], [1.0], [2.0], [3.0]]), [-1, -1, 1, 1])
    rep = fraction_borderline(ds, standardize=False)
    assert rep.n1 == 0.5 and rep.mst_edge_count == 3 and rep.cross_class_edges == 1
    # the path is also the unique minimum over all 16 labelled trees
    w, edges = mst_exhaustive([(0.0,), (1.0,), (2.0,), (3.0,)])
    assert sorted(edges) == [(0, 1), (1, 2), (2, 3)] and w == 3.0


def test_two_point_degenerate():
    assert fraction_borderline(Dataset(np.array([[0.0, 0.0], [1.0, 2.0]]), [1, -1])).n1 == 1.0


def test_separable_clusters_small_n1():
    rng = np.random.default_rng(0)
    X = np.r_[rng.normal(0, 0.1, (20, 2)), rng.normal(5, 0.1, (20, 2))]
    rep = fraction_borderline(Dataset(X, np.r_[-np.ones(20), np.ones(20)]))
    assert rep.n1 == pytest.approx(2 / 40)


def test_cayley_count():
    assert [sum(1 for _ in prufer_trees(n)) for n in range(2, 7)] == [n ** (n - 2) for n in range(2, 7)]


@given(st.integers(2, 6), st.integers(0, 10**6))
def test_kruskal_matches_exhaustive(n, seed):
    pts = [tuple(p) for p in np.random.default_rng(seed).normal(size=(n, 2))]
    best, _ = mst_exhaustive(pts)
    assert sum(w for *_, w in kruskal(pts)) == pytest.approx(best, abs=1e-12)


@given(st.integers(2, 12), st.integers(0, 10**6))
def test_prim_weight_matches_kruskal(n, seed):
    X = np.random.default_rng(seed).normal(size=(n, 3))
    dist = np.sqrt(((X[:, None] - X[None]) ** 2).sum(-1))
    edges = prim_mst(dist)
    assert len(edges) == n - 1
    assert sum(dist[i, j] for i, j in edges) == pytest.approx(
        sum(w for *_, w in kruskal([tuple(r) for r in X])), abs=1e-9)


def test_frozen_n1(oracle_fixtures):
    for case in oracle_fixtures["n1"]:
        ds = Dataset(np.array(case["X"]), np.array(case["y"]))
        assert fraction_borderline(ds).n1 == case["n1"]


def test_oracle_reproduces_frozen_n1(oracle_fixtures):
    for case in oracle_fixtures["n1"][:20]:
        assert n1_oracle(np.array(case["X"]), np.array(case["y"])) == case["n1"]


@given(st.integers(2, 30), st.integers(0, 10**6))
def test_n1_range(n, seed):
    rng = np.random.default_rng(seed)
    y = np.where(rng.random(n) < 0.5, 1, -1)
    y[:2] = (1, -1)
    rep = fraction_borderline(Dataset(rng.normal(size=(n, 2)), y))
    assert 0 < rep.n1 <= 1
    assert rep.mst_edge_count == n - 1
    assert (rep.n1 == 0) == (rep.cross_class_edges == 0)
