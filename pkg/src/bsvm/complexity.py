"""Fraction of borderline points (N1) from a Euclidean minimum spanning tree."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .errors import InvalidInputError


@dataclass
class ComplexityReport:
    n1: float
    mst_edge_count: int
    cross_class_edges: int
    mst_weight: float = 0.0


def prim_mst(dist: np.ndarray) -> list[tuple[int, int]]:
    """Dense O(n^2) Prim. Returns the n-1 tree edges as (parent, child)."""
    n = dist.shape[0]
    in_tree = np.zeros(n, dtype=bool)
    best = np.full(n, np.inf)
    parent = np.full(n, -1)
    best[0] = 0.0
    edges = []
    for _ in range(n):
        cand = np.where(in_tree, np.inf, best)
        v = int(np.argmin(cand))
        in_tree[v] = True
        if parent[v] >= 0:
            edges.append((int(parent[v]), v))
        closer = ~in_tree & (dist[v] < best)
        best[closer] = dist[v][closer]
        parent[closer] = v
    return edges


def _standardized(X):
    std = X.std(axis=0, ddof=1) if X.shape[0] > 1 else np.zeros(X.shape[1])
    std = np.where(std > 0, std, 1.0)
    return (X - X.mean(axis=0)) / std


def fraction_borderline(dataset, distance: str = "euclidean", standardize: bool = True) -> ComplexityReport:
    """N1: share of samples touching an MST edge that joins the two classes.

    Distances are taken on standardized features unless ``standardize`` is
    false.
    """
    if distance != "euclidean":
        raise InvalidInputError(f"unsupported distance {distance!r}")
    X = np.asarray(dataset.features, dtype=float)
    y = np.asarray(dataset.labels)
    n = X.shape[0]
    if n < 2:
        raise InvalidInputError("N1 needs at least two samples")
    if not np.all(np.isfinite(X)):
        raise InvalidInputError("features must be finite")
    if standardize:
        X = _standardized(X)
    dist = squareform(pdist(X, "euclidean"))
    edges = prim_mst(dist)
    borderline = np.zeros(n, dtype=bool)
    crossing = 0
    for u, v in edges:
        if y[u] != y[v]:
            crossing += 1
            borderline[u] = borderline[v] = True
    weight = float(sum(dist[u, v] for u, v in edges))
    return ComplexityReport(n1=float(borderline.mean()), mst_edge_count=len(edges),
                            cross_class_edges=crossing, mst_weight=weight)
