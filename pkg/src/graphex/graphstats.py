"""Statistics of sampled graphs.

All functions accept either a sampled graph (anything with an ``edges``
attribute) or a bare integer edge array of shape (E, 2). Vertices are
whatever integers appear as endpoints; a vertex is visible exactly when it
appears in some edge, so there are never degree-zero vertices here. A self
loop is one edge that adds 2 to its vertex's degree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DegreeHistogram",
    "GraphStatsError",
    "UnionFind",
    "count_edges",
    "count_vertices",
    "counts",
    "degree_histogram",
    "degrees",
    "largest_component",
    "largest_component_size",
    "sparsity_ratio",
    "summarize",
]


class GraphStatsError(ValueError):
    pass


def _as_edges(edges) -> np.ndarray:
    arr = np.asarray(getattr(edges, "edges", edges))
    if arr.size == 0:
        return arr.reshape(0, 2).astype(np.int64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise GraphStatsError(f"edge array must have shape (E, 2), got {arr.shape}")
    if not np.issubdtype(arr.dtype, np.integer):
        raise GraphStatsError("edge endpoints must be integers")
    return arr


def count_edges(edges) -> int:
    return int(_as_edges(edges).shape[0])


def count_vertices(edges) -> int:
    arr = _as_edges(edges)
    if arr.size == 0:
        return 0
    return int(np.unique(arr).size)


def counts(edges) -> tuple[int, int]:
    """(vertex count, edge count). A self loop is one edge."""
    arr = _as_edges(edges)
    return count_vertices(arr), count_edges(arr)


def degrees(edges) -> tuple[np.ndarray, np.ndarray]:
    """(vertex ids, degree of each) for the visible vertices, ids ascending."""
    arr = _as_edges(edges)
    if arr.size == 0:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    ids, inverse = np.unique(arr.ravel(), return_inverse=True)
    return ids, np.bincount(inverse, minlength=ids.size).astype(np.int64)


@dataclass(frozen=True)
class DegreeHistogram:
    """Degree -> vertex count over the visible vertices (degree >= 1 only)."""

    counts: dict
    total_vertices: int
    max_degree: int

    def __getitem__(self, k: int) -> int:
        return self.counts.get(k, 0)

    def to_dict(self) -> dict:
        return {
            "counts": {str(k): v for k, v in sorted(self.counts.items())},
            "total_vertices": self.total_vertices,
            "max_degree": self.max_degree,
        }


def degree_histogram(edges) -> DegreeHistogram:
    _, deg = degrees(edges)
    if deg.size == 0:
        return DegreeHistogram({}, 0, 0)
    values, tallies = np.unique(deg, return_counts=True)
    mapping = {int(k): int(c) for k, c in zip(values, tallies)}
    return DegreeHistogram(mapping, int(deg.size), int(values[-1]))


class UnionFind:
    """Disjoint sets over 0..n-1 with path halving and union by size."""

    __slots__ = ("parent", "size")

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, i: int) -> int:
        parent = self.parent
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(self, a: int, b: int) -> int:
        """Merge the sets of a and b; returns the size of the merged set."""
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return self.size[ra]
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return self.size[ra]


def largest_component_size(edges) -> int:
    """Size of the largest connected component (0 for an empty graph)."""
    arr = _as_edges(edges)
    if arr.size == 0:
        return 0
    ids, inverse = np.unique(arr.ravel(), return_inverse=True)
    pairs = inverse.reshape(arr.shape)
    uf = UnionFind(ids.size)
    best = 1
    for u, v in pairs:
        if u != v:
            merged = uf.union(int(u), int(v))
            if merged > best:
                best = merged
    return best


def largest_component(edges) -> tuple[int, float]:
    """(size, fraction of visible vertices); (0, 0.0) for an empty graph."""
    arr = _as_edges(edges)
    v = count_vertices(arr)
    if v == 0:
        return 0, 0.0
    size = largest_component_size(arr)
    return size, size / v


def sparsity_ratio(edges) -> float:
    """sqrt(edge count) / vertex count; near-constant for dense graphs,
    vanishing for sparse ones."""
    arr = _as_edges(edges)
    v = count_vertices(arr)
    if v == 0:
        raise GraphStatsError("sparsity ratio is undefined for an empty graph")
    return math.sqrt(arr.shape[0]) / v


def summarize(edges) -> dict:
    arr = _as_edges(edges)
    v = count_vertices(arr)
    out = {
        "edges": count_edges(arr),
        "vertices": v,
        "largest_component": largest_component_size(arr),
    }
    if v:
        ids, deg = degrees(arr)
        out["max_degree"] = int(deg.max())
        out["mean_degree"] = float(deg.mean())
        out["sparsity_ratio"] = sparsity_ratio(arr)
    return out
