"""Finite metric spaces backing all cover computations.

Two concrete backings: an explicit distance matrix (small abstract instances,
random test fixtures) and the path metric of a sparse graph (Cayley balls).
Distances are exact within the carrier; graph metrics additionally provide
fast multi-source distance fields via scipy BFS.
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, dijkstra

from .errors import InputError

UNREACHED = np.iinfo(np.int32).max


class FiniteMetric:
    """A metric on points 0..n-1.  Subclasses implement dist / dist_field."""

    n: int

    @property
    def points(self):
        return range(self.n)

    def check_point(self, x):
        if not (0 <= x < self.n):
            raise InputError(f"unknown point id {x} (carrier has {self.n} points)")

    def dist(self, x, y) -> float:
        raise NotImplementedError

    def dist_field(self, sources) -> np.ndarray:
        """Array of distances from the nearest of `sources` to every point.

        Unreachable points get UNREACHED (graph metrics on disconnected carriers).
        """
        raise NotImplementedError

    def set_dist(self, a, b) -> float:
        """min over pairs; +inf when either side is empty."""
        a, b = list(a), list(b)
        if not a or not b:
            return float("inf")
        field = self.dist_field(a)
        d = min(field[p] for p in b)
        return float("inf") if d >= UNREACHED else float(d)

    def diam(self, pts) -> float:
        pts = list(pts)
        if len(pts) <= 1:
            return 0.0
        best = 0.0
        for p in pts:
            field = self.dist_field([p])
            m = max(field[q] for q in pts)
            if m >= UNREACHED:
                return float("inf")
            best = max(best, float(m))
        return best


class DenseMetric(FiniteMetric):
    """Metric given by an explicit symmetric matrix."""

    def __init__(self, matrix, validate=True):
        m = np.asarray(matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InputError("distance matrix must be square")
        self.m = m
        self.n = m.shape[0]
        if validate:
            self._validate()

    def _validate(self):
        m = self.m
        if np.any(np.diag(m) != 0):
            raise InputError("dist(x,x) must be 0")
        if not np.allclose(m, m.T):
            raise InputError("distance matrix must be symmetric")
        if np.any(m < 0):
            raise InputError("distances must be non-negative")
        n = self.n
        triples = (
            itertools.combinations(range(n), 3)
            if n <= 40
            else _sample_triples(n, 2000)
        )
        for a, b, c in triples:
            for i, j, k in ((a, b, c), (b, c, a), (c, a, b)):
                if m[i, k] > m[i, j] + m[j, k] + 1e-9:
                    raise InputError(f"triangle inequality fails on ({i},{j},{k})")

    def dist(self, x, y):
        self.check_point(x)
        self.check_point(y)
        return float(self.m[x, y])

    def dist_field(self, sources):
        sources = list(sources)
        if not sources:
            return np.full(self.n, UNREACHED, dtype=float)
        return self.m[sources].min(axis=0)

    def diam(self, pts):
        pts = list(pts)
        if len(pts) <= 1:
            return 0.0
        sub = self.m[np.ix_(pts, pts)]
        return float(sub.max())


class GraphMetric(FiniteMetric):
    """Shortest-path metric of an undirected unit-weight graph.

    `edges` is an iterable of (u, v) pairs; the metric is the BFS distance in
    the graph on n points.  Used for Cayley balls, where the graph distance
    agrees with the word metric for all pairs whose true distance keeps a
    geodesic inside the enumerated ball.
    """

    def __init__(self, n, edges):
        self.n = n
        edges = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
        if len(edges) and (edges.min() < 0 or edges.max() >= n):
            raise InputError("edge endpoint outside point range")
        row = np.concatenate([edges[:, 0], edges[:, 1]])
        col = np.concatenate([edges[:, 1], edges[:, 0]])
        data = np.ones(len(row), dtype=np.int8)
        self.graph = csr_matrix((data, (row, col)), shape=(n, n))
        self._field_cache: dict[tuple[int, ...], np.ndarray] = {}

    def masked(self, removed) -> "GraphMetric":
        """Graph metric with a point set removed (used for separation checks)."""
        removed = set(removed)
        coo = self.graph.tocoo()
        keep = [
            (u, v)
            for u, v in zip(coo.row, coo.col)
            if u < v and u not in removed and v not in removed
        ]
        return GraphMetric(self.n, keep)

    def components(self) -> np.ndarray:
        _, labels = connected_components(self.graph, directed=False)
        return labels

    def dist(self, x, y):
        self.check_point(x)
        self.check_point(y)
        d = self.dist_field([x])[y]
        return float("inf") if d >= UNREACHED else float(d)

    def dist_field(self, sources, with_sources=False):
        sources = sorted(set(int(s) for s in sources))
        if not sources:
            field = np.full(self.n, UNREACHED, dtype=float)
            return (field, None) if with_sources else field
        key = tuple(sources)
        if not with_sources and key in self._field_cache:
            return self._field_cache[key]
        if with_sources:
            dist_m, _, src = dijkstra(
                self.graph,
                directed=False,
                unweighted=True,
                indices=sources,
                min_only=True,
                return_predecessors=True,
            )
            field = np.where(np.isinf(dist_m), UNREACHED, dist_m)
            return field, src
        dist_m = dijkstra(
            self.graph, directed=False, unweighted=True, indices=sources, min_only=True
        )
        field = np.where(np.isinf(dist_m), UNREACHED, dist_m)
        if len(self._field_cache) < 64:
            self._field_cache[key] = field
        return field

    def diam(self, pts):
        pts = list(pts)
        if len(pts) <= 1:
            return 0.0
        best = 0.0
        for p in pts:
            field = self.dist_field([p])
            m = max(field[q] for q in pts)
            if m >= UNREACHED:
                return float("inf")
            best = max(best, float(m))
        return best


def line_metric(points) -> DenseMetric:
    """Metric of integer points on a line; convenience for tests and examples."""
    pts = np.asarray(list(points), dtype=float)
    return DenseMetric(np.abs(pts[:, None] - pts[None, :]), validate=False)


def _sample_triples(n, count, seed=0):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        i, j, k = rng.integers(0, n, size=3)
        yield int(i), int(j), int(k)
