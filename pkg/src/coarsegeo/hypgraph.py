"""Core machinery for coarsely geodesic spaces.

Spaces come in two presentations: finite explicit graphs
(:class:`HypGraph`, with BFS geodesics and deterministic tie-breaking)
and callable distance handles (:class:`MetricHandle`, possibly backed by
a graph, possibly only an oracle).  On top of these the module provides
thin-triangle constant estimation, nearest-point projections, triangle
centers, excursion measurement against a geodesic, and the
unparametrized quasi-geodesic test.
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass
from typing import Any, Callable, Hashable, Iterable, Sequence

import numpy as np

from . import surfmodel
from .surfmodel import farey_adjacent, farey_ball

Vertex = Hashable


class UnreachableError(ValueError):
    """The endpoints are in different components of the graph."""


@dataclass(frozen=True)
class GeodesicSegment:
    """An ordered geodesic vertex path; consecutive vertices adjacent."""

    vertices: tuple

    def __post_init__(self):
        if not self.vertices:
            raise ValueError("empty segment")

    @property
    def endpoints(self) -> tuple:
        return (self.vertices[0], self.vertices[-1])

    @property
    def length(self) -> int:
        return len(self.vertices) - 1

    def __iter__(self):
        return iter(self.vertices)


class HypGraph:
    """A finite explicit graph with a cached thinness constant.

    Vertices must be hashable; `key` fixes the canonical encoding used
    for all tie-breaking (defaults to the vertex itself, or `.key()`
    when present, as for slopes).
    """

    def __init__(self, edges: Iterable[tuple[Vertex, Vertex]],
                 vertices: Iterable[Vertex] = (),
                 key: Callable[[Vertex], Any] | None = None,
                 delta: float | None = None):
        if key is None:
            key = lambda v: v.key() if hasattr(v, "key") else v
        self.key = key
        adj: dict[Vertex, set] = {v: set() for v in vertices}
        for u, v in edges:
            if u == v:
                raise ValueError("loops are not allowed")
            adj.setdefault(u, set()).add(v)
            adj.setdefault(v, set()).add(u)
        self.vertices = tuple(sorted(adj, key=key))
        self.adj = {v: tuple(sorted(adj[v], key=key)) for v in self.vertices}
        self._delta = delta

    def __contains__(self, v: Vertex) -> bool:
        return v in self.adj

    def __len__(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return sum(len(a) for a in self.adj.values()) // 2

    @property
    def delta(self) -> float:
        if self._delta is None:
            self._delta = delta_estimate(self, sample_count=300, seed=0)
        return self._delta

    def set_delta(self, value: float) -> None:
        self._delta = value

    def bfs_distances(self, sources: Iterable[Vertex]) -> dict[Vertex, int]:
        dist = {s: 0 for s in sources}
        q = deque(dist)
        while q:
            u = q.popleft()
            for v in self.adj[u]:
                if v not in dist:
                    dist[v] = dist[u] + 1
                    q.append(v)
        return dist

    def distance(self, a: Vertex, b: Vertex) -> int:
        d = self.bfs_distances([a]).get(b)
        if d is None:
            raise UnreachableError("unreachable")
        return d


def geodesic(g: HypGraph, a: Vertex, b: Vertex) -> GeodesicSegment:
    """BFS shortest path with deterministic tie-breaking.

    The search runs from the endpoint with the smaller key and explores
    neighbors in key order, so the result is reversal-symmetric:
    geodesic(g, b, a) is geodesic(g, a, b) reversed.
    """
    if a not in g or b not in g:
        raise KeyError("endpoint not in graph")
    if a == b:
        return GeodesicSegment((a,))
    flip = g.key(b) < g.key(a)
    if flip:
        a, b = b, a
    parent: dict[Vertex, Vertex] = {a: a}
    q = deque([a])
    while q:
        u = q.popleft()
        if u == b:
            break
        for v in g.adj[u]:
            if v not in parent:
                parent[v] = u
                q.append(v)
    if b not in parent:
        raise UnreachableError("unreachable")
    path = [b]
    while path[-1] != a:
        path.append(parent[path[-1]])
    path.reverse()
    if flip:
        path.reverse()
    return GeodesicSegment(tuple(path))


def _side_defect(g: HypGraph, sides: list[GeodesicSegment]) -> float:
    """Max over sides of the distance from the side to the other two."""
    worst = 0.0
    for i, side in enumerate(sides):
        others = [v for j, s in enumerate(sides) if j != i for v in s.vertices]
        dist = g.bfs_distances(others)
        far = max(dist.get(v, math.inf) for v in side.vertices)
        worst = max(worst, float(far))
    return worst


def delta_estimate(g: HypGraph, sample_count: int, seed: int) -> float:
    """Empirical thin-triangle constant from sampled triangles.

    Deterministic given the seed, and prefix-consistent: increasing
    sample_count only extends the sampled stream, so the estimate is
    monotone non-decreasing in sample_count.
    """
    n = len(g.vertices)
    if n < 3:
        return 0.0
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(sample_count):
        i, j, k = rng.choice(n, size=3, replace=False)
        tri = (g.vertices[int(i)], g.vertices[int(j)], g.vertices[int(k)])
        try:
            sides = [geodesic(g, tri[0], tri[1]),
                     geodesic(g, tri[1], tri[2]),
                     geodesic(g, tri[0], tri[2])]
        except UnreachableError:
            continue
        worst = max(worst, _side_defect(g, sides))
    return worst


def delta_exhaustive(g: HypGraph) -> float:
    """Exact thin-triangle constant by scanning every vertex triple.
    Only sensible on small graphs; used as the sampling oracle."""
    worst = 0.0
    for tri in itertools.combinations(g.vertices, 3):
        sides = [geodesic(g, tri[0], tri[1]),
                 geodesic(g, tri[1], tri[2]),
                 geodesic(g, tri[0], tri[2])]
        worst = max(worst, _side_defect(g, sides))
    return worst


def nearest_point_projection(g: HypGraph, p: Vertex, seg: GeodesicSegment) -> Vertex:
    """The segment vertex closest to p; ties go to the earliest vertex
    along the segment."""
    dist = g.bfs_distances([p])
    best = None
    best_d = math.inf
    for v in seg.vertices:
        d = dist.get(v, math.inf)
        if d < best_d:
            best, best_d = v, d
    if best is None or best_d is math.inf:
        raise UnreachableError("unreachable")
    return best


def triangle_center_graph(g: HypGraph, x: Vertex, y: Vertex, z: Vertex) -> Vertex:
    """A vertex within delta + 1 of all three sides of the triangle.

    Scans the whole (finite) graph by distance-to-side and picks the
    minimizer, ties broken by key.  Failure to get within delta + 1
    means the cached delta does not reflect the graph at this scale.
    """
    sides = [geodesic(g, x, y), geodesic(g, y, z), geodesic(g, x, z)]
    dists = [g.bfs_distances(s.vertices) for s in sides]
    best_v, best_val = None, math.inf
    for v in g.vertices:
        val = max(float(d.get(v, math.inf)) for d in dists)
        if val < best_val or (val == best_val and best_v is not None
                              and g.key(v) < g.key(best_v)):
            best_v, best_val = v, val
    if best_v is None or best_val > g.delta + 1:
        raise ValueError("not hyperbolic at scale")
    return best_v


# ---------------------------------------------------------------------------
# Distance handles
# ---------------------------------------------------------------------------


@dataclass
class MetricHandle:
    """A metric space presented as a distance callable.

    `mult_slack` declares the factor up to which the triangle inequality
    holds (coarse model metrics are only quasi-metrics).  Graph-backed
    handles also expose the graph; geodesic-capable handles set
    `geodesic_fn` returning a vertex path between two points.
    """

    name: str
    distance: Callable[[Any, Any], float]
    graph: HypGraph | None = None
    geodesic_fn: Callable[[Any, Any], Sequence[Any]] | None = None
    mult_slack: float = 1.0

    @property
    def oracle_only(self) -> bool:
        return self.graph is None

    def geodesic(self, a, b) -> GeodesicSegment:
        if self.geodesic_fn is not None:
            return GeodesicSegment(tuple(self.geodesic_fn(a, b)))
        if self.graph is not None:
            return geodesic(self.graph, a, b)
        raise ValueError(f"handle {self.name!r} has no geodesic support")


def real_line_handle() -> MetricHandle:
    return MetricHandle("R", lambda a, b: abs(float(a) - float(b)),
                        geodesic_fn=lambda a, b: (a, b))


def lp_handle(p: float, name: str | None = None) -> MetricHandle:
    """R^n with an L^p metric; points are tuples or arrays."""
    if p == math.inf:
        dist = lambda a, b: float(np.max(np.abs(np.asarray(a, float) - np.asarray(b, float))))
        nm = "Linf"
    else:
        dist = lambda a, b: float(np.sum(np.abs(np.asarray(a, float) - np.asarray(b, float)) ** p) ** (1.0 / p))
        nm = f"L{p:g}"
    return MetricHandle(name or nm, dist)


def product_handle(handles: Sequence[MetricHandle], name: str = "product") -> MetricHandle:
    """L^1 product of handles; points are tuples with one coordinate per
    factor.  Efficiency passes to factors in this metric."""
    def dist(a, b):
        return sum(h.distance(x, y) for h, x, y in zip(handles, a, b))
    h = MetricHandle(name, dist, mult_slack=max(f.mult_slack for f in handles))
    h.factors = tuple(handles)  # type: ignore[attr-defined]
    return h


def graph_handle(g: HypGraph, name: str = "graph") -> MetricHandle:
    return MetricHandle(name, lambda a, b: float(g.distance(a, b)), graph=g,
                        geodesic_fn=lambda a, b: geodesic(g, a, b).vertices)


def farey_handle() -> MetricHandle:
    """The full Farey graph through the exact distance and geodesic
    routines (no ball needed)."""
    return MetricHandle(
        "farey",
        lambda a, b: float(surfmodel.farey_distance(a, b)),
        geodesic_fn=lambda a, b: surfmodel.farey_geodesic(a, b),
    )


def farey_graph(lo: int = -2, hi: int = 3, depth: int = 5,
                delta: float | None = None) -> HypGraph:
    """An explicit finite chunk of the Farey graph (mediant fan over
    [lo, hi] to the given depth) with determinant adjacency."""
    verts = farey_ball(lo, hi, depth)
    edges = [(a, b) for a, b in itertools.combinations(verts, 2) if farey_adjacent(a, b)]
    return HypGraph(edges, vertices=verts, delta=delta)


def model_handle(surface, mult_slack: float = 4.0) -> MetricHandle:
    """The model space of a surface under the distance formula."""
    return MetricHandle(f"model[{surface.flavor}]", surfmodel.model_distance,
                        mult_slack=mult_slack)


# ---------------------------------------------------------------------------
# Excursion and unparametrized quasi-geodesics
# ---------------------------------------------------------------------------


def _points_of(path) -> list:
    return list(path.points) if hasattr(path, "points") else list(path)


def morse_excursion(path, seg: GeodesicSegment, handle: MetricHandle) -> float:
    """Max over path samples of the distance to the segment."""
    pts = _points_of(path)
    if not pts:
        raise ValueError("empty path")
    return max(min(handle.distance(p, v) for v in seg.vertices) for p in pts)


def unparam_qgeo_check(path, handle: MetricHandle, lam: float, c: float,
                       ) -> tuple[bool, tuple[int, int, int] | None]:
    """Decide whether some monotone reparametrization of the samples is a
    (lam, c)-quasi-geodesic.

    Monotone progress times u_1 <= ... <= u_n must satisfy, for i < j,
    (d_ij - c)/lam <= u_j - u_i <= lam (d_ij + c); backtracking beyond c
    makes the system infeasible.  Feasibility of the difference
    constraints is decided by a min-plus closure (negative cycle test).
    Returns (ok, witness) with a violating index triple when infeasible.
    """
    pts = _points_of(path)
    n = len(pts)
    if n == 0:
        raise ValueError("empty path")
    if n == 1:
        return True, None
    if lam <= 0:
        raise ValueError("lam must be positive")
    d = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d[i, j] = d[j, i] = handle.distance(pts[i], pts[j])
    upper = lam * (d + c)           # u_j - u_i <= upper[i, j] for i < j
    lower = np.maximum(0.0, (d - c) / lam)  # u_j - u_i >= lower[i, j]
    w = np.full((n, n), np.inf)
    np.fill_diagonal(w, 0.0)
    iu = np.triu_indices(n, k=1)
    w[iu] = upper[iu]
    w[(iu[1], iu[0])] = -lower[iu]
    for k in range(n):
        w = np.minimum(w, w[:, k, None] + w[None, k, :])
    diag = np.diag(w)
    if np.all(diag >= -1e-9):
        return True, None
    # witness: a pair whose tightened upper bound dropped below its lower
    # bound, plus the intermediate index that tightened it
    slack = np.full((n, n), np.inf)
    slack[iu] = w[iu] - lower[iu]
    i, j = np.unravel_index(np.argmin(slack), slack.shape)
    mid = int(np.argmin(w[i, :] + w[:, j]))
    return False, (int(i), mid, int(j))


def unparam_qgeo_oracle(points: Sequence, handle: MetricHandle, lam: float,
                        c: float, grid: int = 9) -> bool:
    """Independent brute-force check for short sequences: search monotone
    integer-grid time assignments satisfying all pairwise constraints."""
    n = len(points)
    if n <= 1:
        return True
    if n > 6:
        raise ValueError("oracle is for short sequences")
    d = [[handle.distance(points[i], points[j]) for j in range(n)] for i in range(n)]
    top = lam * (max(max(r) for r in d) + c) + 1.0
    levels = [top * k / (grid - 1) for k in range(grid)]

    def ok(us):
        for i in range(len(us)):
            for j in range(i + 1, len(us)):
                du = us[j] - us[i]
                if du < (d[i][j] - c) / lam - 1e-9 or du > lam * (d[i][j] + c) + 1e-9:
                    return False
        return True

    def rec(us):
        if len(us) == n:
            return True
        lo = us[-1] if us else 0.0
        for u in levels:
            if u < lo:
                continue
            if ok(us + [u]) and rec(us + [u]):
                return True
        return False

    return rec([])
