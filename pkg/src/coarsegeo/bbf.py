"""Transversal families, the projection graph, and the quasi-tree of
complexes.

Subsurfaces split into finitely many families whose members pairwise
cross; on a zero-complexity component that is the component itself
(one singleton family) and the annuli (all distinct cores cross).  For
one family, vertices whose mutual projections into every other member
stay below K are joined in the projection graph, and gluing each
member's complex to its neighbors along boundary projections yields a
quasi-tree whose path metric dominates half of the thresholded
projection sum.  The product of these quasi-trees receives the model
space through the coordinate-minimizing projection, a quasi-isometric
embedding audited here.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

from . import surfmodel
from .consreal import SyntheticSystem
from .surfmodel import (AnnularPoint, ModelPoint, ModelSurface, Slope, Subsurface,
                        annular_distance, common_neighbors, farey_distance,
                        farey_geodesic, project, subsurface_distance, twist_number)


class WindowTooSmallError(RuntimeError):
    pass


class FamilySplitError(ValueError):
    def __init__(self, msg: str, witness):
        super().__init__(msg)
        self.witness = witness


# ---------------------------------------------------------------------------
# Families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FamilyY:
    """A family of pairwise-crossing subsurfaces on one component:
    either the singleton component family or a window of annuli."""

    comp: int
    kind: str  # "component" | "annuli"
    cores: tuple[Slope, ...] = ()

    def members(self) -> tuple[Subsurface, ...]:
        if self.kind == "component":
            return (Subsurface("component", self.comp),)
        return tuple(Subsurface("annulus", self.comp, s) for s in self.cores)

    def label(self) -> str:
        return f"{self.kind}[{self.comp}]"


def working_window(x: ModelPoint, y: ModelPoint,
                   extra: Iterable[tuple[int, Slope]] = ()) -> dict[int, tuple[Slope, ...]]:
    """Finite core sets per component: both endpoints' curves, the
    canonical geodesic between the pants slopes, and the mediant fan at
    distance one from its edges.  Cores beyond this window contribute a
    bounded amount by the bounded geodesic image property."""
    out: dict[int, set[Slope]] = {i: set() for i in range(x.surface.n_components)}
    for i in range(x.surface.n_components):
        geo = farey_geodesic(x.alpha(i), y.alpha(i))
        out[i].update(geo)
        for u, v in zip(geo, geo[1:]):
            out[i].update(common_neighbors(u, v))
        for pt in (x, y):
            st = pt.states[i]
            out[i].add(st.alpha)
            if st.tau is not None:
                out[i].add(st.tau)
    for comp, core in extra:
        out[comp].add(core)
    return {i: tuple(sorted(s, key=Slope.key)) for i, s in out.items()}


def build_families(surface: ModelSurface,
                   window: dict[int, tuple[Slope, ...]]) -> list[FamilyY]:
    """Two families per component (one in the pants flavor, where annuli
    are inessential)."""
    fams = []
    for comp in range(surface.n_components):
        fams.append(FamilyY(comp, "component"))
        if surface.flavor != "pants":
            fams.append(FamilyY(comp, "annuli", window.get(comp, ())))
    return fams


def build_families_synthetic(sys: SyntheticSystem,
                             max_families: int | None = None) -> list[list[str]]:
    """Greedy split of a synthetic system into pairwise-crossing groups
    (clique cover of the overlap graph, found by coloring vertices in
    canonical order)."""
    ids = sys.members()
    groups: list[list[str]] = []
    for u in ids:
        placed = False
        for g in groups:
            if all(sys.relation(u, v) == "overlap" for v in g):
                g.append(u)
                placed = True
                break
        if not placed:
            groups.append([u])
    if max_families is not None and len(groups) > max_families:
        raise FamilySplitError(
            f"system needs {len(groups)} transversal families (cap {max_families})",
            witness=groups)
    return groups


# ---------------------------------------------------------------------------
# The projection graph P_K
# ---------------------------------------------------------------------------


@dataclass
class PkGraph:
    family: FamilyY
    k: float
    edges: set[frozenset]
    flavor: str
    bers: float

    def adjacent(self, a: Subsurface, b: Subsurface) -> bool:
        return frozenset((a, b)) in self.edges


def _mutual_projection(u: Subsurface, v: Subsurface, w: Subsurface,
                       flavor: str, bers: float) -> float:
    """d_U of the boundaries of V and W, for three annuli on a component."""
    h = 1.0 / bers if flavor == "augmented" else None
    a = AnnularPoint(twist_number(u.core, v.core), h)
    b = AnnularPoint(twist_number(u.core, w.core), h)
    return annular_distance(a, b, flavor if flavor != "pants" else "marking")


def build_pk_graph(family: FamilyY, k: float, flavor: str, bers: float = 1.0) -> PkGraph:
    """Exhaustive pair test: V and W are joined when every other member
    sees their boundaries within K of each other."""
    members = family.members()
    edges: set[frozenset] = set()
    if family.kind == "component":
        return PkGraph(family, k, edges, flavor, bers)
    for v, w in itertools.combinations(members, 2):
        ok = True
        for u in members:
            if u in (v, w):
                continue
            if _mutual_projection(u, v, w, flavor, bers) > k:
                ok = False
                break
        if ok:
            edges.add(frozenset((v, w)))
    return PkGraph(family, k, edges, flavor, bers)


# ---------------------------------------------------------------------------
# The quasi-tree of complexes
# ---------------------------------------------------------------------------

QtPoint = tuple[Subsurface, Any]  # (vertex subsurface, point of its complex)


@dataclass
class QuasiTree:
    """Complexes of one family glued along boundary projections over the
    projection graph.  Distances are shortest paths where each complex
    contributes its own exact metric between the nodes it hosts and
    every cross edge costs one; twists are already integral, so the
    horoball complexes are discretized at unit resolution natively."""

    family: FamilyY
    pk: PkGraph
    flavor: str
    bers: float
    attachments: dict[frozenset, tuple[QtPoint, QtPoint]] = field(default_factory=dict)

    def __post_init__(self):
        for e in self.pk.edges:
            v, w = sorted(e, key=lambda s: s.key())
            self.attachments[e] = (
                (v, self._boundary_point(v, w)),
                (w, self._boundary_point(w, v)),
            )

    def _boundary_point(self, host: Subsurface, other: Subsurface):
        if host.kind == "component":
            return other.core
        h = 1.0 / self.bers if self.flavor == "augmented" else None
        return AnnularPoint(twist_number(host.core, other.core), h)

    def complex_metric(self, host: Subsurface, a, b) -> float:
        if host.kind == "component":
            return float(farey_distance(a, b))
        flv = self.flavor if self.flavor != "pants" else "marking"
        return annular_distance(a, b, flv)

    def _attachment_table(self):
        """All-pairs shortest paths over the attachment nodes, computed
        once: intra-complex metric edges plus unit cross edges."""
        if getattr(self, "_apsp", None) is not None:
            return self._nodes, self._per_complex, self._apsp
        nodes: list[QtPoint] = []
        for _edge, (a, b) in sorted(self.attachments.items(),
                                    key=lambda kv: sorted(s.key() for s in kv[0])):
            for nd in (a, b):
                if nd not in nodes:
                    nodes.append(nd)
        n = len(nodes)
        import numpy as np
        w = np.full((n, n), math.inf)
        np.fill_diagonal(w, 0.0)
        per_complex: dict[Subsurface, list[int]] = {}
        for i, nd in enumerate(nodes):
            per_complex.setdefault(nd[0], []).append(i)
        for idxs in per_complex.values():
            for i in idxs:
                for j in idxs:
                    if i != j:
                        w[i, j] = self.complex_metric(nodes[i][0], nodes[i][1],
                                                      nodes[j][1])
        idx = {nd: i for i, nd in enumerate(nodes)}
        for a, b in self.attachments.values():
            i, j = idx[a], idx[b]
            w[i, j] = min(w[i, j], 1.0)
            w[j, i] = min(w[j, i], 1.0)
        for k in range(n):
            w = np.minimum(w, w[:, k, None] + w[None, k, :])
        self._nodes, self._per_complex, self._apsp = nodes, per_complex, w
        return nodes, per_complex, self._apsp

    def distance(self, u: QtPoint, v: QtPoint) -> float:
        """Shortest glued path: a direct intra-complex leg, or out
        through this complex's attachments, across the precomputed
        attachment table, and in through the target's."""
        best = self.complex_metric(u[0], u[1], v[1]) if u[0] == v[0] else math.inf
        nodes, per_complex, apsp = self._attachment_table()
        out_u = per_complex.get(u[0], [])
        out_v = per_complex.get(v[0], [])
        if out_u and out_v:
            du = [self.complex_metric(u[0], u[1], nodes[i][1]) for i in out_u]
            dv = [self.complex_metric(v[0], v[1], nodes[j][1]) for j in out_v]
            for a, da in zip(out_u, du):
                for b, db in zip(out_v, dv):
                    cand = da + apsp[a, b] + db
                    if cand < best:
                        best = cand
        if best is math.inf or best == math.inf:
            raise WindowTooSmallError(
                f"no path between {u[0]} and {v[0]} in the window; enlarge it")
        return float(best)

    def dump(self) -> dict:
        return {
            "schema_version": 1,
            "family": self.family.label(),
            "vertices": [repr(m) for m in self.family.members()],
            "pk_edges": sorted(sorted(repr(s) for s in e) for e in self.pk.edges),
            "cross_edges": [
                {"a": [repr(a[0]), _pt_json(a[1])], "b": [repr(b[0]), _pt_json(b[1])]}
                for a, b in self.attachments.values()
            ],
        }


def _pt_json(p):
    if isinstance(p, Slope):
        return p.to_json()
    if isinstance(p, AnnularPoint):
        return [p.twist, p.height]
    return p


def quasitree_distance(qt: QuasiTree, u: QtPoint, v: QtPoint) -> float:
    return qt.distance(u, v)


# ---------------------------------------------------------------------------
# The embedding
# ---------------------------------------------------------------------------


@dataclass
class EmbeddedPoint:
    coords: tuple[tuple[str, QtPoint], ...]  # (family label, coordinate)

    def coord(self, label: str) -> QtPoint:
        for lb, c in self.coords:
            if lb == label:
                return c
        raise KeyError(label)


@dataclass
class Embedding:
    """The product-of-quasi-trees receiver for one surface window."""

    surface: ModelSurface
    families: list[FamilyY]
    trees: dict[str, QuasiTree]
    k: float

    def project(self, x: ModelPoint) -> EmbeddedPoint:
        return psi_project(x, self)

    def distance(self, a: EmbeddedPoint, b: EmbeddedPoint) -> float:
        total = 0.0
        for fam in self.families:
            lb = fam.label()
            total += self.trees[lb].distance(a.coord(lb), b.coord(lb))
        return total


def build_embedding(surface: ModelSurface, window: dict[int, tuple[Slope, ...]],
                    k: float) -> Embedding:
    families = build_families(surface, window)
    trees = {}
    for fam in families:
        pk = build_pk_graph(fam, k, surface.flavor, surface.bers)
        trees[fam.label()] = QuasiTree(fam, pk, surface.flavor, surface.bers)
    return Embedding(surface, families, trees, k)


def psi_project(x: ModelPoint, emb: Embedding) -> EmbeddedPoint:
    """Coordinate per family at the member minimizing the worst
    intersection with the pants curves: the component itself for the
    singleton family, the pants curve's annulus (intersection zero) for
    the annuli family."""
    coords = []
    for fam in emb.families:
        if fam.kind == "component":
            w = Subsurface("component", fam.comp)
            coords.append((fam.label(), (w, project(x, w))))
        else:
            alpha = x.alpha(fam.comp)
            if alpha not in fam.cores:
                raise WindowTooSmallError(
                    f"pants curve {alpha} of the point is outside the window")
            w = Subsurface("annulus", fam.comp, alpha)
            coords.append((fam.label(), (w, project(x, w))))
    return EmbeddedPoint(tuple(coords))


def embedding_for_pair(x: ModelPoint, y: ModelPoint, k: float,
                       extra: Iterable[tuple[int, Slope]] = ()) -> Embedding:
    return build_embedding(x.surface, working_window(x, y, extra), k)


def embedded_distance(x: ModelPoint, y: ModelPoint, k: float) -> float:
    emb = embedding_for_pair(x, y, k)
    return emb.distance(emb.project(x), emb.project(y))


@dataclass
class LowerBoundVerdict:
    lhs: float
    rhs: float
    k_prime: float

    @property
    def ok(self) -> bool:
        return self.lhs >= self.rhs - 1e-9


def lower_bound_audit(x: ModelPoint, y: ModelPoint, k: float, k_prime: float,
                      ) -> LowerBoundVerdict:
    """The glued-product distance must dominate half the projection sum
    thresholded at K'."""
    if k_prime <= k:
        raise ValueError("the audit needs K' > K")
    lhs = embedded_distance(x, y, k)
    total = 0.0
    for w in surfmodel.candidate_subsurfaces(x, y):
        d = subsurface_distance(x, y, w)
        if d >= k_prime:
            total += d
    return LowerBoundVerdict(lhs, 0.5 * total, k_prime)


def shared_embedding(points: Sequence[ModelPoint], k: float,
                     extra: Iterable[tuple[int, Slope]] = ()) -> Embedding:
    """One embedding window covering a whole point cloud: the union of
    pairwise windows against the first point, plus every sample's own
    curves.  Lets a trace reuse a single glued structure."""
    if not points:
        raise ValueError("no points")
    base = points[0]
    cores: dict[int, set[Slope]] = {i: set() for i in range(base.surface.n_components)}
    for p in points:
        win = working_window(base, p)
        for i, cs in win.items():
            cores[i].update(cs)
    for comp, core in extra:
        cores[comp].add(core)
    window = {i: tuple(sorted(s, key=Slope.key)) for i, s in cores.items()}
    return build_embedding(base.surface, window, k)


def embedded_handle(points: Sequence[ModelPoint], k: float):
    """A metric handle for the product-of-quasi-trees distance over a
    shared window.  Unlike the thresholded distance formula this metric
    separates points that differ by small twists, which is what the
    efficiency machinery needs (efficiency is not a quasi-isometry
    invariant, so the receiving metric matters)."""
    from .hypgraph import MetricHandle

    emb = shared_embedding(points, k)
    cache: dict = {}

    def dist(a: ModelPoint, b: ModelPoint) -> float:
        key = (a, b) if id(a) <= id(b) else (b, a)
        got = cache.get(key)
        if got is None:
            got = emb.distance(emb.project(a), emb.project(b))
            cache[key] = got
        return got

    h = MetricHandle("embedded", dist, mult_slack=2.0)
    h.embedding = emb  # type: ignore[attr-defined]
    return h


def embedding_audit(pairs: Sequence[tuple[ModelPoint, ModelPoint]], k: float,
                    cutoff: float = 10.0) -> tuple[float, float]:
    """Min and max of embedded distance over model distance across pairs
    at least `cutoff` apart; both bounded away from zero and infinity
    for a quasi-isometric embedding."""
    ratios = []
    for x, y in pairs:
        dx = surfmodel.model_distance(x, y)
        if dx < cutoff:
            continue
        ratios.append(embedded_distance(x, y, k) / dx)
    if not ratios:
        raise ValueError("no pair passed the distance cutoff")
    return min(ratios), max(ratios)
