"""Consistency checking, realization, and projection audits.

A tuple with one coordinate per subsurface is M-consistent when every
overlapping pair satisfies min(d_U(z_U, bV), d_V(z_V, bU)) <= M and
every nested pair V inside U satisfies min(d_U(z_U, bV), d_V(z_V, z_U))
<= M, where bV is the boundary of V projected into the other complex.
Tuples of projections of genuine model points always pass at a frozen
constant, and consistent tuples can be realized back into the exact
model: pick pants slopes from component coordinates, swap in any
annulus whose twist demand is far from that choice (those form a
multicurve, at most one per component here), then build transversals by
twisting and read lengths off horoball heights.

Synthetic systems (explicit relation tables over abstract complexes)
exercise the same checker on nesting chains and overlap graphs that the
exact zero-complexity model cannot produce.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Iterable, Mapping

from . import surfmodel
from .surfmodel import (AnnularPoint, ComponentState, InessentialSubsurfaceError,
                        ModelPoint, ModelSurface, Slope, Subsurface,
                        annular_distance, apply_matrix, canonical_transversal,
                        farey_distance, project, subsurface_distance,
                        twist_matrix, twist_number)

DISJOINT, NESTED, OVERLAP = "disjoint", "nested", "overlap"


class MissingProjectionError(KeyError):
    pass


class InconsistentTupleError(ValueError):
    def __init__(self, report: "ConsistencyReport"):
        super().__init__(f"tuple is not consistent: realized M = {report.realized_m:.2f}")
        self.report = report


@dataclass(frozen=True)
class ProjectionTuple:
    """Coordinates indexed by subsurface (or synthetic id)."""

    coords: tuple[tuple[Hashable, Any], ...]

    @classmethod
    def of(cls, mapping: Mapping[Hashable, Any]) -> "ProjectionTuple":
        items = sorted(mapping.items(), key=lambda kv: _id_key(kv[0]))
        return cls(tuple(items))

    def __getitem__(self, key):
        for k, v in self.coords:
            if k == key:
                return v
        raise KeyError(key)

    def __contains__(self, key) -> bool:
        return any(k == key for k, _ in self.coords)

    def keys(self):
        return [k for k, _ in self.coords]

    def to_json(self) -> list:
        return [[_id_json(k), _coord_json(v)] for k, v in self.coords]


def _id_key(u) -> tuple:
    return u.key() if hasattr(u, "key") else (str(u),)


def _id_json(u):
    if isinstance(u, Subsurface):
        return {"kind": u.kind, "comp": u.comp,
                "core": u.core.to_json() if u.core else None}
    return u


def _coord_json(v):
    if isinstance(v, Slope):
        return {"slope": v.to_json()}
    if isinstance(v, AnnularPoint):
        return {"twist": v.twist, "height": v.height}
    return v


@dataclass
class ConsistencyReport:
    verdict: bool
    realized_m: float
    violations: list[tuple[Hashable, Hashable, float]]
    threshold: float

    def to_json(self) -> dict:
        return {
            "schema_version": 1,
            "verdict": self.verdict,
            "realized_m": self.realized_m,
            "threshold": self.threshold,
            "violations": [[_id_json(u), _id_json(v), val]
                           for u, v, val in self.violations],
        }


# ---------------------------------------------------------------------------
# Subsurface systems
# ---------------------------------------------------------------------------


class SubsurfaceSystem:
    """Interface shared by the exact model and synthetic tables."""

    def members(self) -> list[Hashable]:
        raise NotImplementedError

    def relation(self, u, v) -> str:
        """DISJOINT / OVERLAP, or NESTED meaning v is properly inside u."""
        raise NotImplementedError

    def boundary_projection(self, u, v):
        """pi_U(boundary of V), or raise MissingProjectionError."""
        raise NotImplementedError

    def project_element(self, u, v, elt):
        """pi_V of a curve-complex element of C(U); may be undefined."""
        raise NotImplementedError

    def complex_distance(self, u, a, b) -> float:
        raise NotImplementedError


class ExactSystem(SubsurfaceSystem):
    """The subsurface system of a zero-complexity model surface,
    restricted to a finite working set of annuli per component."""

    def __init__(self, surface: ModelSurface,
                 subsurfaces: Iterable[Subsurface]):
        self.surface = surface
        subs = list(subsurfaces)
        comps = {Subsurface("component", i) for i in range(surface.n_components)}
        self._members = sorted(set(subs) | comps, key=_id_key)

    def members(self) -> list[Subsurface]:
        return self._members

    def relation(self, u: Subsurface, v: Subsurface) -> str:
        if u == v:
            raise ValueError("relation of a subsurface with itself")
        if u.comp != v.comp:
            return DISJOINT
        if u.kind == "component" and v.kind == "annulus":
            return NESTED
        if u.kind == "annulus" and v.kind == "component":
            return NESTED  # caller orients; see consistency_check
        return OVERLAP  # two distinct annuli on a component always cross

    def boundary_projection(self, u: Subsurface, v: Subsurface):
        if v.kind != "annulus":
            raise MissingProjectionError(
                f"{v} has no boundary curve in the system (pair {u}, {v})")
        core = v.core
        assert core is not None
        if u.kind == "component":
            return core
        if u.core == core:
            raise MissingProjectionError(f"{v} does not project to itself")
        tw = twist_number(u.core, core)
        if self.surface.flavor == "augmented":
            return AnnularPoint(tw, 1.0 / self.surface.bers)
        return AnnularPoint(tw)

    def project_element(self, u: Subsurface, v: Subsurface, elt):
        if u.kind != "component" or v.kind != "annulus" or not isinstance(elt, Slope):
            raise MissingProjectionError(f"cannot project {elt} from {u} to {v}")
        if elt == v.core:
            raise MissingProjectionError("element equals the annulus core")
        tw = twist_number(v.core, elt)
        if self.surface.flavor == "augmented":
            return AnnularPoint(tw, 1.0 / self.surface.bers)
        return AnnularPoint(tw)

    def complex_distance(self, u: Subsurface, a, b) -> float:
        if u.kind == "component":
            return float(farey_distance(a, b))
        return annular_distance(a, b, self.surface.flavor)


@dataclass
class SyntheticSystem(SubsurfaceSystem):
    """An abstract system given by explicit tables.

    `nested[(v, u)]` records v properly inside u; `overlaps` holds
    unordered crossing pairs; all other pairs are disjoint.  Complexes
    default to the integer line; `boundary[(u, v)]` holds pi_U(bV) and
    `projections[(u, v)]` an element map C(U) -> C(V) where defined.
    """

    ids: tuple[str, ...]
    nested: set[tuple[str, str]] = field(default_factory=set)
    overlaps: set[frozenset] = field(default_factory=set)
    boundary: dict[tuple[str, str], Any] = field(default_factory=dict)
    projections: dict[tuple[str, str], Callable[[Any], Any]] = field(default_factory=dict)
    metrics: dict[str, Callable[[Any, Any], float]] = field(default_factory=dict)

    def members(self):
        return sorted(self.ids)

    def relation(self, u, v) -> str:
        if (v, u) in self.nested or (u, v) in self.nested:
            return NESTED
        if frozenset((u, v)) in self.overlaps:
            return OVERLAP
        return DISJOINT

    def nested_inside(self, v, u) -> bool:
        return (v, u) in self.nested

    def boundary_projection(self, u, v):
        try:
            return self.boundary[(u, v)]
        except KeyError:
            raise MissingProjectionError(
                f"missing boundary projection for pair ({u}, {v})") from None

    def project_element(self, u, v, elt):
        fn = self.projections.get((u, v))
        if fn is None:
            raise MissingProjectionError(f"no element projection ({u}, {v})")
        return fn(elt)

    def complex_distance(self, u, a, b) -> float:
        metric = self.metrics.get(u)
        if metric is not None:
            return metric(a, b)
        return abs(float(a) - float(b))

    def to_json(self) -> dict:
        return {
            "schema_version": 1,
            "ids": list(self.ids),
            "nested": sorted(list(p) for p in self.nested),
            "overlaps": sorted(sorted(p) for p in self.overlaps),
            "boundary": [[list(k), v] for k, v in sorted(self.boundary.items())],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "SyntheticSystem":
        return cls(
            ids=tuple(doc["ids"]),
            nested={tuple(p) for p in doc["nested"]},
            overlaps={frozenset(p) for p in doc["overlaps"]},
            boundary={tuple(k): v for k, v in doc["boundary"]},
        )


def exact_system_for(x: ModelPoint, y: ModelPoint | None = None,
                     extra_cores: Iterable[tuple[int, Slope]] = ()) -> ExactSystem:
    """The working system for one or two points: their candidate
    subsurfaces plus any explicitly requested annuli."""
    subs = set(surfmodel.candidate_subsurfaces(x, y if y is not None else x))
    for comp, core in extra_cores:
        subs.add(Subsurface("annulus", comp, core))
    return ExactSystem(x.surface, subs)


def tuple_of_projections(x: ModelPoint, sys: ExactSystem) -> ProjectionTuple:
    coords = {}
    for w in sys.members():
        try:
            coords[w] = project(x, w)
        except InessentialSubsurfaceError:
            continue
    return ProjectionTuple.of(coords)


# ---------------------------------------------------------------------------
# Consistency
# ---------------------------------------------------------------------------


def _oriented_nested(sys: SubsurfaceSystem, u, v) -> tuple[Any, Any]:
    """Return (inner, outer) for a nested pair."""
    if isinstance(sys, ExactSystem):
        return (u, v) if u.kind == "annulus" else (v, u)
    if isinstance(sys, SyntheticSystem):
        return (u, v) if sys.nested_inside(u, v) else (v, u)
    raise TypeError("unknown system type")


def consistency_check(sys: SubsurfaceSystem, z: ProjectionTuple,
                      m: float) -> ConsistencyReport:
    """Evaluate both consistency conditions on every related pair.

    The realized M is the max over pairs of the tested min-expression;
    the verdict is realized M <= m.  Missing boundary data is an error
    naming the pair, except where the other branch already decides.
    """
    members = [w for w in sys.members() if w in z]
    realized = 0.0
    violations: list[tuple[Hashable, Hashable, float]] = []
    for i, u in enumerate(members):
        for v in members[i + 1:]:
            rel = sys.relation(u, v)
            if rel == DISJOINT:
                continue
            if rel == OVERLAP:
                d_uv = _dist_to_boundary(sys, u, v, z)
                d_vu = _dist_to_boundary(sys, v, u, z)
                if d_uv is math.inf and d_vu is math.inf:
                    raise MissingProjectionError(
                        f"no boundary projection data for overlapping pair ({u}, {v})")
                val = min(d_uv, d_vu)
            else:
                inner, outer = _oriented_nested(sys, u, v)
                d_outer = _dist_to_boundary(sys, outer, inner, z)
                try:
                    proj = sys.project_element(outer, inner, z[outer])
                    d_inner = sys.complex_distance(inner, z[inner], proj)
                except MissingProjectionError:
                    d_inner = math.inf
                if d_outer is math.inf and d_inner is math.inf:
                    raise MissingProjectionError(
                        f"no usable projection data for nested pair ({outer}, {inner})")
                val = min(d_outer, d_inner)
            realized = max(realized, val)
            if val > m:
                violations.append((u, v, val))
    return ConsistencyReport(not violations, realized, violations, m)


def _dist_to_boundary(sys: SubsurfaceSystem, u, v, z: ProjectionTuple) -> float:
    try:
        b = sys.boundary_projection(u, v)
    except MissingProjectionError:
        return math.inf
    return sys.complex_distance(u, z[u], b)


# ---------------------------------------------------------------------------
# Realization
# ---------------------------------------------------------------------------


def _bad_annuli(sys: ExactSystem, z: ProjectionTuple, comp: int,
                pants: Slope, m_bad: float) -> list[tuple[float, Subsurface]]:
    """Annuli whose coordinate demands more twisting about their core
    than the chosen pants slope provides."""
    flavor = sys.surface.flavor
    out = []
    for w in sys.members():
        if w.kind != "annulus" or w.comp != comp or w not in z or w.core == pants:
            continue
        tw = twist_number(w.core, pants)
        ref = AnnularPoint(tw, 1.0 / sys.surface.bers if flavor == "augmented" else None)
        defect = annular_distance(ref, z[w], flavor)
        if defect > m_bad:
            out.append((defect, w))
    out.sort(key=lambda dw: (-dw[0],) + dw[1].key())
    return out


def realize(sys: ExactSystem, z: ProjectionTuple, m: float,
            m_bad: float | None = None) -> ModelPoint:
    """Build a model point whose projections track a consistent tuple.

    The multicurve of twist-demanding annuli replaces pants slopes where
    needed; in this model two such annuli in one component would have to
    cross, which consistency forbids.
    """
    report = consistency_check(sys, z, m)
    if not report.verdict:
        raise InconsistentTupleError(report)
    surface = sys.surface
    if m_bad is None:
        m_bad = 2 * m + 2
    states = []
    for comp in range(surface.n_components):
        w_comp = Subsurface("component", comp)
        if w_comp not in z:
            raise MissingProjectionError(f"tuple lacks the component coordinate {w_comp}")
        pants: Slope = z[w_comp]
        if surface.flavor == "pants":
            states.append(ComponentState(pants))
            continue
        bad = _bad_annuli(sys, z, comp, pants, m_bad)
        if len(bad) >= 2:
            # distinct annuli on one component always cross; a consistent
            # tuple cannot demand large twisting about two crossing cores
            raise InconsistentTupleError(report)
        if bad:
            pants = bad[0][1].core
        a_pants = Subsurface("annulus", comp, pants)
        target = z[a_pants] if a_pants in z else None
        tau0 = canonical_transversal(pants)
        t0 = twist_number(pants, tau0)
        want = target.twist if target is not None else t0
        tau = apply_matrix(twist_matrix(pants, want - t0), tau0)
        if surface.flavor == "marking":
            states.append(ComponentState(pants, tau))
        else:
            height = target.height if target is not None and target.height else None
            length = min(surface.bers, 1.0 / height) if height else surface.bers
            states.append(ComponentState(pants, tau, length))
    return ModelPoint(surface, tuple(states))


def realization_defects(sys: ExactSystem, z: ProjectionTuple,
                        point: ModelPoint) -> dict[Hashable, float]:
    """Per-subsurface distance between the realized point's projections
    and the requested coordinates."""
    out = {}
    for w in sys.members():
        if w not in z:
            continue
        try:
            out[w] = sys.complex_distance(w, project(point, w), z[w])
        except InessentialSubsurfaceError:
            continue
    return out


# ---------------------------------------------------------------------------
# Audits
# ---------------------------------------------------------------------------


@dataclass
class BgitVerdict:
    disjoint_hit: bool
    realized: float | None
    bound: float

    @property
    def ok(self) -> bool:
        return self.disjoint_hit or (self.realized is not None and self.realized <= self.bound)


def bgit_audit(geodesic_vertices: Iterable[Slope], core: Slope, flavor: str,
               bound: float, bers: float = 1.0) -> BgitVerdict:
    """Bounded geodesic image dichotomy for an annulus: either some
    vertex misses the annulus (here: equals the core) or the endpoints'
    twist projections are close."""
    verts = list(geodesic_vertices)
    if len(verts) < 2:
        return BgitVerdict(True, None, bound)
    if any(v == core for v in verts):
        return BgitVerdict(True, None, bound)
    h = 1.0 / bers if flavor == "augmented" else None
    a = AnnularPoint(twist_number(core, verts[0]), h)
    b = AnnularPoint(twist_number(core, verts[-1]), h)
    flv = flavor if flavor != "pants" else "marking"
    return BgitVerdict(False, annular_distance(a, b, flv), bound)


@dataclass
class FarVerdict:
    vacuous: bool
    antecedent: float | None
    consequent: float | None
    ok: bool


def far_projection_check(x: ModelPoint, u: Subsurface, v: Subsurface,
                         m1: float, c_far: float) -> FarVerdict:
    """If the projection to U sits far from the boundary of V, the
    projections to V from both sources must agree up to a constant."""
    if u.kind != "component" or v.kind != "annulus" or u.comp != v.comp:
        raise ValueError("the audit needs an annulus inside a component")
    ante = float(farey_distance(project(x, u), v.core))  # type: ignore[arg-type]
    if ante <= m1:
        return FarVerdict(True, ante, None, True)
    xu = project(x, u)
    if xu == v.core:
        return FarVerdict(True, ante, None, True)
    flavor = x.surface.flavor
    h = 1.0 / x.surface.bers if flavor == "augmented" else None
    via_u = AnnularPoint(twist_number(v.core, xu), h)
    direct = project(x, v)
    cons = annular_distance(direct, via_u, flavor)  # type: ignore[arg-type]
    return FarVerdict(False, ante, cons, cons <= c_far)
