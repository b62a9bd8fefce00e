"""Preferred paths, hulls, centers, backtrack removal, and flats.

A preferred path is a move-by-move quasi-geodesic whose shadow in every
subsurface complex is an unparametrized quasi-geodesic: along each
component it walks the pants-slope geodesic, interpolating twists
monotonically at every vertex (through the horoball interior in the
augmented flavor when the twist demand is large).  Hulls collect the
points whose every projection hugs the corresponding geodesic; centers
are realized from per-complex triangle centers; and the no-backtracking
extraction turns any efficient trace into a nearby preferred path by
taking, in every complex, the farthest center reached so far.  Flats
are L1 products of one factor per component (a path, a twist lattice
about a pinned curve, or a horoball ray) with an evaluator and a
fitting residual used by the box experiments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

from . import bbf, effdiff, surfmodel
from .constants import Constants
from .effdiff import PathTrace
from .hypgraph import MetricHandle, unparam_qgeo_check
from .consreal import (ExactSystem, ProjectionTuple,
                       consistency_check, realize)
from .surfmodel import (AnnularPoint, ComponentState, ModelPoint, ModelSurface,
                        Slope, Subsurface, annular_distance, apply_matrix,
                        canonical_transversal, component_distance,
                        farey_distance, farey_geodesic, horoball_distance,
                        horoball_geodesic_point, horoball_point_to_segment,
                        model_distance, project, subsurface_distance,
                        twist_matrix, twist_number)

Move = tuple  # ("twist", comp, n) | ("flip", comp) | ("length", comp, factor) | ("realized",)

TWIST_DIRECT_CAP = 4  # augmented twists beyond this route through the horoball


class PathVerificationError(RuntimeError):
    """A constructed path failed its own invariants (a construction bug)."""


class NotEfficientInputError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Preferred paths
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PreferredPath:
    points: tuple[ModelPoint, ...]
    moves: tuple[Move, ...]
    excursion: float | None = None  # set by extraction: max distance to the source trace

    def __post_init__(self):
        if len(self.moves) != len(self.points) - 1:
            raise ValueError("need one move per step")

    @property
    def x(self) -> ModelPoint:
        return self.points[0]

    @property
    def y(self) -> ModelPoint:
        return self.points[-1]

    def __len__(self) -> int:
        return len(self.points)

    def to_json(self) -> dict:
        return {
            "schema_version": 1,
            "points": [p.to_json() for p in self.points],
            "moves": [list(m) for m in self.moves],
        }


def certificates(x: ModelPoint, y: ModelPoint) -> list[Subsurface]:
    """The finite subsurface list a hull query must check: components
    plus the annuli of the working window (geodesic vertices, the
    distance-one fan, endpoint curves; wider annuli are capped by the
    bounded geodesic image property)."""
    window = bbf.working_window(x, y)
    out: list[Subsurface] = []
    for comp in range(x.surface.n_components):
        out.append(Subsurface("component", comp))
        if x.surface.flavor != "pants":
            out.extend(Subsurface("annulus", comp, s) for s in window[comp])
    return out


def _twist_steps(points: list[ModelPoint], moves: list[Move], comp: int,
                 n: int, augmented: bool) -> None:
    """Monotone twist interpolation; large augmented demands route
    through the horoball (climb, twist in height-sized chunks, descend)."""
    if n == 0:
        return
    x = points[-1]
    surface = x.surface
    if not augmented or abs(n) <= TWIST_DIRECT_CAP:
        step = 1 if n > 0 else -1
        for _ in range(abs(n)):
            points.append(surfmodel.twist_move(points[-1], comp, step))
            moves.append(("twist", comp, step))
        return
    # climb: halve the length until the height reaches half the demand
    start_len = points[-1].states[comp].length
    while 1.0 / points[-1].states[comp].length < abs(n) / 2:
        points.append(surfmodel.length_move(points[-1], comp, 0.5))
        moves.append(("length", comp, 0.5))
    rest = n
    while rest != 0:
        height = 1.0 / points[-1].states[comp].length
        chunk = max(1, math.floor(height))
        k = min(abs(rest), chunk) * (1 if rest > 0 else -1)
        points.append(surfmodel.twist_move(points[-1], comp, k))
        moves.append(("twist", comp, k))
        rest -= k
    # descend to the starting length
    while points[-1].states[comp].length < start_len - 1e-12:
        points.append(surfmodel.length_move(points[-1], comp, 2.0))
        moves.append(("length", comp, 2.0))


def _length_steps(points: list[ModelPoint], moves: list[Move], comp: int,
                  target: float) -> None:
    while points[-1].states[comp].length > target * math.sqrt(2):
        points.append(surfmodel.length_move(points[-1], comp, 0.5))
        moves.append(("length", comp, 0.5))
    while points[-1].states[comp].length < target / math.sqrt(2):
        points.append(surfmodel.length_move(points[-1], comp, 2.0))
        moves.append(("length", comp, 2.0))
    cur = points[-1].states[comp].length
    if abs(cur - target) > 1e-12:
        points.append(surfmodel.length_move(points[-1], comp, target / cur))
        moves.append(("length", comp, target / cur))


def preferred_path(x: ModelPoint, y: ModelPoint,
                   constants: Constants | None = None,
                   verify: bool = True) -> PreferredPath:
    """Construct a preferred path from x to y, one component at a time.

    Per component: walk the pants-slope geodesic; before each flip,
    twist the transversal onto the next slope (exactly, on these
    components equal twisting numbers mean equal transversals); finish
    by twisting onto the target transversal and matching the length.
    """
    if x.surface != y.surface:
        raise ValueError("endpoints live on different surfaces")
    surface = x.surface
    augmented = surface.flavor == "augmented"
    points: list[ModelPoint] = [x]
    moves: list[Move] = []
    if surface.flavor == "pants":
        # pants points have no transversal data: walk the slope geodesics
        for comp in range(surface.n_components):
            geo = farey_geodesic(x.alpha(comp), y.alpha(comp))
            for s in geo[1:]:
                states = list(points[-1].states)
                states[comp] = ComponentState(s)
                points.append(ModelPoint(surface, tuple(states)))
                moves.append(("flip", comp))
        return PreferredPath(tuple(points), tuple(moves))
    for comp in range(surface.n_components):
        geo = farey_geodesic(x.alpha(comp), y.alpha(comp))
        for nxt in geo[1:]:
            cur = points[-1].states[comp]
            n = twist_number(cur.alpha, nxt) - twist_number(cur.alpha, cur.tau)
            _twist_steps(points, moves, comp, n, augmented)
            if points[-1].states[comp].tau != nxt:
                raise PathVerificationError("twist interpolation missed the next slope")
            if augmented:
                _length_steps(points, moves, comp, surface.bers)
            points.append(surfmodel.flip_move(points[-1], comp))
            moves.append(("flip", comp))
        cur = points[-1].states[comp]
        n = twist_number(cur.alpha, y.states[comp].tau) - twist_number(cur.alpha, cur.tau)
        _twist_steps(points, moves, comp, n, augmented)
        if augmented:
            _length_steps(points, moves, comp, y.states[comp].length)
        if points[-1].states[comp].tau != y.states[comp].tau:
            # same twisting number about the pants curve means the same
            # transversal here; anything else is a construction bug
            raise PathVerificationError("terminal transversal mismatch")
    path = PreferredPath(tuple(points), tuple(moves))
    if verify:
        verify_preferred(path, constants)
    return path


def _complex_tools(surface: ModelSurface, w: Subsurface):
    """(projection, metric) pair for one certificate complex."""
    flavor = surface.flavor

    def proj(p: ModelPoint):
        return project(p, w)

    if w.kind == "component":
        metric = lambda a, b: float(farey_distance(a, b))
    else:
        metric = lambda a, b: annular_distance(a, b, flavor)
    return proj, metric


def _dedupe_stride(seq: list, cap: int = 80) -> list:
    out = [seq[0]]
    for s in seq[1:]:
        if s != out[-1]:
            out.append(s)
    if len(out) > cap:
        stride = math.ceil(len(out) / cap)
        out = out[::stride] + ([out[-1]] if out[-1] != out[::stride][-1] else [])
    return out


def verify_preferred(path: PreferredPath, constants: Constants | None = None) -> None:
    """Check both defining conditions at the frozen constants; raise on
    failure (a bug in the construction, not a property of the input)."""
    if constants is None:
        from .constants import default_constants
        constants = default_constants()
    lam = constants["lambda_path"]
    c = constants["c_path"]
    lam_u = constants["lambda_unparam"]
    c_u = constants["c_unparam"]
    pts = path.points
    n = len(pts)
    stride = max(1, n // 40)
    idx = list(range(0, n, stride)) + [n - 1]
    for a_pos, i in enumerate(idx):
        for j in idx[a_pos + 1:]:
            d = model_distance(pts[i], pts[j])
            gap = j - i
            if d > lam * gap + c or d < gap / lam - c:
                raise PathVerificationError(
                    f"not a ({lam}, {c}) quasi-geodesic between steps {i} and {j}: "
                    f"d={d:.1f} vs gap={gap}")
    surface = pts[0].surface
    for w in certificates(path.x, path.y):
        proj, metric = _complex_tools(surface, w)
        shadow = _dedupe_stride([proj(p) for p in pts])
        handle = MetricHandle(f"shadow[{w}]", metric)
        ok, witness = unparam_qgeo_check(shadow, handle, lam_u, c_u)
        if not ok:
            raise PathVerificationError(
                f"projection to {w} is not an unparametrized quasi-geodesic: {witness}")


# ---------------------------------------------------------------------------
# Hulls
# ---------------------------------------------------------------------------


@dataclass
class HullQuery:
    """Cached geodesics of all certificate complexes for one endpoint pair."""

    x: ModelPoint
    y: ModelPoint
    kappa: float
    certs: list[Subsurface] = field(default_factory=list)

    def __post_init__(self):
        if not self.certs:
            self.certs = certificates(self.x, self.y)
        self._sides: dict[Subsurface, Any] = {}
        for w in self.certs:
            self._sides[w] = (project(self.x, w), project(self.y, w))

    def side_distance(self, w: Subsurface, coord) -> float:
        a, b = self._sides[w]
        if w.kind == "component":
            return min(float(farey_distance(coord, v)) for v in farey_geodesic(a, b))
        if self.x.surface.flavor == "marking":
            lo, hi = sorted((a.twist, b.twist))
            return float(max(0, lo - coord.twist, coord.twist - hi))
        return horoball_point_to_segment(coord.coords(), a.coords(), b.coords())


def hull_membership(q: HullQuery, z: ModelPoint) -> tuple[bool, Subsurface | None]:
    """True when every certificate projection of z lies kappa-close to
    the geodesic between the endpoint projections; the witness is the
    worst offending subsurface otherwise."""
    worst_w, worst_d = None, -1.0
    for w in q.certs:
        d = q.side_distance(w, project(z, w))
        if d > worst_d:
            worst_w, worst_d = w, d
    if worst_d <= q.kappa:
        return True, None
    return False, worst_w


def lemma_g_excess(x: ModelPoint, y: ModelPoint,
                   members: Sequence[ModelPoint]) -> float:
    """max over hull members w, z and certificates U of
    d_U(w, z) - d_U(x, y); bounded for honest hull members."""
    certs = certificates(x, y)
    worst = 0.0
    for i, w in enumerate(members):
        for z in members[i + 1:]:
            for u in certs:
                worst = max(worst, subsurface_distance(w, z, u)
                            - subsurface_distance(x, y, u))
    return worst


def hull_thickness_audit(x: ModelPoint, y: ModelPoint,
                         members: Sequence[ModelPoint],
                         path: PreferredPath) -> float:
    """max over members of the distance to the path (the hull is within
    a multiple of the largest per-component spread of the endpoints)."""
    return max(min(model_distance(z, p) for p in path.points) for z in members)


# ---------------------------------------------------------------------------
# Centers
# ---------------------------------------------------------------------------


def farey_center(a: Slope, b: Slope, c: Slope) -> Slope:
    """The candidate on the three geodesics minimizing the worst
    distance to the sides (ties by canonical key)."""
    sides = [farey_geodesic(a, b), farey_geodesic(b, c), farey_geodesic(a, c)]
    cands = sorted({v for s in sides for v in s}, key=Slope.key)
    best, best_val = None, math.inf
    for v in cands:
        val = max(min(float(farey_distance(v, u)) for u in s) for s in sides)
        if val < best_val:
            best, best_val = v, val
    return best  # type: ignore[return-value]


def annular_center(a: AnnularPoint, b: AnnularPoint, c: AnnularPoint,
                   flavor: str) -> AnnularPoint:
    if flavor == "marking":
        ts = sorted((a.twist, b.twist, c.twist))
        return AnnularPoint(ts[1])
    # augmented: scan the [a, b] arc for the point nearest both other sides
    pa, pb, pc = a.coords(), b.coords(), c.coords()

    def g(s: float) -> float:
        p = horoball_geodesic_point(pa, pb, s)
        return max(horoball_point_to_segment(p, pb, pc),
                   horoball_point_to_segment(p, pa, pc))

    lo, hi = 0.0, 1.0
    for _ in range(40):
        m1, m2 = lo + (hi - lo) / 3, hi - (hi - lo) / 3
        if g(m1) <= g(m2):
            hi = m2
        else:
            lo = m1
    px, py = horoball_geodesic_point(pa, pb, (lo + hi) / 2)
    return AnnularPoint(round(px), py)


def tuple_center(x: ModelPoint, y: ModelPoint, z: ModelPoint,
                 constants: Constants) -> ModelPoint:
    """Realize the tuple of per-complex triangle centers."""
    surface = x.surface
    certs = sorted(set(certificates(x, y)) | set(certificates(y, z))
                   | set(certificates(x, z)), key=lambda w: w.key())
    coords = {}
    for w in certs:
        pa, pb, pc = project(x, w), project(y, w), project(z, w)
        if w.kind == "component":
            coords[w] = farey_center(pa, pb, pc)
        else:
            coords[w] = annular_center(pa, pb, pc, surface.flavor)
    sys = ExactSystem(surface, certs)
    tup = ProjectionTuple.of(coords)
    return realize(sys, tup, m=constants["m_realize"])


# ---------------------------------------------------------------------------
# No-backtracking extraction
# ---------------------------------------------------------------------------


def _side_position(surface: ModelSurface, w: Subsurface, side: tuple,
                   coord) -> float:
    """Progress of a coordinate along the geodesic between the endpoint
    projections, measured from the x end."""
    a, b = side
    if w.kind == "component":
        geo = farey_geodesic(a, b)
        best_i, best_d = 0, math.inf
        for i, v in enumerate(geo):
            d = float(farey_distance(coord, v))
            if d < best_d:
                best_i, best_d = i, d
        return float(best_i)
    if surface.flavor == "marking":
        lo, hi = a.twist, b.twist
        if lo == hi:
            return 0.0
        t = max(min(coord.twist, max(lo, hi)), min(lo, hi))
        return abs(t - lo)
    pa, pb, pc = a.coords(), b.coords(), coord.coords()
    lo, hi = 0.0, 1.0
    for _ in range(40):
        m1, m2 = lo + (hi - lo) / 3, hi - (hi - lo) / 3
        d1 = horoball_distance(pc, horoball_geodesic_point(pa, pb, m1))
        d2 = horoball_distance(pc, horoball_geodesic_point(pa, pb, m2))
        if d1 <= d2:
            hi = m2
        else:
            lo = m1
    s = (lo + hi) / 2
    return horoball_distance(pa, horoball_geodesic_point(pa, pb, s))


def extract_no_backtrack(trace: PathTrace, x: ModelPoint, y: ModelPoint,
                         eps: float, constants: Constants) -> PreferredPath:
    """Turn an efficient trace into a preferred path it fellow-travels.

    Per sample time and per certificate complex, take the triangle
    center of (x, y, sample) and keep the one farthest along the
    geodesic seen so far; the resulting coordinate tuples never move
    backwards, stay consistent, and realize to the output path.
    """
    R = trace.span
    if not effdiff.efficiency_test(trace, R, eps, constants["theta_eff"]):
        raise NotEfficientInputError("input not efficient")
    surface = x.surface
    certs = certificates(x, y)
    sides = {w: (project(x, w), project(y, w)) for w in certs}
    sys = ExactSystem(surface, certs)
    best_pos: dict[Subsurface, float] = {w: -math.inf for w in certs}
    best_coord: dict[Subsurface, Any] = {}
    realized: list[ModelPoint] = []
    positions_log: dict[Subsurface, list[float]] = {w: [] for w in certs}
    for p in trace.points:
        coords = {}
        for w in certs:
            pa, pb = sides[w]
            pc = project(p, w)
            if w.kind == "component":
                eta = farey_center(pa, pb, pc)
            else:
                eta = annular_center(pa, pb, pc, surface.flavor)
            pos = _side_position(surface, w, sides[w], eta)
            if pos > best_pos[w]:
                best_pos[w] = pos
                best_coord[w] = eta
            positions_log[w].append(best_pos[w])
            coords[w] = best_coord[w]
        tup = ProjectionTuple.of(coords)
        realized.append(realize(sys, tup, m=constants["m_realize"]))
    for w, log in positions_log.items():
        if any(b < a - 1e-9 for a, b in zip(log, log[1:])):
            raise PathVerificationError(f"extracted shadow backtracked in {w}")
    excursion = max(trace.handle.distance(p, q)
                    for p, q in zip(trace.points, realized))
    pts = [realized[0]]
    for p in realized[1:]:
        if p != pts[-1]:
            pts.append(p)
    return PreferredPath(tuple(pts), (("realized",),) * (len(pts) - 1),
                         excursion=excursion)


# ---------------------------------------------------------------------------
# Standard flats
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FlatFactor:
    """One component's contribution to a flat: a preferred path, a twist
    lattice about a pinned curve, or a horoball ray (augmented)."""

    comp: int
    kind: str  # "path" | "twist" | "ray"
    interval: tuple[int, int]
    path: PreferredPath | None = None
    core: Slope | None = None
    tau0: Slope | None = None

    def __post_init__(self):
        if self.kind not in ("path", "twist", "ray"):
            raise ValueError(f"unknown factor kind {self.kind!r}")
        if self.kind == "path" and self.path is None:
            raise ValueError("path factors need a path")
        if self.kind in ("twist", "ray") and (self.core is None or self.tau0 is None):
            raise ValueError("pinned factors need a core and a base transversal")


@dataclass(frozen=True)
class StandardFlat:
    """An L1 product of factors over the components, evaluated on the
    lattice box given by the factor intervals."""

    base: ModelPoint
    factors: tuple[FlatFactor, ...]

    def __post_init__(self):
        comps = [f.comp for f in self.factors]
        if len(set(comps)) != len(comps):
            raise ValueError("one factor per component")

    @property
    def surface(self) -> ModelSurface:
        return self.base.surface

    @property
    def dim(self) -> int:
        return len(self.factors)

    @property
    def curve_system(self) -> dict[int, Slope]:
        return {f.comp: f.core for f in self.factors if f.kind in ("twist", "ray")}

    def box(self) -> effdiff.Box:
        return effdiff.Box(tuple(f.interval for f in self.factors))

    def factor_state(self, f: FlatFactor, t: float) -> ComponentState:
        surface = self.surface
        if f.kind == "path":
            i = int(round(t)) - f.interval[0]
            i = max(0, min(len(f.path.points) - 1, i))
            return f.path.points[i].states[f.comp]
        if f.kind == "twist":
            # absolute parametrization: the twist coordinate equals t
            k = int(round(t)) - twist_number(f.core, f.tau0)
            tau = apply_matrix(twist_matrix(f.core, k), f.tau0)
            length = surface.bers if surface.flavor == "augmented" else None
            return ComponentState(f.core, tau, length)
        # ray: climb the horoball at unit speed from the Bers height
        t = max(0.0, float(t))
        length = surface.bers * math.exp(-t)
        return ComponentState(f.core, f.tau0, length)

    def eval(self, t_vec: Sequence[float]) -> ModelPoint:
        if len(t_vec) != len(self.factors):
            raise ValueError("one coordinate per factor")
        states = list(self.base.states)
        for f, t in zip(self.factors, t_vec):
            states[f.comp] = self.factor_state(f, t)
        return ModelPoint(self.surface, tuple(states))

    def to_json(self) -> dict:
        return {
            "schema_version": 1,
            "base": self.base.to_json(),
            "factors": [
                {"comp": f.comp, "kind": f.kind, "interval": list(f.interval),
                 "core": f.core.to_json() if f.core else None,
                 "tau0": f.tau0.to_json() if f.tau0 else None,
                 "path_len": len(f.path.points) if f.path else None}
                for f in self.factors
            ],
        }


def standard_flat_eval(flat: StandardFlat, t_vec: Sequence[float]) -> ModelPoint:
    if not flat.box().contains(t_vec):
        raise ValueError("lattice point outside the flat's box")
    return flat.eval(t_vec)


def _factor_min_distance(flat: StandardFlat, f: FlatFactor, p: ModelPoint) -> float:
    """min over the factor coordinate of the single-component distance
    between p and the factor state (the L1 metric separates factors)."""
    lo, hi = f.interval
    surface = flat.surface

    def at(t: float) -> float:
        states = list(flat.base.states)
        states[f.comp] = flat.factor_state(f, t)
        return component_distance(p, ModelPoint(surface, tuple(states)), f.comp)

    if f.kind in ("twist", "ray"):
        w = Subsurface("annulus", f.comp, f.core)
        coord = project(p, w)
        if f.kind == "twist":
            guess = float(coord.twist)
        elif isinstance(coord, AnnularPoint) and coord.height:
            guess = math.log(max(1.0, coord.height * surface.bers))
        else:
            guess = lo
        cands = sorted({lo, hi, int(max(lo, min(hi, round(guess))))})
        base = min(cands, key=at)
        best = at(base)
        for t in range(base - 3, base + 4):
            if lo <= t <= hi:
                best = min(best, at(t))
        return best
    # path factor: strided scan plus local refinement
    n = hi - lo
    stride = max(1, n // 24)
    vals = {t: at(t) for t in list(range(lo, hi + 1, stride)) + [hi]}
    t0 = min(vals, key=vals.get)
    best = vals[t0]
    for t in range(max(lo, t0 - stride), min(hi, t0 + stride) + 1):
        best = min(best, at(t))
    return best


def point_to_flat(flat: StandardFlat, p: ModelPoint) -> float:
    """d_X(p, image of the flat), decomposed per factor plus the
    contribution of components the flat leaves at its base point."""
    total = 0.0
    covered = set()
    for f in flat.factors:
        covered.add(f.comp)
        total += _factor_min_distance(flat, f, p)
    for comp in range(flat.surface.n_components):
        if comp not in covered:
            total += component_distance(p, flat.base, comp)
    return total


def flat_fit(points: Sequence[ModelPoint],
             flats: Sequence[StandardFlat]) -> tuple[float, StandardFlat]:
    """min over candidate flats of the worst sample distance."""
    if not flats:
        raise ValueError("empty candidate set")
    best_val, best_flat = math.inf, None
    for fl in flats:
        val = max(point_to_flat(fl, p) for p in points)
        if val < best_val:
            best_val, best_flat = val, fl
    return best_val, best_flat


def candidate_flats(samples: Sequence[ModelPoint],
                    constants: Constants | None = None,
                    anchor_cap: int = 10) -> list[StandardFlat]:
    """Flats reconstructed from the samples' endpoint data: components
    with a fixed pants slope become twist factors over the observed
    range; the rest get preferred paths between the extremal states."""
    if not samples:
        raise ValueError("no samples")
    surface = samples[0].surface
    sub = list(samples[:: max(1, len(samples) // anchor_cap)])
    p_star, q_star, best = sub[0], sub[-1], -1.0
    for i, a in enumerate(sub):
        for b in sub[i + 1:]:
            d = model_distance(a, b)
            if d > best:
                p_star, q_star, best = a, b, d
    factors = []
    for comp in range(surface.n_components):
        counts: dict[Slope, int] = {}
        for p in samples:
            counts[p.alpha(comp)] = counts.get(p.alpha(comp), 0) + 1
        core, hits = max(counts.items(), key=lambda kv: (kv[1],) + tuple(-k for k in kv[0].key()))
        if hits >= 0.8 * len(samples) and surface.flavor != "pants":
            w = Subsurface("annulus", comp, core)
            tw = [project(p, w).twist for p in samples if p.alpha(comp) == core]
            pad = 2
            tau0 = next(p.states[comp].tau for p in samples if p.alpha(comp) == core)
            factors.append(FlatFactor(comp, "twist",
                                      (min(tw) - pad, max(tw) + pad),
                                      core=core, tau0=tau0))
        else:
            b = ModelPoint(surface, tuple(
                p_star.states[c] if c != comp else q_star.states[comp]
                for c in range(surface.n_components)))
            path = preferred_path(p_star, b, constants, verify=False)
            factors.append(FlatFactor(comp, "path", (0, len(path.points) - 1),
                                      path=path))
    return [StandardFlat(p_star, tuple(factors))]


# ---------------------------------------------------------------------------
# Steady progress, antichains, fellow traveling
# ---------------------------------------------------------------------------


def _xw_metric(surface: ModelSurface, w: Subsurface) -> Callable[[ModelPoint, ModelPoint], float]:
    if w.kind == "component":
        return lambda a, b: component_distance(a, b, w.comp)
    return lambda a, b: subsurface_distance(a, b, w)


def steady_progress(path: PreferredPath, w: Subsurface, c0: float) -> bool:
    """Split the path at the five points where the submodel distance
    from the start crosses the quintiles of L = d_{X(W)}(x, y); progress
    counts only if every consecutive pair is at least c0 apart in the
    curve complex of W."""
    pts = path.points
    dxw = _xw_metric(pts[0].surface, w)
    total = dxw(pts[0], pts[-1])
    if len(pts) < 6 or total < 5:
        raise ValueError("path below resolution for quintiles")
    quintiles = [pts[0]]
    t = 0
    for i in range(1, 5):
        target = i * total / 5
        while t < len(pts) - 1 and dxw(pts[0], pts[t]) < target - 1e-9:
            t += 1
        quintiles.append(pts[t])
    quintiles.append(pts[-1])
    gap = lambda a, b: subsurface_distance(a, b, w)
    return all(gap(a, b) >= c0 for a, b in zip(quintiles, quintiles[1:]))


@dataclass
class Antichain:
    members: list[Subsurface]
    t0: float
    t1: float
    d_w: float
    bound: float

    @property
    def ok(self) -> bool:
        return len(self.members) <= self.bound * max(1.0, self.d_w)


def antichain_build(x: ModelPoint, y: ModelPoint, comp: int,
                    t0: float, t1: float, a_bound: float) -> Antichain:
    """In this model the proper subsurfaces of a component are annuli,
    which never nest, so the antichain is the threshold set itself; the
    cardinality bound uses the projection-set convention that distinct
    projections are at least one apart."""
    if not (0 < t0 <= t1):
        raise ValueError("need T1 >= T0 > 0")
    members = []
    for w in surfmodel.candidate_subsurfaces(x, y, comps=(comp,)):
        if w.kind != "annulus":
            continue
        if subsurface_distance(x, y, w) >= t0:
            members.append(w)
    d_w = float(farey_distance(x.alpha(comp), y.alpha(comp)))
    if d_w == 0 and x != y:
        d_w = 1.0
    return Antichain(members, t0, t1, d_w, a_bound)


@dataclass
class FellowVerdict:
    applicable: bool
    passed: bool
    detail: dict


def near_region_check(gamma: PreferredPath, gamma_prime: PreferredPath,
                      comp: int, core: Slope, constants: Constants) -> FellowVerdict:
    """Steady progress in an annulus forces nearby paths to spend a
    definite stretch near the region pinned on its core."""
    c0 = constants["c0_steady"]
    d0 = constants["d0_progress"]
    c_end = constants["c0_endpoints"]
    prox = constants["c_region_proximity"]
    w = Subsurface("annulus", comp, core)
    x, y = gamma.x, gamma.y
    dxw = _xw_metric(x.surface, w)
    d_big = dxw(x, y)
    hyp = (
        x.alpha(comp) == core and y.alpha(comp) == core
        and d_big >= d0
        and model_distance(x, gamma_prime.x) <= c_end * d_big
        and model_distance(y, gamma_prime.y) <= c_end * d_big
        and steady_progress(gamma, w, c0)
    )
    if not hyp:
        return FellowVerdict(False, True, {"reason": "hypotheses unmet"})
    pins = {comp: core}
    best_run = 0.0
    start = None
    for p in gamma_prime.points:
        near = model_distance(p, surfmodel.product_project(p, pins)) <= prox
        if near:
            if start is None:
                start = p
            # run length from the first point of this stretch; step sums
            # would vanish below the distance-formula threshold
            best_run = max(best_run, dxw(start, p))
        else:
            start = None
    needed = d_big / constants["kappa_fellow"]
    return FellowVerdict(True, best_run >= needed,
                         {"best_run": best_run, "needed": needed, "d": d_big})


def fellow_traveling_check(gamma: PreferredPath, gamma_prime: PreferredPath,
                           w: Subsurface, constants: Constants) -> FellowVerdict:
    """Umbrella for the fellow-traveling conclusions.

    For an annulus, steady progress of the first path pins a stretch of
    the second near the product region over the core; for a component,
    hull membership transfers through the midpoint of the second path.
    Unmet hypotheses yield a vacuous verdict, never a failure.
    """
    if w.kind == "annulus":
        return near_region_check(gamma, gamma_prime, w.comp, w.core, constants)
    mid = gamma_prime.points[len(gamma_prime.points) // 2]
    return hull_transfer_check(gamma.x, gamma.y, gamma_prime.x, gamma_prime.y,
                               mid, w.comp, constants)


def hull_transfer_check(x: ModelPoint, y: ModelPoint,
                        xp: ModelPoint, yp: ModelPoint, z_prime: ModelPoint,
                        comp: int, constants: Constants) -> FellowVerdict:
    """Hull members of a perturbed pair that sit deep in the middle (far
    from both endpoints in the component's curve graph) belong to the
    original hull."""
    c1 = constants["c1_separation"]
    delta_far = constants["delta_farey"]
    kappa = constants["kappa_hull"]
    ds = lambda a, b: float(farey_distance(a.alpha(comp), b.alpha(comp)))
    hyp = (
        ds(x, xp) <= 2 * delta_far + 2 and ds(y, yp) <= 2 * delta_far + 2
        and ds(z_prime, x) >= c1 and ds(z_prime, y) >= c1
        and hull_membership(HullQuery(xp, yp, kappa), z_prime)[0]
    )
    if not hyp:
        return FellowVerdict(False, True, {"reason": "hypotheses unmet"})
    ok, worst = hull_membership(HullQuery(x, y, constants["kappa_hull_transfer"]), z_prime)
    return FellowVerdict(True, ok, {"worst": repr(worst) if worst else None})
