"""Combinatorial model spaces on zero-complexity surfaces.

Supported surfaces are disjoint unions of once-punctured tori and
four-punctured spheres.  On each component the curve graph is the Farey
graph (slopes p/q, edges where |ps - qr| = 1), which makes every
subsurface projection exactly computable:

* component projections are pants slopes,
* annular projections are twisting numbers (plus an inverse-length
  height in the augmented flavor, where the annular complex is a
  horoball in the upper half-plane),
* the global metric is the thresholded sum of projection distances.

Three flavors are exposed: ``pants`` (annuli inessential), ``marking``
(annular complex is Z) and ``augmented`` (annular complex is the region
y >= 1/B of H^2).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

Matrix = tuple[int, int, int, int]  # row-major 2x2 integer matrix

IDENTITY: Matrix = (1, 0, 0, 1)

FLAVORS = ("pants", "marking", "augmented")


class InessentialSubsurfaceError(ValueError):
    """Raised when an annular projection is requested in the pants flavor."""


# ---------------------------------------------------------------------------
# Slopes and the Farey graph
# ---------------------------------------------------------------------------


@dataclass(frozen=True, order=False)
class Slope:
    """A slope p/q in lowest terms; (1, 0) encodes infinity.

    Canonical form has q > 0, or (p, q) = (1, 0).  The sort key used for
    deterministic tie-breaking everywhere is (q, p).
    """

    p: int
    q: int

    def __post_init__(self):
        p, q = self.p, self.q
        if q == 0 and p == 0:
            raise ValueError("0/0 is not a slope")
        g = math.gcd(abs(p), abs(q))
        p, q = p // g, q // g
        if q < 0 or (q == 0 and p < 0):
            p, q = -p, -q
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    def key(self) -> tuple[int, int]:
        return (self.q, self.p)

    def __lt__(self, other: "Slope") -> bool:
        return self.key() < other.key()

    def __repr__(self) -> str:
        return "oo" if self.q == 0 else f"{self.p}/{self.q}"

    @property
    def is_infinity(self) -> bool:
        return self.q == 0

    def value(self) -> float:
        return math.inf if self.q == 0 else self.p / self.q

    def to_json(self) -> list[int]:
        return [self.p, self.q]

    @classmethod
    def from_json(cls, doc: Sequence[int]) -> "Slope":
        return cls(int(doc[0]), int(doc[1]))


INFINITY = Slope(1, 0)
ZERO = Slope(0, 1)


def det(a: Slope, b: Slope) -> int:
    return a.p * b.q - a.q * b.p


def intersection_number(a: Slope, b: Slope, kind: tuple[int, int] = (1, 1)) -> int:
    """Geometric intersection number of two slopes on the component.

    On the once-punctured torus this is |det|; on the four-punctured
    sphere the same slope combinatorics carries doubled intersections.
    """
    base = abs(det(a, b))
    return base if kind == (1, 1) else 2 * base


def farey_adjacent(a: Slope, b: Slope) -> bool:
    return abs(det(a, b)) == 1


def apply_matrix(m: Matrix, s: Slope) -> Slope:
    a, b, c, d = m
    return Slope(a * s.p + b * s.q, c * s.p + d * s.q)


def mat_mul(m: Matrix, n: Matrix) -> Matrix:
    a, b, c, d = m
    e, f, g, h = n
    return (a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)


def mat_inv(m: Matrix) -> Matrix:
    a, b, c, d = m
    dm = a * d - b * c
    if dm not in (1, -1):
        raise ValueError("matrix is not unimodular")
    return (d // dm, -b // dm, -c // dm, a // dm)


def transport_matrix(core: Slope) -> Matrix:
    """The canonical unimodular matrix taking `core` to infinity.

    For core p/q (q >= 1) the matrix is [[s, -r], [-q, p]] where (r, s)
    is the extended-Euclid solution of ps - qr = 1 with 0 <= s < q
    (s = 0 when q = 1).  For the core at infinity it is the identity.
    This fixed choice makes twisting numbers deterministic.
    """
    p, q = core.p, core.q
    if q == 0:
        return IDENTITY
    s = pow(p, -1, q) if q > 1 else 0
    r = (p * s - 1) // q
    return (s, -r, -q, p)


def twist_matrix(core: Slope, n: int = 1) -> Matrix:
    """The n-th power of the Dehn twist about `core` as a slope action."""
    m = transport_matrix(core)
    shear: Matrix = (1, n, 0, 1)
    return mat_mul(mat_inv(m), mat_mul(shear, m))


def twist_number(core: Slope, curve: Slope) -> int:
    """Twisting of `curve` around `core`: transport core to infinity and
    take the floor of the image slope.

    Coarsely well defined (alternate admissible transports shift the
    answer by a bounded amount); exactly equivariant under powers of the
    Dehn twist about the core.
    """
    if curve == core:
        raise ValueError("no projection from core to its own annulus via slopes")
    img = apply_matrix(transport_matrix(core), curve)
    if img.q == 0:
        raise ValueError("only the core transports to infinity")
    return img.p // img.q


# -- exact Farey distance ---------------------------------------------------
#
# d(oo, p/q) for q >= 2 satisfies d = 1 + min(d(k, p/q), d(k+1, p/q)) with
# k = floor(p/q): every vertex strictly between k and k+1 has all of its
# neighbors inside [k, k+1], so any path from infinity enters through k or
# k+1.  Moving the chosen integer to infinity reduces the denominator, so
# the two-branch recursion terminates and computes the graph metric.

_dist_memo: dict[tuple[int, int], int] = {}


def _dist_base(p: int, q: int) -> int | None:
    """Distances 0, 1, 2 in closed form: q = 0 is infinity itself, q = 1
    an integer, and p = +-1 mod q exactly the neighbors of integers."""
    if q == 0:
        return 0
    if q == 1:
        return 1
    r = p % q
    if r == 1 or r == q - 1:
        return 2
    return None


def _dist_to_inf(p: int, q: int) -> int:
    """Iterative two-branch evaluation with exact pruning: a child that
    fails the closed-form base cases has distance at least 3, so a
    sibling at distance <= 2 settles the minimum without exploring it."""
    base = _dist_base(p, q)
    if base is not None:
        return base
    got = _dist_memo.get((p, q))
    if got is not None:
        return got
    stack = [(p, q)]
    while stack:
        p0, q0 = stack[-1]
        if (p0, q0) in _dist_memo:
            stack.pop()
            continue
        k = p0 // q0
        r = p0 - k * q0  # 0 < r < q0
        vals: list[int] = []
        todo: list[tuple[int, int]] = []
        for pc, qc in ((q0, r), (-q0, q0 - r)):
            b = _dist_base(pc, qc)
            if b is not None:
                vals.append(b)
                continue
            v = _dist_memo.get((pc, qc))
            if v is None:
                todo.append((pc, qc))
            else:
                vals.append(v)
        if todo and (not vals or min(vals) >= 3):
            stack.extend(todo)
            continue
        _dist_memo[(p0, q0)] = 1 + min(vals)
        stack.pop()
    return _dist_memo[(p, q)]


def _geo_from_inf(p: int, q: int) -> list[Slope]:
    """A geodesic from infinity to p/q; ties prefer the floor branch
    (lexicographically least integer vertex under the (q, p) key)."""
    if q == 0:
        return [INFINITY]
    if q == 1:
        return [INFINITY, Slope(p, 1)]
    k = p // q
    r = p - k * q
    if r == 1:  # the floor integer is already adjacent to p/q
        return [INFINITY, Slope(k, 1), Slope(p, q)]
    if r == q - 1:
        return [INFINITY, Slope(k + 1, 1), Slope(p, q)]
    if _dist_to_inf(q, r) <= _dist_to_inf(-q, q - r):
        n = k
    else:
        n = k + 1
    # M_n = [[0, 1], [1, -n]] sends n -> oo; its inverse is [[n, 1], [1, 0]].
    # The mapped-back recursive path starts at the integer vertex n.
    nxt = apply_matrix((0, 1, 1, -n), Slope(p, q))
    inv: Matrix = (n, 1, 1, 0)
    tail = [apply_matrix(inv, s) for s in _geo_from_inf(nxt.p, nxt.q)]
    return [INFINITY] + tail


@lru_cache(maxsize=200_000)
def farey_distance(a: Slope, b: Slope) -> int:
    """Graph distance in the Farey graph (edges where |ps - qr| = 1)."""
    if a == b:
        return 0
    img = apply_matrix(transport_matrix(a), b)
    return _dist_to_inf(img.p, img.q)


@lru_cache(maxsize=50_000)
def farey_geodesic(a: Slope, b: Slope) -> tuple[Slope, ...]:
    """A geodesic vertex path from a to b, symmetric under endpoint swap
    (the path is computed from the endpoint with smaller key)."""
    if a == b:
        return (a,)
    if b < a:
        return tuple(reversed(farey_geodesic(b, a)))
    m = transport_matrix(a)
    inv = mat_inv(m)
    img = apply_matrix(m, b)
    path = tuple(apply_matrix(inv, s) for s in _geo_from_inf(img.p, img.q))
    assert path[0] == a and path[-1] == b
    assert all(farey_adjacent(u, v) for u, v in zip(path, path[1:]))
    return path


def farey_ball(lo: int, hi: int, depth: int) -> list[Slope]:
    """Vertices of the mediant fan over the intervals [lo, hi]: infinity,
    the integers lo..hi, and mediants to the given subdivision depth.

    This is the explicit finite chunk of the Farey graph used by ball
    oracles and calibration scans; adjacency is recovered from the
    determinant condition.
    """
    verts: set[Slope] = {INFINITY}
    verts.update(Slope(n, 1) for n in range(lo, hi + 1))

    def gen(u: Slope, v: Slope, d: int) -> None:
        if d <= 0:
            return
        m = Slope(u.p + v.p, u.q + v.q)
        verts.add(m)
        gen(u, m, d - 1)
        gen(m, v, d - 1)

    for n in range(lo, hi):
        gen(Slope(n, 1), Slope(n + 1, 1), depth)
    return sorted(verts, key=Slope.key)


def common_neighbors(a: Slope, b: Slope) -> list[Slope]:
    """Farey vertices adjacent to both a and b (finite for a != b)."""
    d = det(a, b)
    if d == 0:
        raise ValueError("equal slopes have infinitely many common neighbors")
    out = []
    for ea in (1, -1):
        for eb in (1, -1):
            # solve det(a, w) = ea, det(b, w) = eb
            num_p = -(ea * b.p - eb * a.p)
            num_q = -(ea * b.q - eb * a.q)
            if num_p % d == 0 and num_q % d == 0:
                w = (num_p // d, num_q // d)
                if w != (0, 0):
                    out.append(Slope(*w))
    return sorted(set(out), key=Slope.key)


# ---------------------------------------------------------------------------
# Surfaces, points, subsurfaces
# ---------------------------------------------------------------------------

ALLOWED_COMPONENTS = {(1, 1), (0, 4)}


@dataclass(frozen=True)
class ModelSurface:
    """A disjoint union of (1,1) and (0,4) components with a flavor.

    `bers` is the Bers length bound B of the augmented flavor; `threshold`
    is the cutoff T of the distance formula.
    """

    components: tuple[tuple[int, int], ...]
    flavor: str = "marking"
    bers: float = 1.0
    threshold: float = 10.0

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(tuple(c) for c in self.components))
        if not self.components:
            raise ValueError("surface needs at least one component")
        for c in self.components:
            if c not in ALLOWED_COMPONENTS:
                raise ValueError(f"component {c} is not an exactly computable piece")
        if self.flavor not in FLAVORS:
            raise ValueError(f"unknown flavor {self.flavor!r}")
        if self.bers <= 0 or self.threshold <= 0:
            raise ValueError("bers bound and threshold must be positive")

    @property
    def n_components(self) -> int:
        return len(self.components)

    def subsurface(self, comp: int, core: Slope | None = None) -> "Subsurface":
        return Subsurface("component" if core is None else "annulus", comp, core)

    def validate_threshold(self, constants) -> None:
        """The distance-formula threshold must dominate the frozen bounded
        geodesic image constant, otherwise candidate enumeration leaks."""
        m0 = constants["m0_bgit"]
        if self.threshold <= m0:
            raise ValueError(
                f"threshold T={self.threshold} must exceed the frozen image bound {m0}"
            )

    def to_json(self) -> dict:
        return {
            "schema_version": 1,
            "components": [list(c) for c in self.components],
            "flavor": self.flavor,
            "bers": self.bers,
            "threshold": self.threshold,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "ModelSurface":
        return cls(
            components=tuple(tuple(c) for c in doc["components"]),
            flavor=doc["flavor"],
            bers=float(doc["bers"]),
            threshold=float(doc["threshold"]),
        )


@dataclass(frozen=True)
class Subsurface:
    """Either a whole component or an annulus about a core slope."""

    kind: str  # "component" | "annulus"
    comp: int
    core: Slope | None = None

    def __post_init__(self):
        if self.kind not in ("component", "annulus"):
            raise ValueError(f"bad subsurface kind {self.kind!r}")
        if (self.kind == "annulus") != (self.core is not None):
            raise ValueError("annuli need a core slope, components must not have one")

    def key(self):
        return (self.comp, 0 if self.kind == "component" else 1,
                self.core.key() if self.core else (0, 0))

    def __repr__(self) -> str:
        return f"W{self.comp}" if self.kind == "component" else f"A{self.comp}({self.core})"


@dataclass(frozen=True)
class AnnularPoint:
    """A point of an annular complex: a twist, plus a height >= 1/B in the
    augmented flavor (the horoball model of C(A)); height None otherwise."""

    twist: int
    height: float | None = None

    def coords(self) -> tuple[float, float]:
        return (float(self.twist), float(self.height if self.height is not None else 0.0))


@dataclass(frozen=True)
class ComponentState:
    alpha: Slope
    tau: Slope | None = None
    length: float | None = None


@dataclass(frozen=True)
class ModelPoint:
    """A pants / marking / augmented-marking point on a model surface."""

    surface: ModelSurface
    states: tuple[ComponentState, ...]

    def __post_init__(self):
        if len(self.states) != self.surface.n_components:
            raise ValueError("one state per component required")
        fl = self.surface.flavor
        for st in self.states:
            if fl == "pants":
                if st.tau is not None or st.length is not None:
                    raise ValueError("pants points carry no transversal or length")
                continue
            if st.tau is None:
                raise ValueError(f"{fl} points need transversals")
            if not farey_adjacent(st.alpha, st.tau):
                raise ValueError("transversal must intersect the pants slope minimally")
            if fl == "augmented":
                if st.length is None or not (0 < st.length <= self.surface.bers):
                    raise ValueError("augmented length must lie in (0, B]")
            elif st.length is not None:
                raise ValueError("marking points carry no length")

    def alpha(self, comp: int) -> Slope:
        return self.states[comp].alpha

    def to_json(self) -> dict:
        return {
            "schema_version": 1,
            "components": [
                {
                    "alpha": st.alpha.to_json(),
                    "tau": st.tau.to_json() if st.tau else None,
                    "length": st.length,
                }
                for st in self.states
            ],
        }

    @classmethod
    def from_json(cls, surface: ModelSurface, doc: dict) -> "ModelPoint":
        states = tuple(
            ComponentState(
                alpha=Slope.from_json(c["alpha"]),
                tau=Slope.from_json(c["tau"]) if c.get("tau") else None,
                length=c.get("length"),
            )
            for c in doc["components"]
        )
        return cls(surface, states)


def base_point(surface: ModelSurface) -> ModelPoint:
    """The canonical origin: alpha = 0/1, tau = infinity, length = B."""
    sts = []
    for _ in surface.components:
        if surface.flavor == "pants":
            sts.append(ComponentState(ZERO))
        elif surface.flavor == "marking":
            sts.append(ComponentState(ZERO, INFINITY))
        else:
            sts.append(ComponentState(ZERO, INFINITY, surface.bers))
    return ModelPoint(surface, tuple(sts))


# ---------------------------------------------------------------------------
# Topology statistics
# ---------------------------------------------------------------------------


def topology_stats(g: int, p: int, c: int, flavor: str) -> tuple[int, int]:
    """Complexity and top rank of a surface given total genus, punctures
    and component count.

    Complexity is 3g + p - 4c.  The rank is 3g + p - 3c for the marking
    and augmented flavors and floor((3g + p - 2c) / 2) for pants.
    """
    if flavor not in FLAVORS:
        raise ValueError(f"unknown flavor {flavor!r}")
    if c < 1 or 3 * g + p - 4 * c < 0:
        raise ValueError("inessential surface")
    xi = 3 * g + p - 4 * c
    if flavor == "pants":
        rank = (3 * g + p - 2 * c) // 2
    else:
        rank = 3 * g + p - 3 * c
    return xi, rank


def surface_stats(surface: ModelSurface) -> tuple[int, int]:
    g = sum(c[0] for c in surface.components)
    p = sum(c[1] for c in surface.components)
    return topology_stats(g, p, surface.n_components, surface.flavor)


# ---------------------------------------------------------------------------
# Projections and distances
# ---------------------------------------------------------------------------


def project(x: ModelPoint, w: Subsurface) -> Slope | AnnularPoint:
    """Subsurface projection of a model point.

    Components project to the pants slope.  An annulus about the pants
    curve sees the transversal's twisting (and the inverse length in the
    augmented flavor); any other annulus sees the pants slope's twisting
    at boundary height 1/B.
    """
    surf = x.surface
    st = x.states[w.comp]
    if w.kind == "component":
        return st.alpha
    if surf.flavor == "pants":
        raise InessentialSubsurfaceError("inessential subsurface")
    core = w.core
    assert core is not None
    if core == st.alpha:
        tw = twist_number(core, st.tau)
        if surf.flavor == "augmented":
            return AnnularPoint(tw, 1.0 / st.length)
        return AnnularPoint(tw)
    tw = twist_number(core, st.alpha)
    if surf.flavor == "augmented":
        return AnnularPoint(tw, 1.0 / surf.bers)
    return AnnularPoint(tw)


def horoball_distance(u: tuple[float, float], v: tuple[float, float]) -> float:
    """Hyperbolic distance in the upper half-plane, which is the induced
    metric on a horoball (geodesics between horoball points stay in it):
    cosh d = 1 + (dx^2 + dy^2) / (2 y1 y2)."""
    (x1, y1), (x2, y2) = u, v
    if y1 <= 0 or y2 <= 0:
        raise ValueError("horoball points need positive height")
    arg = 1.0 + ((x1 - x2) ** 2 + (y1 - y2) ** 2) / (2.0 * y1 * y2)
    return math.acosh(arg)


def horoball_geodesic_point(a: tuple[float, float], b: tuple[float, float],
                            s: float) -> tuple[float, float]:
    """A point on the hyperbolic geodesic from a to b at parameter
    s in [0, 1] (angle- or log-linear, not arclength)."""
    (x1, y1), (x2, y2) = a, b
    if abs(x1 - x2) < 1e-12:
        return (x1, y1 ** (1 - s) * y2 ** s)
    c = (x1 * x1 + y1 * y1 - x2 * x2 - y2 * y2) / (2.0 * (x1 - x2))
    rho = math.hypot(x1 - c, y1)
    th1 = math.atan2(y1, x1 - c)
    th2 = math.atan2(y2, x2 - c)
    th = th1 + s * (th2 - th1)
    return (c + rho * math.cos(th), rho * math.sin(th))


def horoball_point_to_segment(p: tuple[float, float], a: tuple[float, float],
                              b: tuple[float, float], iters: int = 60) -> float:
    """Distance from p to the geodesic arc [a, b]; the distance along a
    geodesic is convex, so ternary search is exact in the limit."""
    lo, hi = 0.0, 1.0
    for _ in range(iters):
        m1 = lo + (hi - lo) / 3
        m2 = hi - (hi - lo) / 3
        d1 = horoball_distance(p, horoball_geodesic_point(a, b, m1))
        d2 = horoball_distance(p, horoball_geodesic_point(a, b, m2))
        if d1 <= d2:
            hi = m2
        else:
            lo = m1
    s = (lo + hi) / 2
    return horoball_distance(p, horoball_geodesic_point(a, b, s))


def annular_distance(u: AnnularPoint, v: AnnularPoint, flavor: str) -> float:
    if flavor == "pants":
        return 0.0
    if flavor == "marking":
        return float(abs(u.twist - v.twist))
    if u.height is None or v.height is None:
        raise ValueError("augmented annular points need heights")
    return horoball_distance(u.coords(), v.coords())


def subsurface_distance(x: ModelPoint, y: ModelPoint, w: Subsurface) -> float:
    if w.kind == "component":
        return float(farey_distance(x.alpha(w.comp), y.alpha(w.comp)))
    return annular_distance(project(x, w), project(y, w), x.surface.flavor)


def candidate_subsurfaces(x: ModelPoint, y: ModelPoint,
                          comps: Iterable[int] | None = None) -> list[Subsurface]:
    """The finite subsurface list that can carry a large projection
    distance between x and y.

    Per component: the component itself plus annuli whose cores sit on
    the canonical geodesic between the pants slopes or are one of the
    four endpoint curves.  The bounded geodesic image property caps every
    other annulus, which is what the wide-enumeration acceptance test
    checks.
    """
    surf = x.surface
    out: list[Subsurface] = []
    comp_range = range(surf.n_components) if comps is None else comps
    for i in comp_range:
        out.append(Subsurface("component", i))
        if surf.flavor == "pants":
            continue
        cores = set(farey_geodesic(x.alpha(i), y.alpha(i)))
        for pt in (x, y):
            st = pt.states[i]
            cores.add(st.alpha)
            if st.tau is not None:
                cores.add(st.tau)
        out.extend(Subsurface("annulus", i, s) for s in sorted(cores, key=Slope.key))
    return out


def distance_formula(
    x: ModelPoint,
    y: ModelPoint,
    threshold: float | None = None,
    subsurfaces: Sequence[Subsurface] | None = None,
    comps: Iterable[int] | None = None,
) -> tuple[float, list[tuple[Subsurface, float]]]:
    """Thresholded sum of projection distances, with the contributing
    subsurfaces.  This is the model metric; it is symmetric and obeys
    the triangle inequality up to a multiplicative slack."""
    if x.surface != y.surface:
        raise ValueError("points live on different surfaces")
    t = x.surface.threshold if threshold is None else threshold
    subs = candidate_subsurfaces(x, y, comps) if subsurfaces is None else subsurfaces
    total = 0.0
    contributing: list[tuple[Subsurface, float]] = []
    for w in subs:
        d = subsurface_distance(x, y, w)
        if d >= t:
            total += d
            contributing.append((w, d))
    contributing.sort(key=lambda wd: wd[0].key())
    return total, contributing


@lru_cache(maxsize=400_000)
def model_distance(x: ModelPoint, y: ModelPoint) -> float:
    """distance_formula at the surface's own threshold, cached."""
    return distance_formula(x, y)[0]


def component_distance(x: ModelPoint, y: ModelPoint, comp: int,
                       threshold: float | None = None) -> float:
    """The distance formula restricted to one component's subsurfaces,
    i.e. distance in that component's own model space."""
    return distance_formula(x, y, threshold=threshold, comps=(comp,))[0]


def threshold_audit(x: ModelPoint, y: ModelPoint, t: float, tp: float) -> float:
    """Ratio of the distance formula at two thresholds, infinity-safe."""
    if tp < t:
        raise ValueError("audit expects T' >= T")
    lo, _ = distance_formula(x, y, threshold=t)
    hi, _ = distance_formula(x, y, threshold=tp)
    if lo == hi == 0.0:
        return 1.0
    if hi == 0.0:
        return math.inf
    return lo / hi


# ---------------------------------------------------------------------------
# Elementary moves and product regions
# ---------------------------------------------------------------------------


def twist_move(x: ModelPoint, comp: int, n: int = 1) -> ModelPoint:
    """Apply n Dehn twists about the pants curve of one component."""
    st = x.states[comp]
    if st.tau is None:
        raise ValueError("pants flavor has no transversal to twist")
    new_tau = apply_matrix(twist_matrix(st.alpha, n), st.tau)
    states = list(x.states)
    states[comp] = ComponentState(st.alpha, new_tau, st.length)
    return ModelPoint(x.surface, tuple(states))


def flip_move(x: ModelPoint, comp: int) -> ModelPoint:
    """Swap pants slope and transversal in one component.  The new pants
    curve takes the Bers length in the augmented flavor."""
    st = x.states[comp]
    if st.tau is None:
        raise ValueError("pants flavor has no flip move")
    length = x.surface.bers if st.length is not None else None
    states = list(x.states)
    states[comp] = ComponentState(st.tau, st.alpha, length)
    return ModelPoint(x.surface, tuple(states))


def length_move(x: ModelPoint, comp: int, factor: float) -> ModelPoint:
    st = x.states[comp]
    if st.length is None:
        raise ValueError("only augmented points carry lengths")
    new_len = min(x.surface.bers, st.length * factor)
    if new_len <= 0:
        raise ValueError("length must stay positive")
    states = list(x.states)
    states[comp] = ComponentState(st.alpha, st.tau, new_len)
    return ModelPoint(x.surface, tuple(states))


def canonical_transversal(core: Slope) -> Slope:
    """A fixed Farey neighbor of the core (the transported integer 0)."""
    return apply_matrix(mat_inv(transport_matrix(core)), ZERO)


def annular_coordinate(x: ModelPoint, comp: int, core: Slope) -> AnnularPoint:
    return project(x, Subsurface("annulus", comp, core))  # type: ignore[return-value]


def product_project(x: ModelPoint, pins: dict[int, Slope]) -> ModelPoint:
    """Project onto the region whose pants decomposition contains the
    pinned curves: replace pants slopes, rebuild transversals so the
    twisting about each pinned curve is preserved exactly, and keep the
    annular height where the augmented flavor has one."""
    surf = x.surface
    states = list(x.states)
    for comp, pin in pins.items():
        st = states[comp]
        if surf.flavor == "pants":
            states[comp] = ComponentState(pin)
            continue
        coord = annular_coordinate(x, comp, pin) if pin != st.alpha or st.tau is None \
            else annular_coordinate(x, comp, pin)
        tau0 = canonical_transversal(pin)
        k = coord.twist - twist_number(pin, tau0)
        tau = apply_matrix(twist_matrix(pin, k), tau0)
        if surf.flavor == "augmented":
            length = min(surf.bers, 1.0 / coord.height) if coord.height else surf.bers
            states[comp] = ComponentState(pin, tau, length)
        else:
            states[comp] = ComponentState(pin, tau)
    return ModelPoint(surf, tuple(states))


def product_region_distance(x: ModelPoint, y: ModelPoint,
                            pins: dict[int, Slope]) -> float:
    """Distance between the projections onto the pinned product region."""
    return model_distance(product_project(x, pins), product_project(y, pins))


def product_factor_sum(x: ModelPoint, y: ModelPoint, pins: dict[int, Slope]) -> float:
    """The per-factor sum over the region's complementary pieces: the
    annular complexes of pinned curves plus the untouched components."""
    total = 0.0
    for comp in range(x.surface.n_components):
        if comp in pins:
            pin = pins[comp]
            u = annular_coordinate(x, comp, pin)
            v = annular_coordinate(y, comp, pin)
            total += annular_distance(u, v, x.surface.flavor)
        else:
            total += component_distance(x, y, comp)
    return total


def sum_distance_audit(x: ModelPoint, y: ModelPoint, comp: int = 0) -> tuple[float, float]:
    """Both sides of the chain bound: the model distance against the sum
    of product-region distances along a pants-slope geodesic."""
    chain = farey_geodesic(x.alpha(comp), y.alpha(comp))
    rhs = sum(product_region_distance(x, y, {comp: a}) for a in chain)
    lhs = model_distance(x, y)
    return lhs, rhs


def clear_caches() -> None:
    farey_distance.cache_clear()
    farey_geodesic.cache_clear()
    model_distance.cache_clear()
    _dist_memo.clear()


def point_digest(x: ModelPoint) -> str:
    return json.dumps(x.to_json(), sort_keys=True)
