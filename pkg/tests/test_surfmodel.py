"""The Farey layer and the model spaces: exactness is checked against
ball BFS oracles and closed forms."""

import itertools
import math
from collections import deque

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coarsegeo.surfmodel import (
    INFINITY, ZERO, AnnularPoint, ComponentState, InessentialSubsurfaceError,
    ModelPoint, ModelSurface, Slope, Subsurface, annular_distance, apply_matrix,
    base_point, candidate_subsurfaces, canonical_transversal, common_neighbors,
    component_distance, distance_formula, farey_adjacent, farey_ball,
    farey_distance, farey_geodesic, flip_move, horoball_distance,
    horoball_point_to_segment, intersection_number, length_move, mat_inv,
    mat_mul, model_distance, product_factor_sum, product_project,
    product_region_distance, project, subsurface_distance, sum_distance_audit,
    surface_stats, threshold_audit, topology_stats, transport_matrix,
    twist_matrix, twist_move, twist_number,
)

slopes = st.builds(
    Slope,
    st.integers(min_value=-40, max_value=40),
    st.integers(min_value=0, max_value=15),
).filter(lambda s: True)


def slope_strategy():
    return st.tuples(st.integers(-40, 40), st.integers(0, 15)).filter(
        lambda pq: pq != (0, 0)).map(lambda pq: Slope(*pq))


# --- slopes and adjacency ---------------------------------------------------

def test_slope_canonical_form():
    assert Slope(2, 4) == Slope(1, 2)
    assert Slope(-1, -2) == Slope(1, 2)
    assert Slope(3, 0) == INFINITY
    assert Slope(-5, 0) == INFINITY
    with pytest.raises(ValueError):
        Slope(0, 0)


def test_adjacency_examples():
    assert farey_distance(ZERO, INFINITY) == 1
    assert farey_distance(Slope(1, 2), Slope(1, 3)) == 1
    assert farey_distance(ZERO, Slope(2, 5)) == 2


def test_geodesic_identity_and_reversal():
    assert farey_geodesic(ZERO, ZERO) == (ZERO,)
    g = farey_geodesic(ZERO, Slope(2, 5))
    assert list(farey_geodesic(Slope(2, 5), ZERO)) == list(reversed(g))


def _ball_graph(depth=7):
    verts = farey_ball(-3, 4, depth)
    adj = {v: set() for v in verts}
    for a, b in itertools.combinations(verts, 2):
        if farey_adjacent(a, b):
            adj[a].add(b)
            adj[b].add(a)
    return verts, adj


def _bfs(adj, a, b):
    dist = {a: 0}
    q = deque([a])
    while q:
        u = q.popleft()
        if u == b:
            return dist[u]
        for v in adj[u]:
            if v not in dist:
                dist[v] = dist[u] + 1
                q.append(v)
    return None


def test_distance_matches_ball_bfs_oracle(rng):
    verts, adj = _ball_graph()
    inner = [s for s in verts if abs(s.value()) <= 3 and 0 < s.q <= 13]
    for _ in range(400):
        a, b = rng.choice(len(inner), size=2, replace=False)
        a, b = inner[int(a)], inner[int(b)]
        got = farey_distance(a, b)
        ref = _bfs(adj, a, b)
        assert ref == got


@given(slope_strategy(), slope_strategy(), slope_strategy())
@settings(max_examples=300, deadline=None)
def test_metric_axioms(a, b, c):
    assert farey_distance(a, a) == 0
    assert farey_distance(a, b) == farey_distance(b, a)
    assert (farey_distance(a, b) == 0) == (a == b)
    assert farey_distance(a, c) <= farey_distance(a, b) + farey_distance(b, c)


@given(slope_strategy(), slope_strategy(),
       st.integers(-3, 3), st.integers(-3, 3))
@settings(max_examples=200, deadline=None)
def test_unimodular_equivariance(a, b, m, n):
    mat = mat_mul((1, m, 0, 1), (1, 0, n, 1))
    assert farey_distance(apply_matrix(mat, a), apply_matrix(mat, b)) == \
        farey_distance(a, b)


def test_geodesic_is_valid_path(rng):
    for _ in range(200):
        a = Slope(int(rng.integers(-300, 300)), int(rng.integers(1, 100)))
        b = Slope(int(rng.integers(-300, 300)), int(rng.integers(1, 100)))
        g = farey_geodesic(a, b)
        assert g[0] == a and g[-1] == b
        assert len(g) - 1 == farey_distance(a, b)
        assert all(farey_adjacent(u, v) for u, v in zip(g, g[1:]))


def test_common_neighbors_are_neighbors():
    for a, b in [(ZERO, INFINITY), (Slope(1, 2), Slope(1, 3)), (ZERO, Slope(2, 5))]:
        for w in common_neighbors(a, b):
            assert farey_adjacent(w, a) and farey_adjacent(w, b)


# --- twisting ----------------------------------------------------------------

def test_twist_examples():
    assert twist_number(INFINITY, Slope(7, 2)) == 3
    for n in (-4, 0, 1, 9):
        assert twist_number(INFINITY, Slope(n, 1)) == n
    assert twist_number(ZERO, INFINITY) == 0
    with pytest.raises(ValueError):
        twist_number(ZERO, ZERO)


def test_twist_equivariance(rng):
    for _ in range(200):
        core = Slope(int(rng.integers(-20, 20)), int(rng.integers(0, 9)) or 1)
        x = Slope(int(rng.integers(-20, 20)), int(rng.integers(1, 9)))
        if x == core:
            continue
        n = int(rng.integers(-40, 40))
        moved = apply_matrix(twist_matrix(core, n), x)
        assert twist_number(core, moved) == twist_number(core, x) + n


def test_twist_coarsely_independent_of_transport(rng):
    """Alternate admissible transports (shifted Euclid branch, sign
    flip) move the twisting number by at most 2."""
    for _ in range(1000):
        core = Slope(int(rng.integers(-15, 15)), int(rng.integers(0, 8)) or 1)
        x = Slope(int(rng.integers(-60, 60)), int(rng.integers(1, 17)))
        if x == core:
            continue
        m = transport_matrix(core)
        base = twist_number(core, x)
        for shift in (-1, 1):
            alt = mat_mul((1, shift, 0, 1), m)
            img = apply_matrix(alt, x)
            assert abs(img.p // img.q - base) <= 2
        flipped = mat_mul((-1, 0, 0, -1), m)
        img = apply_matrix(flipped, x)
        assert abs(img.p // img.q - base) <= 2


def test_intersection_number_kinds():
    a, b = Slope(1, 2), Slope(1, 3)
    assert intersection_number(a, b) == 1
    assert intersection_number(a, b, kind=(0, 4)) == 2


# --- projections and annular metrics -----------------------------------------

def test_projection_examples(marking1, augmented1):
    x = base_point(marking1)
    assert project(x, Subsurface("component", 0)) == ZERO
    xa = base_point(augmented1)
    coord = project(xa, Subsurface("annulus", 0, ZERO))
    assert coord == AnnularPoint(0, 1.0)  # twist of the transversal, 1/l
    far = project(xa, Subsurface("annulus", 0, Slope(1, 2)))
    assert far.height == 1.0  # boundary height 1/B for non-pants cores


def test_projection_shifts_under_twisting(marking1):
    x = base_point(marking1)
    w = Subsurface("annulus", 0, ZERO)
    base = project(x, w).twist
    for n in (1, 7, -13):
        assert project(twist_move(x, 0, n), w).twist == base + n


def test_pants_flavor_rejects_annuli():
    pants = ModelSurface(((1, 1),), flavor="pants")
    x = base_point(pants)
    with pytest.raises(InessentialSubsurfaceError):
        project(x, Subsurface("annulus", 0, ZERO))


def test_annular_distance_closed_form():
    d = annular_distance(AnnularPoint(0, 1.0), AnnularPoint(2, 1.0), "augmented")
    assert d == pytest.approx(math.acosh(3.0))
    assert annular_distance(AnnularPoint(3), AnnularPoint(-4), "marking") == 7
    assert annular_distance(AnnularPoint(3), AnnularPoint(9), "pants") == 0.0


def test_boundary_twist_distance_is_log():
    b = 1.0
    for n in (10, 100, 5000):
        d = annular_distance(AnnularPoint(0, 1 / b), AnnularPoint(n, 1 / b),
                             "augmented")
        assert abs(d - 2 * math.log(n * b)) <= 2.0


def test_horoball_segment_distance_degenerate():
    a, b = (0.0, 1.0), (4.0, 1.0)
    assert horoball_point_to_segment(a, a, b) == pytest.approx(0.0, abs=1e-6)
    mid = (2.0, 2.0)
    assert horoball_point_to_segment(mid, a, b) <= horoball_distance(mid, a)


# --- distance formula ---------------------------------------------------------

def test_distance_formula_examples(marking2):
    x = base_point(marking2)
    assert distance_formula(x, x) == (0.0, [])
    y = twist_move(x, 0, 50)
    total, contrib = distance_formula(x, y)
    assert total == 50.0
    assert [repr(w) for w, _ in contrib] == ["A0(0/1)"]
    # swapping the pair in one component moves nothing above threshold
    z = ModelPoint(marking2, (ComponentState(INFINITY, ZERO), x.states[1]))
    total2, contrib2 = distance_formula(x, z)
    assert total2 == 0.0 and contrib2 == []


def test_distance_formula_symmetry_and_coarse_triangle(marking2, rng, cn):
    from coarsegeo.harness import random_point
    slack = 4.0
    for _ in range(60):
        x = random_point(marking2, rng, steps=14)
        y = random_point(marking2, rng, steps=14)
        z = random_point(marking2, rng, steps=14)
        assert model_distance(x, y) == model_distance(y, x)
        assert model_distance(x, z) <= slack * (
            model_distance(x, y) + model_distance(y, z)) + slack


def test_candidate_enumeration_complete_against_wide_scan(marking1, rng):
    """No annulus outside the candidate list carries a contribution:
    brute force over a wide core window on small instances."""
    from coarsegeo.harness import random_point
    for _ in range(25):
        x = random_point(marking1, rng, steps=8, big_twist=20)
        y = random_point(marking1, rng, steps=8, big_twist=20)
        cands = {w.core for w in candidate_subsurfaces(x, y) if w.kind == "annulus"}
        wide = {Slope(p, q) for p in range(-12, 13) for q in range(0, 7)
                if (p, q) != (0, 0)}
        t = x.surface.threshold
        for s in sorted(wide - cands, key=Slope.key):
            w = Subsurface("annulus", 0, s)
            assert subsurface_distance(x, y, w) < t


def test_threshold_audit_cases(marking2):
    x = base_point(marking2)
    assert threshold_audit(x, x, 10, 40) == 1.0
    y = twist_move(x, 0, 55)
    assert threshold_audit(x, y, 10, 40) == 1.0  # one big term at both cutoffs
    z = twist_move(x, 0, 20)
    assert math.isinf(threshold_audit(x, z, 10, 40))  # mid-band only
    with pytest.raises(ValueError):
        threshold_audit(x, y, 40, 10)


# --- product regions ----------------------------------------------------------

def test_product_project_fixes_points_already_inside(marking2):
    x = base_point(marking2)
    assert product_project(x, {0: x.alpha(0)}) == x


def test_product_region_factor_sum_band(marking2, rng):
    from coarsegeo.harness import random_point
    pin = {0: Slope(1, 2)}
    for _ in range(30):
        x = random_point(marking2, rng, steps=14, big_twist=40)
        y = random_point(marking2, rng, steps=14, big_twist=40)
        direct = product_region_distance(x, y, pin)
        split = product_factor_sum(x, y, pin)
        assert direct <= 2 * split + 40
        assert split <= 2 * direct + 40


def test_sum_distance_chain_bound(marking1, rng):
    from coarsegeo.harness import random_point
    kappa = 3.0
    for _ in range(20):
        x = random_point(marking1, rng, steps=12, big_twist=30)
        y = random_point(marking1, rng, steps=12, big_twist=30)
        lhs, rhs = sum_distance_audit(x, y)
        assert lhs <= kappa * rhs + 40


# --- topology statistics -------------------------------------------------------

@pytest.mark.parametrize("g,p,c,flavor,xi,rank", [
    (1, 1, 1, "marking", 0, 1),
    (1, 1, 1, "pants", 0, 1),
    (1, 1, 1, "augmented", 0, 1),
    (2, 0, 1, "marking", 2, 3),
    (2, 0, 1, "pants", 2, 2),
    (2, 2, 2, "marking", 0, 2),
])
def test_topology_stats(g, p, c, flavor, xi, rank):
    assert topology_stats(g, p, c, flavor) == (xi, rank)


def test_topology_stats_rejects_inessential():
    with pytest.raises(ValueError):
        topology_stats(0, 3, 1, "marking")


def test_surface_stats(marking2):
    assert surface_stats(marking2) == (0, 2)


# --- serialization --------------------------------------------------------------

def test_surface_and_point_json_round_trip(marking2, augmented1):
    doc = marking2.to_json()
    assert ModelSurface.from_json(doc) == marking2
    x = twist_move(base_point(marking2), 1, 5)
    assert ModelPoint.from_json(marking2, x.to_json()) == x
    xa = length_move(base_point(augmented1), 0, 0.5)
    assert ModelPoint.from_json(augmented1, xa.to_json()) == xa


def test_point_invariants():
    surf = ModelSurface(((1, 1),), flavor="marking")
    with pytest.raises(ValueError):
        ModelPoint(surf, (ComponentState(ZERO, Slope(2, 5)),))  # not adjacent
    aug = ModelSurface(((1, 1),), flavor="augmented", bers=1.0)
    with pytest.raises(ValueError):
        ModelPoint(aug, (ComponentState(ZERO, INFINITY, 2.0),))  # above Bers


def test_projection_is_quasi_lipschitz(marking2, rng):
    """Every subsurface sees at most the model distance plus the
    threshold: a projection either contributes to the sum or sits below
    the cutoff."""
    from coarsegeo.harness import random_point
    t = marking2.threshold
    for _ in range(60):
        x = random_point(marking2, rng, steps=14, big_twist=40)
        y = random_point(marking2, rng, steps=14, big_twist=40)
        dx = model_distance(x, y)
        for w in candidate_subsurfaces(x, y):
            assert subsurface_distance(x, y, w) <= dx + t
