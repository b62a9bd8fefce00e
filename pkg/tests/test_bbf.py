"""Transversal families, the projection graph, quasi-trees, and the
product embedding."""

import itertools
import math

import numpy as np
import pytest

from coarsegeo.bbf import (
    FamilySplitError, FamilyY, PkGraph, QuasiTree, WindowTooSmallError,
    build_embedding, build_families, build_families_synthetic, build_pk_graph,
    embedded_distance, embedding_audit, embedding_for_pair, lower_bound_audit,
    psi_project, working_window,
)
from coarsegeo.consreal import SyntheticSystem
from coarsegeo.harness import random_pair, random_point
from coarsegeo.surfmodel import (
    INFINITY, ZERO, AnnularPoint, ModelSurface, Slope, Subsurface,
    annular_distance, base_point, flip_move, model_distance, project,
    twist_move,
)


def test_families_per_component(marking1, marking2):
    win1 = {0: (ZERO, INFINITY, Slope(1, 1))}
    fams = build_families(marking1, win1)
    assert [f.kind for f in fams] == ["component", "annuli"]
    win2 = {0: (ZERO,), 1: (ZERO,)}
    fams2 = build_families(marking2, win2)
    assert len(fams2) == 4  # two per component


def test_pants_flavor_has_no_annuli_family():
    pants = ModelSurface(((1, 1),), flavor="pants")
    fams = build_families(pants, {0: (ZERO,)})
    assert [f.kind for f in fams] == ["component"]


def test_synthetic_five_cycle_needs_three_families():
    ids = tuple(f"V{i}" for i in range(5))
    overlaps = {frozenset((ids[i], ids[(i + 1) % 5])) for i in range(5)}
    sys = SyntheticSystem(ids=ids, overlaps=overlaps)
    groups = build_families_synthetic(sys)
    assert len(groups) == 3
    for g in groups:
        for u, v in itertools.combinations(g, 2):
            assert sys.relation(u, v) == "overlap"
    with pytest.raises(FamilySplitError) as err:
        build_families_synthetic(sys, max_families=2)
    assert err.value.witness


def test_pk_graph_edges_monotone_in_k(marking1):
    win = working_window(base_point(marking1),
                         twist_move(flip_move(base_point(marking1), 0), 0, 9))
    fam = FamilyY(0, "annuli", win[0])
    prev: set = set()
    for k in (0.5, 2.0, 5.0, 20.0):
        pk = build_pk_graph(fam, k, "marking")
        assert prev <= pk.edges
        prev = pk.edges
        for e in pk.edges:
            assert frozenset(e) == e and len(e) == 2


def test_pk_singleton_family_is_edgeless(marking1):
    pk = build_pk_graph(FamilyY(0, "component"), 5.0, "marking")
    assert pk.edges == set()


def test_pk_blocks_separated_pair():
    """A middle annulus seeing the two outer boundaries far apart blocks
    their edge."""
    cores = (ZERO, INFINITY, Slope(120, 1))
    fam = FamilyY(0, "annuli", cores)
    pk = build_pk_graph(fam, k=3.0, flavor="marking")
    a = Subsurface("annulus", 0, ZERO)
    c = Subsurface("annulus", 0, Slope(120, 1))
    # the annulus at infinity sees their boundaries 120 twists apart
    assert not pk.adjacent(a, c)


def test_quasitree_same_complex_and_symmetry(marking1, cn):
    x = base_point(marking1)
    y = twist_move(flip_move(x, 0), 0, 25)
    emb = embedding_for_pair(x, y, cn["k_pk"])
    qt = emb.trees["annuli[0]"]
    w = Subsurface("annulus", 0, ZERO)
    u, v = (w, AnnularPoint(0)), (w, AnnularPoint(9))
    assert qt.distance(u, v) <= 9.0
    pts = [(Subsurface("annulus", 0, core), AnnularPoint(t))
           for core in qt.family.cores[:3] for t in (-2, 3)]
    for a, b in itertools.combinations(pts, 2):
        assert qt.distance(a, b) == pytest.approx(qt.distance(b, a))
    for a, b, c in itertools.combinations(pts, 3):
        assert qt.distance(a, c) <= qt.distance(a, b) + qt.distance(b, c) + 1e-9


def test_quasitree_cross_edge_value_vs_exhaustive(marking1, cn):
    """On a tiny window the glued distance matches a hand enumeration:
    within-complex moves plus unit cross edges."""
    x = base_point(marking1)
    y = flip_move(x, 0)
    emb = embedding_for_pair(x, y, cn["k_pk"])
    qt = emb.trees["annuli[0]"]
    wa = Subsurface("annulus", 0, ZERO)
    wb = Subsurface("annulus", 0, INFINITY)
    e = frozenset((wa, wb))
    assert e in qt.pk.edges
    (ha, pa), (hb, pb) = qt.attachments[e]
    u = (wa, AnnularPoint(pa.twist))
    v = (wb, AnnularPoint(pb.twist))
    assert qt.distance(u, v) == pytest.approx(1.0)  # exactly the cross edge


def test_quasitree_intra_horoball_matches_closed_form(augmented1, cn):
    x = base_point(augmented1)
    y = twist_move(x, 0, 13)
    emb = embedding_for_pair(x, y, cn["k_pk"])
    qt = emb.trees["annuli[0]"]
    w = Subsurface("annulus", 0, ZERO)
    rng = np.random.default_rng(4)
    for _ in range(200):
        a = AnnularPoint(int(rng.integers(-8, 9)), float(rng.uniform(1.0, 40.0)))
        b = AnnularPoint(int(rng.integers(-8, 9)), float(rng.uniform(1.0, 40.0)))
        exact = annular_distance(a, b, "augmented")
        assert abs(qt.distance((w, a), (w, b)) - exact) <= 1.0


def test_quasitree_window_too_small(marking1, cn):
    x = base_point(marking1)
    emb = embedding_for_pair(x, x, cn["k_pk"])
    qt = emb.trees["annuli[0]"]
    outside = Subsurface("annulus", 0, Slope(355, 113))
    with pytest.raises(WindowTooSmallError):
        qt.distance((outside, AnnularPoint(0)),
                    (Subsurface("annulus", 0, ZERO), AnnularPoint(0)))


def test_psi_coordinates(marking1, augmented1, cn):
    x = base_point(marking1)
    emb = embedding_for_pair(x, x, cn["k_pk"])
    pt = psi_project(x, emb)
    w, coord = pt.coord("component[0]")
    assert coord == ZERO  # the component family carries the pants slope
    xa = base_point(augmented1)
    xa = twist_move(xa, 0, 6)
    emba = embedding_for_pair(xa, xa, cn["k_pk"])
    pa = psi_project(xa, emba)
    wa, ca = pa.coord("annuli[0]")
    assert wa.core == xa.alpha(0)
    assert ca == project(xa, wa)  # (twist of the transversal, 1/l)


def test_psi_near_minimizers_land_close(marking1, cn):
    """Choosing the annulus of the transversal (the next-best member)
    moves the embedded point by a bounded amount."""
    x = twist_move(base_point(marking1), 0, 4)
    y = flip_move(x, 0)
    emb = embedding_for_pair(x, y, cn["k_pk"])
    qt = emb.trees["annuli[0]"]
    w_min = Subsurface("annulus", 0, x.alpha(0))
    w_alt = Subsurface("annulus", 0, x.states[0].tau)
    a = (w_min, project(x, w_min))
    b = (w_alt, project(x, w_alt))
    assert qt.distance(a, b) <= 4 * cn["l_psi"] + 4


def test_psi_single_move_displacement(marking1, cn):
    x = base_point(marking1)
    for mv in (lambda p: twist_move(p, 0, 1), lambda p: flip_move(p, 0)):
        y = mv(x)
        assert embedded_distance(x, y, cn["k_pk"]) <= cn["l_psi"]


def test_lower_bound_cases(marking1, rng, cn):
    x = base_point(marking1)
    v0 = lower_bound_audit(x, x, cn["k_pk"], cn["k_prime"])
    assert v0.lhs == 0.0 and v0.rhs == 0.0 and v0.ok
    y = twist_move(x, 0, 50)
    v1 = lower_bound_audit(x, y, cn["k_pk"], cn["k_prime"])
    assert v1.lhs >= 25.0 - 1.0 and v1.ok
    for _ in range(100):
        a, b = random_pair(marking1, rng, steps=14, big_twist=25)
        assert lower_bound_audit(a, b, cn["k_pk"], cn["k_prime"]).ok
    with pytest.raises(ValueError):
        lower_bound_audit(x, y, cn["k_pk"], cn["k_pk"])


def test_embedding_audit_band(marking1, rng, cn):
    pairs = [random_pair(marking1, rng, steps=12, big_twist=25,
                         min_distance=12) for _ in range(30)]
    lo, hi = embedding_audit(pairs, cn["k_pk"], cutoff=10.0)
    assert cn["psi_ratio_lo"] <= lo <= hi <= cn["psi_ratio_hi"]
    with pytest.raises(ValueError):
        embedding_audit([(pairs[0][0], pairs[0][0])], cn["k_pk"], cutoff=10.0)


def test_window_dump_schema(marking1, cn):
    x, y = base_point(marking1), twist_move(base_point(marking1), 0, 20)
    emb = embedding_for_pair(x, y, cn["k_pk"])
    doc = emb.trees["annuli[0]"].dump()
    assert doc["schema_version"] == 1
    assert doc["vertices"] and "cross_edges" in doc
