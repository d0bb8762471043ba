import math

import pytest

from fkdroplet.circuits import Circuit
from fkdroplet.errors import InvalidParameterError, PreconditionError
from fkdroplet.lattice import BondConfig, make_box
from fkdroplet.regeneration import (
    connection_regeneration,
    default_crossing_pattern,
    is_regeneration_site,
    nested_alternating,
    pair_predicates,
    pertinent_pair,
    rg_set,
    search_pertinent_pair,
    theta_rg_max,
    theta_rg_max_grid,
)
from fkdroplet.rng import make_rng
from fkdroplet.wulff import ShapeConstants

Q0, C0 = 0.3 * math.pi, 0.2           # site-geometry tests (wide cones)
CONSTS = ShapeConstants(q0=Q0, c0=C0)
# SEARCH needs pi/2 - 2 q0 > 0: disk-like constants
SEARCH_CONSTS = ShapeConstants(q0=0.9 * math.pi / 8, c0=0.15)


def square_circuit(m):
    verts = []
    for x in range(-m, m):
        verts.append((x, -m))
    for y in range(-m, m):
        verts.append((m, y))
    for x in range(m, -m, -1):
        verts.append((x, m))
    for y in range(m, -m, -1):
        verts.append((-m, y))
    return Circuit.from_vertices(verts)


def expected_square_rg(m, band):
    out = set()
    for s in range(-band, band + 1):
        out |= {(m, s), (-m, s), (s, m), (s, -m)}
    return out


# -- the square-circuit site set, derived by hand ---------------------------
#
# For v = (6, y) on the right side, the circuit inside the wedge of
# half-width 0.2 around arg(v) is (a piece of) the vertical side x = 6
# plus, for |y| >= 4ish, a sliver of the adjacent side past the corner.
# The own-side condition is angle((0,+-1), v_perp) = |arg v| <= pi/2 - q0
# = 0.2*pi, i.e. |y| <= 6 tan(0.2 pi) = 4.36, so |y| <= 4; corner slivers
# stay inside the cones for those v.  Hence 9 sites per side, corners and
# (+-6,+-5) excluded.

def test_square_rg_set_exact():
    circ = square_circuit(6)
    rep = rg_set(circ, CONSTS)
    assert set(rep.sites) == expected_square_rg(6, 4)
    assert len(rep.sites) == 36


def test_square_corner_not_site():
    circ = square_circuit(6)
    assert not is_regeneration_site(circ, (6, 6), CONSTS)
    assert not is_regeneration_site(circ, (6, 5), CONSTS)
    assert is_regeneration_site(circ, (6, 0), CONSTS)
    assert is_regeneration_site(circ, (6, 4), CONSTS)


def test_square_theta_max_analytic():
    rep = rg_set(square_circuit(6), CONSTS)
    expected = math.pi / 2 - 2 * math.atan(4 / 6)
    assert rep.theta_max == pytest.approx(expected, abs=1e-12)
    assert not rep.degenerate


def test_corner_site_with_small_q0():
    # with q0 < pi/4 the corner passes: both incident sides sit at angle
    # pi/4 <= pi/2 - q0 from the diagonal cone axes
    small = ShapeConstants(q0=math.pi / 8, c0=0.05)
    assert is_regeneration_site(square_circuit(6), (6, 6), small)


def test_spike_circuit_kills_site():
    # right side of the m=5 square detours through x = 6 between y = 1 and
    # y = -1: the wedge at (6, 0) sees the x = 5 side doubling back
    m = 5
    verts = ([(x, -m) for x in range(-m, m)]
             + [(m, y) for y in range(-m, 0)]
             + [(6, -1), (6, 0), (6, 1)]
             + [(m, y) for y in range(1, m)]
             + [(x, m) for x in range(m, -m, -1)]
             + [(-m, y) for y in range(m, -m, -1)])
    circ = Circuit.from_vertices(verts)
    assert not is_regeneration_site(circ, (6, 0), CONSTS)
    # far side of the circuit is unaffected
    assert is_regeneration_site(circ, (-5, 0), CONSTS)


def test_site_requires_membership():
    with pytest.raises(InvalidParameterError):
        is_regeneration_site(square_circuit(3), (9, 9), CONSTS)


# -- cluster mode -------------------------------------------------------------

def test_cluster_mode_subset_of_circuit_mode():
    box = make_box(8)
    cfg = BondConfig.all_closed(box)
    circ = square_circuit(4)
    for a, b in circ.edges:
        cfg.set_edge((a, b), 1)
    # dangling branch crossing the wedge of (4, 2) outside the cones
    cfg.set_edge(((4, 1), (5, 1)), 1)
    cfg.set_edge(((5, 1), (5, 2)), 1)
    c_circ = rg_set(circ, CONSTS, mode="circuit")
    c_clus = rg_set(circ, CONSTS, mode="cluster", cfg=cfg)
    assert set(c_clus.sites) <= set(c_circ.sites)
    assert (4, 2) in c_circ.sites
    assert (4, 2) not in c_clus.sites


def test_cluster_mode_equals_circuit_when_bare():
    box = make_box(8)
    cfg = BondConfig.all_closed(box)
    circ = square_circuit(4)
    for a, b in circ.edges:
        cfg.set_edge((a, b), 1)
    assert set(rg_set(circ, CONSTS, "cluster", cfg).sites) == \
        set(rg_set(circ, CONSTS, "circuit").sites)


# -- theta formula ---------------------------------------------------------------

def test_theta_examples():
    assert theta_rg_max([0.0, math.pi]) == pytest.approx(math.pi)
    assert theta_rg_max([0, math.pi / 2, math.pi, 3 * math.pi / 2]) == \
        pytest.approx(math.pi / 2)
    assert theta_rg_max([1.3]) == 2 * math.pi
    assert theta_rg_max([]) == 2 * math.pi


def test_theta_gap_formula_matches_grid():
    rng = make_rng(99)
    for _ in range(300):
        k = int(rng.integers(2, 12))
        args = rng.uniform(0, 2 * math.pi, size=k)
        assert abs(theta_rg_max(args) - theta_rg_max_grid(args)) < 1e-3


# -- connection regeneration -------------------------------------------------

def test_straight_segment_sites_and_maxreg():
    path = [(k, 0) for k in range(0, 13)]
    rep = connection_regeneration(path, (0, 0), (12, 0), delta=0.3, K=2.0,
                                  phi="ALL")
    # interior vertices at distance > K from the endpoints' truncated
    # patterns are sites
    assert set(rep.sites) == {(k, 0) for k in range(2, 11)}
    assert rep.maxreg <= 3.0   # K + 1
    kinds = {c.kind for c in rep.clusters}
    assert kinds <= {"internal", "x_end", "y_end"}
    # a simple path: every site is a cut vertex
    for s in rep.sites:
        left = {v for v in path if v[0] < s[0]}
        right = {v for v in path if v[0] > s[0]}
        assert left and right


def test_straight_segment_fixed_phi():
    path = [(k, 0) for k in range(0, 13)]
    K, phi = default_crossing_pattern((1, 0), 0.3)
    rep = connection_regeneration(path, (0, 0), (12, 0), delta=0.3, K=K, phi=phi)
    assert (6, 0) in rep.sites


def test_bump_blocks_sites_and_grows_maxreg():
    # a height-2 bump in the middle: no sites inside the bump and the
    # displacement across it is at least the bump extent
    path = ([(k, 0) for k in range(0, 4)]
            + [(3, 1), (3, 2), (4, 2), (5, 2), (5, 1), (5, 0)]
            + [(k, 0) for k in range(6, 13)])
    rep = connection_regeneration(path, (0, 0), (12, 0), delta=0.3, K=2.0)
    assert all(not (3 <= s[0] <= 5 and s[1] > 0) for s in rep.sites)
    assert rep.maxreg >= 2.0


def test_degenerate_endpoints_rejected():
    with pytest.raises(PreconditionError):
        connection_regeneration([(0, 0), (1, 0)], (0, 0), (0, 0), delta=0.3, K=2)


def test_no_sites_whole_cluster_convention():
    path = [(0, 0), (0, 1), (1, 1), (1, 0), (2, 0)]
    rep = connection_regeneration(path, (0, 0), (2, 0), delta=0.1, K=1.0,
                                  phi=frozenset({((0, 0), (1, 0))}))
    if not rep.sites:
        assert rep.maxreg == pytest.approx(2.0)
        assert any(c.kind == "whole" for c in rep.clusters)


# -- pairs and SEARCH ----------------------------------------------------------

def test_pair_predicates_aligned_neighbours():
    circ = square_circuit(6)
    rep = rg_set(circ, SEARCH_CONSTS)
    assert (6, 0) in rep.sites and (6, 1) in rep.sites
    pred = pair_predicates(circ, SEARCH_CONSTS, (6, 0), (6, 1), rg=rep.sites)
    assert pred["well_aligned"]          # (6,1)-(6,0) is parallel to v_perp
    assert not pred["outward_facing"] or pred["outward_facing"]


def test_pair_predicates_outward_facing():
    circ = square_circuit(6)
    rep = rg_set(circ, SEARCH_CONSTS)
    sites = rep.sites
    # all sites between (6,-1) and (6,1) lie on the segment x=6 which is in
    # the triangle T_{0,(6,-1),(6,1)}... the triangle is thin; (6,0) is on
    # the chord: outward-facing holds
    pred = pair_predicates(circ, SEARCH_CONSTS, (6, -1), (6, 1), rg=sites)
    assert pred["outward_facing"]


def test_pair_predicates_detects_outside_site():
    circ = square_circuit(6)
    rep = rg_set(circ, SEARCH_CONSTS)
    sites = set(rep.sites)
    assert {(6, -1), (6, 1)} <= sites
    # inject a fake site strictly outside the triangle in the sector
    fake = sites | {(9, 0)}
    pred = pair_predicates(circ, SEARCH_CONSTS, (6, -1), (6, 1),
                           rg=tuple(fake))
    assert not pred["outward_facing"]


def test_pair_predicates_require_sites():
    circ = square_circuit(6)
    rep = rg_set(circ, SEARCH_CONSTS)
    with pytest.raises(PreconditionError):
        pair_predicates(circ, SEARCH_CONSTS, (9, 9), (6, 0), rg=rep.sites)


def test_search_terminates_good_on_square():
    circ = square_circuit(6)
    rep = rg_set(circ, SEARCH_CONSTS)
    res = search_pertinent_pair(circ, SEARCH_CONSTS, rep, u_direction=(1.0, 0.2))
    assert res.succeeded, res.failure
    a, b = res.pair
    pred = pair_predicates(circ, SEARCH_CONSTS, a, b, rg=rep.sites)
    assert pred["well_aligned"] and pred["outward_facing"]
    # visited sites pairwise distinct, intervals nested alternating
    visited = [s.site for s in res.trace]
    assert len(set(visited)) == len(visited)
    assert nested_alternating(res.trace)


def test_search_many_directions():
    circ = square_circuit(8)
    rep = rg_set(circ, SEARCH_CONSTS)
    rng = make_rng(5)
    for _ in range(24):
        u = rng.normal(size=2)
        res = search_pertinent_pair(circ, SEARCH_CONSTS, rep, u_direction=u)
        assert res.succeeded, res.failure
        visited = [s.site for s in res.trace]
        assert len(set(visited)) == len(visited)
        assert nested_alternating(res.trace)


def test_search_fails_without_sites():
    from fkdroplet.regeneration import RegenReport
    circ = square_circuit(6)
    empty = RegenReport(sites=(), mode="circuit", theta_max=2 * math.pi,
                        gaps=(2 * math.pi,), degenerate=True)
    res = search_pertinent_pair(circ, SEARCH_CONSTS, empty)
    assert not res.succeeded
    assert res.failure == "no regeneration sites"


def test_pertinent_pair_on_square():
    circ = square_circuit(6)
    rep = rg_set(circ, SEARCH_CONSTS)
    pp = pertinent_pair(circ, SEARCH_CONSTS, rep)
    assert pp is not None
    pred = pair_predicates(circ, SEARCH_CONSTS, pp[0], pp[1], rg=rep.sites)
    assert pred["well_aligned"] and pred["outward_facing"]
    # the pair's sector contains the maximal gap
    from fkdroplet.geometry import SectorA, arg
    gap_lo = arg((6, 4))    # corner gaps are maximal for the square
    sec = SectorA.from_points(pp[0], pp[1])
    assert sec.width < 2 * math.pi


def test_rotation_equivariance_of_sites():
    circ = square_circuit(6)
    rep = rg_set(circ, CONSTS)
    rot = Circuit.from_vertices([(-y, x) for x, y in circ.vertices])
    rep_rot = rg_set(rot, CONSTS)
    assert {(-y, x) for x, y in rep.sites} == set(rep_rot.sites)
