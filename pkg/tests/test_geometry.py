import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from fkdroplet.errors import InvalidParameterError, PreconditionError
from fkdroplet.geometry import (
    Cone,
    DirectedCones,
    PolySet,
    SectorA,
    Wedge,
    angle_between,
    arg,
    boundary_path,
    cone_contains,
    direction,
    distang_check,
    hausdorff_distance,
    interval_covered,
    perp,
    point_in_origin_triangle,
    segment_cone_interval,
    segment_wedge_interval,
    triangle_area,
    wedge_contains,
    well_separation_vertices,
)

finite_coord = st.floats(min_value=-50, max_value=50, allow_nan=False)


def circle_polyset(radius, n=256, center=(0.0, 0.0)):
    th = np.linspace(0, 2 * math.pi, n, endpoint=False)
    pts = np.stack([center[0] + radius * np.cos(th),
                    center[1] + radius * np.sin(th)], axis=1)
    return PolySet.from_closed_polygon(pts)


# -- angles ----------------------------------------------------------------

def test_angle_between_basic():
    assert angle_between((1, 0), (0, 1)) == pytest.approx(math.pi / 2)
    assert angle_between((1, 0), (-1, 0)) == pytest.approx(math.pi)
    assert angle_between((2, 0), (4, 0)) == 0.0


def test_angle_between_zero_vector():
    with pytest.raises(InvalidParameterError):
        angle_between((0, 0), (1, 0))


# -- wedges ----------------------------------------------------------------

def test_wedge_boundary_inclusive():
    w = Wedge(center_arg=0.0, half_width=math.pi / 4)
    assert wedge_contains(w, (1, 1))        # on the boundary ray
    assert not wedge_contains(w, (0, 1))
    assert wedge_contains(w, (0, 0))        # apex convention


def test_wedge_translated_apex():
    w = Wedge.around((0, 1), half_width=0.3, apex=(5, 5))
    assert w.contains((5, 7))
    assert w.contains((5, 5))
    assert not w.contains((7, 5))


@settings(max_examples=200, deadline=None)
@given(st.floats(-math.pi, math.pi), st.floats(0.05, 1.4),
       finite_coord, finite_coord, st.floats(-math.pi, math.pi))
def test_wedge_rotation_invariance(center, hw, zx, zy, rot):
    assume(abs(zx) + abs(zy) > 1e-6)
    w = Wedge(center_arg=center, half_width=hw)
    c, s = math.cos(rot), math.sin(rot)
    zr = (c * zx - s * zy, s * zx + c * zy)
    wr = Wedge(center_arg=center + rot, half_width=hw)
    # avoid boundary-marginal cases where the closed test may flip
    d = abs((arg((zx, zy)) - center + math.pi) % (2 * math.pi) - math.pi)
    assume(abs(d - hw) > 1e-7)
    assert w.contains((zx, zy)) == wr.contains(zr)


# -- cones -----------------------------------------------------------------

def test_cone_examples_from_definition():
    cones = DirectedCones(v=(5, 0), q0=math.pi / 6)
    assert cone_contains(cones, "F", (5, 3))    # along +v_perp
    assert cone_contains(cones, "B", (5, -3))
    # w - v parallel to v: angle pi/2 exceeds pi/2 - q0
    assert not cone_contains(cones, "F", (11, 0))
    assert not cone_contains(cones, "B", (11, 0))


@settings(max_examples=200, deadline=None)
@given(st.floats(-math.pi, math.pi), st.floats(0.05, 1.0),
       finite_coord, finite_coord, st.floats(0.1, 10))
def test_cone_scaling_invariance(vdir, q0, wx, wy, scale):
    v = 3.0 * np.array(direction(vdir))
    cones = DirectedCones(v=tuple(v), q0=q0)
    u = np.array([wx, wy])
    assume(np.hypot(*u) > 1e-6)
    w1 = v + u
    w2 = v + scale * u
    assert cones.contains("F", w1) == cones.contains("F", w2)
    assert cones.contains("B", w1) == cones.contains("B", w2)


@settings(max_examples=150, deadline=None)
@given(st.floats(-math.pi, math.pi), st.floats(0.05, 1.0),
       finite_coord, finite_coord, st.floats(-math.pi, math.pi))
def test_cone_rotation_invariance(vdir, q0, wx, wy, rot):
    assume(abs(wx) + abs(wy) > 1e-6)
    v = np.array(direction(vdir)) * 2.0
    w = v + np.array([wx, wy])
    c, s = math.cos(rot), math.sin(rot)
    R = np.array([[c, -s], [s, c]])
    ang = angle_between(w - v, perp(v))
    assume(abs(ang - (math.pi / 2 - q0)) > 1e-7)
    a = DirectedCones(v=tuple(v), q0=q0)
    b = DirectedCones(v=tuple(R @ v), q0=q0)
    assert a.contains("F", w) == b.contains("F", R @ w)
    assert a.contains("B", w) == b.contains("B", R @ w)


# -- triangles ---------------------------------------------------------------

def test_triangle_area():
    assert triangle_area((1, 0), (0, 1)) == pytest.approx(0.5)
    assert triangle_area((2, 2), (4, 4)) == 0.0
    assert triangle_area((4, 0), (0, 3)) == pytest.approx(6.0)


def test_point_in_origin_triangle():
    assert point_in_origin_triangle((1, 1), (4, 0), (0, 4))
    assert point_in_origin_triangle((4, 0), (4, 0), (0, 4))
    assert not point_in_origin_triangle((3, 3), (4, 0), (0, 4))


# -- Hausdorff ---------------------------------------------------------------

def test_hausdorff_identity():
    A = circle_polyset(2.0)
    assert hausdorff_distance(A, A) == 0.0


def test_hausdorff_concentric_circles():
    A, B = circle_polyset(1.0, n=512), circle_polyset(2.0, n=512)
    assert hausdorff_distance(A, B) == pytest.approx(1.0, abs=2e-4)


def test_hausdorff_translation_of_circle():
    A = circle_polyset(1.5, n=512)
    z = (0.7, -0.4)
    B = A.translated(z)
    assert hausdorff_distance(A, B) == pytest.approx(math.hypot(*z), abs=2e-4)


def test_hausdorff_rejects_empty():
    with pytest.raises(InvalidParameterError):
        PolySet(points=[], segments=[])


@st.composite
def random_polygon(draw):
    n = draw(st.integers(3, 8))
    cx = draw(st.floats(-5, 5))
    cy = draw(st.floats(-5, 5))
    r = draw(st.floats(0.5, 4))
    phases = sorted(draw(st.lists(st.floats(0, 2 * math.pi), min_size=n, max_size=n)))
    assume(len(set(phases)) == n)
    pts = [(cx + r * math.cos(t), cy + r * math.sin(t)) for t in phases]
    return PolySet.from_closed_polygon(pts)


@settings(max_examples=40, deadline=None)
@given(random_polygon(), random_polygon(), random_polygon())
def test_hausdorff_metric_axioms(A, B, C):
    dab = hausdorff_distance(A, B)
    dba = hausdorff_distance(B, A)
    assert dab == pytest.approx(dba, abs=1e-8)          # symmetry
    assert dab >= 0
    dac = hausdorff_distance(A, C)
    dcb = hausdorff_distance(C, B)
    assert dab <= dac + dcb + 1e-8                      # triangle inequality


# -- boundary paths ----------------------------------------------------------

def test_boundary_path_spec_example():
    assert boundary_path((2, 1), "-", 4) == [(0, 0), (1, 0), (2, 0), (2, 1), (3, 1)]


def test_boundary_path_axis_rays():
    assert boundary_path((1, 0), "-", 3) == [(0, 0), (1, 0), (2, 0), (3, 0)]
    assert boundary_path((0, 1), "+", 3) == [(0, 0), (0, 1), (0, 2), (0, 3)]


def test_boundary_path_zero_rejected():
    with pytest.raises(InvalidParameterError):
        boundary_path((0, 0), "+", 3)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 12), st.integers(0, 12), st.sampled_from(["+", "-"]),
       st.integers(1, 40))
def test_boundary_path_simple_monotone_and_close(ux, uy, side, L):
    assume((ux, uy) != (0, 0))
    path = boundary_path((ux, uy), side, L)
    assert len(path) == L + 1
    assert len(set(path)) == L + 1                      # simple
    dxs = {(b[0] - a[0], b[1] - a[1]) for a, b in zip(path, path[1:])}
    assert dxs <= {(1, 0), (0, 1)} or dxs <= {(-1, 0), (0, -1)} or \
        dxs <= {(0, 1), (-1, 0)} or dxs <= {(0, -1), (1, 0)}
    # stays within L-infinity distance 2 of the ray
    u = np.array([ux, uy], dtype=float)
    u /= np.hypot(*u)
    for p in path:
        t = max(0.0, np.dot(p, u))
        proj = t * u
        assert np.max(np.abs(np.array(p) - proj)) <= 2.0 + 1e-9


def test_boundary_path_sides_bracket_ray():
    # '-' stays at-or-below the ray in argument, '+' at-or-above
    u = (3, 2)
    au = arg(u)
    for p in boundary_path(u, "-", 12)[1:]:
        assert arg(p) <= au + 1e-12
    for p in boundary_path(u, "+", 12)[1:]:
        assert arg(p) >= au - 1e-12


# -- well separation ---------------------------------------------------------

def test_well_separation_two_disjoint_edges():
    # edges {(0,0),(1,0)} and {(3,0),(4,0)}: 4 vertex pairs
    VA = [(0, 0), (1, 0)]
    VB = [(3, 0), (4, 0)]
    lam = 0.7
    ws = well_separation_vertices(VA, VB, m=1.0, lam=lam)
    expected = sum(math.exp(-lam * abs(a - b)) for a in (0, 1) for b in (3, 4))
    assert ws.kappa_m == pytest.approx(expected, rel=1e-12)
    assert ws.phi_m == 0


def test_well_separation_identical_sets_predicate_false():
    VA = [(0, 0), (1, 0)]
    ws = well_separation_vertices(VA, VA, m=2.0, lam=1.0, C=1.0, C0=100,
                                  disjoint=False)
    assert ws.predicate is False


def test_well_separation_lambda_limit():
    VA, VB = [(0, 0)], [(5, 0)]
    k1 = well_separation_vertices(VA, VB, 1.0, lam=1.0).kappa_m
    k2 = well_separation_vertices(VA, VB, 1.0, lam=10.0).kappa_m
    k3 = well_separation_vertices(VA, VB, 1.0, lam=50.0).kappa_m
    assert k1 > k2 > k3
    assert k3 < 1e-20


# -- sector membership -------------------------------------------------------

def test_sector_contains_and_edges():
    s = SectorA.from_points((4, 0), (0, 4))
    assert s.contains((1, 1))
    assert s.contains((0, 0))
    assert not s.contains((-1, 1))
    assert s.contains_segment((1, 0), (1, 1))
    assert not s.contains_segment((0, -1), (1, -1))


def test_sector_wide_segment_through_complement():
    # sector of width 3*pi/2 omitting the wedge around arg pi: endpoints
    # inside, but a segment passing left of the origin crosses the gap
    s = SectorA(arg_lo=-3 * math.pi / 4, arg_hi=3 * math.pi / 4)
    a, b = (-0.2, -1.0), (-0.2, 1.0)
    assert s.contains(a) and s.contains(b)
    assert s.contains_segment((2, -1), (2, 1))
    assert not s.contains_segment(a, b)


# -- interval machinery ------------------------------------------------------

def test_segment_wedge_interval_basic():
    w = Wedge(center_arg=0.0, half_width=math.pi / 4)
    iv = segment_wedge_interval((0.5, -2), (0.5, 2), w)
    lo, hi = iv
    assert lo == pytest.approx(0.375, abs=1e-9)    # enters at y=-0.5
    assert hi == pytest.approx(0.625, abs=1e-9)


def test_segment_cone_interval_matches_pointwise():
    rng = np.random.default_rng(1)
    for _ in range(300):
        apex = rng.uniform(-3, 3, 2)
        axis = direction(rng.uniform(-math.pi, math.pi))
        half = rng.uniform(0.1, 1.4)
        cone = Cone(apex=tuple(apex), axis=tuple(axis), half_aperture=half)
        a, b = rng.uniform(-6, 6, 2), rng.uniform(-6, 6, 2)
        iv = segment_cone_interval(a, b, cone)
        for t in np.linspace(0, 1, 41):
            z = a + t * (b - a)
            inside = cone.contains(z)
            in_iv = iv is not None and iv[0] - 1e-7 <= t <= iv[1] + 1e-7
            if inside != in_iv:
                # only boundary-grazing disagreements are tolerable
                u = z - apex
                if np.hypot(*u) > 1e-9:
                    margin = abs(angle_between(u, axis) - half)
                    assert margin < 1e-6
    # containment coverage helper
    assert interval_covered((0.2, 0.8), [(0.1, 0.5), (0.45, 0.9)])
    assert not interval_covered((0.2, 0.8), [(0.1, 0.5), (0.6, 0.9)])


# -- the distance-angle inequality -------------------------------------------

def test_distang_equal_points():
    assert distang_check((3, 1), (3, 1), q0=math.pi / 6, c0=0.2)


def test_distang_spec_example():
    assert distang_check((10, 0), (10, 1), q0=math.pi / 6, c0=0.2)


def test_distang_rejects_bad_hypotheses():
    with pytest.raises(PreconditionError):
        distang_check((10, 0), (-10, 1), q0=math.pi / 6, c0=0.2)


def test_distang_fuzz():
    # valid inputs: y = x + r*(cos phi, sin phi) rotated into the cone union,
    # constrained to angle(x, y) <= c0
    rng = np.random.default_rng(2024)
    q0, c0 = math.pi / 7, 0.18
    checked = 0
    trials = 0
    while checked < 20000 and trials < 200000:
        trials += 1
        x = rng.uniform(-40, 40, 2)
        if np.hypot(*x) < 1.0:
            continue
        cones = DirectedCones(v=tuple(x), q0=q0)
        which = "F" if rng.random() < 0.5 else "B"
        axis = cones.axis(which)
        dev = rng.uniform(-1, 1) * (math.pi / 2 - q0)
        c, s = math.cos(dev), math.sin(dev)
        d = np.array([c * axis[0] - s * axis[1], s * axis[0] + c * axis[1]])
        y = x + rng.uniform(0, 0.4) * np.hypot(*x) * d
        if angle_between(x, y) > c0:
            continue
        assert distang_check(x, y, q0, c0)
        checked += 1
    assert checked == 20000
