"""Exact planar geometry: angles, wedges, cones, sectors, Hausdorff distance,
boundary lattice paths, well-separation sums.

Angular conventions.  All membership tests are closed (boundary rays and
apexes included).  Multi-point angular comparisons use the branch of the
argument continuous on (ref - pi, ref + pi]; every function that needs a
branch takes or fixes an explicit reference direction.  A single absolute
tolerance ANGLE_TOL = 1e-12 governs angle comparisons throughout.

Interval machinery.  Segment-vs-cone and segment-vs-wedge tests reduce to
sub-intervals of the parameter t in [0,1]: a wedge of half-width < pi/2 is
an intersection of two half-planes (linear in t), a direction cone of
half-aperture < pi/2 is a half-plane intersected with one quadratic sign
condition.  Containment of a segment in a union of cones is then an exact
interval-cover check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .errors import InvalidParameterError, PreconditionError

ANGLE_TOL = 1e-12
PARAM_TOL = 1e-9            # tolerance on segment parameters in [0,1]


def _as_point(p) -> np.ndarray:
    a = np.asarray(p, dtype=float)
    if a.shape != (2,):
        raise InvalidParameterError(f"not a planar point: {p!r}")
    return a


def norm(p) -> float:
    a = _as_point(p)
    return float(math.hypot(a[0], a[1]))


def cross(a, b) -> float:
    return float(a[0] * b[1] - a[1] * b[0])


def dot(a, b) -> float:
    return float(a[0] * b[0] + a[1] * b[1])


def arg(p) -> float:
    """Principal argument in (-pi, pi]."""
    a = _as_point(p)
    if a[0] == 0.0 and a[1] == 0.0:
        raise InvalidParameterError("argument of the zero vector")
    return float(math.atan2(a[1], a[0]))


def wrap_to(angle: float, ref: float) -> float:
    """Representative of angle in (ref - pi, ref + pi]."""
    return angle - 2.0 * math.pi * math.floor((angle - ref + math.pi) / (2.0 * math.pi))


def arg_in_branch(p, ref: float) -> float:
    """Argument of p on the branch continuous at direction ref."""
    return wrap_to(arg(p), ref)


def perp(v) -> np.ndarray:
    """Counterclockwise right-angle rotation of v."""
    a = _as_point(v)
    return np.array([-a[1], a[0]])


def unit(v) -> np.ndarray:
    a = _as_point(v)
    n = math.hypot(a[0], a[1])
    if n == 0.0:
        raise InvalidParameterError("cannot normalize the zero vector")
    return a / n


def direction(theta: float) -> np.ndarray:
    return np.array([math.cos(theta), math.sin(theta)])


def angle_between(x, y) -> float:
    """Unoriented angle in [0, pi] between nonzero vectors."""
    a, b = _as_point(x), _as_point(y)
    if (a == 0).all() or (b == 0).all():
        raise InvalidParameterError("angle with the zero vector is undefined")
    return float(math.atan2(abs(cross(a, b)), dot(a, b)))


def triangle_area(x, y) -> float:
    """Area of the closed triangle with vertices 0, x, y."""
    return 0.5 * abs(cross(_as_point(x), _as_point(y)))


def point_in_origin_triangle(z, x, y, tol: float = ANGLE_TOL) -> bool:
    """Closed-triangle membership for T_{0,x,y} (degenerate triangles allowed)."""
    z, x, y = _as_point(z), _as_point(x), _as_point(y)
    d = cross(x, y)
    if abs(d) < tol:
        # degenerate: the triangle is the union of the two segments
        return (_point_on_segment(z, np.zeros(2), x, tol)
                or _point_on_segment(z, np.zeros(2), y, tol))
    s = cross(z, y) / d
    t = cross(x, z) / d
    scale = max(1.0, norm(x), norm(y))
    eps = tol * scale
    return s >= -eps and t >= -eps and s + t <= 1.0 + eps


def _point_on_segment(z, a, b, tol) -> bool:
    ab = b - a
    az = z - a
    L2 = dot(ab, ab)
    if L2 == 0.0:
        return norm(az) <= tol
    t = max(0.0, min(1.0, dot(az, ab) / L2))
    return norm(az - t * ab) <= tol * max(1.0, math.sqrt(L2))


# -- wedges rooted at a point --------------------------------------------


@dataclass(frozen=True)
class Wedge:
    """Closed angular wedge {z: |arg(z - apex) - center_arg| <= half_width},
    together with its apex (the paper's W_{v,c}, apex included)."""

    center_arg: float
    half_width: float
    apex: tuple = (0.0, 0.0)

    def __post_init__(self):
        if not 0.0 <= self.half_width < math.pi:
            raise InvalidParameterError(
                f"wedge half-width must be in [0, pi), got {self.half_width}")

    @classmethod
    def around(cls, v, half_width: float, apex=(0.0, 0.0)) -> "Wedge":
        return cls(center_arg=arg(v), half_width=half_width, apex=tuple(map(float, apex)))

    def contains(self, z) -> bool:
        z = _as_point(z)
        u = z - np.asarray(self.apex, dtype=float)
        if u[0] == 0.0 and u[1] == 0.0:
            return True
        d = wrap_to(arg(u) - self.center_arg, 0.0)
        return abs(d) <= self.half_width + ANGLE_TOL

    def boundary_rays(self) -> tuple[np.ndarray, np.ndarray]:
        """(low ray direction, high ray direction)."""
        return (direction(self.center_arg - self.half_width),
                direction(self.center_arg + self.half_width))


def wedge_contains(w: Wedge, z) -> bool:
    return w.contains(z)


# -- forward/backward cones at a circuit site ----------------------------


@dataclass(frozen=True)
class DirectedCones:
    """Forward and backward cones of half-aperture pi/2 - q0 at apex v,
    with axes +v_perp and -v_perp."""

    v: tuple
    q0: float

    def __post_init__(self):
        if norm(self.v) == 0.0:
            raise InvalidParameterError("cone apex direction must be nonzero")
        if not 0.0 < self.q0 < math.pi / 2:
            raise InvalidParameterError(f"q0 must be in (0, pi/2), got {self.q0}")

    @property
    def aperture(self) -> float:
        return math.pi / 2 - self.q0

    def axis(self, which: str) -> np.ndarray:
        a = unit(perp(self.v))
        return a if which == "F" else -a

    def contains(self, which: str, w) -> bool:
        if which not in ("F", "B"):
            raise InvalidParameterError(f"cone selector must be 'F' or 'B', got {which!r}")
        u = _as_point(w) - _as_point(self.v)
        if u[0] == 0.0 and u[1] == 0.0:
            return True
        return angle_between(u, self.axis(which)) <= self.aperture + ANGLE_TOL


def cone_contains(cones: DirectedCones, which: str, w) -> bool:
    return cones.contains(which, w)


def cone_around(apex, axis, half_aperture: float) -> "Cone":
    return Cone(apex=tuple(map(float, _as_point(apex))),
                axis=tuple(unit(axis)), half_aperture=half_aperture)


@dataclass(frozen=True)
class Cone:
    """Generic closed direction cone {w: angle(w - apex, axis) <= half_aperture},
    half_aperture < pi/2 so that the cone is convex."""

    apex: tuple
    axis: tuple
    half_aperture: float

    def __post_init__(self):
        if not 0.0 <= self.half_aperture < math.pi / 2:
            raise InvalidParameterError("cone half-aperture must be in [0, pi/2)")

    def contains(self, w) -> bool:
        u = _as_point(w) - np.asarray(self.apex)
        if u[0] == 0.0 and u[1] == 0.0:
            return True
        return angle_between(u, np.asarray(self.axis)) <= self.half_aperture + ANGLE_TOL


# -- angular sectors A_{x,y} ----------------------------------------------


@dataclass(frozen=True)
class SectorA:
    """Closed sector {z: arg_lo <= arg(z) <= arg_hi} ∪ {0} with
    0 < arg_hi - arg_lo < 2*pi, given by branch argument values."""

    arg_lo: float
    arg_hi: float

    def __post_init__(self):
        width = self.arg_hi - self.arg_lo
        if not 0.0 < width < 2.0 * math.pi:
            raise InvalidParameterError(
                f"sector width must lie in (0, 2*pi), got {width}")

    @classmethod
    def from_points(cls, x, y) -> "SectorA":
        """Sector running counterclockwise from arg(x) to arg(y); the branch
        is chosen so that arg(x) < arg(y)."""
        ax = arg(x)
        span = (arg(y) - ax) % (2.0 * math.pi)
        if span <= ANGLE_TOL or span >= 2.0 * math.pi - ANGLE_TOL:
            raise InvalidParameterError("sector endpoints are angularly equal")
        return cls(arg_lo=ax, arg_hi=ax + span)

    @property
    def width(self) -> float:
        return self.arg_hi - self.arg_lo

    @property
    def mid(self) -> float:
        return 0.5 * (self.arg_lo + self.arg_hi)

    def contains(self, z) -> bool:
        z = _as_point(z)
        if z[0] == 0.0 and z[1] == 0.0:
            return True
        d = wrap_to(arg(z) - self.mid, 0.0)
        return abs(d) <= 0.5 * self.width + ANGLE_TOL

    def contains_segment(self, a, b) -> bool:
        """True iff the closed segment [a, b] lies in the sector."""
        a, b = _as_point(a), _as_point(b)
        if not (self.contains(a) and self.contains(b)):
            return False
        if self.width <= math.pi + ANGLE_TOL:
            return True     # convex sector
        # non-convex: must additionally avoid the open complement wedge
        comp_lo = self.arg_hi
        comp_hi = self.arg_lo + 2.0 * math.pi
        r_lo = direction(comp_lo)
        r_hi = direction(comp_hi)
        # interior of the complement: cross(r_lo, z) > 0 and cross(z, r_hi) > 0
        iv = _interval_halfplane(a, b - a, np.array([-r_lo[1], r_lo[0]]), strict=True)
        if iv is None:
            return True
        iv2 = _interval_halfplane(a, b - a, np.array([r_hi[1], -r_hi[0]]), strict=True)
        if iv2 is None:
            return True
        lo = max(iv[0], iv2[0])
        hi = min(iv[1], iv2[1])
        if hi - lo <= PARAM_TOL:
            return True
        # the offending parameter range might still be the origin itself
        mid = a + 0.5 * (lo + hi) * (b - a)
        return bool(np.allclose(mid, 0.0, atol=ANGLE_TOL))

    def edge_ids_in(self, box) -> list[int]:
        """Edges of the box whose closed segment lies in the sector
        (the paper's E(A) rule)."""
        out = []
        for eid in range(box.edge_count):
            a, b = box.edge_vertices(eid)
            if self.contains_segment(a, b):
                out.append(eid)
        return out


# -- interval helpers -----------------------------------------------------


def _interval_halfplane(a, d, normal, strict: bool = False):
    """Parameter interval of {t in [0,1]: (a + t d) . normal >= 0}
    (or > 0 when strict); returns None when empty."""
    f0 = dot(a, normal)
    f1 = dot(d, normal)
    eps = 0.0 if strict else ANGLE_TOL * (1.0 + abs(f0) + abs(f1))
    if abs(f1) < 1e-300:
        if f0 >= -eps if not strict else f0 > eps:
            return (0.0, 1.0)
        return None
    t0 = -f0 / f1
    if f1 > 0:
        lo, hi = t0, 1.0
    else:
        lo, hi = 0.0, t0
    lo, hi = max(0.0, lo), min(1.0, hi)
    if strict:
        lo, hi = lo + 0.0, hi
        if hi - lo <= 0.0:
            return None
        return (lo, hi)
    if hi < lo - PARAM_TOL:
        return None
    return (max(0.0, lo), min(1.0, hi))


def _intersect(iv1, iv2):
    if iv1 is None or iv2 is None:
        return None
    lo, hi = max(iv1[0], iv2[0]), min(iv1[1], iv2[1])
    if hi < lo - PARAM_TOL:
        return None
    return (lo, min(max(lo, hi), 1.0))


def segment_wedge_interval(a, b, wedge: Wedge):
    """Sub-interval of [0,1] where the segment a->b lies in the wedge;
    requires half_width < pi/2 (convex case).  None when disjoint."""
    if wedge.half_width >= math.pi / 2:
        raise InvalidParameterError("segment_wedge_interval needs half-width < pi/2")
    a = _as_point(a) - np.asarray(wedge.apex)
    b = _as_point(b) - np.asarray(wedge.apex)
    d = b - a
    r_lo, r_hi = wedge.boundary_rays()
    # inside: cross(r_lo, z) >= 0 and cross(z, r_hi) >= 0
    n1 = np.array([-r_lo[1], r_lo[0]])
    n2 = np.array([r_hi[1], -r_hi[0]])
    return _intersect(_interval_halfplane(a, d, n1), _interval_halfplane(a, d, n2))


def segment_cone_interval(a, b, cone: Cone):
    """Sub-interval of [0,1] where the segment lies in the (convex) cone."""
    a = _as_point(a) - np.asarray(cone.apex)
    b = _as_point(b) - np.asarray(cone.apex)
    d = b - a
    axis = np.asarray(cone.axis)
    c = math.cos(cone.half_aperture)
    # u in cone  <=>  u.axis >= c * |u|  <=>  u.axis >= 0 and (u.axis)^2 >= c^2 |u|^2
    half = _interval_halfplane(a, d, axis)
    if half is None:
        return None
    # quadratic h(t) = (u.axis)^2 - c^2 |u|^2 >= 0 with u = a + t d
    pa = dot(a, axis)
    pd = dot(d, axis)
    A = pd * pd - c * c * dot(d, d)
    B = 2.0 * (pa * pd - c * c * dot(a, d))
    C = pa * pa - c * c * dot(a, a)
    scale = max(abs(A), abs(B), abs(C), 1e-30)
    eps = 1e-14 * scale
    sols = []
    if abs(A) < eps:
        if abs(B) < eps:
            sols = [(0.0, 1.0)] if C >= -eps else []
        else:
            t0 = -C / B
            sols = [(t0, 1.0)] if B > 0 else [(0.0, t0)]
    else:
        disc = B * B - 4.0 * A * C
        if disc <= 0:
            # no sign change: h >= 0 everywhere iff the parabola opens up
            sols = [(0.0, 1.0)] if A > 0 else []
        else:
            r = math.sqrt(disc)
            t1, t2 = (-B - r) / (2 * A), (-B + r) / (2 * A)
            t1, t2 = min(t1, t2), max(t1, t2)
            if A > 0:
                sols = [(0.0, t1), (t2, 1.0)]
            else:
                sols = [(t1, t2)]
    best = None
    for lo, hi in sols:
        iv = _intersect((max(0.0, lo), min(1.0, hi)), half)
        if iv is not None and (best is None or iv[1] - iv[0] > best[1] - best[0]):
            best = iv
    return best


def interval_covered(target, parts: Iterable, tol: float = PARAM_TOL) -> bool:
    """True iff the target interval is covered by the union of the parts."""
    if target is None:
        return True
    lo, hi = target
    if hi - lo <= tol:
        return True
    segs = sorted((p for p in parts if p is not None), key=lambda s: s[0])
    reach = lo
    for s_lo, s_hi in segs:
        if s_lo > reach + tol:
            return False
        reach = max(reach, s_hi)
        if reach >= hi - tol:
            return True
    return reach >= hi - tol


# -- Hausdorff distance ----------------------------------------------------


class PolySet:
    """A finite union of points and closed segments in the plane."""

    def __init__(self, points=None, segments=None):
        self.points = (np.asarray(points, dtype=float).reshape(-1, 2)
                       if points is not None and len(points) else np.zeros((0, 2)))
        self.segments = (np.asarray(segments, dtype=float).reshape(-1, 2, 2)
                         if segments is not None and len(segments) else np.zeros((0, 2, 2)))
        if self.points.shape[0] == 0 and self.segments.shape[0] == 0:
            raise InvalidParameterError("empty point/segment set")

    @classmethod
    def from_closed_polygon(cls, vertices) -> "PolySet":
        v = np.asarray(vertices, dtype=float)
        segs = np.stack([v, np.roll(v, -1, axis=0)], axis=1)
        return cls(segments=segs)

    @classmethod
    def from_polyline(cls, vertices) -> "PolySet":
        v = np.asarray(vertices, dtype=float)
        if v.shape[0] == 1:
            return cls(points=v)
        segs = np.stack([v[:-1], v[1:]], axis=1)
        return cls(segments=segs)

    def translated(self, z) -> "PolySet":
        z = _as_point(z)
        pts = self.points + z if self.points.size else None
        segs = self.segments + z if self.segments.size else None
        return PolySet(points=pts, segments=segs)

    def sample_vertices(self) -> np.ndarray:
        chunks = []
        if self.points.size:
            chunks.append(self.points)
        if self.segments.size:
            chunks.append(self.segments.reshape(-1, 2))
        return np.vstack(chunks)


def _dist_points_to_pieces(pts: np.ndarray, target: PolySet) -> np.ndarray:
    """(n_pts, n_pieces) distances to every piece (segments then points)."""
    cols = []
    if target.segments.size:
        a = target.segments[:, 0, :]
        ab = target.segments[:, 1, :] - a
        ap = pts[:, None, :] - a[None, :, :]
        denom = (ab * ab).sum(-1)
        denom = np.where(denom == 0.0, 1.0, denom)
        t = (ap * ab[None, :, :]).sum(-1) / denom
        t = np.clip(t, 0.0, 1.0)
        closest = a[None, :, :] + t[:, :, None] * ab[None, :, :]
        cols.append(np.sqrt(((pts[:, None, :] - closest) ** 2).sum(-1)))
    if target.points.size:
        cols.append(np.sqrt(((pts[:, None, :] - target.points[None, :, :]) ** 2).sum(-1)))
    return np.concatenate(cols, axis=1)


def _dist_points_to_set(pts: np.ndarray, target: PolySet) -> np.ndarray:
    """Euclidean distance of each point to the target set (vectorized)."""
    return _dist_points_to_pieces(pts, target).min(axis=1)


def directed_hausdorff(source: PolySet, target: PolySet, tol: float = 1e-9) -> float:
    """sup over source of distance to target, certified within tol.

    Vertex distances are exact.  Each source segment carries two certified
    upper bounds for its interior supremum: the Lipschitz bound
    (d(a)+d(b)+|ab|)/2, and (by convexity of the distance to any single
    piece) min over target pieces of max(d_piece(a), d_piece(b)).  Segments
    are bisected level-synchronously (one vectorized distance evaluation
    for all midpoints of a level) until neither bound can beat the running
    maximum by more than tol.
    """
    if not source.segments.size:
        return float(_dist_points_to_set(source.sample_vertices(), target).max())

    A = source.segments[:, 0, :]
    B = source.segments[:, 1, :]
    RA = _dist_points_to_pieces(A, target)
    RB = _dist_points_to_pieces(B, target)
    best = float(min(RA.min(axis=1).max(), np.inf))
    best = max(best, float(RB.min(axis=1).max()))
    if source.points.size:
        best = max(best, float(_dist_points_to_set(source.points, target).max()))

    for _ in range(200):                      # level cap; L halves each level
        da = RA.min(axis=1)
        db = RB.min(axis=1)
        L = np.hypot(B[:, 0] - A[:, 0], B[:, 1] - A[:, 1])
        bound = np.minimum(0.5 * (da + db + L), np.maximum(RA, RB).min(axis=1))
        live = bound > best + tol
        if not live.any():
            break
        A, B, RA, RB = A[live], B[live], RA[live], RB[live]
        M = 0.5 * (A + B)
        RM = _dist_points_to_pieces(M, target)
        best = max(best, float(RM.min(axis=1).max()))
        A = np.concatenate([A, M])
        B = np.concatenate([M, B])
        RA = np.concatenate([RA, RM])
        RB = np.concatenate([RM, RB])
    return best


def hausdorff_distance(A, B, tol: float = 1e-9) -> float:
    """Hausdorff distance between two finite point/segment sets."""
    A = A if isinstance(A, PolySet) else PolySet(points=A)
    B = B if isinstance(B, PolySet) else PolySet(points=B)
    return max(directed_hausdorff(A, B, tol), directed_hausdorff(B, A, tol))


# -- boundary lattice paths of a ray ---------------------------------------


def _arg_le(v: tuple, u: tuple) -> bool:
    """arg(v) <= arg(u) for lattice points in the closed first quadrant,
    exact integer arithmetic (cross(v, u) >= 0 iff u is ccw of v)."""
    return v[0] * u[1] - v[1] * u[0] >= 0


def _arg_ge(v: tuple, u: tuple) -> bool:
    return v[0] * u[1] - v[1] * u[0] <= 0


def _rot_cw(p: tuple, k: int) -> tuple:
    """Rotate a lattice point clockwise by k quarter-turns."""
    x, y = p
    for _ in range(k % 4):
        x, y = y, -x
    return (x, y)


def _rot_ccw(p: tuple, k: int) -> tuple:
    x, y = p
    for _ in range(k % 4):
        x, y = -y, x
    return (x, y)


def boundary_path(u, side: str, length: int) -> list[tuple[int, int]]:
    """First length+1 vertices of the clockwise (side '-') or
    counterclockwise (side '+') boundary lattice path of the ray through u.

    For arg(u) in [0, pi/2) the '-' path starts at the origin and steps
    (0,1) whenever the result keeps arg <= arg(u), else (1,0); the '+' path
    steps (1,0) whenever the result keeps arg >= arg(u), else (0,1).
    General directions are handled by quarter-turn conjugation.
    """
    if side not in ("+", "-"):
        raise InvalidParameterError(f"side must be '+' or '-', got {side!r}")
    ux, uy = int(round(float(u[0]))), int(round(float(u[1])))
    if (ux, uy) == (0, 0):
        raise InvalidParameterError("ray direction must be nonzero")
    theta = math.atan2(uy, ux) % (2.0 * math.pi)
    k = int(theta // (math.pi / 2))        # quarter turns to undo
    uq = _rot_cw((ux, uy), k)              # now in the closed first quadrant, arg < pi/2
    path = [(0, 0)]
    cur = (0, 0)
    for _ in range(length):
        if side == "-":
            cand = (cur[0], cur[1] + 1)
            cur = cand if _arg_le(cand, uq) else (cur[0] + 1, cur[1])
        else:
            cand = (cur[0] + 1, cur[1])
            cur = cand if _arg_ge(cand, uq) else (cur[0], cur[1] + 1)
        path.append(cur)
    return [_rot_ccw(p, k) for p in path]


# -- well-separation (ratio-weak-mixing bookkeeping) ------------------------


@dataclass(frozen=True)
class WellSeparation:
    kappa_m: float
    phi_m: int
    predicate: Optional[bool]


def well_separation_vertices(A_vertices, B_vertices, m: float, lam: float,
                             C: Optional[float] = None, C0: Optional[float] = None,
                             disjoint: Optional[bool] = None) -> WellSeparation:
    """kappa_m = sum over vertex pairs at distance >= m of exp(-lam * d);
    phi_m = number of vertex pairs at distance <= m.  The predicate
    (disjoint and kappa <= 1/(2C) and phi <= C0) is evaluated when C, C0
    are supplied; pass the edge-set disjointness explicitly."""
    if lam <= 0:
        raise InvalidParameterError("lambda must be positive")
    A = np.asarray(sorted(set(map(tuple, A_vertices))), dtype=float)
    B = np.asarray(sorted(set(map(tuple, B_vertices))), dtype=float)
    if A.size == 0 or B.size == 0:
        raise InvalidParameterError("vertex sets must be nonempty")
    d = np.sqrt(((A[:, None, :] - B[None, :, :]) ** 2).sum(-1)).ravel()
    kappa = float(np.exp(-lam * d[d >= m]).sum())
    phi = int((d <= m).sum())
    pred = None
    if C is not None and C0 is not None:
        if disjoint is None:
            raise InvalidParameterError("predicate needs the disjointness flag")
        pred = bool(disjoint and kappa <= 1.0 / (2.0 * C) and phi <= C0)
    return WellSeparation(kappa_m=kappa, phi_m=phi, predicate=pred)


def well_separation(box, A_edges: Iterable[int], B_edges: Iterable[int],
                    m: float, lam: float, C: Optional[float] = None,
                    C0: Optional[float] = None) -> WellSeparation:
    """Well-separation quantities for two edge sets of a box."""
    A_edges, B_edges = set(A_edges), set(B_edges)
    return well_separation_vertices(
        edge_set_vertices(box, A_edges), edge_set_vertices(box, B_edges),
        m, lam, C=C, C0=C0, disjoint=not (A_edges & B_edges),
    )


def edge_set_vertices(box, eids: Iterable[int]) -> list[tuple[int, int]]:
    """Vertices incident to the given edges (the paper's V(A))."""
    verts = set()
    for eid in eids:
        a, b = box.edge_vertices(eid)
        verts.add(a)
        verts.add(b)
    return sorted(verts)


# -- the distance-angle inequality near regeneration sites ------------------


def distang_check(x, y, q0: float, c0: float) -> bool:
    """Evaluate ||y - x|| <= csc(q0/2) ||x|| angle(x, y) under the lemma's
    hypotheses (angle(x,y) <= c0 and y in the forward/backward cone union
    at x); raises when the hypotheses fail."""
    x, y = _as_point(x), _as_point(y)
    if np.array_equal(x, y):
        return True
    ang = angle_between(x, y)
    if ang > c0 + ANGLE_TOL:
        raise PreconditionError(f"angle {ang} exceeds c0={c0}")
    cones = DirectedCones(v=tuple(x), q0=q0)
    if not (cones.contains("F", y) or cones.contains("B", y)):
        raise PreconditionError("y is outside the cone union at x")
    bound = norm(x) * ang / math.sin(q0 / 2.0)
    return norm(y - x) <= bound * (1.0 + 1e-12) + ANGLE_TOL
