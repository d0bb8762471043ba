"""Regeneration structure of circuits and point-to-point connections.

A circuit site v is a regeneration site when, inside the angular wedge of
half-width c0 around the ray through v, the whole circuit stays in the
union of the forward and backward cones of half-aperture pi/2 - q0 at v:
the circuit then crosses that radial ray only at v.  All membership is
tested on full closed edge segments with the interval machinery of the
geometry module, never on lattice points alone.

Connection regeneration sites play the same role for a connection between
two points x and y: outside a ball of radius K around the site the cluster
lies in two aperture-delta cones aligned with y - x, and inside the ball
the cluster equals a fixed local crossing pattern.  The sites decompose
the connection into clusters whose displacement vectors give MAXREG.

SEARCH/SWEEP locates well-aligned outward-facing pairs: a sweep from a
site x walks the regeneration sites in one angular direction until first
leaving the half-plane (bounded by the boundary line of the 2*q0-aperture
cone at x nearest the origin) that contains the origin; the output is good
when it lands inside that cone.  Sweeps alternate directions until the
first good output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .circuits import Circuit
from .errors import (
    InternalError,
    InvalidParameterError,
    PreconditionError,
)
from .geometry import (
    ANGLE_TOL,
    Cone,
    SectorA,
    Wedge,
    arg,
    interval_covered,
    norm,
    perp,
    point_in_origin_triangle,
    segment_cone_interval,
    segment_wedge_interval,
    unit,
)
from .lattice import ConnectedSet
from .wulff import ShapeConstants

TWO_PI = 2.0 * math.pi


def _as_segments(gamma) -> tuple[np.ndarray, list]:
    """(segments array (m,2,2), vertex list) from a circuit, connected set,
    or vertex path."""
    if isinstance(gamma, Circuit):
        return gamma.segments(), list(gamma.vertices)
    if isinstance(gamma, ConnectedSet):
        verts = sorted(gamma.vertices)
        return gamma.segments(), verts
    verts = [(int(p[0]), int(p[1])) for p in gamma]
    segs = np.array([[verts[k], verts[k + 1]] for k in range(len(verts) - 1)],
                    dtype=float).reshape(-1, 2, 2)
    return segs, verts


# -- circuit regeneration sites ----------------------------------------------


def is_regeneration_site(gamma, v, constants: ShapeConstants,
                         vertex_check: bool = True) -> bool:
    """Does every point of gamma inside the wedge W_{v,c0} lie in the
    forward/backward cone union at v?"""
    segs, verts = _as_segments(gamma)
    v = (int(v[0]), int(v[1]))
    if vertex_check and v not in set(verts):
        raise InvalidParameterError(f"{v} is not a vertex of the set")
    if v == (0, 0):
        raise InvalidParameterError("regeneration site at the origin is undefined")
    return _site_condition(segs, v, constants.q0, constants.c0)


def _wedge_prefilter(segs: np.ndarray, center: float, half_width: float) -> np.ndarray:
    """Mask of segments whose angular extent can meet the wedge band.  The
    arguments of a segment not through the origin fill exactly the short
    interval between its endpoint arguments (convexity), so the test is
    exact up to tolerance."""
    a_args = np.arctan2(segs[:, 0, 1], segs[:, 0, 0])
    b_args = np.arctan2(segs[:, 1, 1], segs[:, 1, 0])
    da = (a_args - center + math.pi) % TWO_PI - math.pi
    db = (b_args - center + math.pi) % TWO_PI - math.pi
    span = np.abs((a_args - b_args + math.pi) % TWO_PI - math.pi)
    short = np.abs(da - db) <= span + 1e-12     # interval does not wrap past center
    inside = (np.sign(da) != np.sign(db)) & short
    dist = np.minimum(np.abs(da), np.abs(db))
    near_origin = np.minimum(np.abs(segs[:, 0]).max(axis=1),
                             np.abs(segs[:, 1]).max(axis=1)) <= 1.5
    return inside | (dist <= half_width + 1e-9) | near_origin


def _site_condition(segs: np.ndarray, v, q0: float, c0: float) -> bool:
    wedge = Wedge(center_arg=arg(v), half_width=c0)
    axis = unit(perp(v))
    aperture = math.pi / 2 - q0
    cone_f = Cone(apex=tuple(map(float, v)), axis=tuple(axis), half_aperture=aperture)
    cone_b = Cone(apex=tuple(map(float, v)), axis=tuple(-axis), half_aperture=aperture)
    keep = _wedge_prefilter(segs, wedge.center_arg, wedge.half_width)
    for a, b in segs[keep]:
        iw = segment_wedge_interval(a, b, wedge)
        if iw is None or iw[1] - iw[0] < 1e-12:
            continue
        i_f = segment_cone_interval(a, b, cone_f)
        i_b = segment_cone_interval(a, b, cone_b)
        if not interval_covered(iw, [i_f, i_b]):
            return False
    return True


@dataclass(frozen=True)
class RegenReport:
    """Regeneration sites of a circuit (or of its full open cluster) with
    the angular-gap statistics."""

    sites: tuple
    mode: str
    theta_max: float
    gaps: tuple
    degenerate: bool        # fewer than two sites: theta_max is the 2*pi sentinel

    @property
    def site_args(self) -> list:
        return sorted(arg(s) % TWO_PI for s in self.sites)


def rg_set(circuit: Circuit, constants: ShapeConstants, mode: str = "circuit",
           cfg=None) -> RegenReport:
    """Regeneration sites of the circuit; in cluster mode the condition is
    tested against the full open cluster containing the circuit.

    Candidate sites are circuit vertices in both modes (a cluster point off
    the circuit sees the circuit cross its radial ray away from itself, so
    it can never satisfy the condition); this keeps the cluster-mode site
    set inside the circuit-mode one.
    """
    if mode not in ("circuit", "cluster"):
        raise InvalidParameterError(f"mode must be 'circuit' or 'cluster', got {mode!r}")
    if mode == "cluster":
        if cfg is None:
            raise InvalidParameterError("cluster mode needs the configuration")
        from .lattice import open_component
        comp = open_component(cfg, circuit.vertices[0])
        segs, _ = _as_segments(comp)
    else:
        segs = circuit.segments()
    sites = tuple(v for v in circuit.vertices
                  if v != (0, 0) and _site_condition(segs, v, constants.q0,
                                                     constants.c0))
    theta, gaps, degen = _theta_from_sites(sites)
    return RegenReport(sites=sites, mode=mode, theta_max=theta,
                       gaps=tuple(gaps), degenerate=degen)


def rg_set_translated(circuit: Circuit, constants: ShapeConstants, cfg, cen,
                      mode: str = "circuit") -> RegenReport:
    """rg_set of the circuit recentred by -cen (cluster translated too)."""
    shifted = circuit.translated((-cen[0], -cen[1]))
    if mode == "circuit":
        return rg_set(shifted, constants, "circuit")
    from .lattice import open_component
    comp = open_component(cfg, circuit.vertices[0])
    segs = comp.segments() - np.array([cen[0], cen[1]], dtype=float)
    sites = tuple(v for v in shifted.vertices
                  if v != (0, 0) and _site_condition(segs, v, constants.q0,
                                                     constants.c0))
    theta, gaps, degen = _theta_from_sites(sites)
    return RegenReport(sites=sites, mode="cluster", theta_max=theta,
                       gaps=tuple(gaps), degenerate=degen)


def _theta_from_sites(sites: Sequence) -> tuple[float, list, bool]:
    args = sorted({arg(s) % TWO_PI for s in sites})
    if len(args) <= 1:
        return TWO_PI, [TWO_PI], True
    gaps = [b - a for a, b in zip(args, args[1:])]
    gaps.append(args[0] + TWO_PI - args[-1])
    return max(gaps), gaps, False


def theta_rg_max(site_args: Iterable[float]) -> float:
    """Largest circular gap between consecutive site arguments; 2*pi when
    fewer than two distinct arguments exist (sentinel)."""
    args = sorted({a % TWO_PI for a in site_args})
    if len(args) <= 1:
        return TWO_PI
    gaps = [b - a for a, b in zip(args, args[1:])]
    gaps.append(args[0] + TWO_PI - args[-1])
    return max(gaps)


def theta_rg_max_grid(site_args: Iterable[float], grid: int = 1 << 14) -> float:
    """Direct evaluation of the sup definition on an angular grid: the
    widest wedge rooted at the origin containing no site."""
    args = np.sort(np.asarray([a % TWO_PI for a in set(site_args)]))
    if args.size <= 1:
        return TWO_PI
    centres = TWO_PI * np.arange(grid) / grid
    d = np.abs(centres[:, None] - args[None, :])
    d = np.minimum(d, TWO_PI - d)
    return float(2.0 * d.min(axis=1).max())


# -- connection regeneration ---------------------------------------------------


@dataclass(frozen=True)
class ConnectionCluster:
    vertices: tuple
    boundary_sites: tuple
    kind: str                  # 'internal', 'x_end', 'y_end', 'whole'
    displacement: tuple

    @property
    def displacement_norm(self) -> float:
        return math.hypot(*self.displacement)


@dataclass(frozen=True)
class CRGReport:
    sites: tuple
    clusters: tuple
    maxreg: float
    K: float
    delta: float
    phi_mode: str


def _greedy_ray_path(d: np.ndarray, steps: int) -> list:
    """Lattice path from the origin hugging the ray of direction d."""
    d = unit(d)
    path = [(0, 0)]
    cur = np.zeros(2)
    for _ in range(steps):
        cands = [cur + np.array(s) for s in ((1, 0), (-1, 0), (0, 1), (0, -1))]
        # pick the step that advances along d while staying near the ray
        best = max(cands, key=lambda z: (z @ d) - 2.0 * abs(z[0] * d[1] - z[1] * d[0]))
        cur = best
        path.append((int(cur[0]), int(cur[1])))
    return path


def default_crossing_pattern(d, delta: float, K_max: int = 6):
    """Smallest K in 1..K_max with a crossing path through the origin whose
    edges stay in E*(B_K) and which meets the boundary circle inside both
    aperture-delta wedges; returns (K, edge set translated to the origin)."""
    d = np.asarray(d, dtype=float)
    if norm(d) == 0:
        raise InvalidParameterError("connection direction must be nonzero")
    for K in range(1, K_max + 1):
        fwd = _greedy_ray_path(d, K + 1)
        bwd = _greedy_ray_path(-d, K + 1)
        verts = bwd[::-1] + fwd[1:]
        edges = set()
        ok = True
        for a, b in zip(verts, verts[1:]):
            if _seg_point_dist(a, b, (0.0, 0.0)) > K:
                continue            # drop edges entirely outside the ball
            edges.add((a, b) if a <= b else (b, a))
        if not edges:
            ok = False
        if ok and _pattern_admissible(frozenset(edges), d, delta, K):
            return K, frozenset(edges)
    raise InvalidParameterError(
        f"no crossing pattern found for delta={delta} with K <= {K_max}")


def _seg_point_dist(a, b, p) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    p = np.asarray(p, dtype=float)
    ab = b - a
    L2 = float(ab @ ab)
    if L2 == 0:
        return float(np.hypot(*(p - a)))
    t = np.clip(float((p - a) @ ab) / L2, 0.0, 1.0)
    return float(np.hypot(*(p - (a + t * ab))))


def _pattern_crosses(edges, centre, K: float, d, delta: float) -> bool:
    """Does the edge set meet the circle of radius K about centre inside
    both aperture-delta wedges around +-d?"""
    hit_f = hit_b = False
    w_f = Wedge(center_arg=arg(d), half_width=delta, apex=tuple(centre))
    w_b = Wedge(center_arg=arg(-np.asarray(d)), half_width=delta, apex=tuple(centre))
    c = np.asarray(centre, dtype=float)
    for a, b in edges:
        for z in _seg_circle_points(np.asarray(a, float), np.asarray(b, float), c, K):
            if w_f.contains(z):
                hit_f = True
            if w_b.contains(z):
                hit_b = True
    return hit_f and hit_b


def _seg_circle_points(a, b, centre, K) -> list:
    u = a - centre
    e = b - a
    A = float(e @ e)
    if A == 0:
        return []
    B = 2.0 * float(u @ e)
    C = float(u @ u) - K * K
    disc = B * B - 4 * A * C
    if disc < 0:
        return []
    r = math.sqrt(disc)
    out = []
    for t in ((-B - r) / (2 * A), (-B + r) / (2 * A)):
        if -1e-12 <= t <= 1 + 1e-12:
            out.append(a + t * e)
    return out


def connection_regeneration(gamma, x, y, delta: float,
                            K: Optional[float] = None,
                            phi: Union[str, frozenset] = "ALL") -> CRGReport:
    """Connection regeneration sites and clusters of a connected set.

    phi='ALL' accepts any admissible local crossing pattern (the union over
    patterns); a frozenset of origin-translated edges pins one pattern.
    When the set has no sites it forms a single cluster whose displacement
    is y - x by convention.
    """
    segs, verts = _as_segments(gamma)
    vert_set = set(verts)
    x = (int(x[0]), int(x[1]))
    y = (int(y[0]), int(y[1]))
    if x == y:
        raise PreconditionError("connection endpoints must be distinct")
    if x not in vert_set or y not in vert_set:
        raise PreconditionError("x and y must belong to the connected set")
    d = np.array([y[0] - x[0], y[1] - x[1]], dtype=float)

    if K is None:
        K, _ = default_crossing_pattern(d, delta)
    K = float(K)

    edges = set()
    for a, b in segs:
        ta = (int(round(a[0])), int(round(a[1])))
        tb = (int(round(b[0])), int(round(b[1])))
        edges.add((ta, tb) if ta <= tb else (tb, ta))

    dhat = unit(d)
    sites = []
    for v in verts:
        if _is_connection_site(segs, edges, v, d, delta, K, phi):
            sites.append(v)
    sites.sort(key=lambda s: ((s[0] - x[0]) * dhat[0] + (s[1] - x[1]) * dhat[1],
                              s))
    site_set = set(sites)

    clusters = _connection_clusters(vert_set, edges, site_set, x, y, dhat)
    maxreg = max((c.displacement_norm for c in clusters), default=0.0)
    return CRGReport(sites=tuple(sites), clusters=tuple(clusters),
                     maxreg=maxreg, K=K, delta=delta,
                     phi_mode="ALL" if isinstance(phi, str) else "fixed")


def _is_connection_site(segs, edges, v, d, delta, K, phi) -> bool:
    vf = np.asarray(v, dtype=float)
    w_f = Wedge(center_arg=arg(d), half_width=delta, apex=tuple(vf))
    w_b = Wedge(center_arg=arg(-d), half_width=delta, apex=tuple(vf))
    # (a) outside the ball, the set lies in the two cones
    for a, b in segs:
        inside = _seg_ball_interval(a, b, vf, K)
        outside = _complement_intervals(inside)
        for piece in outside:
            if piece[1] - piece[0] < 1e-12:
                continue
            sub_a = a + piece[0] * (b - a)
            sub_b = a + piece[1] * (b - a)
            i_f = segment_wedge_interval(sub_a, sub_b, w_f)
            i_b = segment_wedge_interval(sub_a, sub_b, w_b)
            if not interval_covered((0.0, 1.0), [i_f, i_b]):
                return False
    # (b) the local pattern inside the ball
    local = frozenset(
        ((a[0] - v[0], a[1] - v[1]), (b[0] - v[0], b[1] - v[1]))
        for a, b in edges
        if _seg_point_dist(a, b, v) <= K + 1e-12
    )
    if isinstance(phi, str):            # ALL: any admissible pattern
        return _pattern_admissible(local, d, delta, K)
    return local == phi


def _seg_ball_interval(a, b, centre, K):
    u = a - centre
    e = b - a
    A = float(e @ e)
    if A == 0:
        return None
    B = 2.0 * float(u @ e)
    C = float(u @ u) - K * K
    disc = B * B - 4 * A * C
    if disc <= 0:
        return None
    r = math.sqrt(disc)
    lo = (-B - r) / (2 * A)
    hi = (-B + r) / (2 * A)
    lo, hi = max(0.0, lo), min(1.0, hi)
    if hi <= lo:
        return None
    return (lo, hi)


def _complement_intervals(inside):
    if inside is None:
        return [(0.0, 1.0)]
    out = []
    if inside[0] > 0.0:
        out.append((0.0, inside[0]))
    if inside[1] < 1.0:
        out.append((inside[1], 1.0))
    return out


def _pattern_admissible(local: frozenset, d, delta, K) -> bool:
    """Is the origin-translated edge set an admissible crossing pattern: a
    self-avoiding path through 0 meeting the boundary circle inside both
    aperture-delta wedges?"""
    if not local:
        return False
    deg: dict = {}
    for a, b in local:
        deg[a] = deg.get(a, 0) + 1
        deg[b] = deg.get(b, 0) + 1
    if (0, 0) not in deg:
        return False
    if any(c > 2 for c in deg.values()):
        return False
    ends = [p for p, c in deg.items() if c == 1]
    if len(ends) != 2 or len(local) != len(deg) - 1:
        return False                     # not a single open path
    # connectivity
    adj: dict = {}
    for a, b in local:
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    seen = {ends[0]}
    stack = [ends[0]]
    while stack:
        cur = stack.pop()
        for w in adj[cur]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    if len(seen) != len(deg):
        return False
    return _pattern_crosses(local, (0.0, 0.0), K, d, delta)


def _connection_clusters(vert_set, edges, site_set, x, y, dhat):
    adj: dict = {}
    for a, b in edges:
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)

    proj = lambda p: (p[0] - x[0]) * dhat[0] + (p[1] - x[1]) * dhat[1]

    comp_of: dict = {}
    comps: list[dict] = []
    for start in sorted(vert_set - site_set):
        if start in comp_of:
            continue
        cid = len(comps)
        comp = {"vertices": set(), "boundary": set()}
        comps.append(comp)
        stack = [start]
        comp_of[start] = cid
        while stack:
            cur = stack.pop()
            comp["vertices"].add(cur)
            for w in adj.get(cur, ()):
                if w in site_set:
                    comp["boundary"].add(w)
                elif w not in comp_of:
                    comp_of[w] = cid
                    stack.append(w)
    # edges joining two sites form their own clusters
    site_edges = [(a, b) for a, b in edges if a in site_set and b in site_set]

    out = []
    for comp in comps:
        verts = tuple(sorted(comp["vertices"]))
        boundary = tuple(sorted(comp["boundary"]))
        has_x = x in comp["vertices"]
        has_y = y in comp["vertices"]
        if has_x and has_y:
            disp = (y[0] - x[0], y[1] - x[1])
            kind = "whole"
        elif has_x or has_y:
            if len(boundary) != 1:
                raise InternalError(
                    f"end cluster must touch exactly one site, got {len(boundary)}")
            r = boundary[0]
            disp = ((r[0] - x[0], r[1] - x[1]) if has_x
                    else (y[0] - r[0], y[1] - r[1]))
            kind = "x_end" if has_x else "y_end"
        else:
            if len(boundary) != 2:
                raise InternalError(
                    f"internal cluster must touch exactly two sites, got {len(boundary)}")
            f, b = sorted(boundary, key=proj)
            disp = (b[0] - f[0], b[1] - f[1])
            kind = "internal"
        out.append(ConnectionCluster(vertices=verts, boundary_sites=boundary,
                                     kind=kind, displacement=disp))
    for a, b in site_edges:
        f, bb = sorted((a, b), key=proj)
        out.append(ConnectionCluster(vertices=(), boundary_sites=(a, b),
                                     kind="internal",
                                     displacement=(bb[0] - f[0], bb[1] - f[1])))
    # endpoints that are themselves sites contribute displacement 0
    return tuple(out)


# -- well-aligned / outward-facing pairs and SEARCH ----------------------------


def pair_predicates(circuit: Circuit, constants: ShapeConstants, u, v,
                    rg: Optional[Sequence] = None) -> dict:
    """well_aligned and outward_facing for an ordered site pair
    (arg(u) < arg(v) counterclockwise)."""
    u = (int(u[0]), int(u[1]))
    v = (int(v[0]), int(v[1]))
    sites = tuple(rg) if rg is not None else rg_set(circuit, constants).sites
    if u not in sites or v not in sites:
        raise PreconditionError("both pair members must be regeneration sites")
    return {
        "well_aligned": _well_aligned(u, v, constants.q0),
        "outward_facing": _outward_facing(u, v, sites),
    }


def _well_aligned(u, v, q0: float) -> bool:
    aperture = math.pi / 2 - 2.0 * q0
    cf = Cone(apex=tuple(map(float, u)), axis=tuple(unit(perp(u))),
              half_aperture=aperture)
    cb = Cone(apex=tuple(map(float, v)), axis=tuple(-unit(perp(v))),
              half_aperture=aperture)
    return cf.contains(v) or cb.contains(u)


def _outward_facing(u, v, sites) -> bool:
    sector = SectorA.from_points(u, v)
    for s in sites:
        if s in (u, v):
            continue
        if sector.contains(s) and not point_in_origin_triangle(s, u, v):
            return False
    return True


@dataclass(frozen=True)
class SweepStep:
    site: tuple
    unrolled_arg: float
    direction: str          # '+' or '-'
    good: Optional[bool]    # None for the seed site


@dataclass(frozen=True)
class SearchResult:
    pair: Optional[tuple]
    trace: tuple
    failure: Optional[str]          # None on success

    @property
    def succeeded(self) -> bool:
        return self.pair is not None


def _sweep(sites_sorted, args_sorted, x, x_arg_unrolled, sign: str, q0: float):
    """One sweep from site x: scan sites in the given angular direction and
    return (site, unrolled_arg, good) for the first one outside the origin
    half-plane of the cone boundary line, or None when the scan wraps."""
    aperture = math.pi / 2 - 2.0 * q0
    axis = unit(perp(x)) if sign == "+" else -unit(perp(x))
    c, s = math.cos(aperture), math.sin(aperture)
    rot_p = np.array([c * axis[0] - s * axis[1], s * axis[0] + c * axis[1]])
    rot_m = np.array([c * axis[0] + s * axis[1], -s * axis[0] + c * axis[1]])
    xf = np.asarray(x, dtype=float)

    def ray_dist(dvec):
        t = max(0.0, float(-(xf @ dvec)))
        return float(np.hypot(*(xf + t * dvec)))

    d_near = rot_p if ray_dist(rot_p) <= ray_dist(rot_m) else rot_m
    # H = origin side of the line through x with direction d_near
    nrm = np.array([-d_near[1], d_near[0]])
    side0 = float(-(xf @ nrm))           # signed distance of the origin to the line
    sgn0 = 1.0 if side0 >= 0.0 else -1.0
    cone = Cone(apex=tuple(xf), axis=tuple(axis), half_aperture=aperture)

    n = len(sites_sorted)
    base = arg(x) % TWO_PI
    # index of x in the sorted-by-arg cyclic order
    start = None
    for i, site in enumerate(sites_sorted):
        if site == x:
            start = i
            break
    if start is None:
        raise PreconditionError("sweep input must be a regeneration site")
    step = 1 if sign == "+" else -1
    for k in range(1, n):
        i = (start + step * k) % n
        site = sites_sorted[i]
        a = args_sorted[i]
        delta = (a - base) % TWO_PI if sign == "+" else (base - a) % TWO_PI
        if delta == 0.0:
            delta = TWO_PI      # same argument, full wrap in this direction
        z = np.asarray(site, dtype=float)
        side = float((z - xf) @ nrm)
        if side * sgn0 <= 1e-9:           # outside H (or on the line)
            unrolled = x_arg_unrolled + (delta if sign == "+" else -delta)
            return site, unrolled, cone.contains(site)
    return None


def search_pertinent_pair(circuit: Circuit, constants: ShapeConstants,
                          rg: RegenReport, u_direction=(1.0, 0.0)) -> SearchResult:
    """SEARCH: alternate counterclockwise and clockwise sweeps from the
    first site clockwise of the input direction until a sweep is good."""
    sites = rg.sites
    if not sites:
        return SearchResult(pair=None, trace=(), failure="no regeneration sites")
    order = sorted(range(len(sites)),
                   key=lambda i: (arg(sites[i]) % TWO_PI, norm(sites[i]), sites[i]))
    sites_sorted = [sites[i] for i in order]
    args_sorted = [arg(s) % TWO_PI for s in sites_sorted]

    ua = arg(u_direction) % TWO_PI
    best_i, best_delta = 0, TWO_PI + 1
    for i, a in enumerate(args_sorted):
        delta = (ua - a) % TWO_PI        # clockwise distance from u to the site
        if delta < best_delta:
            best_i, best_delta = i, delta
    x0 = sites_sorted[best_i]
    trace = [SweepStep(site=x0, unrolled_arg=args_sorted[best_i],
                       direction="", good=None)]
    cur, cur_arg = x0, args_sorted[best_i]
    sign = "+"
    for _ in range(2 * len(sites_sorted) + 4):
        res = _sweep(sites_sorted, args_sorted, cur, cur_arg, sign, constants.q0)
        if res is None:
            return SearchResult(pair=None, trace=tuple(trace),
                                failure=f"sweep {sign} failed")
        site, unrolled, good = res
        trace.append(SweepStep(site=site, unrolled_arg=unrolled,
                               direction=sign, good=good))
        if good:
            # order by increasing argument: '+' found the site counterclockwise
            if sign == "+":
                pair = (trace[-2].site, trace[-1].site)
            else:
                pair = (trace[-1].site, trace[-2].site)
            return SearchResult(pair=pair, trace=tuple(trace), failure=None)
        cur, cur_arg = site, unrolled
        sign = "-" if sign == "+" else "+"
    return SearchResult(pair=None, trace=tuple(trace),
                        failure="sweep sequence did not terminate")


def nested_alternating(trace: Sequence[SweepStep]) -> bool:
    """Claim-3 property of a SEARCH trace: the angular intervals spanned by
    consecutive sites are strictly nested, extending alternately at the two
    endpoints; vacuously true for traces with fewer than three sites."""
    if len(trace) < 3:
        return True
    lo = min(trace[0].unrolled_arg, trace[1].unrolled_arg)
    hi = max(trace[0].unrolled_arg, trace[1].unrolled_arg)
    last_side = None
    for step in trace[2:]:
        a = step.unrolled_arg
        if a < lo - ANGLE_TOL:
            side = "lo"
            lo = a
        elif a > hi + ANGLE_TOL:
            side = "hi"
            hi = a
        else:
            return False
        if last_side is not None and side == last_side:
            return False
        last_side = side
    return True


def pertinent_pair(circuit: Circuit, constants: ShapeConstants,
                   rg: RegenReport) -> Optional[tuple]:
    """The minimal well-aligned outward-facing pair whose sector contains
    the maximal regeneration gap, or None."""
    sites = rg.sites
    if len(sites) < 2 or rg.degenerate:
        return None
    order = sorted(sites, key=lambda s: (arg(s) % TWO_PI, norm(s), s))
    args = [arg(s) % TWO_PI for s in order]
    n = len(order)
    # the maximal gap (v, w): consecutive counterclockwise with the largest
    # angular spread; ties broken by the first occurrence in cyclic order
    best_gap, gi = -1.0, 0
    for i in range(n):
        a0 = args[i]
        a1 = args[(i + 1) % n]
        gap = (a1 - a0) % TWO_PI
        if gap == 0.0 and n > 1:
            continue
        if gap > best_gap + ANGLE_TOL:
            best_gap, gi = gap, i
    v_arg = args[gi]
    w_arg = v_arg + best_gap

    candidates = []
    for ix in range(n):
        x_arg = args[ix]
        dx = (v_arg - x_arg) % TWO_PI              # x at or clockwise of v
        for iy in range(n):
            y_arg_mod = args[iy]
            dy = (y_arg_mod - w_arg) % TWO_PI      # y at or counterclockwise of w
            width = dx + best_gap + dy
            if width >= TWO_PI - ANGLE_TOL:
                continue
            candidates.append((width, dx, dy, order[ix], order[iy]))
    candidates.sort(key=lambda t: (t[0], t[1], t[2], t[3], t[4]))
    for width, dx, dy, xs, ys in candidates:
        if xs == ys:
            continue
        pred = pair_predicates(circuit, constants, xs, ys, rg=sites)
        if pred["well_aligned"] and pred["outward_facing"]:
            return (xs, ys)
    return None
