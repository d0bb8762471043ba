"""Inverse correlation length, unit-area Wulff shape, shape constants,
global distortion and circuit centring.

The shape is the half-plane intersection over an angular grid,
{t : (t, u_i) <= xi(u_i)} for M uniformly spaced directions u_i, scaled to
unit area by the dilation factor lambda = area^{-1/2}.  All "for every
direction" conditions are grid-checked; choose_constants re-verifies its
output on a finer grid.  The continuum statements are approximated by the
grid with M = 720 by default.

Global distortion minimizes the Hausdorff distance between the circuit and
lattice translates of the n-dilated shape boundary.  The objective is
1-Lipschitz in the translate, so an exact branch-and-bound over the spec's
provable search window replaces the exhaustive scan; ties are broken
lexicographically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.spatial import ConvexHull

from .circuits import Circuit, outermost_circuit
from .errors import (
    InsufficientDataError,
    InternalError,
    InvalidParameterError,
    InvalidShapeError,
)
from .geometry import PolySet, direction, directed_hausdorff
from .lattice import BondConfig
from .sampler import ConnectivityEstimate

DEFAULT_GRID = 720


# -- inverse correlation length --------------------------------------------


@dataclass(frozen=True)
class XiEstimate:
    direction: tuple
    theta: float
    xi: float
    stderr: float
    n_points: int


def estimate_xi(connectivities: Sequence[ConnectivityEstimate],
                directions: Sequence[tuple]) -> list[XiEstimate]:
    """Per-direction decay rates from two-point connectivity estimates.

    For each direction d the estimates for pairs (0, k*d) are fitted by
    weighted least squares as -log P = xi * r + c with r = ||k d||; needs
    at least three distances per direction, all estimates positive, and a
    positive fitted slope (subcritical decay).
    """
    out = []
    for d in directions:
        d = (int(d[0]), int(d[1]))
        rs, ys, ws = [], [], []
        for est in connectivities:
            if est.x != (0, 0):
                continue
            k = _multiple_of(est.y, d)
            if k is None:
                continue
            if est.estimate <= 0:
                raise InsufficientDataError(
                    f"nonpositive connectivity estimate at {est.y}")
            r = k * math.hypot(*d)
            rs.append(r)
            ys.append(-math.log(est.estimate))
            sigma = est.stderr / est.estimate if est.stderr > 0 else 1e-6
            ws.append(1.0 / sigma ** 2)
        if len(rs) < 3:
            raise InsufficientDataError(
                f"direction {d}: need >= 3 distances, got {len(rs)}")
        slope, stderr = _weighted_line_slope(np.array(rs), np.array(ys), np.array(ws))
        if slope <= 0:
            raise InsufficientDataError(
                f"direction {d}: fitted slope {slope} is not positive")
        out.append(XiEstimate(direction=d, theta=math.atan2(d[1], d[0]),
                              xi=slope, stderr=stderr, n_points=len(rs)))
    return out


def _multiple_of(y: tuple, d: tuple) -> Optional[int]:
    """k >= 1 with y == k*d, else None."""
    for k in range(1, 512):
        if (k * d[0], k * d[1]) == (int(y[0]), int(y[1])):
            return k
        if abs(k * d[0]) > abs(y[0]) and abs(k * d[1]) > abs(y[1]):
            return None
    return None


def _weighted_line_slope(x, y, w):
    W = w.sum()
    xm = (w * x).sum() / W
    ym = (w * y).sum() / W
    sxx = (w * (x - xm) ** 2).sum()
    slope = (w * (x - xm) * (y - ym)).sum() / sxx
    resid = y - ym - slope * (x - xm)
    dof = max(len(x) - 2, 1)
    var = (w * resid ** 2).sum() / W / dof / (sxx / W)
    return float(slope), float(math.sqrt(max(var, 0.0)) / math.sqrt(len(x)))


@dataclass(frozen=True)
class XiTable:
    """Support-function samples xi(theta_i) on a uniform angular grid."""

    thetas: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        if np.any(self.values <= 0):
            raise InvalidParameterError("xi must be positive everywhere")

    @classmethod
    def from_function(cls, f, M: int = DEFAULT_GRID) -> "XiTable":
        th = np.arange(M) * (2.0 * math.pi / M)
        return cls(thetas=th, values=np.array([float(f(t)) for t in th]))

    @classmethod
    def from_estimates(cls, estimates: Sequence[XiEstimate],
                       M: int = DEFAULT_GRID, symmetrize: bool = True) -> "XiTable":
        """Interpolate sparse directional estimates onto the grid.

        Estimates are folded into the fundamental domain [0, pi/4] of the
        lattice symmetries (axial reflections and quarter turns), averaged
        when several land on one angle, interpolated there, and unfolded.
        """
        if not estimates:
            raise InsufficientDataError("no xi estimates supplied")
        pts: dict[float, list[float]] = {}
        for e in estimates:
            t = _fold_angle(e.theta) if symmetrize else e.theta % (2 * math.pi)
            pts.setdefault(round(t, 12), []).append(e.xi)
        knots = np.array(sorted(pts))
        vals = np.array([np.mean(pts[k]) for k in sorted(pts)])
        th = np.arange(M) * (2.0 * math.pi / M)
        if symmetrize:
            folded = np.array([_fold_angle(t) for t in th])
            if len(knots) == 1:
                v = np.full(M, vals[0])
            else:
                v = np.interp(folded, knots, vals)
        else:
            if len(knots) == 1:
                v = np.full(M, vals[0])
            else:
                v = np.interp(th, np.concatenate([knots, [knots[0] + 2 * math.pi]]),
                              np.concatenate([vals, [vals[0]]]), period=2 * math.pi)
        return cls(thetas=th, values=v)


def _fold_angle(theta: float) -> float:
    """Fold an angle into [0, pi/4] by the 8 lattice symmetries."""
    t = theta % (math.pi / 2)
    return min(t, math.pi / 2 - t)


# -- the shape ---------------------------------------------------------------


@dataclass(frozen=True)
class WulffShape:
    """Unit-area convex polygon with its support-function table and the
    dilation factor that normalized it."""

    xi_table: XiTable
    lam: float
    polygon: np.ndarray = field(repr=False)     # (V, 2) counterclockwise

    @property
    def vertex_count(self) -> int:
        return self.polygon.shape[0]

    def area(self) -> float:
        return _polygon_area(self.polygon)

    def diameter(self) -> float:
        d = np.sqrt(((self.polygon[:, None, :] - self.polygon[None, :, :]) ** 2).sum(-1))
        return float(d.max())

    def _angular_index(self):
        """Vertex arguments unrolled to an increasing sequence starting at
        the vertex of smallest argument (valid: 0 is interior)."""
        poly = self.polygon
        angs = np.arctan2(poly[:, 1], poly[:, 0])
        start = int(np.argmin(angs))
        rolled = np.roll(poly, -start, axis=0)
        a = np.arctan2(rolled[:, 1], rolled[:, 0])
        a = np.concatenate([a, [a[0] + 2.0 * math.pi]])
        return rolled, a

    def boundary_points(self, thetas) -> np.ndarray:
        """Boundary intersections with the rays at the given angles."""
        thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
        rolled, angs = self._angular_index()
        n_v = rolled.shape[0]
        t = (thetas - angs[0]) % (2.0 * math.pi) + angs[0]
        idx = np.clip(np.searchsorted(angs, t, side="right") - 1, 0, n_v - 1)
        a = rolled[idx]
        b = rolled[(idx + 1) % n_v]
        d = np.stack([np.cos(t), np.sin(t)], axis=1)
        e = b - a
        denom = e[:, 0] * d[:, 1] - e[:, 1] * d[:, 0]
        denom = np.where(np.abs(denom) < 1e-300, 1e-300, denom)
        tt = (e[:, 0] * a[:, 1] - e[:, 1] * a[:, 0]) / denom
        return tt[:, None] * d

    def boundary_tangents(self, thetas) -> np.ndarray:
        """Unit counterclockwise tangents (polygon edge directions) at the
        boundary points of the given ray angles."""
        thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
        rolled, angs = self._angular_index()
        n_v = rolled.shape[0]
        t = (thetas - angs[0]) % (2.0 * math.pi) + angs[0]
        idx = np.clip(np.searchsorted(angs, t, side="right") - 1, 0, n_v - 1)
        e = rolled[(idx + 1) % n_v] - rolled[idx]
        return e / np.sqrt((e ** 2).sum(1))[:, None]

    def boundary_point(self, theta: float) -> np.ndarray:
        return self.boundary_points([theta])[0]

    def tangent(self, theta: float) -> np.ndarray:
        return self.boundary_tangents([theta])[0]

    def boundary_polyset(self, scale: float = 1.0, shift=(0.0, 0.0)) -> PolySet:
        return PolySet.from_closed_polygon(self.polygon * scale + np.asarray(shift))


def _cross(a, b) -> float:
    return float(a[0] * b[1] - a[1] * b[0])


def _polygon_area(poly: np.ndarray) -> float:
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.abs(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y)))


def build_wulff(xi_table: XiTable) -> WulffShape:
    """Half-plane intersection over the grid, scaled to unit area.

    Uses polar duality: the vertices of {t : t . u_i <= xi_i for all i} are
    in bijection with the hull facets of the dual points u_i / xi_i.
    """
    th = xi_table.thetas
    xi = xi_table.values
    U = np.stack([np.cos(th), np.sin(th)], axis=1)
    dual = U / xi[:, None]
    hull = ConvexHull(dual)
    order = hull.vertices            # counterclockwise indices into dual
    verts = []
    m = len(order)
    for k in range(m):
        i, j = order[k], order[(k + 1) % m]
        A = np.array([U[i], U[j]])
        b = np.array([xi[i], xi[j]])
        det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
        if abs(det) < 1e-14:
            continue
        verts.append(np.linalg.solve(A, b))
    poly = np.array(verts)
    if poly.shape[0] < 3:
        raise InternalError("degenerate half-plane intersection")
    if _signed_area(poly) < 0:
        poly = poly[::-1]
    if not _is_convex(poly):
        raise InternalError("nonconvex numerical output; grid too coarse")
    area = _polygon_area(poly)
    lam = 1.0 / math.sqrt(area)
    shape = WulffShape(xi_table=xi_table, lam=lam, polygon=poly * lam)
    if abs(shape.area() - 1.0) > 1e-9:
        raise InternalError(f"unit-area normalization failed: {shape.area()}")
    return shape


def _signed_area(poly: np.ndarray) -> float:
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _is_convex(poly: np.ndarray, tol: float = 1e-10) -> bool:
    d = np.roll(poly, -1, axis=0) - poly
    cr = d[:, 0] * np.roll(d, -1, axis=0)[:, 1] - d[:, 1] * np.roll(d, -1, axis=0)[:, 0]
    scale = np.abs(cr).max() if cr.size else 1.0
    return bool((cr >= -tol * max(scale, 1.0)).all())


# -- the constants q0 and c0 --------------------------------------------------


@dataclass(frozen=True)
class ShapeConstants:
    q0: float
    c0: float

    def __post_init__(self):
        if not self.q0 > 0:
            raise InvalidShapeError(f"q0 must be positive, got {self.q0}")
        if not 0 < self.c0 < self.q0 / 2:
            raise InvalidShapeError(
                f"c0 must lie in (0, q0/2); got c0={self.c0}, q0={self.q0}")


def max_tangent_deviation(shape: WulffShape, grid: int = DEFAULT_GRID) -> float:
    """sup over grid directions of angle(w_z, z_perp), the tangent's
    deviation from the perpendicular of the radial direction."""
    thetas = 2.0 * math.pi * np.arange(grid) / grid
    w = shape.boundary_tangents(thetas)
    z_perp = np.stack([-np.sin(thetas), np.cos(thetas)], axis=1)
    dots = (w * z_perp).sum(1)
    crosses = w[:, 0] * z_perp[:, 1] - w[:, 1] * z_perp[:, 0]
    return float(np.arctan2(np.abs(crosses), dots).max())


def chord_tangent_max(shape: WulffShape, phi: float, grid: int = DEFAULT_GRID,
                      boundary_pts: Optional[np.ndarray] = None) -> float:
    """max over boundary pairs x, y with 0 < arg(y) - arg(x) <= phi of
    angle(x - y, -y_perp)."""
    thetas = 2.0 * math.pi * np.arange(grid) / grid
    pts = (shape.boundary_points(thetas)
           if boundary_pts is None else boundary_pts)
    worst = 0.0
    max_steps = max(1, int(math.ceil(phi / (2.0 * math.pi / grid))))
    for step in range(1, max_steps + 1):
        dtheta = step * 2.0 * math.pi / grid
        if dtheta > phi + 1e-15:
            break
        x = pts
        y = np.roll(pts, -step, axis=0)
        v = x - y
        ny = np.stack([y[:, 1], -y[:, 0]], axis=1)      # -perp(y)
        dots = (v * ny).sum(1)
        crosses = v[:, 0] * ny[:, 1] - v[:, 1] * ny[:, 0]
        ang = np.arctan2(np.abs(crosses), dots)
        worst = max(worst, float(ang.max()))
    return worst


def choose_constants(shape: WulffShape, grid: int = DEFAULT_GRID,
                     safety: float = 0.9) -> ShapeConstants:
    """Largest grid-feasible q0 from the tangent condition (safety-scaled),
    then the largest c0 in (0, q0/2) satisfying the chord condition."""
    dev = max_tangent_deviation(shape, grid)
    q0_max = (math.pi / 2 - dev) / 4.0
    if q0_max <= 0:
        raise InvalidShapeError("no positive q0 satisfies the tangent condition")
    q0 = safety * q0_max

    target = math.pi / 2 - 3.0 * q0
    hi = q0 / 2.0
    lo = 0.0
    thetas = 2.0 * math.pi * np.arange(grid) / grid
    pts = shape.boundary_points(thetas)
    # chord_tangent_max is nondecreasing in phi: bisect on c0
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        if mid <= 0:
            break
        if chord_tangent_max(shape, 2.0 * mid, grid, boundary_pts=pts) <= target:
            lo = mid
        else:
            hi = mid
    c0 = safety * lo
    if c0 <= 0:
        raise InvalidShapeError("no positive c0 satisfies the chord condition")
    return ShapeConstants(q0=q0, c0=min(c0, 0.999 * q0 / 2.0))


def verify_constants(shape: WulffShape, constants: ShapeConstants,
                     refine: int = 4, grid: int = DEFAULT_GRID) -> bool:
    """Re-check both defining inequalities on a refine-times finer grid."""
    g = grid * refine
    ok1 = max_tangent_deviation(shape, g) <= math.pi / 2 - 4.0 * constants.q0 + 1e-9
    ok2 = (chord_tangent_max(shape, 2.0 * constants.c0, g)
           <= math.pi / 2 - 3.0 * constants.q0 + 1e-9)
    return bool(ok1 and ok2)


# -- global distortion and centring -------------------------------------------


def global_distortion(circuit: Circuit, shape: WulffShape, n: int,
                      tol: float = 1e-9, coarse: int = 1) -> tuple[float, tuple[int, int]]:
    """(GD, cen): minimal Hausdorff distance between lattice translates of
    the n-dilated shape boundary and the circuit, with its argmin.

    The search window centroid +- (diam(circuit) + n * diam(shape)) provably
    contains the minimizer; branch-and-bound with the Lipschitz-1 bound in
    the translate makes the scan exact without full enumeration.  Ties
    within tol are broken by lexicographic order of the translate.  coarse
    decimates the shape polygon (keep every coarse-th vertex) for bulk
    per-sample use; coarse = 1 is the exact grid polygon.
    """
    if n < 1:
        raise InvalidParameterError("n must be >= 1")
    circ_set = circuit.polyset()
    poly = shape.polygon[::max(1, int(coarse))]
    base = poly * float(n)
    cverts = np.asarray(circuit.vertices, dtype=float)
    centroid = cverts.mean(axis=0) - base.mean(axis=0)
    radius = int(math.ceil(_diam(cverts) + n * shape.diameter())) + 1
    cx, cy = int(round(centroid[0])), int(round(centroid[1]))

    memo: dict[tuple[int, int], float] = {}

    def f(z: tuple[int, int]) -> float:
        val = memo.get(z)
        if val is None:
            target = PolySet.from_closed_polygon(base + np.asarray(z, dtype=float))
            val = max(directed_hausdorff(target, circ_set, tol),
                      directed_hausdorff(circ_set, target, tol))
            memo[z] = val
        return val

    import heapq

    best_val = f((cx, cy))
    # boxes are (x0, x1, y0, y1), inclusive lattice ranges, explored in
    # best-first order of their Lipschitz lower bound
    heap: list = []
    counter = 0

    def push(x0, x1, y0, y1):
        nonlocal counter, best_val
        mx, my = (x0 + x1) // 2, (y0 + y1) // 2
        val = f((mx, my))
        best_val = min(best_val, val)
        r = math.hypot(max(mx - x0, x1 - mx), max(my - y0, y1 - my))
        counter += 1
        heapq.heappush(heap, (val - r, counter, x0, x1, y0, y1, mx, my, val))

    push(cx - radius, cx + radius, cy - radius, cy + radius)
    while heap:
        lb, _, x0, x1, y0, y1, mx, my, val = heapq.heappop(heap)
        if lb > best_val + tol:
            continue                      # no near-minimizer inside this box
        if x1 == x0 and y1 == y0:
            continue
        if x1 - x0 >= y1 - y0:
            push(x0, mx, y0, y1)
            if mx + 1 <= x1:
                push(mx + 1, x1, y0, y1)
        else:
            push(x0, x1, y0, my)
            if my + 1 <= y1:
                push(x0, x1, my + 1, y1)
    cen = min(z for z, v in memo.items() if v <= best_val + tol)
    return best_val, cen


def _diam(pts: np.ndarray) -> float:
    d = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
    return float(d.max())


@dataclass(frozen=True)
class AreaEventRecord:
    has_circuit: bool
    censored: bool
    area: Optional[float]
    gd: Optional[float]
    cen: Optional[tuple]
    satisfies_area_event: bool


def area_event(cfg: BondConfig, shape: WulffShape, n: int) -> AreaEventRecord:
    """Evaluate AREA_{0,n^2}: an outermost circuit exists, traps at least
    n^2, and is centred at the origin; censored circuits fail the event."""
    res = outermost_circuit(cfg)
    if res.circuit is None:
        return AreaEventRecord(False, False, None, None, None, False)
    circ = res.circuit
    gd, cen = global_distortion(circ, shape, n)
    if res.censored:
        return AreaEventRecord(True, True, circ.area, gd, cen, False)
    ok = circ.area >= n * n and cen == (0, 0)
    return AreaEventRecord(True, False, circ.area, gd, cen, ok)
