"""Open circuits around the origin: extraction, areas, sector paths.

Outermost-circuit algorithm.  Faces of the box (unit squares) are flooded
from the outside, crossing only closed primal edges.  If any of the four
faces incident to the origin is reached there is no enclosing circuit.
Otherwise K, the edge-connected component of unreached faces containing the
origin faces, is a polyomino whose boundary edges are all open; K absorbs
its holes (an unreached face adjacent to K joins K), and a boundary pinch
at an interior vertex would require two diagonal non-K faces there to be
reached through the four open edges meeting at the pinch, which the flood
cannot do.  The contour of K is therefore a single simple closed curve of
open edges: walking it with K on the left yields the outermost circuit,
whose interior contains the interior of every open circuit around the
origin.  brute_force_outermost independently enumerates all open circuits
and is used as the oracle for this construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import (
    InternalError,
    InvalidParameterError,
    PreconditionError,
    TooLargeError,
)
from .geometry import SectorA, PolySet
from .lattice import BondConfig, ConnectedSet, LatticeBox, open_component

_UNIT_STEPS = {(1, 0), (-1, 0), (0, 1), (0, -1)}


@dataclass(frozen=True)
class Circuit:
    """Self-avoiding closed lattice polygon, counterclockwise."""

    vertices: tuple

    def __post_init__(self):
        v = self.vertices
        if len(v) < 4:
            raise InvalidParameterError("a circuit needs at least 4 vertices")
        if len(set(v)) != len(v):
            raise InvalidParameterError("circuit revisits a vertex")
        for a, b in zip(v, v[1:] + (v[0],)):
            if (b[0] - a[0], b[1] - a[1]) not in _UNIT_STEPS:
                raise InvalidParameterError(f"non-unit step {a} -> {b}")
        if _shoelace_twice(v) <= 0:
            raise InvalidParameterError("circuit must be counterclockwise")

    @classmethod
    def from_vertices(cls, seq: Iterable) -> "Circuit":
        """Normalize: drop a repeated closing vertex, force ccw orientation,
        rotate to start at the lexicographically smallest vertex."""
        v = [(int(p[0]), int(p[1])) for p in seq]
        if len(v) > 1 and v[0] == v[-1]:
            v = v[:-1]
        if _shoelace_twice(v) < 0:
            v = v[::-1]
        i = min(range(len(v)), key=lambda k: v[k])
        v = v[i:] + v[:i]
        return cls(tuple(v))

    @cached_property
    def area(self) -> float:
        """|INT| via the shoelace formula; a positive integer for lattice
        circuits (count of enclosed unit faces)."""
        return _shoelace_twice(self.vertices) / 2.0

    @cached_property
    def edges(self) -> frozenset:
        out = set()
        v = self.vertices
        for a, b in zip(v, v[1:] + (v[0],)):
            out.add((a, b) if a <= b else (b, a))
        return frozenset(out)

    def edge_ids(self, box: LatticeBox) -> list[int]:
        return sorted(box.edge_id(a, b) for a, b in self.edges)

    def segments(self) -> np.ndarray:
        v = np.asarray(self.vertices, dtype=float)
        return np.stack([v, np.roll(v, -1, axis=0)], axis=1)

    def polyset(self) -> PolySet:
        return PolySet.from_closed_polygon(np.asarray(self.vertices, dtype=float))

    def translated(self, z) -> "Circuit":
        zx, zy = int(z[0]), int(z[1])
        return Circuit.from_vertices([(x + zx, y + zy) for x, y in self.vertices])

    def touches_rim(self, box: LatticeBox) -> bool:
        N = box.half_width
        return any(max(abs(x), abs(y)) == N for x, y in self.vertices)

    def encloses(self, point) -> bool:
        return _encloses(self.vertices, float(point[0]), float(point[1]))

    def interior_faces(self) -> frozenset:
        """Unit faces (indexed by their lower-left corner) inside the circuit."""
        xs = [p[0] for p in self.vertices]
        ys = [p[1] for p in self.vertices]
        out = set()
        for i in range(min(xs), max(xs)):
            for j in range(min(ys), max(ys)):
                if _encloses(self.vertices, i + 0.5, j + 0.5):
                    out.add((i, j))
        return frozenset(out)

    def arc(self, a, b) -> tuple:
        """Vertex path along the circuit counterclockwise from a to b."""
        a = (int(a[0]), int(a[1]))
        b = (int(b[0]), int(b[1]))
        v = self.vertices
        try:
            i, j = v.index(a), v.index(b)
        except ValueError:
            raise PreconditionError("arc endpoints must be circuit vertices")
        if i <= j:
            return v[i:j + 1]
        return v[i:] + v[:j + 1]


def _shoelace_twice(v: Sequence) -> int:
    s = 0
    n = len(v)
    for k in range(n):
        x1, y1 = v[k]
        x2, y2 = v[(k + 1) % n]
        s += x1 * y2 - x2 * y1
    return s


def _encloses(vertices: Sequence, px: float, py: float) -> bool:
    """Even-odd rule with a +x ray; the point must not lie on the polygon."""
    n = len(vertices)
    inside = False
    for k in range(n):
        x1, y1 = vertices[k]
        x2, y2 = vertices[(k + 1) % n]
        if (y1 <= py) != (y2 <= py):
            x_cross = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
            if x_cross > px:
                inside = not inside
    return inside


def interior_area(c: Circuit) -> float:
    """|INT(Gamma)|; positive (equals the count of enclosed unit faces)."""
    return c.area


def area_excess(c: Circuit, n: int) -> float:
    """EXC = |INT| - n^2 for circuits trapping at least n^2."""
    if c.area < n * n:
        raise PreconditionError(f"area {c.area} below n^2 = {n * n}")
    return c.area - float(n * n)


# -- outermost circuit -----------------------------------------------------


@dataclass(frozen=True)
class OutermostResult:
    """Extraction result: circuit is None when no open circuit encloses the
    origin; censored marks circuits touching the box rim (finite-box
    artifact, reported distinctly from absence)."""

    circuit: Optional[Circuit]
    censored: bool = False

    @property
    def found(self) -> bool:
        return self.circuit is not None

    @property
    def usable(self) -> bool:
        return self.circuit is not None and not self.censored


def _outside_reach(H: np.ndarray, V: np.ndarray, N: int) -> np.ndarray:
    """Faces reachable from outside the box crossing closed edges only
    (sparse connected components; the outside is one extra node)."""
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import connected_components

    F = 2 * N
    n_faces = F * F
    outside = n_faces
    ids = np.arange(n_faces).reshape(F, F)

    rows, cols = [], []
    # east-west crossings: faces (fy, fx) <-> (fy, fx+1) through V[fy, fx+1]
    ew = ~V[:, 1:F]
    r, c = np.nonzero(ew)
    rows.append(ids[r, c])
    cols.append(ids[r, c + 1])
    # north-south crossings: (fy, fx) <-> (fy+1, fx) through H[fy+1, fx]
    ns = ~H[1:F, :]
    r, c = np.nonzero(ns)
    rows.append(ids[r, c])
    cols.append(ids[r + 1, c])
    # rim crossings to the outside
    west = np.nonzero(~V[:, 0])[0]
    rows.append(ids[west, 0])
    cols.append(np.full(west.size, outside))
    east = np.nonzero(~V[:, F])[0]
    rows.append(ids[east, F - 1])
    cols.append(np.full(east.size, outside))
    south = np.nonzero(~H[0, :])[0]
    rows.append(ids[0, south])
    cols.append(np.full(south.size, outside))
    north = np.nonzero(~H[F, :])[0]
    rows.append(ids[F - 1, north])
    cols.append(np.full(north.size, outside))

    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    data = np.ones(rows.size, dtype=np.int8)
    graph = coo_matrix((data, (rows, cols)), shape=(n_faces + 1, n_faces + 1))
    _, labels = connected_components(graph, directed=False)
    return (labels[:n_faces] == labels[outside]).reshape(F, F)


def outermost_circuit(cfg: BondConfig) -> OutermostResult:
    """The outermost open circuit enclosing the origin, or none."""
    box = cfg.box
    N = box.half_width
    H, V = box.grids_from_bits(cfg.bits)
    reached = _outside_reach(H, V, N)
    F = 2 * N
    origin_faces = [(N - 1, N - 1), (N - 1, N), (N, N - 1), (N, N)]
    if any(reached[fy, fx] for fy, fx in origin_faces):
        return OutermostResult(circuit=None)

    # K: the edge-connected unreached component containing the origin faces
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import connected_components

    unreached = ~reached
    ids = np.arange(F * F).reshape(F, F)
    pair_mask_ns = unreached[:-1, :] & unreached[1:, :]
    pair_mask_ew = unreached[:, :-1] & unreached[:, 1:]
    r, c = np.nonzero(pair_mask_ns)
    rows = [ids[r, c]]
    cols = [ids[r + 1, c]]
    r, c = np.nonzero(pair_mask_ew)
    rows.append(ids[r, c])
    cols.append(ids[r, c + 1])
    graph = coo_matrix((np.ones(sum(len(x) for x in rows), dtype=np.int8),
                        (np.concatenate(rows), np.concatenate(cols))),
                       shape=(F * F, F * F))
    _, labels = connected_components(graph, directed=False)
    origin_label = labels[ids[N - 1, N - 1]]
    in_K = (labels.reshape(F, F) == origin_label) & unreached

    # boundary sides of K, vectorized; faces at the rim expose their side
    south = in_K.copy()
    south[1:, :] &= ~in_K[:-1, :]
    north = in_K.copy()
    north[:-1, :] &= ~in_K[1:, :]
    west = in_K.copy()
    west[:, 1:] &= ~in_K[:, :-1]
    east = in_K.copy()
    east[:, :-1] &= ~in_K[:, 1:]

    fy, fx = np.nonzero(south)
    if not H[fy, fx].all():
        raise InternalError("boundary edge of the unreached region is closed")
    starts = [(fx - N, fy - N)]
    ends = [(fx - N + 1, fy - N)]
    fy, fx = np.nonzero(north)
    if not H[fy + 1, fx].all():
        raise InternalError("boundary edge of the unreached region is closed")
    starts.append((fx - N + 1, fy - N + 1))
    ends.append((fx - N, fy - N + 1))
    fy, fx = np.nonzero(west)
    if not V[fy, fx].all():
        raise InternalError("boundary edge of the unreached region is closed")
    starts.append((fx - N, fy - N + 1))
    ends.append((fx - N, fy - N))
    fy, fx = np.nonzero(east)
    if not V[fy, fx + 1].all():
        raise InternalError("boundary edge of the unreached region is closed")
    starts.append((fx - N + 1, fy - N))
    ends.append((fx - N + 1, fy - N + 1))

    # directed edges with K on the left (counterclockwise contour)
    succ: dict = {}
    for (sx, sy), (ex, ey) in zip(starts, ends):
        for k in range(len(sx)):
            a = (int(sx[k]), int(sy[k]))
            if a in succ:
                raise InternalError("pinched contour: boundary vertex reused")
            succ[a] = (int(ex[k]), int(ey[k]))

    start = min(succ)
    walk = [start]
    cur = succ[start]
    while cur != start:
        walk.append(cur)
        cur = succ[cur]
    if len(walk) != len(succ):
        raise InternalError("contour split into several loops")
    circuit = Circuit.from_vertices(walk)
    if circuit.area != float(int(in_K.sum())):
        raise InternalError("contour area does not match the enclosed region")
    return OutermostResult(circuit=circuit, censored=circuit.touches_rim(box))


def _uncensored_bits(cfg: BondConfig) -> BondConfig:
    """Copy of cfg with every edge incident to the rim closed; its outermost
    circuit is the outermost circuit not touching the rim."""
    out = cfg.copy()
    bmask = cfg.box.boundary_mask
    ends = cfg.box.edge_endpoints
    kill = bmask[ends[:, 0]] | bmask[ends[:, 1]]
    out.bits = np.where(kill, 0, out.bits).astype(np.uint8)
    return out


def outermost_uncensored_circuit(cfg: BondConfig) -> Optional[Circuit]:
    """Largest-interior open circuit around the origin avoiding the rim."""
    res = outermost_circuit(_uncensored_bits(cfg))
    if res.circuit is not None and res.censored:
        raise InternalError("rim-free configuration produced a censored circuit")
    return res.circuit


# -- brute-force oracle -----------------------------------------------------


def brute_force_outermost(cfg: BondConfig, accept_exponential: bool = False,
                          path_budget: int = 5_000_000) -> OutermostResult:
    """Enumerate all open circuits enclosing the origin by DFS and return
    the one with inclusion-maximal interior, asserting uniqueness."""
    box = cfg.box
    if box.edge_count > 60 and not accept_exponential:
        raise TooLargeError("edge count above 60; pass accept_exponential=True")

    adj: dict = {}
    ends = box.edge_endpoints
    for eid in np.flatnonzero(cfg.bits):
        u, v = int(ends[eid, 0]), int(ends[eid, 1])
        adj.setdefault(u, []).append(v)
        adj.setdefault(v, []).append(u)
    for k in adj:
        adj[k].sort()

    cycles: list[tuple] = []
    budget = path_budget

    def dfs(root: int, path: list, on_path: set):
        nonlocal budget
        budget -= 1
        if budget <= 0:
            raise TooLargeError("cycle enumeration budget exhausted")
        cur = path[-1]
        for w in adj.get(cur, ()):
            if w == root and len(path) >= 4:
                if path[1] < path[-1]:          # one orientation per cycle
                    cycles.append(tuple(path))
            elif w > root and w not in on_path:
                path.append(w)
                on_path.add(w)
                dfs(root, path, on_path)
                on_path.discard(w)
                path.pop()

    for root in sorted(adj):
        dfs(root, [root], {root})

    enclosing = []
    for cyc in cycles:
        verts = [box.vertex_at(v) for v in cyc]
        if (0, 0) in verts:
            continue
        if _encloses(verts, 0.0, 0.0):
            enclosing.append(Circuit.from_vertices(verts))
    if not enclosing:
        return OutermostResult(circuit=None)

    best = max(enclosing, key=lambda c: (c.area, c.vertices))
    best_faces = best.interior_faces()
    for c in enclosing:
        if not c.interior_faces() <= best_faces:
            raise InternalError("outermost circuit is not unique on this "
                                "configuration; the maximality claim failed")
    return OutermostResult(circuit=best, censored=best.touches_rim(box))


# -- sector paths -----------------------------------------------------------


@dataclass(frozen=True)
class SectorPath:
    """Self-avoiding open path between sector boundary points, with the
    area of the bounded component it cuts out of the sector."""

    x: tuple
    y: tuple
    vertices: tuple
    sector: SectorA = field(compare=False)
    captured_area: float = 0.0

    def diameter(self) -> float:
        v = np.asarray(self.vertices, dtype=float)
        d = np.sqrt(((v[:, None, :] - v[None, :, :]) ** 2).sum(-1))
        return float(d.max())

    def chord(self) -> float:
        return float(math.hypot(self.y[0] - self.x[0], self.y[1] - self.x[1]))


def _captured_area(path_vertices: Sequence) -> float:
    """Area of the bounded component of A \\ path: the polygon
    0 -> x -> ... -> y -> 0."""
    poly = [(0.0, 0.0)] + [tuple(map(float, p)) for p in path_vertices]
    s = 0.0
    n = len(poly)
    for k in range(n):
        x1, y1 = poly[k]
        x2, y2 = poly[(k + 1) % n]
        s += x1 * y2 - x2 * y1
    return abs(s) / 2.0


def outermost_open_path(cfg: BondConfig, x, y,
                        max_open_edges: int = 40) -> Optional[SectorPath]:
    """The open self-avoiding x->y path in the sector A_{x,y} whose bounded
    component is maximal, found by exhaustive path enumeration.

    The guard refuses sectors with more than max_open_edges open edges;
    the enumeration is exponential in the worst case.
    """
    box = cfg.box
    x = (int(x[0]), int(x[1]))
    y = (int(y[0]), int(y[1]))
    if not (box.contains(x) and box.contains(y)):
        raise InvalidParameterError("path endpoints must lie in the box")
    sector = SectorA.from_points(x, y)
    sector_edges = [e for e in sector.edge_ids_in(box) if cfg.bits[e]]
    if len(sector_edges) > max_open_edges:
        raise TooLargeError(f"{len(sector_edges)} open sector edges exceed the "
                            f"enumeration guard of {max_open_edges}")
    adj: dict = {}
    for eid in sector_edges:
        a, b = box.edge_vertices(eid)
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    for k in adj:
        adj[k].sort()
    if x not in adj or y not in adj:
        return None

    best: Optional[tuple] = None

    def dfs(path: list, on_path: set):
        nonlocal best
        cur = path[-1]
        if cur == y:
            area = _captured_area(path)
            key = (area, tuple(path))
            if best is None or key > best:
                best = key
            return
        for w in adj[cur]:
            if w not in on_path:
                path.append(w)
                on_path.add(w)
                dfs(path, on_path)
                on_path.discard(w)
                path.pop()

    dfs([x], {x})
    if best is None:
        return None
    area, verts = best
    return SectorPath(x=x, y=y, vertices=verts, sector=sector, captured_area=area)


def common_cluster(cfg: BondConfig, x, y,
                   region: Optional[Iterable] = None) -> Optional[ConnectedSet]:
    """The joint open cluster of x and y within the region, or None."""
    box = cfg.box
    if not (box.contains(x) and box.contains(y)):
        raise InvalidParameterError("cluster endpoints must lie in the box")
    comp = open_component(cfg, x, region)
    if (int(y[0]), int(y[1])) in comp.vertices:
        return comp
    return None


def fluctuation(gamma, x, y) -> float:
    """sup over the points of gamma of the distance to the chord [x, y];
    attained at lattice vertices since the distance is convex on segments."""
    if isinstance(gamma, ConnectedSet):
        verts = gamma.vertex_array()
        vert_set = gamma.vertices
    elif isinstance(gamma, Circuit):
        verts = np.asarray(gamma.vertices, dtype=float)
        vert_set = set(gamma.vertices)
    else:
        vs = [(int(p[0]), int(p[1])) for p in gamma]
        verts = np.asarray(vs, dtype=float)
        vert_set = set(vs)
    x = (int(x[0]), int(x[1]))
    y = (int(y[0]), int(y[1]))
    if x not in vert_set or y not in vert_set:
        raise PreconditionError("chord endpoints must belong to gamma")
    a = np.asarray(x, dtype=float)
    d = np.asarray(y, dtype=float) - a
    L2 = float(d @ d)
    if L2 == 0.0:
        return float(np.sqrt(((verts - a) ** 2).sum(-1)).max())
    t = np.clip((verts - a) @ d / L2, 0.0, 1.0)
    closest = a + t[:, None] * d
    return float(np.sqrt(((verts - closest) ** 2).sum(-1)).max())


def good_area_capture(path: SectorPath, eps: float = 0.1) -> bool:
    """Diameter clause plus the area clause
    |I| >= |T_{0,x,y}| + eps ||x-y||^{3/2} (log ||x-y||)^{1/2}."""
    chord = path.chord()
    if chord <= 1.0:
        raise InvalidParameterError("good area capture needs ||x-y|| > 1")
    if path.diameter() > 2.0 * chord:
        return False
    tri = 0.5 * abs(path.x[0] * path.y[1] - path.x[1] * path.y[0])
    slack = eps * chord ** 1.5 * math.sqrt(math.log(chord))
    return path.captured_area >= tri + slack
