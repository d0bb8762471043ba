"""Finite box of Z^2: vertex/edge indexing, bond configurations, connectivity.

The box with half-width N carries the vertices {-N..N}^2 and every
nearest-neighbour edge with both endpoints inside.  Edge ids are stable
across runs: x-oriented edges first in row-major order (y from -N to N,
x from -N to N-1), then y-oriented edges (y from -N to N-1, x from -N to N).
Golden files depend on this order; do not change it.

The interior vertex boundary consists of the vertices that are an endpoint
of some nearest-neighbour edge leaving the box, i.e. the outer ring
max(|x|, |y|) = N.  The wired cluster count excludes every component one of
whose open edges has an endpoint on that ring; isolated vertices always
count.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import InvalidParameterError


class BoundaryCondition(Enum):
    FREE = "free"
    WIRED = "wired"

    @classmethod
    def parse(cls, text: str) -> "BoundaryCondition":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise InvalidParameterError(f"unknown boundary condition {text!r}")


class LatticeBox:
    """Immutable description of the box {-N..N}^2 with canonical indexing."""

    def __init__(self, half_width: int):
        if half_width < 1:
            raise InvalidParameterError(f"half_width must be >= 1, got {half_width}")
        N = int(half_width)
        self.half_width = N
        self.side = 2 * N + 1
        self.vertex_count = self.side * self.side
        self.h_edge_count = self.side * (self.side - 1)   # x-oriented
        self.v_edge_count = self.side * (self.side - 1)   # y-oriented
        self.edge_count = self.h_edge_count + self.v_edge_count

        side = self.side
        xs, ys = np.meshgrid(np.arange(-N, N + 1), np.arange(-N, N + 1))
        self.vertex_xy = np.stack([xs.ravel(), ys.ravel()], axis=1).astype(np.int32)

        endpoints = np.empty((self.edge_count, 2), dtype=np.int32)
        k = 0
        for y in range(-N, N + 1):            # x-oriented, row-major
            for x in range(-N, N):
                endpoints[k, 0] = self._vid(x, y)
                endpoints[k, 1] = self._vid(x + 1, y)
                k += 1
        for y in range(-N, N):                # y-oriented
            for x in range(-N, N + 1):
                endpoints[k, 0] = self._vid(x, y)
                endpoints[k, 1] = self._vid(x, y + 1)
                k += 1
        self.edge_endpoints = endpoints

        self.boundary_mask = (np.abs(self.vertex_xy).max(axis=1) == N)

        incident: list[list[int]] = [[] for _ in range(self.vertex_count)]
        neighbours: list[list[tuple[int, int]]] = [[] for _ in range(self.vertex_count)]
        for eid in range(self.edge_count):
            u, v = int(endpoints[eid, 0]), int(endpoints[eid, 1])
            incident[u].append(eid)
            incident[v].append(eid)
            neighbours[u].append((v, eid))
            neighbours[v].append((u, eid))
        self.vertex_edges = tuple(tuple(e) for e in incident)
        self.vertex_neighbours = tuple(tuple(n) for n in neighbours)

    # -- indexing ------------------------------------------------------

    def _vid(self, x: int, y: int) -> int:
        N = self.half_width
        return (y + N) * self.side + (x + N)

    def vertex_id(self, xy: Sequence[int]) -> int:
        x, y = int(xy[0]), int(xy[1])
        if not self.contains(xy):
            raise InvalidParameterError(f"vertex {(x, y)} outside box N={self.half_width}")
        return self._vid(x, y)

    def vertex_at(self, vid: int) -> tuple[int, int]:
        x, y = self.vertex_xy[vid]
        return int(x), int(y)

    def contains(self, xy: Sequence[int]) -> bool:
        N = self.half_width
        return abs(int(xy[0])) <= N and abs(int(xy[1])) <= N

    def edge_id(self, a: Sequence[int], b: Sequence[int]) -> int:
        ax, ay, bx, by = int(a[0]), int(a[1]), int(b[0]), int(b[1])
        if not (self.contains(a) and self.contains(b)):
            raise InvalidParameterError(f"edge {(a, b)} outside box")
        N = self.half_width
        if ay == by and abs(ax - bx) == 1:
            x = min(ax, bx)
            return (ay + N) * (self.side - 1) + (x + N)
        if ax == bx and abs(ay - by) == 1:
            y = min(ay, by)
            return self.h_edge_count + (y + N) * self.side + (ax + N)
        raise InvalidParameterError(f"{(a, b)} is not a nearest-neighbour edge")

    def edge_vertices(self, eid: int) -> tuple[tuple[int, int], tuple[int, int]]:
        u, v = self.edge_endpoints[eid]
        return self.vertex_at(int(u)), self.vertex_at(int(v))

    def interior_boundary(self) -> list[tuple[int, int]]:
        """Vertices of the interior boundary ring (the paper's ∂_int)."""
        return [self.vertex_at(i) for i in np.flatnonzero(self.boundary_mask)]

    def edge_segments(self, eids: Iterable[int]) -> np.ndarray:
        """(m, 2, 2) float array of the closed unit segments of the edges."""
        eids = list(eids)
        out = np.empty((len(eids), 2, 2), dtype=float)
        for i, eid in enumerate(eids):
            (ax, ay), (bx, by) = self.edge_vertices(eid)
            out[i, 0] = (ax, ay)
            out[i, 1] = (bx, by)
        return out

    # -- grid views (used by the circuit tracer) -----------------------

    def grids_from_bits(self, bits: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Split a bit-vector into H[y, x] (x-oriented) and V[y, x] grids.

        H has shape (side, side-1): row y+N, column x+N for edge
        ((x,y),(x+1,y)).  V has shape (side-1, side): row y+N, column x+N
        for edge ((x,y),(x,y+1)).
        """
        H = bits[: self.h_edge_count].reshape(self.side, self.side - 1).astype(bool)
        V = bits[self.h_edge_count:].reshape(self.side - 1, self.side).astype(bool)
        return H, V

    def __eq__(self, other):
        return isinstance(other, LatticeBox) and other.half_width == self.half_width

    def __hash__(self):
        return hash(("LatticeBox", self.half_width))

    def __repr__(self):
        return f"LatticeBox(N={self.half_width})"


def make_box(N: int) -> LatticeBox:
    """Box with (2N+1)^2 vertices and 2*(2N+1)*2N edges."""
    return LatticeBox(N)


@dataclass
class BondConfig:
    """One bit per edge id of a box; 1 = open."""

    box: LatticeBox
    bits: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.bits = np.asarray(self.bits, dtype=np.uint8)
        if self.bits.shape != (self.box.edge_count,):
            raise InvalidParameterError(
                f"bit-vector length {self.bits.shape} != edge count {self.box.edge_count}"
            )

    @classmethod
    def all_closed(cls, box: LatticeBox) -> "BondConfig":
        return cls(box, np.zeros(box.edge_count, dtype=np.uint8))

    @classmethod
    def all_open(cls, box: LatticeBox) -> "BondConfig":
        return cls(box, np.ones(box.edge_count, dtype=np.uint8))

    @classmethod
    def from_open_edges(cls, box: LatticeBox, edges: Iterable) -> "BondConfig":
        """Edges given as ids or as vertex pairs ((x,y),(x,y))."""
        cfg = cls.all_closed(box)
        for e in edges:
            cfg.bits[_as_eid(box, e)] = 1
        return cfg

    def copy(self) -> "BondConfig":
        return BondConfig(self.box, self.bits.copy())

    def is_open(self, edge) -> bool:
        return bool(self.bits[_as_eid(self.box, edge)])

    def set_edge(self, edge, state: int) -> None:
        self.bits[_as_eid(self.box, edge)] = 1 if state else 0

    def open_edge_ids(self) -> np.ndarray:
        return np.flatnonzero(self.bits)

    def open_count(self) -> int:
        return int(self.bits.sum())

    def __eq__(self, other):
        return (
            isinstance(other, BondConfig)
            and other.box == self.box
            and bool(np.array_equal(other.bits, self.bits))
        )


def _as_eid(box: LatticeBox, edge) -> int:
    if isinstance(edge, (int, np.integer)):
        eid = int(edge)
        if not 0 <= eid < box.edge_count:
            raise InvalidParameterError(f"edge id {eid} out of range")
        return eid
    a, b = edge
    return box.edge_id(a, b)


@dataclass(frozen=True)
class ConnectedSet:
    """A union of closed edge segments plus incident vertices (possibly one
    bare vertex), as produced by open-component queries."""

    vertices: frozenset
    edge_ids: frozenset
    box: LatticeBox = field(compare=False)

    def segments(self) -> np.ndarray:
        return self.box.edge_segments(sorted(self.edge_ids))

    def vertex_array(self) -> np.ndarray:
        return np.array(sorted(self.vertices), dtype=float)

    def __contains__(self, xy) -> bool:
        return (int(xy[0]), int(xy[1])) in self.vertices


# -- union-find ---------------------------------------------------------


class UnionFind:
    __slots__ = ("parent", "rank")

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.rank = [0] * n

    def find(self, a: int) -> int:
        parent = self.parent
        root = a
        while parent[root] != root:
            root = parent[root]
        while parent[a] != root:
            parent[a], a = root, parent[a]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1
        return True


def _component_roots(cfg: BondConfig, skip_edge: Optional[int] = None) -> UnionFind:
    uf = UnionFind(cfg.box.vertex_count)
    ends = cfg.box.edge_endpoints
    for eid in np.flatnonzero(cfg.bits):
        if skip_edge is not None and eid == skip_edge:
            continue
        uf.union(int(ends[eid, 0]), int(ends[eid, 1]))
    return uf


def cluster_count(cfg: BondConfig, bc: BoundaryCondition) -> int:
    """Number of open components, per the free or wired counting rule.

    Free: components of the subgraph with all vertices and the open edges.
    Wired: only components none of whose open edges has an endpoint on the
    interior boundary ring; isolated vertices always count.
    """
    box = cfg.box
    uf = _component_roots(cfg)
    roots = {uf.find(v) for v in range(box.vertex_count)}
    if bc is BoundaryCondition.FREE:
        return len(roots)
    bad = set()
    ends = box.edge_endpoints
    bmask = box.boundary_mask
    for eid in np.flatnonzero(cfg.bits):
        u, v = int(ends[eid, 0]), int(ends[eid, 1])
        if bmask[u] or bmask[v]:
            bad.add(uf.find(u))
    return len(roots) - len(bad)


def open_component(cfg: BondConfig, x, region: Optional[Iterable] = None) -> ConnectedSet:
    """Open component of x restricted to the given edge set (default: all).

    Returns the union of the closed edges of open paths from x within the
    region, with their endpoints; just {x} when no incident open region
    edge exists.
    """
    box = cfg.box
    if not box.contains(x):
        raise InvalidParameterError(f"vertex {tuple(x)} outside box")
    allowed: Optional[set]
    if region is None:
        allowed = None
    else:
        allowed = {_as_eid(box, e) for e in region}
    start = box.vertex_id(x)
    seen = {start}
    edges: set[int] = set()
    stack = [start]
    bits = cfg.bits
    while stack:
        u = stack.pop()
        for v, eid in box.vertex_neighbours[u]:
            if not bits[eid]:
                continue
            if allowed is not None and eid not in allowed:
                continue
            edges.add(eid)
            if v not in seen:
                seen.add(v)
                stack.append(v)
    verts = frozenset(box.vertex_at(v) for v in seen)
    return ConnectedSet(vertices=verts, edge_ids=frozenset(edges), box=box)


# -- plain-text serialization ------------------------------------------


def save_configs(path, cfgs: Sequence[BondConfig], bc: BoundaryCondition) -> None:
    """Header (N, bc) then one hex-encoded bit-vector per line."""
    if not cfgs:
        raise InvalidParameterError("nothing to save")
    box = cfgs[0].box
    with open(path, "w") as fh:
        fh.write(f"N={box.half_width} bc={bc.value}\n")
        for cfg in cfgs:
            if cfg.box != box:
                raise InvalidParameterError("mixed boxes in one file")
            fh.write(np.packbits(cfg.bits).tobytes().hex() + "\n")


def load_configs(path) -> tuple[LatticeBox, BoundaryCondition, list[BondConfig]]:
    with open(path) as fh:
        header = fh.readline().strip()
        fields = dict(item.split("=", 1) for item in header.split())
        box = make_box(int(fields["N"]))
        bc = BoundaryCondition.parse(fields["bc"])
        cfgs = []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            raw = np.frombuffer(bytes.fromhex(line), dtype=np.uint8)
            bits = np.unpackbits(raw)[: box.edge_count]
            cfgs.append(BondConfig(box, bits))
    return box, bc, cfgs
