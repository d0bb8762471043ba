"""Sampling the FK measure conditioned on trapping area n^2, and the tail
statistics of the conditioned circuit.

The restricted chain is a Metropolized single-edge heat bath: propose the
heat-bath refresh of a uniformly chosen edge and reject moves that leave
the conditioning event.  The area event is monotone in the configuration
("some uncensored open circuit around the origin traps at least n^2"), so
opening moves never need a check and closing moves are checked against a
certificate circuit: only closures on the certificate trigger a flood-fill
recomputation.  Per-sample statistics always use the true outermost
circuit of the configuration, with a censored flag for the finite-box
artifact; in area_only mode the circuit is recentred by its centre before
regeneration analysis.

The centred event variant recomputes the full area event per proposal and
is only meant for enumerable scale; irreducibility of the restricted
dynamics is not assumed anywhere - multiple chains started from distinct
circuits feed a Gelman-Rubin-style cross-chain statistic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .circuits import (
    Circuit,
    outermost_circuit,
    outermost_uncensored_circuit,
)
from .errors import (
    InsufficientDataError,
    InternalError,
    InvalidParameterError,
)
from .lattice import BondConfig, BoundaryCondition, LatticeBox, make_box
from .regeneration import (
    connection_regeneration,
    nested_alternating,
    pair_predicates,
    pertinent_pair,
    rg_set_translated,
    search_pertinent_pair,
)
from .rng import make_rng
from .sampler import FKParams, heat_bath_probability
from .wulff import ShapeConstants, WulffShape, global_distortion

EVENT_KINDS = ("area_only", "area_and_centred")


@dataclass(frozen=True)
class ConditionedSample:
    chain: int
    sweep: int
    area: float
    exc: float
    censored: bool
    gd: float
    cen: tuple
    theta_circuit: float
    theta_cluster: float
    rg_circuit: int
    rg_cluster: int
    rg_cluster_subset: bool
    degenerate_circuit: bool
    degenerate_cluster: bool
    rg_spans_quadrants: bool
    r_min: float
    r_max: float
    pp_exists: bool
    pp_angle: float
    maxreg: float
    search_ok: bool
    search_distinct: bool
    search_nested: bool
    search_pair_valid: bool


@dataclass
class ConditionedRun:
    params: FKParams
    n: int
    event: str
    box_half_width: int
    samples: list
    proposals: int
    accepted: int
    rejected_event: int
    chains: int
    gelman_rubin: float

    def effective_samples(self) -> list:
        return [s for s in self.samples if not s.censored]


def _square_area_circuit(n: int) -> Circuit:
    m = (n + 1) // 2
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


def _initial_config(box: LatticeBox, params: FKParams, n: int,
                    rng: np.random.Generator,
                    active: Optional[np.ndarray],
                    variant: int = 0) -> BondConfig:
    """Deterministic opened circuit of area >= n^2 (rotated variants give
    distinct chain starting points) plus an unconditioned sample elsewhere."""
    circ = _square_area_circuit(n)
    if variant % 2 == 1 and box.half_width >= (n + 1) // 2 + 2:
        # grow the square by one ring for a distinct start
        circ = _square_area_circuit(n + 2)
    cfg = BondConfig(box, (rng.random(box.edge_count) < params.p).astype(np.uint8))
    if active is not None:
        frozen = ~active
        cfg.bits[frozen] = 0
    for a, b in circ.edges:
        cfg.set_edge((a, b), 1)
    return cfg


def restricted_chain(params: FKParams, n: int, event: str = "area_only",
                     sweeps: int = 200, box: Optional[LatticeBox] = None,
                     shape: Optional[WulffShape] = None,
                     constants: Optional[ShapeConstants] = None,
                     burnin_sweeps: int = 20, thin_sweeps: int = 2,
                     chains: int = 2, seed: Optional[int] = None,
                     active_edges: Optional[Iterable[int]] = None,
                     collect_stats: bool = True) -> ConditionedRun:
    """Run the event-restricted heat-bath chain and collect per-sample
    circuit statistics.

    The production box default is half-width 2n (buffer convention); the
    active_edges mask freezes the complement closed, which the enumerable
    oracle tests use to keep the conditional law computable.
    """
    if event not in EVENT_KINDS:
        raise InvalidParameterError(f"unknown event kind {event!r}")
    if box is None:
        box = make_box(2 * n)
    if box.half_width < (n + 1) // 2 + 1:
        raise InvalidParameterError("box too small for the initial circuit")
    if collect_stats and (shape is None or constants is None):
        raise InvalidParameterError("statistics need shape and constants")
    if event == "area_and_centred" and shape is None:
        raise InvalidParameterError("centred event needs the shape")
    seed = params.seed if seed is None else seed

    active = None
    if active_edges is not None:
        active = np.zeros(box.edge_count, dtype=bool)
        active[list(active_edges)] = True

    all_samples: list[ConditionedSample] = []
    chain_area_series: list[list[float]] = []
    proposals = accepted = rejected = 0

    for c in range(chains):
        rng = make_rng(seed, stream=c)
        cfg = _initial_config(box, params, n, rng, active, variant=c)
        checker = _EventChecker(cfg, params, n, event, shape)
        if not checker.valid:
            raise InternalError("initial configuration violates the event")
        areas: list[float] = []
        E = box.edge_count
        edge_pool = (np.flatnonzero(active) if active is not None
                     else np.arange(E))
        sweep_len = len(edge_pool)
        total_sweeps = burnin_sweeps + sweeps
        eids = rng.integers(0, len(edge_pool), size=total_sweeps * sweep_len)
        us = rng.random(total_sweeps * sweep_len)
        k = 0
        for sweep in range(total_sweeps):
            for _ in range(sweep_len):
                eid = int(edge_pool[eids[k]])
                u = us[k]
                k += 1
                proposals += 1
                target = checker.heat_bath_target(eid, u)
                cur = int(cfg.bits[eid])
                if target == cur:
                    continue
                if checker.try_flip(eid, target):
                    accepted += 1
                else:
                    rejected += 1
            if sweep >= burnin_sweeps and (sweep - burnin_sweeps) % thin_sweeps == 0:
                checker.assert_event()
                if collect_stats:
                    s = _sample_stats(cfg, params, n, shape, constants,
                                      chain=c, sweep=sweep)
                    all_samples.append(s)
                    areas.append(s.area)
                else:
                    res = outermost_circuit(cfg)
                    areas.append(res.circuit.area if res.circuit else 0.0)
        chain_area_series.append(areas)

    grb = _gelman_rubin(chain_area_series)
    return ConditionedRun(params=params, n=n, event=event,
                          box_half_width=box.half_width,
                          samples=all_samples, proposals=proposals,
                          accepted=accepted, rejected_event=rejected,
                          chains=chains, gelman_rubin=grb)


class _EventChecker:
    """Certificate-based event maintenance for the restricted chain."""

    def __init__(self, cfg: BondConfig, params: FKParams, n: int,
                 event: str, shape: Optional[WulffShape]):
        self.cfg = cfg
        self.params = params
        self.n = n
        self.event = event
        self.shape = shape
        box = cfg.box
        self._free = params.bc is BoundaryCondition.FREE
        self._q_is_one = params.q == 1.0
        self._p = params.p
        self._q = params.q
        # open-neighbour adjacency for the off-edge connectivity query
        self.nbrs: list[dict] = [dict() for _ in range(box.vertex_count)]
        ends = box.edge_endpoints
        for eid in np.flatnonzero(cfg.bits):
            u, v = int(ends[eid, 0]), int(ends[eid, 1])
            self.nbrs[u][v] = eid
            self.nbrs[v][u] = eid
        self.cert: Optional[frozenset] = None
        self.valid = self._recompute()

    # -- event plumbing ------------------------------------------------

    def _recompute(self) -> bool:
        if self.event == "area_and_centred":
            from .wulff import area_event
            rec = area_event(self.cfg, self.shape, self.n)
            ok = rec.satisfies_area_event
            if ok:
                circ = outermost_circuit(self.cfg).circuit
                self.cert = frozenset(circ.edge_ids(self.cfg.box))
            return ok
        circ = outermost_uncensored_circuit(self.cfg)
        if circ is not None and circ.area >= self.n * self.n:
            self.cert = frozenset(circ.edge_ids(self.cfg.box))
            return True
        self.cert = None
        return False

    def heat_bath_target(self, eid: int, u: float) -> int:
        if self._q_is_one:
            return 1 if u < self._p else 0
        if not self._free:
            p_open = heat_bath_probability(self.cfg, self.params, eid)
            return 1 if u < p_open else 0
        box = self.cfg.box
        a, b = box.edge_endpoints[eid]
        connected = self._connected_off_edge(int(a), int(b), eid)
        p_open = self._p if connected else self._p / (self._p + (1 - self._p) * self._q)
        return 1 if u < p_open else 0

    def _connected_off_edge(self, src: int, dst: int, skip: int) -> bool:
        if src == dst:
            return True
        seen = {src}
        stack = [src]
        nbrs = self.nbrs
        while stack:
            cur = stack.pop()
            for w, eid in nbrs[cur].items():
                if eid == skip or w in seen:
                    continue
                if w == dst:
                    return True
                seen.add(w)
                stack.append(w)
        return False

    def _apply(self, eid: int, bit: int) -> None:
        box = self.cfg.box
        a, b = box.edge_endpoints[eid]
        a, b = int(a), int(b)
        self.cfg.bits[eid] = bit
        if bit:
            self.nbrs[a][b] = eid
            self.nbrs[b][a] = eid
        else:
            self.nbrs[a].pop(b, None)
            self.nbrs[b].pop(a, None)

    def try_flip(self, eid: int, target: int) -> bool:
        if self.event == "area_and_centred":
            old = int(self.cfg.bits[eid])
            self._apply(eid, target)
            if self._recompute():
                return True
            self._apply(eid, old)
            self._recompute()
            return False
        # monotone event: opening is always safe; closing off the
        # certificate is safe; closing on the certificate gets re-checked
        if target == 1:
            self._apply(eid, 1)
            return True
        if self.cert is not None and eid not in self.cert:
            self._apply(eid, 0)
            return True
        saved_cert = self.cert
        self._apply(eid, 0)
        if self._recompute():
            return True
        self._apply(eid, 1)     # revert restores the prior configuration
        self.cert = saved_cert
        return False

    def assert_event(self) -> None:
        circ = outermost_uncensored_circuit(self.cfg)
        if circ is None or circ.area < self.n * self.n:
            raise InternalError("retained sample violates the area event")
        if self.event == "area_and_centred":
            from .wulff import area_event
            if not area_event(self.cfg, self.shape, self.n).satisfies_area_event:
                raise InternalError("retained sample violates the centred event")


def _sample_stats(cfg: BondConfig, params: FKParams, n: int,
                  shape: WulffShape, constants: ShapeConstants,
                  chain: int, sweep: int) -> ConditionedSample:
    res = outermost_circuit(cfg)
    if res.circuit is None:
        raise InternalError("event sample without a circuit")
    circ = res.circuit
    gd, cen = global_distortion(circ, shape, n, coarse=4)
    shifted = circ.translated((-cen[0], -cen[1]))

    rg_c = rg_set_translated(circ, constants, cfg, cen, mode="circuit")
    rg_k = rg_set_translated(circ, constants, cfg, cen, mode="cluster")
    subset = set(rg_k.sites) <= set(rg_c.sites)

    quadrants = {(s[0] > 0, s[1] > 0) for s in rg_c.sites if s[0] != 0 and s[1] != 0}
    spans = len(quadrants) == 4
    radii = np.hypot(*np.asarray(shifted.vertices, dtype=float).T)
    r_min, r_max = float(radii.min()), float(radii.max())

    pp = pertinent_pair(shifted, constants, rg_c)
    pp_angle = float("nan")
    maxreg = float("nan")
    if pp is not None:
        from .geometry import angle_between
        pp_angle = angle_between(pp[0], pp[1])
        arc = shifted.arc(pp[0], pp[1])
        try:
            crg = connection_regeneration(list(arc), pp[0], pp[1],
                                          delta=constants.q0 / 2.0)
            maxreg = crg.maxreg
        except InvalidParameterError:
            maxreg = float("nan")

    search = search_pertinent_pair(shifted, constants, rg_c)
    distinct = nested = pair_valid = False
    if search.trace:
        visited = [s.site for s in search.trace]
        distinct = len(set(visited)) == len(visited)
        nested = nested_alternating(search.trace)
    if search.succeeded:
        pred = pair_predicates(shifted, constants, search.pair[0], search.pair[1],
                               rg=rg_c.sites)
        pair_valid = pred["well_aligned"] and pred["outward_facing"]

    return ConditionedSample(
        chain=chain, sweep=sweep,
        area=circ.area, exc=circ.area - n * n, censored=res.censored,
        gd=gd, cen=cen,
        theta_circuit=rg_c.theta_max, theta_cluster=rg_k.theta_max,
        rg_circuit=len(rg_c.sites), rg_cluster=len(rg_k.sites),
        rg_cluster_subset=subset,
        degenerate_circuit=rg_c.degenerate, degenerate_cluster=rg_k.degenerate,
        rg_spans_quadrants=spans,
        r_min=r_min, r_max=r_max,
        pp_exists=pp is not None, pp_angle=pp_angle, maxreg=maxreg,
        search_ok=search.succeeded, search_distinct=distinct,
        search_nested=nested, search_pair_valid=pair_valid,
    )


def _gelman_rubin(series: Sequence[Sequence[float]]) -> float:
    chains = [np.asarray(s, dtype=float) for s in series if len(s) >= 2]
    if len(chains) < 2:
        return float("nan")
    m = min(len(s) for s in chains)
    data = np.stack([s[:m] for s in chains])
    means = data.mean(axis=1)
    W = data.var(axis=1, ddof=1).mean()
    B = m * means.var(ddof=1)
    if W == 0:
        return 1.0
    var_hat = (m - 1) / m * W + B / m
    return float(math.sqrt(var_hat / W))


# -- tail statistics -----------------------------------------------------------


@dataclass(frozen=True)
class TailCurve:
    grid: np.ndarray = field(repr=False)
    estimate: np.ndarray = field(repr=False)
    lo: np.ndarray = field(repr=False)
    hi: np.ndarray = field(repr=False)
    n_eff: int = 0
    slope: float = float("nan")
    intercept: float = float("nan")
    r_squared: float = float("nan")
    window: tuple = ()


def _wilson(k: int, m: int, z: float = 1.96) -> tuple[float, float]:
    if m == 0:
        return 0.0, 1.0
    p = k / m
    denom = 1 + z * z / m
    centre = (p + z * z / (2 * m)) / denom
    half = z * math.sqrt(p * (1 - p) / m + z * z / (4 * m * m)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def _tail_curve(values: np.ndarray, grid: np.ndarray,
                fit_lo: float = 0.02, fit_hi: float = 0.95) -> TailCurve:
    m = values.size
    est = np.empty(grid.size)
    lo = np.empty(grid.size)
    hi = np.empty(grid.size)
    for i, g in enumerate(grid):
        k = int((values > g).sum())
        est[i] = k / m
        lo[i], hi[i] = _wilson(k, m)
    window = [i for i in range(grid.size) if fit_lo <= est[i] <= fit_hi]
    slope = intercept = r2 = float("nan")
    if len(window) >= 3:
        xs = grid[window]
        ys = np.log(est[window])
        slope, intercept = np.polyfit(xs, ys, 1)
        pred = slope * xs + intercept
        ss_res = float(((ys - pred) ** 2).sum())
        ss_tot = float(((ys - ys.mean()) ** 2).sum())
        r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return TailCurve(grid=grid, estimate=est, lo=lo, hi=hi, n_eff=m,
                     slope=float(slope), intercept=float(intercept),
                     r_squared=float(r2), window=tuple(window))


def theta_tail(run: ConditionedRun, which: str = "circuit",
               u_grid: Optional[np.ndarray] = None,
               min_samples: int = 500) -> TailCurve:
    """Empirical P(theta_RG_MAX > u/n | event) against u, with Wilson
    intervals and a log-linear tail fit; degenerate and censored samples
    are excluded."""
    samples = run.effective_samples()
    vals = []
    for s in samples:
        theta = s.theta_circuit if which == "circuit" else s.theta_cluster
        degen = s.degenerate_circuit if which == "circuit" else s.degenerate_cluster
        if not degen:
            vals.append(run.n * theta)
    if len(vals) < min_samples:
        raise InsufficientDataError(
            f"need {min_samples} effective samples, have {len(vals)}")
    vals = np.asarray(vals)
    if u_grid is None:
        u_grid = np.quantile(vals, np.linspace(0.05, 0.995, 24))
        u_grid = np.unique(np.round(u_grid, 6))
    return _tail_curve(vals, np.asarray(u_grid, dtype=float))


def exc_tail(run: ConditionedRun, t_grid: Optional[np.ndarray] = None,
             min_samples: int = 500) -> TailCurve:
    """Empirical P(EXC >= n t | event) against t."""
    samples = run.effective_samples()
    if len(samples) < min_samples:
        raise InsufficientDataError(
            f"need {min_samples} effective samples, have {len(samples)}")
    vals = np.asarray([s.exc / run.n for s in samples])
    if t_grid is None:
        t_grid = np.quantile(vals, np.linspace(0.05, 0.995, 24))
        t_grid = np.unique(np.round(t_grid, 6))
    # P(EXC >= n t) = P(vals >= t): use > of the left-limit grid shift
    grid = np.asarray(t_grid, dtype=float)
    eps = 1e-12
    return _tail_curve(vals, grid - eps)


def gd_tail(run: ConditionedRun, shape: WulffShape,
            eps_grid: Optional[np.ndarray] = None,
            annulus: Optional[tuple] = None,
            min_samples: int = 500) -> tuple[TailCurve, float]:
    """Empirical P(GD > eps n | event) and the frequency of the annulus
    containment c1 n <= |v| <= C1 n over circuit vertices (shape
    concentration diagnostic)."""
    samples = run.effective_samples()
    if len(samples) < min_samples:
        raise InsufficientDataError(
            f"need {min_samples} effective samples, have {len(samples)}")
    vals = np.asarray([s.gd / run.n for s in samples])
    if eps_grid is None:
        eps_grid = np.quantile(vals, np.linspace(0.05, 0.995, 20))
        eps_grid = np.unique(np.round(eps_grid, 6))
    curve = _tail_curve(vals, np.asarray(eps_grid, dtype=float))
    freq = float("nan")
    if annulus is not None:
        c1, C1 = annulus
        inside = [s.r_min >= c1 * run.n and s.r_max <= C1 * run.n
                  for s in samples]
        freq = float(np.mean(inside))
    return curve, freq
