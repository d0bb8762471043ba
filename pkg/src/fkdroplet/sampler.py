"""Sampling the FK random cluster measure on a box.

Weights are p^{#open} (1-p)^{#closed} q^{k}, with k counted per the free or
wired rule of lattice.cluster_count and p = 1 - exp(-2*beta).  Two dynamics
are provided: a single-edge heat bath (the workhorse, also used by the
conditioned chain) and a Chayes-Machta style cluster sweep valid for real
q >= 1 that reduces to the Swendsen-Wang/FK update at integer q and to an
iid Bernoulli(p) resample at q = 1.

The single-edge conditional is computed from the exact weight ratio
q^{k_closed - k_open}.  Under the free rule this is the familiar two-case
formula (p when the endpoints are connected off the edge, else
p/(p+(1-p)q)); the literal wired counting rule admits a third case
p/(p+(1-p)q^2) when merging two counted components produces a
boundary-touching one, and the exact ratio keeps detailed balance to
rounding error in every case.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import (
    InsufficientDataError,
    InvalidParameterError,
    TooLargeError,
    UnsupportedParameterError,
)
from .lattice import (
    BondConfig,
    BoundaryCondition,
    LatticeBox,
    UnionFind,
)
from .rng import make_rng

ENUMERATION_MAX_EDGES = 24


def beta_critical(q: float) -> float:
    """Self-dual point beta_c(q) = log(1 + sqrt(q)) / 2."""
    return 0.5 * math.log(1.0 + math.sqrt(q))


@dataclass(frozen=True)
class FKParams:
    """Model parameters; beta is the single source of truth for p."""

    beta: float
    q: float
    bc: BoundaryCondition = BoundaryCondition.FREE
    seed: int = 0

    def __post_init__(self):
        # beta = 0 (p = 0) is allowed as a degenerate corner so that the
        # bounded-energy bounds can be evaluated there
        if self.beta < 0:
            raise InvalidParameterError(f"beta must be >= 0, got {self.beta}")
        if self.q < 1:
            raise UnsupportedParameterError(f"q must be >= 1, got {self.q}")

    @property
    def p(self) -> float:
        return 1.0 - math.exp(-2.0 * self.beta)

    @property
    def beta_c(self) -> float:
        return beta_critical(self.q)

    @property
    def subcritical(self) -> bool:
        return self.beta < self.beta_c

    @classmethod
    def from_p(cls, p: float, q: float, bc: BoundaryCondition = BoundaryCondition.FREE,
               seed: int = 0) -> "FKParams":
        if not 0 < p < 1:
            raise InvalidParameterError(f"p must be in (0,1) to define beta, got {p}")
        return cls(beta=-0.5 * math.log(1.0 - p), q=q, bc=bc, seed=seed)

    def warn_if_not_subcritical(self) -> None:
        if not self.subcritical:
            warnings.warn(
                f"beta={self.beta:.6g} is not below beta_c={self.beta_c:.6g}; "
                "subcritical estimators are advisory only",
                stacklevel=3,
            )


# -- single-edge heat bath ----------------------------------------------


def heat_bath_probability(cfg: BondConfig, params: FKParams, edge) -> float:
    """Conditional probability that the edge is open given all others."""
    box = cfg.box
    eid = edge if isinstance(edge, (int, np.integer)) else box.edge_id(*edge)
    eid = int(eid)
    ends = box.edge_endpoints
    u, v = int(ends[eid, 0]), int(ends[eid, 1])
    p, q = params.p, params.q

    uf = UnionFind(box.vertex_count)
    for other in np.flatnonzero(cfg.bits):
        if other == eid:
            continue
        uf.union(int(ends[other, 0]), int(ends[other, 1]))

    if uf.find(u) == uf.find(v):
        return p
    if params.bc is BoundaryCondition.FREE:
        return p / (p + (1.0 - p) * q)

    # wired rule: merging changes the count by the counted-status algebra
    bmask = box.boundary_mask
    bad = set()
    for other in np.flatnonzero(cfg.bits):
        if other == eid:
            continue
        a, b = int(ends[other, 0]), int(ends[other, 1])
        if bmask[a] or bmask[b]:
            bad.add(uf.find(a))
    cu = uf.find(u) not in bad
    cv = uf.find(v) not in bad
    merged_counted = cu and cv and not (bmask[u] or bmask[v])
    delta = (int(cu) + int(cv)) - int(merged_counted)
    return p / (p + (1.0 - p) * q ** delta)


def heat_bath_step(cfg: BondConfig, params: FKParams, edge, u: float) -> BondConfig:
    """Resample one edge from its conditional law; returns a new config."""
    out = cfg.copy()
    p_open = heat_bath_probability(cfg, params, edge)
    out.set_edge(edge, 1 if u < p_open else 0)
    return out


def sweep_heat_bath(cfg: BondConfig, params: FKParams,
                    rng: np.random.Generator) -> BondConfig:
    """One systematic full sweep of single-edge heat-bath updates."""
    out = cfg.copy()
    us = rng.random(out.box.edge_count)
    for eid in range(out.box.edge_count):
        p_open = heat_bath_probability(out, params, eid)
        out.bits[eid] = 1 if us[eid] < p_open else 0
    return out


# -- Chayes-Machta cluster sweep ----------------------------------------


def cluster_sweep(cfg: BondConfig, params: FKParams,
                  rng: np.random.Generator) -> BondConfig:
    """One global cluster update preserving the FK measure.

    Each counted cluster (isolated vertices included) is activated with
    probability 1/q; clusters excluded by the wired counting rule are
    always active.  Edges with both endpoints active are resampled iid
    Bernoulli(p); everything else is untouched.
    """
    if params.q < 1:
        raise UnsupportedParameterError("cluster_sweep requires q >= 1")
    box = cfg.box
    ends = box.edge_endpoints
    uf = UnionFind(box.vertex_count)
    open_edges = np.flatnonzero(cfg.bits)
    for eid in open_edges:
        uf.union(int(ends[eid, 0]), int(ends[eid, 1]))

    roots = np.fromiter((uf.find(v) for v in range(box.vertex_count)),
                        dtype=np.int64, count=box.vertex_count)
    always_active: set = set()
    if params.bc is BoundaryCondition.WIRED:
        bmask = box.boundary_mask
        for eid in open_edges:
            a, b = int(ends[eid, 0]), int(ends[eid, 1])
            if bmask[a] or bmask[b]:
                always_active.add(int(roots[a]))

    unique_roots = np.unique(roots)
    activate = rng.random(unique_roots.size) < 1.0 / params.q
    active_root = {
        int(r): bool(a) or (int(r) in always_active)
        for r, a in zip(unique_roots, activate)
    }
    active_vertex = np.fromiter((active_root[int(r)] for r in roots),
                                dtype=bool, count=box.vertex_count)

    both_active = active_vertex[ends[:, 0]] & active_vertex[ends[:, 1]]
    out = cfg.copy()
    fresh = (rng.random(box.edge_count) < params.p).astype(np.uint8)
    out.bits = np.where(both_active, fresh, out.bits).astype(np.uint8)
    return out


# -- exact enumeration ---------------------------------------------------


@dataclass
class EnumerationTable:
    """Exact probabilities of every configuration of a small box."""

    box: LatticeBox
    params: FKParams
    probs: np.ndarray = field(repr=False)
    cluster_counts: np.ndarray = field(repr=False)

    def probability(self, cfg) -> float:
        return float(self.probs[self.index_of(cfg)])

    def index_of(self, cfg) -> int:
        if isinstance(cfg, (int, np.integer)):
            return int(cfg)
        bits = cfg.bits if isinstance(cfg, BondConfig) else np.asarray(cfg)
        return int(np.dot(bits.astype(np.int64), 1 << np.arange(bits.size, dtype=np.int64)))

    def config_of(self, index: int) -> BondConfig:
        E = self.box.edge_count
        bits = ((index >> np.arange(E)) & 1).astype(np.uint8)
        return BondConfig(self.box, bits)

    def expectation(self, observable) -> float:
        """Expectation of observable(BondConfig) under the exact measure."""
        total = 0.0
        for idx in range(self.probs.size):
            total += self.probs[idx] * observable(self.config_of(idx))
        return total

    def edge_marginals(self) -> np.ndarray:
        E = self.box.edge_count
        out = np.empty(E)
        idx = np.arange(self.probs.size, dtype=np.int64)
        for e in range(E):
            out[e] = self.probs[(idx >> e) & 1 == 1].sum()
        return out

    def conditional(self, frozen: dict) -> np.ndarray:
        """Probabilities conditioned on {edge id: bit} assignments,
        renormalized over the full index space (zero off-event)."""
        idx = np.arange(self.probs.size, dtype=np.int64)
        mask = np.ones(self.probs.size, dtype=bool)
        for eid, bit in frozen.items():
            mask &= ((idx >> int(eid)) & 1) == int(bit)
        sel = np.where(mask, self.probs, 0.0)
        z = sel.sum()
        if z <= 0:
            raise InvalidParameterError("conditioning event has zero probability")
        return sel / z

    def sample_indices(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.choice(self.probs.size, size=size, p=self.probs)


def exact_enumerate(box: LatticeBox, params: FKParams) -> EnumerationTable:
    """Normalized weights of all 2^|E| configurations (guard: |E| <= 24)."""
    E = box.edge_count
    if E > ENUMERATION_MAX_EDGES:
        raise TooLargeError(f"{E} edges exceeds the enumeration guard "
                            f"of {ENUMERATION_MAX_EDGES}")
    n_cfg = 1 << E
    ends = box.edge_endpoints
    p, q = params.p, params.q
    if p == 0.0:
        probs = np.zeros(n_cfg)
        probs[0] = 1.0
        ks = np.zeros(n_cfg, dtype=np.int32)
        ks[0] = box.vertex_count
        return EnumerationTable(box=box, params=params, probs=probs,
                                cluster_counts=ks)
    log_p, log_1p = math.log(p), math.log(1.0 - p)
    log_q = math.log(q) if q != 1.0 else 0.0

    ks = np.empty(n_cfg, dtype=np.int32)
    logw = np.empty(n_cfg, dtype=float)
    edge_list = [(int(ends[e, 0]), int(ends[e, 1])) for e in range(E)]
    wired = params.bc is BoundaryCondition.WIRED
    bmask = box.boundary_mask
    nvert = box.vertex_count
    for idx in range(n_cfg):
        uf = UnionFind(nvert)
        n_open = 0
        rem = idx
        e = 0
        while rem:
            if rem & 1:
                u, v = edge_list[e]
                uf.union(u, v)
                n_open += 1
            rem >>= 1
            e += 1
        roots = {uf.find(v) for v in range(nvert)}
        if wired:
            bad = set()
            rem = idx
            e = 0
            while rem:
                if rem & 1:
                    u, v = edge_list[e]
                    if bmask[u] or bmask[v]:
                        bad.add(uf.find(u))
                rem >>= 1
                e += 1
            k = len(roots) - len(bad)
        else:
            k = len(roots)
        ks[idx] = k
        logw[idx] = n_open * log_p + (E - n_open) * log_1p + k * log_q

    logw -= logw.max()
    w = np.exp(logw)
    probs = w / w.sum()
    return EnumerationTable(box=box, params=params, probs=probs, cluster_counts=ks)


# -- table-driven fast chains (enumerable boxes only) ---------------------


class TransitionTables:
    """Precomputed single-edge conditionals and cluster structure for every
    configuration of an enumerable box; lets the oracle tests run millions
    of exact chain steps in plain Python."""

    def __init__(self, table: EnumerationTable):
        self.table = table
        box, params = table.box, table.params
        E = box.edge_count
        ks = table.cluster_counts.astype(np.int64)
        idx = np.arange(1 << E, dtype=np.int64)
        p, q = params.p, params.q
        self.p_open = np.empty((1 << E, E))
        for e in range(E):
            bit = 1 << e
            k_open = ks[idx | bit]
            k_closed = ks[idx & ~bit]
            self.p_open[:, e] = p / (p + (1.0 - p) * np.power(q, k_closed - k_open))
        self.edge_vertex_mask = []
        ends = box.edge_endpoints
        for e in range(E):
            self.edge_vertex_mask.append(
                (1 << int(ends[e, 0])) | (1 << int(ends[e, 1]))
            )
        self._component_cache: dict[int, list[tuple[int, bool]]] = {}

    def components_of(self, state: int) -> list[tuple[int, bool]]:
        """[(vertex mask, counted)] per component of the state."""
        cached = self._component_cache.get(state)
        if cached is not None:
            return cached
        box = self.table.box
        ends = box.edge_endpoints
        uf = UnionFind(box.vertex_count)
        e = 0
        rem = state
        while rem:
            if rem & 1:
                uf.union(int(ends[e, 0]), int(ends[e, 1]))
            rem >>= 1
            e += 1
        masks: dict[int, int] = {}
        for v in range(box.vertex_count):
            masks[uf.find(v)] = masks.get(uf.find(v), 0) | (1 << v)
        counted: dict[int, bool] = {r: True for r in masks}
        if self.table.params.bc is BoundaryCondition.WIRED:
            bmask = box.boundary_mask
            e = 0
            rem = state
            while rem:
                if rem & 1:
                    u, v = int(ends[e, 0]), int(ends[e, 1])
                    if bmask[u] or bmask[v]:
                        counted[uf.find(u)] = False
                rem >>= 1
                e += 1
        out = [(masks[r], counted[r]) for r in masks]
        self._component_cache[state] = out
        return out

    def run_heat_bath(self, state: int, sweeps: int,
                      rng: np.random.Generator) -> np.ndarray:
        """Systematic sweeps; returns the state after each sweep."""
        E = self.table.box.edge_count
        p_open = self.p_open
        out = np.empty(sweeps, dtype=np.int64)
        us = rng.random((sweeps, E))
        for s in range(sweeps):
            row = us[s]
            for e in range(E):
                bit = 1 << e
                if row[e] < p_open[state, e]:
                    state |= bit
                else:
                    state &= ~bit
            out[s] = state
        return out

    def run_cluster(self, state: int, sweeps: int,
                    rng: np.random.Generator) -> np.ndarray:
        """Chayes-Machta sweeps; returns the state after each sweep."""
        E = self.table.box.edge_count
        p = self.table.params.p
        inv_q = 1.0 / self.table.params.q
        ev_mask = self.edge_vertex_mask
        out = np.empty(sweeps, dtype=np.int64)
        for s in range(sweeps):
            comps = self.components_of(state)
            active = 0
            for vmask, counted in comps:
                if (not counted) or rng.random() < inv_q:
                    active |= vmask
            for e in range(E):
                m = ev_mask[e]
                if (active & m) == m:
                    bit = 1 << e
                    if rng.random() < p:
                        state |= bit
                    else:
                        state &= ~bit
            out[s] = state
        return out


def detailed_balance_max_error(box: LatticeBox, params: FKParams) -> float:
    """Max relative detailed-balance error of the single-edge heat-bath
    kernel against the enumerated stationary weights (analytic check)."""
    table = exact_enumerate(box, params)
    tables = TransitionTables(table)
    E = box.edge_count
    probs = table.probs
    worst = 0.0
    for a in range(probs.size):
        for e in range(E):
            bit = 1 << e
            b = a | bit
            if b == a:
                continue
            a0 = a & ~bit
            p_ab = tables.p_open[a0, e]          # move to open
            p_ba = 1.0 - tables.p_open[a0, e]    # move to closed
            lhs = probs[a0] * p_ab
            rhs = probs[b] * p_ba
            denom = max(lhs, rhs)
            if denom > 0:
                worst = max(worst, abs(lhs - rhs) / denom)
    return worst


# -- estimators ----------------------------------------------------------


class EnergyBounds(NamedTuple):
    lower: float
    upper: float
    c_be: float


def bounded_energy_bounds(params: FKParams) -> EnergyBounds:
    """Extreme single-edge conditional open probabilities (free-rule cases)."""
    p, q = params.p, params.q
    lower = p / (p + (1.0 - p) * q) if p > 0 else 0.0
    upper = p
    return EnergyBounds(lower=lower, upper=upper, c_be=min(lower, 1.0 - upper))


@dataclass(frozen=True)
class ConnectivityEstimate:
    x: tuple
    y: tuple
    estimate: float
    stderr: float
    n: int


def _block_jackknife(samples: np.ndarray, blocks: int = 50) -> tuple[float, float]:
    n = samples.size
    blocks = max(2, min(blocks, n))
    cut = (n // blocks) * blocks
    data = samples[:cut].reshape(blocks, -1).mean(axis=1)
    mean = data.mean()
    loo = (data.sum() - data) / (blocks - 1)
    var = (blocks - 1) / blocks * np.sum((loo - loo.mean()) ** 2)
    return float(mean), float(math.sqrt(max(var, 0.0)))


def _run_sampler(params: FKParams, box: LatticeBox, sweeps: int, burnin: int,
                 rng: np.random.Generator, method: str = "cluster"):
    cfg = BondConfig(box, (rng.random(box.edge_count) < params.p).astype(np.uint8))
    step = cluster_sweep if method == "cluster" else sweep_heat_bath
    for _ in range(burnin):
        cfg = step(cfg, params, rng)
    for _ in range(sweeps):
        cfg = step(cfg, params, rng)
        yield cfg


def two_point_connectivity(params: FKParams, box: LatticeBox,
                           pairs: Sequence[tuple], sweeps: int,
                           rng: Optional[np.random.Generator] = None,
                           burnin: Optional[int] = None,
                           method: str = "cluster") -> list[ConnectivityEstimate]:
    """Monte Carlo estimates of P(x <-> y) with jackknife errors."""
    params.warn_if_not_subcritical()
    rng = rng if rng is not None else make_rng(params.seed)
    burnin = burnin if burnin is not None else max(50, sweeps // 20)
    N = box.half_width
    vids = []
    for x, y in pairs:
        if not (box.contains(x) and box.contains(y)):
            raise InvalidParameterError(f"pair {(tuple(x), tuple(y))} outside box")
        if max(abs(int(x[0])), abs(int(x[1])), abs(int(y[0])), abs(int(y[1]))) > N - 2:
            warnings.warn(f"pair {(tuple(x), tuple(y))} is within 2 sites of the "
                          "boundary; buffer convention violated", stacklevel=2)
        vids.append((box.vertex_id(x), box.vertex_id(y)))

    hits = np.zeros((len(pairs), sweeps), dtype=np.uint8)
    ends = box.edge_endpoints
    for t, cfg in enumerate(_run_sampler(params, box, sweeps, burnin, rng, method)):
        uf = UnionFind(box.vertex_count)
        for eid in np.flatnonzero(cfg.bits):
            uf.union(int(ends[eid, 0]), int(ends[eid, 1]))
        for i, (u, v) in enumerate(vids):
            hits[i, t] = uf.find(u) == uf.find(v)

    out = []
    for i, (x, y) in enumerate(pairs):
        mean, se = _block_jackknife(hits[i].astype(float))
        out.append(ConnectivityEstimate(tuple(x), tuple(y), mean, se, sweeps))
    return out


@dataclass
class DecayMixingReport:
    radii: list
    log_p: list
    log_p_stderr: list
    slope: float
    slope_stderr: float
    r_squared: float
    mixing_distances: list
    mixing_ratio_deviation: list
    mixing_stderr: list


def decay_and_mixing_check(params: FKParams, box: LatticeBox,
                           radii: Sequence[int], sweeps: int = 2000,
                           rng: Optional[np.random.Generator] = None,
                           method: str = "cluster") -> DecayMixingReport:
    """Exponential-decay fit for P(0 <-> outside B_N) plus an empirical
    ratio-mixing statistic for distant single-edge events."""
    if len(radii) < 2:
        raise InsufficientDataError("need at least two radii to fit a slope")
    params.warn_if_not_subcritical()
    rng = rng if rng is not None else make_rng(params.seed)
    radii = sorted(int(r) for r in radii)
    if radii[-1] >= box.half_width:
        raise InvalidParameterError("largest radius must be < box half-width")

    origin = box.vertex_id((0, 0))
    ends = box.edge_endpoints
    # probe edges along the x-axis for the mixing statistic
    probe = [box.edge_id((x, 0), (x + 1, 0)) for x in range(0, box.half_width - 1)]
    base = probe[0]
    dists = list(range(1, len(probe)))

    reach = np.zeros((len(radii), sweeps), dtype=np.uint8)
    probe_open = np.zeros((len(probe), sweeps), dtype=np.uint8)
    for t, cfg in enumerate(_run_sampler(params, box, sweeps, max(50, sweeps // 20),
                                         rng, method)):
        uf = UnionFind(box.vertex_count)
        for eid in np.flatnonzero(cfg.bits):
            uf.union(int(ends[eid, 0]), int(ends[eid, 1]))
        r0 = uf.find(origin)
        sup = 0
        for v in range(box.vertex_count):
            if uf.find(v) == r0:
                x, y = box.vertex_at(v)
                sup = max(sup, abs(x), abs(y))
        for i, rad in enumerate(radii):
            reach[i, t] = sup >= rad
        for i, eid in enumerate(probe):
            probe_open[i, t] = cfg.bits[eid]

    log_p, log_se = [], []
    for i in range(len(radii)):
        mean, se = _block_jackknife(reach[i].astype(float))
        if mean <= 0:
            raise InsufficientDataError(f"no reach events at radius {radii[i]}")
        log_p.append(math.log(mean))
        log_se.append(se / mean)
    xs = np.asarray(radii, dtype=float)
    ys = np.asarray(log_p)
    slope, intercept = np.polyfit(xs, ys, 1)
    pred = slope * xs + intercept
    ss_res = float(np.sum((ys - pred) ** 2))
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    var_slope = ss_res / max(len(xs) - 2, 1) / float(np.sum((xs - xs.mean()) ** 2))

    mix_dev, mix_se = [], []
    pb, _ = _block_jackknife(probe_open[0].astype(float))
    for i in range(1, len(probe)):
        pf, _ = _block_jackknife(probe_open[i].astype(float))
        joint, se_joint = _block_jackknife(
            (probe_open[0] & probe_open[i]).astype(float))
        if pb > 0 and pf > 0:
            mix_dev.append(abs(joint / (pb * pf) - 1.0))
            mix_se.append(se_joint / (pb * pf))
        else:
            mix_dev.append(float("nan"))
            mix_se.append(float("nan"))

    return DecayMixingReport(
        radii=radii, log_p=log_p, log_p_stderr=log_se,
        slope=float(slope), slope_stderr=float(math.sqrt(max(var_slope, 0.0))),
        r_squared=r2,
        mixing_distances=dists, mixing_ratio_deviation=mix_dev, mixing_stderr=mix_se,
    )
