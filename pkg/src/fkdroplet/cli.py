"""Experiment driver.

Subcommands: sample (unconditioned statistics), wulff (inverse correlation
length, shape, constants), condition (area-conditioned chain and tail
curves), surgery-check (invariance suite), oracle (enumeration
cross-checks), geom-test (geometry property suites).  Configuration is a
flat key=value text file; every run writes CSVs, PNG figures (unless
--no-figures) and a run manifest into the output directory, and is
byte-deterministic in the CSVs for a fixed config and seed.

CSV schemas
  connectivity.csv: x1,x2,y1,y2,estimate,stderr,n
  decay.csv:        N,logp,stderr
  mixing.csv:       distance,ratio_deviation,stderr
  xi_directions.csv:theta,xi,stderr,n_points
  wulff.csv:        theta,xi
  shape_polygon.csv:x,y
  regen.csv:        chain,sweep,n,area,exc,censored,gd,cen1,cen2,
                    theta_circuit,theta_cluster,rg_circuit,rg_cluster,
                    maxreg,pp_angle,search_ok
  tails_theta.csv / tails_exc.csv / tails_gd.csv: u,estimate,lo,hi,n_eff
  oracle_report.csv: sampler,p,q,bc,tv,tv_iid_floor,db_max_err,samples
  surgery_report.csv:check,p,q,statistic,value,threshold,passed
  geom_report.csv:  suite,trials,failures,passed
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from .errors import FKDropletError, TooLargeError
from .lattice import BoundaryCondition, make_box
from .rng import make_rng
from .sampler import (
    FKParams,
    TransitionTables,
    decay_and_mixing_check,
    detailed_balance_max_error,
    exact_enumerate,
    two_point_connectivity,
)
from . import reports

USAGE_ERROR = 2
RESOURCE_ERROR = 3

_COMMON_KEYS = {"beta", "p", "q", "bc", "seed", "N", "n_box", "chains", "figures"}
_ALLOWED_KEYS = {
    "sample": _COMMON_KEYS | {"sweeps", "burnin", "distances", "radii", "method"},
    "wulff": _COMMON_KEYS | {"sweeps", "burnin", "distances", "directions", "grid"},
    "condition": _COMMON_KEYS | {"n", "sweeps", "burnin", "thin", "event",
                                 "xi_csv", "xi_const", "grid"},
    "surgery-check": _COMMON_KEYS | {"repeats", "burnin_factor"},
    "oracle": _COMMON_KEYS | {"samples", "thin"},
    "geom-test": _COMMON_KEYS | {"trials"},
}


def parse_config(path: str, subcommand: str) -> dict:
    cfg = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise KeyError(f"line {lineno}: expected key=value, got {raw!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in _ALLOWED_KEYS[subcommand]:
                raise KeyError(f"unknown config key `{key}` for {subcommand}")
            cfg[key] = value
    return cfg


def _params_from(cfg: dict, default_q="1.0") -> FKParams:
    q = float(cfg.get("q", default_q))
    bc = BoundaryCondition.parse(cfg.get("bc", "free"))
    seed = int(cfg.get("seed", "0"))
    if "beta" in cfg:
        return FKParams(beta=float(cfg["beta"]), q=q, bc=bc, seed=seed)
    if "p" in cfg:
        return FKParams.from_p(float(cfg["p"]), q=q, bc=bc, seed=seed)
    raise KeyError("missing `beta` (or `p`) key")


def _int_list(text: str) -> list[int]:
    return [int(t) for t in text.replace(",", " ").split()]


def _disk_shape(grid: int = 360, value: float = 1.0):
    from .wulff import XiTable, build_wulff
    return build_wulff(XiTable.from_function(lambda t: value, M=grid))


# -- subcommands -------------------------------------------------------------


def run_sample(cfg: dict, out: Path, figures: bool) -> dict:
    params = _params_from(cfg)
    N = int(cfg.get("N", cfg.get("n_box", "8")))
    box = make_box(N)
    sweeps = int(cfg.get("sweeps", "2000"))
    distances = _int_list(cfg.get("distances", "1 2 3"))
    radii = _int_list(cfg.get("radii", " ".join(str(r) for r in range(1, min(N, 5)))))
    method = cfg.get("method", "cluster")

    pairs = [((0, 0), (k, 0)) for k in distances]
    ests = two_point_connectivity(params, box, pairs, sweeps=sweeps,
                                  rng=make_rng(params.seed, 1), method=method)
    reports.write_csv(out / "connectivity.csv",
                      ["x1", "x2", "y1", "y2", "estimate", "stderr", "n"],
                      [[e.x[0], e.x[1], e.y[0], e.y[1], e.estimate, e.stderr, e.n]
                       for e in ests])
    rep = decay_and_mixing_check(params, box, radii, sweeps=sweeps,
                                 rng=make_rng(params.seed, 2), method=method)
    reports.write_csv(out / "decay.csv", ["N", "logp", "stderr"],
                      zip(rep.radii, rep.log_p, rep.log_p_stderr))
    reports.write_csv(out / "mixing.csv", ["distance", "ratio_deviation", "stderr"],
                      zip(rep.mixing_distances, rep.mixing_ratio_deviation,
                          rep.mixing_stderr))
    if figures:
        reports.plot_connectivity(out / "connectivity.png", ests)
        reports.plot_decay(out / "decay.png", rep.radii, rep.log_p,
                           rep.log_p_stderr, rep.slope,
                           rep.log_p[0] - rep.slope * rep.radii[0])
    return {"decay_slope": rep.slope, "decay_r2": rep.r_squared,
            "beta_c": params.beta_c, "subcritical": params.subcritical}


def run_wulff(cfg: dict, out: Path, figures: bool) -> dict:
    from .wulff import XiTable, build_wulff, choose_constants, estimate_xi
    params = _params_from(cfg)
    N = int(cfg.get("N", cfg.get("n_box", "10")))
    box = make_box(N)
    sweeps = int(cfg.get("sweeps", "3000"))
    grid = int(cfg.get("grid", "720"))
    distances = _int_list(cfg.get("distances", "2 3 4 5"))
    dir_codes = cfg.get("directions", "1,0 0,1 1,1")
    directions = []
    for tok in dir_codes.split():
        a, b = tok.split(",")
        directions.append((int(a), int(b)))

    pairs = []
    for d in directions:
        for k in distances:
            pairs.append(((0, 0), (k * d[0], k * d[1])))
    ests = two_point_connectivity(params, box, pairs, sweeps=sweeps,
                                  rng=make_rng(params.seed, 1))
    xi_est = estimate_xi(ests, directions)
    reports.write_csv(out / "xi_directions.csv",
                      ["theta", "xi", "stderr", "n_points"],
                      [[e.theta, e.xi, e.stderr, e.n_points] for e in xi_est])
    table = XiTable.from_estimates(xi_est, M=grid)
    shape = build_wulff(table)
    constants = choose_constants(shape, grid=grid)
    reports.write_csv(out / "wulff.csv", ["theta", "xi"],
                      zip(table.thetas, table.values))
    reports.write_csv(out / "shape_polygon.csv", ["x", "y"], shape.polygon)
    if figures:
        reports.plot_wulff(out / "wulff_shape.png", shape, constants)
    return {"lambda": shape.lam, "q0": constants.q0, "c0": constants.c0,
            "shape_area": shape.area()}


def run_condition(cfg: dict, out: Path, figures: bool) -> dict:
    from .conditioning import exc_tail, gd_tail, restricted_chain, theta_tail
    from .wulff import XiTable, build_wulff, choose_constants
    params = _params_from(cfg)
    n = int(cfg["n"]) if "n" in cfg else None
    if n is None:
        raise KeyError("missing `n` key")
    grid = int(cfg.get("grid", "360"))
    if "xi_csv" in cfg:
        data = np.loadtxt(cfg["xi_csv"], delimiter=",", skiprows=1)
        table = XiTable(thetas=data[:, 0], values=data[:, 1])
    else:
        const = float(cfg.get("xi_const", "1.0"))
        table = XiTable.from_function(lambda t: const, M=grid)
    shape = build_wulff(table)
    constants = choose_constants(shape, grid=grid)

    N = int(cfg.get("N", cfg.get("n_box", str(2 * n))))
    run = restricted_chain(
        params, n=n, event=cfg.get("event", "area_only"),
        sweeps=int(cfg.get("sweeps", "120")), box=make_box(N), shape=shape,
        constants=constants, burnin_sweeps=int(cfg.get("burnin", "20")),
        thin_sweeps=int(cfg.get("thin", "2")),
        chains=int(cfg.get("chains", "2")), seed=params.seed)

    reports.write_csv(
        out / "regen.csv",
        ["chain", "sweep", "n", "area", "exc", "censored", "gd", "cen1", "cen2",
         "theta_circuit", "theta_cluster", "rg_circuit", "rg_cluster",
         "maxreg", "pp_angle", "search_ok"],
        [[s.chain, s.sweep, n, s.area, s.exc, s.censored, s.gd, s.cen[0],
          s.cen[1], s.theta_circuit, s.theta_cluster, s.rg_circuit,
          s.rg_cluster, s.maxreg, s.pp_angle, s.search_ok]
         for s in run.samples])

    diag = {"gelman_rubin": run.gelman_rubin, "proposals": run.proposals,
            "accepted": run.accepted, "rejected_event": run.rejected_event,
            "samples": len(run.samples), "q0": constants.q0, "c0": constants.c0}
    min_samples = 30        # CLI runs may be small; tails degrade gracefully
    try:
        curve = theta_tail(run, min_samples=min_samples)
        reports.write_csv(out / "tails_theta.csv",
                          ["u", "estimate", "lo", "hi", "n_eff"],
                          [[g, e, lo, hi, curve.n_eff] for g, e, lo, hi in
                           zip(curve.grid, curve.estimate, curve.lo, curve.hi)])
        if figures:
            reports.plot_tail(out / "tails_theta.png", curve, "u (theta > u/n)")
        diag["theta_slope"] = curve.slope
        ce = exc_tail(run, min_samples=min_samples)
        reports.write_csv(out / "tails_exc.csv",
                          ["t", "estimate", "lo", "hi", "n_eff"],
                          [[g, e, lo, hi, ce.n_eff] for g, e, lo, hi in
                           zip(ce.grid, ce.estimate, ce.lo, ce.hi)])
        if figures:
            reports.plot_tail(out / "tails_exc.png", ce, "t (EXC >= n t)")
        cg, freq = gd_tail(run, shape, annulus=(0.05, 10.0),
                           min_samples=min_samples)
        reports.write_csv(out / "tails_gd.csv",
                          ["eps", "estimate", "lo", "hi", "n_eff"],
                          [[g, e, lo, hi, cg.n_eff] for g, e, lo, hi in
                           zip(cg.grid, cg.estimate, cg.lo, cg.hi)])
        if figures:
            reports.plot_tail(out / "tails_gd.png", cg, "eps (GD > eps n)")
        diag["annulus_frequency"] = freq
    except FKDropletError as exc:
        diag["tails_skipped"] = str(exc)
    return diag


def run_oracle(cfg: dict, out: Path, figures: bool) -> dict:
    params = _params_from(cfg)
    samples = int(cfg.get("samples", "200000"))
    thin = int(cfg.get("thin", "2"))
    box = make_box(1)
    if box.edge_count > int(cfg.get("max_edges", "24")):
        raise TooLargeError("enumeration guard")
    table = exact_enumerate(box, params)
    tables = TransitionTables(table)
    floor = float(0.5 * np.sqrt(2 * table.probs * (1 - table.probs)
                                / (math.pi * samples)).sum())
    rows = []
    worst_tv = 0.0
    for name, runner in (("heat_bath", tables.run_heat_bath),
                         ("cluster", tables.run_cluster)):
        rng = make_rng(params.seed, 0 if name == "heat_bath" else 1)
        states = runner(0, 200 + thin * samples, rng)[200:][thin - 1::thin]
        hist = np.bincount(states, minlength=table.probs.size).astype(float)
        hist /= hist.sum()
        tv = float(0.5 * np.abs(hist - table.probs).sum())
        worst_tv = max(worst_tv, tv)
        db = detailed_balance_max_error(box, params)
        rows.append([name, params.p, params.q, params.bc.value, tv, floor,
                     db, samples])
    reports.write_csv(out / "oracle_report.csv",
                      ["sampler", "p", "q", "bc", "tv", "tv_iid_floor",
                       "db_max_err", "samples"], rows)
    return {"max_tv": worst_tv, "tv_iid_floor": floor}


def run_surgery_check(cfg: dict, out: Path, figures: bool) -> dict:
    from scipy import stats
    from .geometry import SectorA
    from .surgery import (sector_storage_replacement,
                          shift_replacement_exact_output_measure,
                          table_resampler)
    params = _params_from(cfg)
    repeats = int(cfg.get("repeats", "20000"))
    burnin_factor = int(cfg.get("burnin_factor", "40"))
    box = make_box(1)
    table = exact_enumerate(box, params)
    tables = TransitionTables(table)
    fast = table_resampler(tables)
    region = SectorA(arg_lo=0.0, arg_hi=math.pi / 2).edge_ids_in(box)
    rng = make_rng(params.seed, 3)
    in_states = table.sample_indices(rng, repeats)
    counts = np.zeros(table.probs.size)
    for s in in_states:
        out_cfg = sector_storage_replacement(
            table.config_of(int(s)), region, params, rng=rng, resampler=fast,
            allow_boundary=True, burnin_factor=burnin_factor)
        counts[table.index_of(out_cfg.omega1)] += 1
    expected = table.probs * repeats
    mask = expected > 1.0
    chi2 = float(((counts[mask] - expected[mask]) ** 2 / expected[mask]).sum())
    dof = int(mask.sum()) - 1
    pval = float(stats.chi2.sf(chi2, dof))

    A = [box.edge_id((-1, -1), (0, -1))]
    B = [box.edge_id((0, 1), (1, 1))]
    outm = shift_replacement_exact_output_measure(box, params, A, B, (0, -1), table)
    ratio = outm / table.probs
    c6 = float(max(ratio.max(), 1.0 / ratio.min()))

    rows = [
        ["sector_two_step_chi2_p", params.p, params.q, "chi2_p", pval, 0.001,
         pval > 0.001],
        ["shift_measure_ratio", params.p, params.q, "C6", c6, math.inf,
         np.isfinite(c6)],
    ]
    reports.write_csv(out / "surgery_report.csv",
                      ["check", "p", "q", "statistic", "value", "threshold",
                       "passed"], rows)
    return {"chi2_p": pval, "C6": c6}


def run_geom_test(cfg: dict, out: Path, figures: bool) -> dict:
    from .geometry import (DirectedCones, PolySet, angle_between,
                           boundary_path, distang_check, hausdorff_distance)
    trials = int(cfg.get("trials", "20000"))
    seed = int(cfg.get("seed", "0"))
    rng = make_rng(seed)
    rows = []

    fails = 0
    for _ in range(trials // 100):
        n = int(rng.integers(3, 9))
        phases = np.sort(rng.uniform(0, 2 * math.pi, n))
        r = rng.uniform(0.5, 3.0)
        pts = np.stack([r * np.cos(phases), r * np.sin(phases)], axis=1)
        A = PolySet.from_closed_polygon(pts)
        B = PolySet.from_closed_polygon(pts + rng.uniform(-2, 2, 2))
        dab = hausdorff_distance(A, B)
        dba = hausdorff_distance(B, A)
        if abs(dab - dba) > 1e-8 or dab < 0:
            fails += 1
    rows.append(["hausdorff_symmetry", trials // 100, fails, fails == 0])

    fails = 0
    q0, c0 = math.pi / 7, 0.18
    done = 0
    while done < trials:
        x = rng.uniform(-40, 40, 2)
        if np.hypot(*x) < 1.0:
            continue
        cones = DirectedCones(v=tuple(x), q0=q0)
        which = "F" if rng.random() < 0.5 else "B"
        axis = cones.axis(which)
        dev = rng.uniform(-1, 1) * (math.pi / 2 - q0)
        cc, ss = math.cos(dev), math.sin(dev)
        d = np.array([cc * axis[0] - ss * axis[1], ss * axis[0] + cc * axis[1]])
        y = x + rng.uniform(0, 0.4) * np.hypot(*x) * d
        if angle_between(x, y) > c0:
            continue
        if not distang_check(x, y, q0, c0):
            fails += 1
        done += 1
    rows.append(["distance_angle_bound", trials, fails, fails == 0])

    fails = 0
    for _ in range(trials // 100):
        u = (int(rng.integers(0, 9)), int(rng.integers(0, 9)))
        if u == (0, 0):
            continue
        side = "+" if rng.random() < 0.5 else "-"
        path = boundary_path(u, side, 30)
        if len(set(path)) != len(path):
            fails += 1
    rows.append(["boundary_path_simple", trials // 100, fails, fails == 0])

    reports.write_csv(out / "geom_report.csv",
                      ["suite", "trials", "failures", "passed"], rows)
    return {"failures": sum(r[2] for r in rows)}


_RUNNERS = {
    "sample": run_sample,
    "wulff": run_wulff,
    "condition": run_condition,
    "surgery-check": run_surgery_check,
    "oracle": run_oracle,
    "geom-test": run_geom_test,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fkdroplet",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("subcommand", choices=sorted(_RUNNERS))
    parser.add_argument("--config", required=True, help="key=value config file")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
    parser.add_argument("--out-dir", default="out", help="output directory")
    parser.add_argument("--chains", type=int, default=None,
                        help="override the chain count")
    parser.add_argument("--max-edges-enumerate", type=int, default=24,
                        help="refuse enumerations beyond this edge count")
    parser.add_argument("--figures", dest="figures", action="store_true",
                        default=True)
    parser.add_argument("--no-figures", dest="figures", action="store_false")
    args = parser.parse_args(argv)

    try:
        cfg = parse_config(args.config, args.subcommand)
    except (OSError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    if args.seed is not None:
        cfg["seed"] = str(args.seed)
    if args.chains is not None:
        cfg["chains"] = str(args.chains)
    cfg.setdefault("max_edges", str(args.max_edges_enumerate))

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        diagnostics = _RUNNERS[args.subcommand](cfg, out, args.figures)
    except KeyError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except TooLargeError as exc:
        print(f"resource guard: {exc}", file=sys.stderr)
        return RESOURCE_ERROR
    except FKDropletError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    reports.write_manifest(out / "manifest.txt", cfg, diagnostics)
    print(f"{args.subcommand}: wrote {args.out_dir}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
