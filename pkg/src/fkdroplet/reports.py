"""Delimited outputs and figure rendering for the experiment driver.

Every CSV value is written with a fixed %.10g format so that runs with the
same configuration and seed produce byte-identical files.  Figures are a
convenience rendering of the same data (PNG next to each CSV); they carry
no additional information and can be disabled.
"""

from __future__ import annotations

import math
import time
from pathlib import Path
from typing import Iterable, Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from . import __version__

plt.rcParams.update({
    "figure.figsize": (6.0, 4.0),
    "figure.dpi": 110,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
})


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".10g")
    return str(x)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def write_manifest(path, config: dict, diagnostics: Optional[dict] = None) -> Path:
    """Run manifest: every parameter, the code version, wall-clock, and
    per-module diagnostics; parameters and seeds fully determine the CSVs."""
    path = Path(path)
    with open(path, "w") as fh:
        fh.write(f"code_version={__version__}\n")
        fh.write(f"wall_clock_utc={time.strftime('%Y-%m-%dT%H:%M:%SZ', time.gmtime())}\n")
        for key in sorted(config):
            fh.write(f"{key}={_fmt(config[key])}\n")
        for key in sorted(diagnostics or {}):
            fh.write(f"diag.{key}={_fmt(diagnostics[key])}\n")
    return path


def plot_decay(path, radii, log_p, stderr, slope, intercept) -> Path:
    fig, ax = plt.subplots()
    radii = np.asarray(radii, dtype=float)
    ax.errorbar(radii, log_p, yerr=stderr, fmt="o", label="log P(0 <-> outside B_N)")
    xs = np.linspace(radii.min(), radii.max(), 50)
    ax.plot(xs, slope * xs + intercept, "-", label=f"fit slope {slope:.4f}")
    ax.set_xlabel("N")
    ax.set_ylabel("log reach probability")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return Path(path)


def plot_connectivity(path, estimates) -> Path:
    fig, ax = plt.subplots()
    rs = [math.hypot(e.y[0] - e.x[0], e.y[1] - e.x[1]) for e in estimates]
    ps = [e.estimate for e in estimates]
    es = [e.stderr for e in estimates]
    ax.errorbar(rs, ps, yerr=es, fmt="s")
    ax.set_yscale("log")
    ax.set_xlabel("||x - y||")
    ax.set_ylabel("P(x <-> y)")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return Path(path)


def plot_wulff(path, shape, constants=None) -> Path:
    fig, ax = plt.subplots(figsize=(4.8, 4.8))
    poly = np.vstack([shape.polygon, shape.polygon[:1]])
    ax.plot(poly[:, 0], poly[:, 1], "-", lw=1.2, label="unit-area shape")
    th = shape.xi_table.thetas
    xi = shape.xi_table.values
    ax.plot(xi * np.cos(th) * shape.lam, xi * np.sin(th) * shape.lam,
            ":", lw=0.8, label="support-scaled xi")
    title = f"lambda = {shape.lam:.6f}"
    if constants is not None:
        title += f", q0 = {constants.q0:.4f}, c0 = {constants.c0:.4f}"
    ax.set_title(title)
    ax.set_aspect("equal")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return Path(path)


def plot_tail(path, curve, xlabel: str) -> Path:
    fig, ax = plt.subplots()
    ax.fill_between(curve.grid, np.maximum(curve.lo, 1e-6),
                    np.maximum(curve.hi, 1e-6), alpha=0.25, label="Wilson 95%")
    ax.plot(curve.grid, np.maximum(curve.estimate, 1e-6), "o-", ms=3)
    if not math.isnan(curve.slope) and curve.window:
        xs = curve.grid[list(curve.window)]
        ax.plot(xs, np.exp(curve.slope * xs + curve.intercept), "--",
                label=f"log-linear fit, slope {curve.slope:.3f}, R2 {curve.r_squared:.2f}")
    ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("tail probability")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return Path(path)
