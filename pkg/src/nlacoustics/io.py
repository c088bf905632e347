"""Deterministic file outputs: trajectory CSV, rate tables and SVG plots."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .evolution import energy_functional
from .fields import Trajectory
from .fractional import frac_norms


def _f(x: float) -> str:
    # shortest round-trip representation, stable across runs
    return repr(float(x))


def trajectory_columns(traj: Trajectory, sigma: float | None = None):
    """Header and column arrays of the trajectory table."""
    sigma = traj.sigma if sigma is None else sigma
    sp = traj.space
    names = ["time"]
    for comp, b in enumerate(sp.bases):
        label = "p" if comp == 0 else f"v{comp}"
        names += [f"{label}[{','.join(str(int(k)) for k in kk)}]" for kk in b.kidx]
    c = traj.coeffs
    H = frac_norms(sp, c, 0.0)
    W = frac_norms(sp, c, 0.5 * sigma)
    a = frac_norms(sp, c, 0.5 * (1 + sigma)) ** 2
    b = frac_norms(sp, traj.time_derivative(), -0.5 * (1 - sigma)) ** 2
    dens = a + b
    xp = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(traj.times) * (dens[1:] + dens[:-1]))])
    E = energy_functional(traj.times, c, sp)
    Es = energy_functional(traj.times, c, sp, 0.5 * sigma)
    names += ["norm_H", "norm_W", "x_partial_sq", "energy", "energy_frac"]
    cols = np.column_stack([traj.times, c, H, W, xp, E, Es])
    return names, cols


def write_trajectory_csv(traj: Trajectory, path: str | Path, sigma: float | None = None):
    """One row per time node: time, coefficients, H/W norms, X partial, energies."""
    names, cols = trajectory_columns(traj, sigma)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(names)
        for row in cols:
            w.writerow([_f(x) for x in row])


def read_trajectory_csv(path: str | Path):
    """Header and float array of a trajectory table."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array([[float(x) for x in r] for r in rows[1:]])


def write_rows(path: str | Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_f(x) if isinstance(x, (float, np.floating)) else x for x in r])


# -------------------------------------------------------------------- plots
def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    matplotlib.rcParams["svg.hashsalt"] = "nlacoustics"
    matplotlib.rcParams["svg.fonttype"] = "none"
    return plt


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})


def plot_norms(traj: Trajectory, path: str | Path, sigma: float | None = None):
    plt = _pyplot()
    names, cols = trajectory_columns(traj, sigma)
    fig, ax = plt.subplots(figsize=(6, 4))
    t = cols[:, 0]
    for name in ("norm_H", "norm_W", "energy", "energy_frac"):
        ax.plot(t, cols[:, names.index(name)], label=name)
    ax.set_xlabel("t")
    ax.set_yscale("log")
    ax.legend()
    ax.set_title("norm histories")
    _save(fig, path)
    plt.close(fig)


def plot_residuals(residuals, path: str | Path):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5, 4))
    r = np.maximum(np.asarray(residuals, dtype=float), 1e-300)
    ax.semilogy(np.arange(len(r)), r, "o-")
    ax.set_xlabel("Newton iteration")
    ax.set_ylabel("residual")
    _save(fig, path)
    plt.close(fig)


def plot_slice(traj: Trajectory, path: str | Path, comp: int = 0, n: int = 97, nsnap: int = 5):
    """Component along the line ``x_1 = L_1/2`` (and ``x_2 = L_2/2``) at a few times."""
    from .basis import eval_mode
    plt = _pyplot()
    sp = traj.space
    L = sp.domain.extents
    x = np.linspace(0.0, L[0], n)
    pts = np.zeros((n, sp.dim))
    pts[:, 0] = x
    pts[:, 1:] = 0.5 * np.asarray(L[1:])
    b = sp.bases[comp]
    Phi = np.stack([eval_mode(b, tuple(k), pts) for k in b.kidx], axis=1)
    fig, ax = plt.subplots(figsize=(6, 4))
    idx = np.unique(np.linspace(0, len(traj.times) - 1, nsnap).round().astype(int))
    for i in idx:
        y = Phi @ traj.coeffs[i, sp.slice(comp)]
        if traj.lift is not None:
            y = y + traj.lift.evaluate(pts, traj.times[i])[comp]
        ax.plot(x, y, label=f"t={traj.times[i]:.3g}")
    ax.set_xlabel("x1")
    ax.set_title("p" if comp == 0 else f"v{comp}")
    ax.legend()
    _save(fig, path)
    plt.close(fig)
