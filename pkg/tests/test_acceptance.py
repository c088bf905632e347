"""Acceptance suite: one PASS/FAIL line per criterion.

Tolerances are pinned; none is relaxed to make a run pass.
"""

import filecmp
import math
import time
import warnings
from pathlib import Path

import numpy as np
import pytest

from conftest import record
from nlacoustics.basis import BoxDomain
from nlacoustics.cli import cmd_simulate, cmd_sweep, mms_error
from nlacoustics.config import RunConfig, load_config
from nlacoustics.evolution import LinearProblem, random_data, solve_linear
from nlacoustics.fields import FieldSpace, time_grid
from nlacoustics.fractional import x_norm, y_norm, w_norm
from nlacoustics.lifting import BoundaryData, Envelope, FaceMode, HarmonicLift, lifted_residual
from nlacoustics.newton import NonlinearProblem, newton_solve, quadratic_fit
from nlacoustics.operators import OperatorSet
from nlacoustics.verify import (ManufacturedSolution, convergence_study, eigen_structure,
                                oracle_comparison, skew_check)

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
FAMILY_DIMS = [("DirDir", 2), ("DirDir", 3), ("NeuDir", 2), ("NeuDir", 3),
               ("NeuHodge", 3), ("DirHodge", 3)]
HODGE = ("NeuHodge", "DirHodge")


def _space(family, dim, m):
    return FieldSpace(BoxDomain.cube(dim), family, m)


# ---------------------------------------------------------------- 1
def test_c01_eigen_structure():
    t0 = time.perf_counter()
    worst_g = worst_s = 0.0
    for fam, d in FAMILY_DIMS:
        g, s = eigen_structure(_space(fam, d, 16))
        worst_g, worst_s = max(worst_g, g), max(worst_s, s)
    elapsed = time.perf_counter() - t0
    ok = worst_g <= 1e-8 and worst_s <= 1e-8 and elapsed < 60
    record(1, "eigen-structure", ok, f"gram {worst_g:.2e}, stiffness {worst_s:.2e} (tol 1e-8), "
                                     f"runtime {elapsed:.1f}s (< 60s), cutoff 16")
    assert ok


# ---------------------------------------------------------------- 2
def test_c02_skew_symmetry():
    worst_sym = worst_q = 0.0
    for fam, d in FAMILY_DIMS:
        ops = OperatorSet(_space(fam, d, 8 if d == 2 else 5))
        sym, q = skew_check(ops, samples=100, seed=1)
        worst_sym, worst_q = max(worst_sym, sym), max(worst_q, q)
    ok = worst_sym <= 1e-12 and worst_q <= 1e-10
    record(2, "skew-symmetry", ok, f"|S+S^T|_max {worst_sym:.2e} (tol 1e-12), "
                                   f"|<Su,u>|/|u|^2 {worst_q:.2e} (tol 1e-10), 100 states/family")
    assert ok


# ---------------------------------------------------------------- 3
def test_c03_bilinear_constant():
    spreads = {}
    vals = {}
    for sigma in (0.5, 0.75, 1.0):
        v = [OperatorSet(_space("DirDir", 2, m)).holder_probe(sigma, samples=200, seed=0, decay=5,
                                                              ref_cutoff=16) for m in (4, 8, 16)]
        vals[sigma] = v
        spreads[sigma] = (max(v) - min(v)) / max(v)
    finite = all(np.isfinite(x) and x > 0 for v in vals.values() for x in v)
    ok = finite and max(spreads.values()) < 0.10
    det = ", ".join(f"s={s}: C_B {min(vals[s]):.4f}..{max(vals[s]):.4f} ({100 * spreads[s]:.1f}%)"
                    for s in vals)
    record(3, "bilinear estimate", ok, det + " (variation < 10%)")
    assert ok


# ---------------------------------------------------------------- 4, 5
@pytest.fixture(scope="module")
def linear_sweep():
    """100 random linear runs per cutoff on family (2a), sigma = 1 and 1/2."""
    out = {}
    T, dt = 1.0, 5e-3
    times = time_grid(T, dt)
    for sigma in (1.0, 0.5):
        for m in (4, 8, 16):
            ops = OperatorSet(_space("DirDir", 2, m))
            rng = np.random.default_rng(7)
            E, A, H = [], [], []
            for i in range(100):
                f, g = random_data(ops.space, times, rng, ("g", "f", "mixed")[i % 3], 3.0, 16)
                tr, rep = solve_linear(LinearProblem(ops, g, T, dt, sigma, forcing=f))
                E.append(rep.ratio)
                A.append(x_norm(tr, sigma) / (y_norm(ops.space, times, f, sigma)
                                              + w_norm(ops.space, g, sigma)))
                if i < 5:
                    _, rep2 = solve_linear(LinearProblem(ops, 3.0 * g, T, dt, sigma,
                                                         forcing=3.0 * f))
                    for a, b in ((rep.energy, rep2.energy), (rep.energy_frac, rep2.energy_frac)):
                        H.append(float(np.abs(b - 9.0 * a).max() / max(np.abs(9.0 * a).max(),
                                                                       1e-300)))
            out[(sigma, m)] = (np.array(E), np.array(A), max(H))
    return out


def _spread(values):
    return (max(values) - min(values)) / max(values)


def test_c04_energy_bound(linear_sweep):
    msgs, ok = [], True
    for sigma in (1.0, 0.5):
        sups = [linear_sweep[(sigma, m)][0].max() for m in (4, 8, 16)]
        finite = all(np.isfinite(linear_sweep[(sigma, m)][0]).all() for m in (4, 8, 16))
        sp = _spread(sups)
        ok &= finite and sp < 0.25
        msgs.append(f"s={sigma}: sup ratio {min(sups):.3f}..{max(sups):.3f} ({100 * sp:.1f}%)")
    record(4, "energy bound", ok, "; ".join(msgs) + " (variation < 25%, 100 runs x 3 cutoffs)")
    assert ok


def test_c05_apriori_estimate(linear_sweep):
    msgs, ok = [], True
    hom = max(linear_sweep[k][2] for k in linear_sweep)
    for sigma in (1.0, 0.5):
        sups = [linear_sweep[(sigma, m)][1].max() for m in (4, 8, 16)]
        sp = _spread(sups)
        ok &= np.isfinite(sups).all() and sp < 0.25
        msgs.append(f"s={sigma}: sup |u|_X/data {min(sups):.3f}..{max(sups):.3f} "
                    f"({100 * sp:.1f}%)")
    ok &= hom <= 1e-10
    record(5, "a priori estimate", ok, "; ".join(msgs) + f"; energy homogeneity {hom:.1e} "
                                                        "(tol 1e-10)")
    assert ok


# ---------------------------------------------------------------- 6
def test_c06_newton_kantorovich():
    t0 = time.perf_counter()
    sp = _space("DirDir", 2, 8)
    ops = OperatorSet(sp)
    times = time_grid(1.0, 1e-3)
    g = sp.zeros()
    g[sp.index(0, (1, 1))] = 0.7
    g[sp.index(1, (2, 1))] = 0.35
    g[sp.index(2, (1, 2))] = -0.3
    F = np.zeros((len(times), sp.n_dof))
    F[:, sp.index(0, (1, 2))] = 0.35 * np.sin(3.0 * times)
    prob = NonlinearProblem(ops, 1.0, 1e-3, 1.0, g=g, forcing=F, tol=1e-9)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        _, cert = newton_solve(prob)
    elapsed = time.perf_counter() - t0
    slope, r2, npairs = quadratic_fit(cert.iterate_residuals)
    ok = (cert.condition <= 0.25 and abs(slope - 2.0) <= 0.3 and r2 >= 0.95 and npairs >= 3
          and cert.converged and cert.iterate_residuals[-1] < 1e-9 and cert.iterations <= 8
          and cert.contained and elapsed < 300)
    res = ", ".join(f"{r:.1e}" for r in cert.iterate_residuals)
    record(6, "Newton-Kantorovich", ok,
           f"condition {cert.condition:.3f} (<= 0.25), slope {slope:.2f} (2 +- 0.3), R2 {r2:.4f} "
           f"(>= 0.95, {npairs} pairs), residuals [{res}], {cert.iterations} iterations (<= 8), "
           f"max |u_k|_X {cert.containment:.3f} <= r- {cert.r_minus:.3f}, runtime {elapsed:.0f}s")
    assert ok


# ---------------------------------------------------------------- 7
def test_c07_oracle_equivalence():
    cases = [("DirDir", 4), ("NeuDir", 4), ("NeuHodge", 2), ("DirHodge", 2)]
    worst, msgs = 0.0, []
    for fam, m in cases:
        for nl in (False, True):
            d = oracle_comparison(fam, m, nonlinear=nl, dt=1e-4, T=0.2, amplitude=0.1, seed=3)
            worst = max(worst, d)
            msgs.append(f"{fam}{'/nl' if nl else '/lin'} {d:.1e}")
    ok = worst <= 1e-6
    record(7, "oracle equivalence", ok, f"max X-norm difference {worst:.2e} (tol 1e-6) at "
                                        f"dt 1e-4: " + ", ".join(msgs))
    assert ok


# ---------------------------------------------------------------- 8
def _mms_cfg(fam, kind, T=0.5):
    d = 3 if fam in HODGE else 2
    return RunConfig(dim=d, extents=(math.pi,) * d, bc_family=fam, T=T, dt=1e-2,
                     conv_kind=kind, tol=1e-12)


def test_c08_manufactured_solutions():
    ok, msgs = True, []
    worst_res = 0.0
    for fam in ("DirDir", "NeuDir", "NeuHodge", "DirHodge"):
        nh = fam not in HODGE
        for kind, m in (("modes", 4), ("analytic", 12 if nh else 14)):
            ms = ManufacturedSolution(fam, kind=kind, nonhomogeneous=nh)
            ops = OperatorSet(ms.space(m))
            md = ms.setup(ops)
            times = np.linspace(0.0, 0.5, 11)
            ry, rw = lifted_residual(md.exact(times), md.lift, ops, md.forcing(times), md.g, 1.0)
            worst_res = max(worst_res, ry + rw)
    ok &= worst_res <= 1e-8
    msgs.append(f"max residual {worst_res:.1e} (tol 1e-8)")
    for fam in ("DirDir", "NeuDir", "NeuHodge", "DirHodge"):
        cfg = _mms_cfg(fam, "modes")
        cfg.cutoff = 4 if fam not in HODGE else 3
        tab = convergence_study(lambda lv: mms_error(cfg, lv, "dt"),
                                [0.05, 0.025, 0.0125, 0.00625], "dt")
        good = tab.monotone and abs(tab.rate - 2.0) <= 0.2
        ok &= good
        msgs.append(f"{fam} dt-rate {tab.rate:.2f}")
    for fam, levels in (("DirDir", [4, 6, 8, 10]), ("NeuDir", [4, 6, 8, 10]),
                        ("NeuHodge", [2, 4, 6]), ("DirHodge", [2, 4, 6])):
        cfg = _mms_cfg(fam, "analytic", T=0.1)
        tab = convergence_study(lambda lv: mms_error(cfg, lv, "cutoff"), levels, "cutoff")
        ok &= tab.super_algebraic
        msgs.append(f"{fam} cutoff ratios " + "/".join(f"{r:.0f}" for r in tab.ratios))
    record(8, "manufactured solutions", ok, "; ".join(msgs) + " (dt-rate 2 +- 0.2, ratio >= 10)")
    assert ok


# ---------------------------------------------------------------- 9
def test_c09_lifting(tmp_path):
    ok, msgs = True, []
    env = Envelope("sin", omega=2.0, phase=0.3)
    worst_h = worst_t = 0.0
    for fam, d in FAMILY_DIMS:
        if fam in HODGE:
            continue
        t1 = (1,) * (d - 1)
        modes = [FaceMode(0, 1, 0, t1, 0.4, env), FaceMode(0, 0, 1, (2,) + t1[1:], -0.3, env),
                 FaceMode(1, 1, 1, t1, 0.2, env), FaceMode(2, 0, 0, (3,) + t1[1:], 0.1, env)]
        if fam == "NeuDir":
            modes.append(FaceMode(0, d - 1, 1, (0,) * (d - 1), 0.25, env))
        lift = HarmonicLift(_space(fam, d, 6), BoundaryData(modes))
        for t in (0.0, 0.4):
            worst_h = max(worst_h, lift.harmonicity_residual(t))
            worst_t = max(worst_t, lift.trace_error(t))
    ok &= worst_h <= 1e-8 and worst_t <= 1e-8
    msgs.append(f"harmonicity {worst_h:.1e}, trace {worst_t:.1e} (tol 1e-8)")

    ms = ManufacturedSolution("DirDir", kind="modes", nonhomogeneous=True)
    ops = OperatorSet(ms.space(4))
    md = ms.setup(ops)
    res = []
    levels = [0.02, 0.01, 0.005]
    for dt in levels:
        times = time_grid(0.5, dt)
        prob = NonlinearProblem(ops, 0.5, dt, 1.0, g=md.g, forcing=md.forcing(times),
                                boundary=ms.boundary, tol=1e-12)
        traj, _ = newton_solve(prob, certify=False)
        ry, _ = lifted_residual(traj, traj.lift, ops, prob.forcing, md.g, 1.0, derivative="fd")
        res.append(ry)
    rate = float(np.polyfit(np.log(levels), np.log(res), 1)[0])
    ok &= abs(rate - 2.0) <= 0.3 and res[-1] < res[0]
    msgs.append("composed residual " + "/".join(f"{r:.1e}" for r in res) + f" rate {rate:.2f}")

    code = cmd_sweep(str(CONFIGS / "sigma_sweep.yaml"), tmp_path, None, 3)
    verdicts = []
    for name in ("sigma_0.5", "sigma_0.75", "sigma_1"):
        text = (tmp_path / name / "certificate.txt").read_text()
        verdicts.append('"verdict": "PASS"' in text)
    ok &= code == 0 and all(verdicts)
    msgs.append(f"sigma sweep {sum(verdicts)}/3 PASS")
    record(9, "lifting", ok, "; ".join(msgs))
    assert ok


# ---------------------------------------------------------------- 10
def test_c10_determinism(tmp_path):
    cfg = load_config(CONFIGS / "dirdir_boundary.yaml")
    cfg.cutoff, cfg.dt, cfg.T = 6, 2e-3, 0.5
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir()
    b.mkdir()
    ca, cb = cmd_simulate(cfg, a), cmd_simulate(cfg, b)
    files = sorted(p.name for p in a.iterdir())
    match, mismatch, errors = filecmp.cmpfiles(a, b, files, shallow=False)
    ok = ca == cb == 0 and not mismatch and not errors and \
        {"trajectory.csv", "certificate.txt"} <= set(match)
    record(10, "determinism", ok, f"{len(match)}/{len(files)} files byte-identical "
                                  f"({', '.join(files)})")
    assert ok
