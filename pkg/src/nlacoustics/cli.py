"""Batch front-end: ``simulate | verify | convergence | lift | sweep``.

Exit codes: 0 success, 2 configuration error, 3 certificate FAIL,
4 property FAIL, 5 divergence abort.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, load_config, parse_config, sweep_configs

EXIT_OK, EXIT_CONFIG, EXIT_CERT, EXIT_PROPERTY, EXIT_DIVERGE = 0, 2, 3, 4, 5


def _outdir(cfg: RunConfig, out: str | None) -> Path:
    p = Path(out or cfg.out_dir)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _manufactured(cfg: RunConfig, cutoff=None, static=False, kind=None):
    from .verify import ManufacturedSolution
    if any(abs(L - np.pi) > 1e-12 for L in cfg.extents):
        raise ConfigError("manufactured forcing requires the domain [0, pi]^d")
    nh = cfg.bc_family in ("DirDir", "NeuDir")
    ms = ManufacturedSolution(cfg.bc_family, cfg.sigma, cfg.dim, kind or cfg.manufactured or "modes",
                              nonhomogeneous=nh, static=static)
    md = ms.setup(cfg.operators(cutoff))
    return ms, md


def _problem(cfg: RunConfig, ops=None, dt=None, mms=None):
    from .newton import NonlinearProblem
    ops = ops or cfg.operators()
    dt = dt or cfg.dt
    from .fields import time_grid
    times = time_grid(cfg.T, dt)
    if mms is not None:
        g, F, bnd = mms.g, mms.forcing(times), mms.ms.boundary
    else:
        g = cfg.initial_coefficients(ops.space)
        F = cfg.forcing_samples(ops.space, times)
        bnd = cfg.boundary_data()
    return NonlinearProblem(ops, cfg.T, dt, cfg.sigma, g=g, forcing=F, boundary=bnd, tol=cfg.tol,
                            kmax=cfg.kmax, smallness_radius=cfg.smallness_radius,
                            probe_samples=cfg.probe_samples, holder_samples=cfg.holder_samples,
                            seed=cfg.seed)


# ------------------------------------------------------------- subcommands
def cmd_simulate(cfg: RunConfig, out: Path) -> int:
    from . import io
    from .newton import DivergenceError, certificate_report, certificate_text, newton_solve
    md = _manufactured(cfg)[1] if cfg.manufactured else None
    prob = _problem(cfg, mms=md)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            traj, cert = newton_solve(prob, decomposition=cfg.decomposition)
    except DivergenceError as exc:
        (out / "divergence.txt").write_text(f"{exc}\n")
        print(f"divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGE
    io.write_trajectory_csv(traj, out / "trajectory.csv", cfg.sigma)
    (out / "certificate.txt").write_text(certificate_text(cert))
    if cfg.plots:
        io.plot_norms(traj, out / "norms.svg", cfg.sigma)
        io.plot_residuals(cert.iterate_residuals, out / "residuals.svg")
        io.plot_slice(traj, out / "slice_p.svg", 0)
        io.plot_slice(traj, out / "slice_v1.svg", 1)
    rep = certificate_report(cert)
    print(f"certificate {rep['verdict']}: condition={rep['condition']:.3e} "
          f"iterations={rep['iterations']} residual={cert.iterate_residuals[-1]:.3e}")
    return EXIT_OK if cert.passed else EXIT_CERT


def cmd_verify(cfg: RunConfig, out: Path) -> int:
    from . import io
    from .verify import property_suite
    ops = cfg.operators()
    res = property_suite(ops, cfg.boundary_data(), seed=cfg.seed, samples=cfg.verify_samples)
    io.write_rows(out / "properties.csv", ["property", "status", "value", "threshold", "detail"],
                  [(r.name, "PASS" if r.passed else "FAIL", float(r.value), float(r.threshold),
                    r.detail) for r in res])
    for r in res:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name} value={r.value:.3e} "
              f"threshold={r.threshold:.1e}")
    failed = [r.name for r in res if not r.passed]
    if failed:
        print(f"property failure: {', '.join(failed)}", file=sys.stderr)
        return EXIT_PROPERTY
    return EXIT_OK


def mms_error(cfg: RunConfig, level, axis: str) -> float:
    """Sup over time of ``||A^{s/2}(w - P u_ms)||`` for one study level."""
    from .fractional import frac_norms
    from .newton import newton_solve
    if axis == "dt":
        ms, md = _manufactured(cfg, kind=cfg.conv_kind)
        prob = _problem(cfg, md.ops, dt=level, mms=md)
    else:
        ms, md = _manufactured(cfg, cutoff=int(level), static=True, kind=cfg.conv_kind)
        prob = _problem(cfg, md.ops, mms=md)
    prob.tol = min(prob.tol, 1e-12)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        # direct form keeps a static solution a fixed point of the stepper
        dec = cfg.decomposition if axis == "dt" else False
        traj, _ = newton_solve(prob, decomposition=dec, certify=False)
    ex = md.exact(traj.times)
    # the lift is exact, so only the spectral part carries error
    diff = traj.coeffs - ex.coeffs
    return float(frac_norms(md.space, diff, 0.5 * cfg.sigma).max())


def cmd_convergence(cfg: RunConfig, out: Path) -> int:
    from .verify import convergence_study
    tab = convergence_study(lambda lv: mms_error(cfg, lv, cfg.conv_axis), cfg.conv_levels,
                            cfg.conv_axis)
    (out / f"rates_{cfg.conv_axis}.csv").write_text(tab.to_csv())
    for lv, e, r in tab.rows():
        print(f"{cfg.conv_axis}={lv} error={e:.3e} ratio={r:.3g}")
    print(f"fitted rate {tab.rate:.3f} monotone={tab.monotone}")
    if not tab.monotone:
        print("warning: non-monotone error sequence", file=sys.stderr)
    return EXIT_OK


def cmd_lift(cfg: RunConfig, out: Path) -> int:
    from . import io
    from .lifting import HarmonicLift
    data = cfg.boundary_data()
    sp = cfg.space()
    rows = []
    times = np.linspace(0.0, cfg.T, 5)
    if data.is_zero():
        rows = [(float(t), 0.0, 0.0) for t in times]
    else:
        lift = HarmonicLift(sp, data, cfg.operators())
        rows = [(float(t), lift.harmonicity_residual(float(t)), lift.trace_error(float(t)))
                for t in times]
    io.write_rows(out / "lift.csv", ["time", "harmonicity_residual", "trace_error"], rows)
    h = max(r[1] for r in rows)
    tr = max(r[2] for r in rows)
    ok_h, ok_t = h <= 1e-8, tr <= 1e-8
    print(f"{'PASS' if ok_h else 'FAIL'} harmonicity_residual value={h:.3e}")
    print(f"{'PASS' if ok_t else 'FAIL'} trace_fidelity value={tr:.3e}")
    return EXIT_OK if ok_h and ok_t else EXIT_PROPERTY


COMMANDS = {"simulate": cmd_simulate, "verify": cmd_verify, "convergence": cmd_convergence,
            "lift": cmd_lift}


def _run_text(args):
    name, text, out, seed, command = args
    try:
        cfg = parse_config(text, name)
    except ConfigError as exc:
        return name, EXIT_CONFIG, str(exc)
    if seed is not None:
        cfg.seed = seed
    d = Path(out) / name
    d.mkdir(parents=True, exist_ok=True)
    (d / "config.yaml").write_text(text)
    return name, COMMANDS[command](cfg, d), ""


def cmd_sweep(path: str, out: Path, seed, threads: int, command: str = "simulate") -> int:
    try:
        items = sweep_configs(path)
    except (OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    jobs = [(name, text, str(out), seed, command) for name, text in items]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(_run_text, jobs))
    else:
        results = [_run_text(j) for j in jobs]
    with open(out / "sweep.csv", "w") as fh:
        fh.write("name,exit_code\r\n")
        for name, code, _ in results:
            fh.write(f"{name},{code}\r\n")
    for name, code, msg in results:
        print(f"{name}: exit {code}{' ' + msg if msg else ''}")
    return max((c for _, c, _ in results), default=EXIT_OK)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nlacoustics", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("simulate", "verify", "convergence", "lift", "sweep"):
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, help="YAML run configuration")
        s.add_argument("--out", help="output directory (overrides output.dir)")
        s.add_argument("--seed", type=int, help="override probes.seed")
        s.add_argument("--threads", type=int, default=1, help="worker processes for sweep")
        if name == "sweep":
            s.add_argument("--task", default="simulate", choices=sorted(COMMANDS),
                           help="subcommand run for every sweep entry")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "sweep":
        out = Path(args.out or "out")
        out.mkdir(parents=True, exist_ok=True)
        return cmd_sweep(args.config, out, args.seed, args.threads, args.task)
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.seed is not None:
        cfg.seed = args.seed
    out = _outdir(cfg, args.out)
    try:
        return COMMANDS[args.command](cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
