"""Experiment driver.

    sphere-fv run          --config PATH [--out DIR]
    sphere-fv converge     --config PATH [--out DIR] [--resolutions LIST]
    sphere-fv check-compat --config PATH [--out DIR]
    sphere-fv torus        --config PATH [--out DIR]

Exit codes: 0 success, 1 compatibility-residual failure (check-compat),
2 configuration error (nothing written), 3 runtime error (partial outputs
plus a FAILED marker).  SPHEREFV_THREADS is accepted as a parallelism hint;
the current kernels are single-threaded and deterministic either way.
"""
from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import diagnostics
from .config import (ConfigError, RunConfig, echo_config, parse_config,
                     parse_resolutions)
from .flux import make_flux
from .initial import initial_function
from .mesh import CoarseningRule, InvalidResolution, build_web_mesh, dump_csv
from .scheme import CellState, SchemeConfig, run_states
from . import torus1d

COMPAT_TOLERANCE = 1e-10


def _r(x) -> str:
    return repr(float(x))


def _load(config_path, command) -> RunConfig:
    text = Path(config_path).read_text()
    return parse_config(text, command)


def _prepare(cfg: RunConfig):
    mesh = build_web_mesh(cfg.mesh.n_bands, cfg.mesh.n_lon_equator,
                          CoarseningRule(cfg.mesh.merge_threshold))
    F = make_flux(cfg.flux.kind, cfg.flux.axis)
    return mesh, F


def _outdir(cfg: RunConfig, out_override) -> Path:
    d = Path(out_override) if out_override else Path(cfg.output.directory)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _write_state_csv(path, mesh, state):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["cell_id", "lam_center", "phi_center", "u"])
        for i in range(mesh.n_cells):
            w.writerow([i, _r(mesh.cell_lam_c[i]), _r(mesh.cell_phi_c[i]),
                        _r(state.u[i])])


def _write_diagnostics_csv(path, report):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(report.CSV_COLUMNS)
        for row in report.rows():
            w.writerow([_r(v) for v in row])


def cmd_run(config_path, out_dir=None) -> int:
    try:
        cfg = _load(config_path, "run")
        mesh, F = _prepare(cfg)
        scfg = SchemeConfig(numerical_flux=cfg.scheme.numerical_flux,
                            order=cfg.scheme.order, cfl=cfg.scheme.cfl,
                            limiter=cfg.scheme.limiter)
        state0 = CellState.from_function(mesh, initial_function(cfg.init))
    except (OSError, ConfigError, InvalidResolution, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    traj = run_states(state0, F, scfg, cfg.time.t_end, cfg.time.n_outputs)
    out = _outdir(cfg, out_dir)
    prefix = cfg.output.prefix
    (out / f"{prefix}_config.txt").write_text(echo_config(cfg, "run"))
    if cfg.output.dump_mesh:
        dump_csv(mesh, out / f"{prefix}_mesh_cells.csv",
                 out / f"{prefix}_mesh_edges.csv")
    for i, s in enumerate(traj.states):
        _write_state_csv(out / f"{prefix}_state_{i:04d}.csv", mesh, s)
    report = diagnostics.report_for_trajectory(traj, F, scfg)
    _write_diagnostics_csv(out / f"{prefix}_diagnostics.csv", report)
    if traj.error:
        (out / f"{prefix}_FAILED.txt").write_text(traj.error + "\n")
        print(f"runtime error: {traj.error}", file=sys.stderr)
        return 3
    print(f"run complete: {len(traj.states)} outputs in {out}")
    return 0


def rotate_about_axis(x, axis, angle):
    """Rodrigues rotation of points (..., 3) about a unit axis."""
    x = np.asarray(x, dtype=float)
    a = np.asarray(axis, dtype=float)
    c, s = math.cos(angle), math.sin(angle)
    return (x * c + np.cross(np.broadcast_to(a, x.shape), x) * s
            + np.outer(x @ a, a).reshape(x.shape) * (1.0 - c))


def exact_rotated_values(mesh, flux, init_fn, t):
    """Solid-body transport: u(t, x) = u0 of x rotated by +t about the axis."""
    from .geometry import sph_to_cart_arrays
    x = sph_to_cart_arrays(mesh.cell_lam_c, mesh.cell_phi_c)
    y = rotate_about_axis(x, flux.axis, t)
    lam = np.arctan2(y[:, 1], y[:, 0])
    phi = np.arcsin(np.clip(y[:, 2], -1.0, 1.0))
    return init_fn(lam, phi)


def convergence_table(cfg: RunConfig, resolutions):
    """L1 errors against the rotated exact solution; rows
    (label, error, order or None)."""
    init_fn = initial_function(cfg.init)
    F = make_flux(cfg.flux.kind, cfg.flux.axis)
    scfg = SchemeConfig(numerical_flux=cfg.scheme.numerical_flux,
                        order=cfg.scheme.order, cfl=cfg.scheme.cfl,
                        limiter=cfg.scheme.limiter)
    rows = []
    prev = None
    for nb, nl in resolutions:
        mesh = build_web_mesh(nb, nl, CoarseningRule(cfg.mesh.merge_threshold))
        state0 = CellState.from_function(mesh, init_fn)
        traj = run_states(state0, F, scfg, cfg.time.t_end, 1)
        if traj.error:
            raise RuntimeError(traj.error)
        exact = exact_rotated_values(mesh, F, init_fn, cfg.time.t_end)
        err = float(np.sum(mesh.cell_area * np.abs(traj.states[-1].u - exact)))
        order = math.log2(prev / err) if prev is not None and err > 0 else None
        rows.append((f"{nb}x{nl}", err, order))
        prev = err
    return rows


def cmd_converge(config_path, resolutions=None, out_dir=None) -> int:
    try:
        cfg = _load(config_path, "converge")
        res = parse_resolutions(resolutions if resolutions
                                else cfg.converge.resolutions)
        for nb, nl in res:
            build_web_mesh(nb, nl, CoarseningRule(cfg.mesh.merge_threshold))
    except (OSError, ConfigError, InvalidResolution, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        rows = convergence_table(cfg, res)
    except RuntimeError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3
    out = _outdir(cfg, out_dir)
    prefix = cfg.output.prefix
    (out / f"{prefix}_config.txt").write_text(echo_config(cfg, "converge"))
    path = out / f"{prefix}_convergence.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["resolution", "l1_error", "observed_order"])
        for label, err, order in rows:
            w.writerow([label, _r(err), "" if order is None else _r(order)])
    for label, err, order in rows:
        otxt = "-" if order is None else f"{order:.3f}"
        print(f"{label:>10}  l1={err:.6e}  order={otxt}")
    return 0


def cmd_check_compat(config_path, out_dir=None) -> int:
    try:
        cfg = _load(config_path, "check-compat")
        mesh, F = _prepare(cfg)
    except (OSError, ConfigError, InvalidResolution, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    from .flux import _compat_scan
    residual, worst_cell, worst_u = _compat_scan(F, mesh, np.linspace(-1.0, 1.0, 16))
    print(f"max compatibility residual = {residual:.6e} "
          f"(worst cell {worst_cell}, u = {worst_u!r}, "
          f"tolerance {COMPAT_TOLERANCE:g})")
    return 0 if residual <= COMPAT_TOLERANCE else 1


def _torus_problem(cfg: RunConfig) -> torus1d.TorusProblem:
    t = cfg.torus
    if t.flux == "burgers":
        f = lambda u: 0.5 * u * u
        df = lambda u: np.asarray(u, dtype=float) + 0.0
        inv = lambda v: np.asarray(v, dtype=float) + 0.0
    else:  # cosine: fails the strict-convexity check
        f = np.cos
        df = lambda u: -np.sin(u)
        inv = lambda v: -np.arcsin(np.clip(v, -1.0, 1.0))
    if t.init == "sin":
        u0 = np.sin
        u0int = lambda y: 1.0 - np.cos(y)
    else:
        c = t.value
        u0 = lambda x: np.full_like(np.asarray(x, dtype=float), c)
        u0int = lambda y: c * np.asarray(y, dtype=float)
    return torus1d.TorusProblem(f=f, df=df, inv_df=inv, u0=u0,
                                u0_antiderivative=u0int,
                                name=f"{t.flux}-{t.init}")


def cmd_torus(config_path, out_dir=None) -> int:
    try:
        cfg = _load(config_path, "torus")
        prob = _torus_problem(cfg)
        ns = [int(p) for p in cfg.torus.resolutions.split(",") if p.strip()]
    except (OSError, ConfigError, torus1d.ConvexityViolation, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        rows = torus1d.compare(prob, ns, cfg.torus.t_end, cfl=cfg.torus.cfl)
    except Exception as exc:  # CFL or evaluation failure
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3
    out = _outdir(cfg, out_dir)
    prefix = cfg.output.prefix
    (out / f"{prefix}_config.txt").write_text(echo_config(cfg, "torus"))
    with open(out / f"{prefix}_torus_errors.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["N", "l1_error", "observed_order"])
        for n, err, order in rows:
            w.writerow([n, _r(err), "" if order is None else _r(order)])
    for n, err, order in rows:
        state = torus1d.advance(torus1d.make_state(prob, n), prob,
                                cfg.torus.t_end, cfl=cfg.torus.cfl)
        exact = torus1d.lax_solution(prob, cfg.torus.t_end, state.x)
        with open(out / f"{prefix}_torus_N{n}.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "u_exact", "u_fv"])
            for i in range(n):
                w.writerow([_r(state.x[i]), _r(exact[i]), _r(state.u[i])])
        otxt = "-" if order is None else f"{order:.3f}"
        print(f"N={n:>5}  l1={err:.6e}  order={otxt}")
    return 0


def main(argv=None) -> int:
    os.environ.get("SPHEREFV_THREADS")  # accepted; kernels are single-threaded
    parser = argparse.ArgumentParser(prog="sphere-fv",
                                     description="Finite volume experiments "
                                                 "on the sphere")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run", "converge", "check-compat", "torus"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--out", default=None)
        if name == "converge":
            p.add_argument("--resolutions", default=None)
    args = parser.parse_args(argv)
    if args.command == "run":
        return cmd_run(args.config, args.out)
    if args.command == "converge":
        return cmd_converge(args.config, args.resolutions, args.out)
    if args.command == "check-compat":
        return cmd_check_compat(args.config, args.out)
    return cmd_torus(args.config, args.out)


if __name__ == "__main__":
    sys.exit(main())
