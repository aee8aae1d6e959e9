"""Acceptance suite: one test per criterion, each printing a PASS line with
its runtime (run with -s to see them).  Tolerances and budgets are pinned in
the asserts."""
import math
import time

import numpy as np
import pytest

from spherefv.config import InitConfig
from spherefv.diagnostics import (divergence_measure_norm, entropy_residual,
                                  kruzkov_k_grid, l1_distance, lq_norm,
                                  tv_along_zonal_field)
from spherefv.flux import check_compatibility, make_flux
from spherefv.initial import initial_function
from spherefv.mesh import build_web_mesh, validate
from spherefv.scheme import (CellState, SchemeConfig, cfl_dt, make_edge_ops,
                             run_states, step_first_order, step_muscl)
from spherefv.torus1d import TorusProblem, compare, lax_solution

RESOLUTIONS = [(4, 8), (8, 16), (16, 32), (32, 64), (64, 128)]
TILTED = (0.3, -0.5, 0.8)


@pytest.fixture(scope="module")
def meshes():
    return {res: build_web_mesh(*res) for res in RESOLUTIONS}


def smooth_bump(lam, phi):
    return initial_function(InitConfig(kind="gaussian_bump", kappa=2.0))(lam, phi)


def narrow_bump(lam, phi):
    return initial_function(InitConfig(kind="gaussian_bump", kappa=4.0))(lam, phi)


def _report(n, elapsed, msg):
    print(f"[acceptance] criterion {n:2d} PASS ({elapsed:6.2f}s): {msg}")


def test_criterion_01_geometric_compatibility(meshes):
    t0 = time.perf_counter()
    samples = np.linspace(-1.0, 1.0, 16)
    worst = 0.0
    for kind, axis in [("linear", TILTED), ("burgers", (0.2, 0.7, -0.4)),
                       ("trig", (0, 0, 1)), ("custom-axis", (1.0, 0.2, 0.1))]:
        F = make_flux(kind, axis)
        for res in RESOLUTIONS:
            worst = max(worst, check_compatibility(F, meshes[res], samples))
    elapsed = time.perf_counter() - t0
    assert worst <= 1e-12
    assert elapsed < 5.0
    _report(1, elapsed, f"max residual {worst:.2e} over 4 fluxes x 5 meshes")


def test_criterion_02_constant_preservation(meshes):
    t0 = time.perf_counter()
    mesh = meshes[(8, 16)]
    u0 = np.full(mesh.n_cells, 0.61)
    F = make_flux("burgers", TILTED)
    for nf in ("godunov", "lax_friedrichs"):
        cfg = SchemeConfig(numerical_flux=nf, cfl=0.45)
        ops = make_edge_ops(mesh, F)
        s = CellState(mesh, u0.copy())
        dt = cfl_dt(s, F, cfg, ops=ops)
        for _ in range(100):
            s = step_first_order(s, F, cfg, dt, ops=ops)
        assert np.array_equal(s.u, u0)
    cfg = SchemeConfig(order=2, cfl=0.4)
    s = CellState(mesh, u0.copy())
    dt = cfl_dt(s, F, cfg)
    for _ in range(100):
        s = step_muscl(s, F, cfg, dt)
    assert np.array_equal(s.u, u0)
    elapsed = time.perf_counter() - t0
    assert elapsed < 5.0
    _report(2, elapsed, "100 steps leave constants bit-identical "
                        "(both fluxes + MUSCL)")


def test_criterion_03_conservation(meshes):
    t0 = time.perf_counter()
    mesh = meshes[(32, 64)]
    F = make_flux("burgers", TILTED)
    cfg = SchemeConfig(cfl=0.45)
    ops = make_edge_ops(mesh, F)
    s = CellState.from_function(mesh, narrow_bump)
    mass0 = s.mass()
    scale = max(abs(mass0), float(np.sum(mesh.cell_area * np.abs(s.u))))
    dt = cfl_dt(s, F, cfg, ops=ops)
    drift = 0.0
    for _ in range(500):
        s = step_first_order(s, F, cfg, dt, ops=ops)
        drift = max(drift, abs(s.mass() - mass0))
    elapsed = time.perf_counter() - t0
    assert drift / scale <= 1e-12
    assert elapsed < 30.0
    _report(3, elapsed, f"relative mass drift {drift / scale:.2e} "
                        "over 500 steps")


def test_criterion_04_max_principle(meshes):
    t0 = time.perf_counter()
    mesh = meshes[(8, 16)]
    rng = np.random.default_rng(2024)
    F = make_flux("burgers", TILTED)
    worst = 0.0
    for nf in ("godunov", "lax_friedrichs"):
        cfg = SchemeConfig(numerical_flux=nf, cfl=0.45)
        ops = make_edge_ops(mesh, F)
        for _ in range(100):
            s = CellState(mesh, rng.uniform(-1, 1, mesh.n_cells))
            lo0, hi0 = s.u.min(), s.u.max()
            dt = cfl_dt(s, F, cfg, ops=ops)
            for _ in range(20):
                s = step_first_order(s, F, cfg, dt, ops=ops)
            worst = max(worst, s.u.max() - hi0, lo0 - s.u.min())
    elapsed = time.perf_counter() - t0
    assert worst <= 1e-13
    assert elapsed < 60.0
    _report(4, elapsed, f"100 states x 2 fluxes, worst bound excess {worst:.2e}")


@pytest.fixture(scope="module")
def contraction_runs(meshes):
    """50 randomized pairs advanced 100 steps with a fixed Godunov operator;
    shared by the contraction and Lq-stability criteria."""
    mesh = meshes[(8, 16)]
    rng = np.random.default_rng(99)
    F = make_flux("burgers", TILTED)
    cfg = SchemeConfig(numerical_flux="godunov", cfl=0.45)
    ops = make_edge_ops(mesh, F)
    t0 = time.perf_counter()
    records = []
    for _ in range(50):
        u = CellState(mesh, rng.uniform(-1, 1, mesh.n_cells))
        v = CellState(mesh, rng.uniform(-1, 1, mesh.n_cells))
        dt = min(cfl_dt(u, F, cfg, ops=ops), cfl_dt(v, F, cfg, ops=ops))
        dists = [l1_distance(u, v)]
        norms = [[(lq_norm(u, q)) for q in (1, 2, math.inf)]]
        for _ in range(100):
            u = step_first_order(u, F, cfg, dt, ops=ops)
            v = step_first_order(v, F, cfg, dt, ops=ops)
            dists.append(l1_distance(u, v))
            norms.append([lq_norm(u, q) for q in (1, 2, math.inf)])
        records.append((dists, norms))
    return records, time.perf_counter() - t0


def test_criterion_05_l1_contraction(contraction_runs):
    records, elapsed = contraction_runs
    worst = -math.inf
    for dists, _ in records:
        for d0, d1 in zip(dists, dists[1:]):
            worst = max(worst, d1 - d0)
    assert worst <= 1e-12
    assert elapsed < 60.0
    _report(5, elapsed, f"50 pairs x 100 steps, worst distance increase "
                        f"{worst:.2e}")


def test_criterion_06_lq_stability(contraction_runs):
    records, elapsed = contraction_runs
    worst = -math.inf
    for _, norms in records:
        for n0, n1 in zip(norms, norms[1:]):
            worst = max(worst, max(b - a for a, b in zip(n0, n1)))
    assert worst <= 1e-12
    assert elapsed < 60.0
    _report(6, elapsed, f"L1/L2/Linf norms non-increasing, worst increase "
                        f"{worst:.2e}")


@pytest.fixture(scope="module")
def burgers_trajectory(meshes):
    """200 first-order Burgers steps with fixed dt on (16, 32); shared by the
    entropy and divergence-measure criteria."""
    mesh = meshes[(16, 32)]
    F = make_flux("burgers", TILTED)
    cfg = SchemeConfig(numerical_flux="godunov", cfl=0.45)
    ops = make_edge_ops(mesh, F)
    s = CellState.from_function(mesh, narrow_bump)
    dt = cfl_dt(s, F, cfg, ops=ops)
    t0 = time.perf_counter()
    states = [s]
    for _ in range(200):
        s = step_first_order(s, F, cfg, dt, ops=ops)
        states.append(s)
    return mesh, F, cfg, ops, dt, states, time.perf_counter() - t0


def test_criterion_07_entropy_inequalities(burgers_trajectory):
    mesh, F, cfg, ops, dt, states, _ = burgers_trajectory
    t0 = time.perf_counter()
    ks = kruzkov_k_grid(states[0], 16)
    worst = -math.inf
    for s0, s1 in zip(states, states[1:]):
        for k in ks:
            R = entropy_residual(s0, s1, dt, F, cfg, float(k), ops=ops)
            worst = max(worst, float(np.max(R)))
    elapsed = time.perf_counter() - t0
    assert worst <= 1e-10
    assert elapsed < 60.0
    _report(7, elapsed, f"200 steps x 16 Kruzkov constants, max residual "
                        f"{worst:.2e}")


def test_criterion_08_divergence_measure_decay(burgers_trajectory):
    mesh, F, cfg, ops, dt, states, run_time = burgers_trajectory
    t0 = time.perf_counter()
    values = [divergence_measure_norm(s, F, cfg, ops=ops) for s in states]
    worst = max(b - a for a, b in zip(values, values[1:]))
    elapsed = time.perf_counter() - t0 + run_time
    assert worst <= 1e-10
    assert elapsed < 60.0
    _report(8, elapsed, f"divergence-measure norm non-increasing, worst "
                        f"increase {worst:.2e}")


def test_criterion_09_tvd_zonal(meshes):
    t0 = time.perf_counter()
    mesh = meshes[(16, 32)]
    F = make_flux("linear", axis=(0, 0, 1))
    cfg = SchemeConfig(cfl=0.45)
    ops = make_edge_ops(mesh, F)
    s = CellState.from_function(mesh, narrow_bump)
    dt = cfl_dt(s, F, cfg, ops=ops)
    tv = tv_along_zonal_field(s)
    worst = -math.inf
    for _ in range(200):
        s = step_first_order(s, F, cfg, dt, ops=ops)
        tv2 = tv_along_zonal_field(s)
        worst = max(worst, tv2 - tv)
        tv = tv2
    elapsed = time.perf_counter() - t0
    assert worst <= 1e-10
    assert elapsed < 30.0
    _report(9, elapsed, f"TV along the zonal field non-increasing, worst "
                        f"increase {worst:.2e}")


def test_criterion_10_convergence_linear_transport(meshes):
    from spherefv.cli import exact_rotated_values
    t0 = time.perf_counter()
    F = make_flux("linear", axis=(0, 0, 1))
    t_end = math.pi / 2  # one quarter revolution
    slopes = {}
    for order, cfl, lo, hi in ((1, 0.45, 0.7, 1.1), (2, 0.4, 1.6, 2.2)):
        cfg = SchemeConfig(order=order, cfl=cfl)
        errs = []
        for res in [(8, 16), (16, 32), (32, 64), (64, 128)]:
            mesh = meshes[res]
            s0 = CellState.from_function(mesh, smooth_bump)
            traj = run_states(s0, F, cfg, t_end, 1)
            assert traj.error is None
            ex = exact_rotated_values(mesh, F, smooth_bump, t_end)
            errs.append(float(np.sum(mesh.cell_area
                                     * np.abs(traj.states[-1].u - ex))))
        assert all(e2 < e1 for e1, e2 in zip(errs, errs[1:]))
        slope = -float(np.polyfit(np.arange(len(errs)), np.log2(errs), 1)[0])
        assert lo <= slope <= hi, (order, errs, slope)
        slopes[order] = slope
    elapsed = time.perf_counter() - t0
    assert elapsed < 300.0
    _report(10, elapsed, f"observed orders: first={slopes[1]:.2f}, "
                         f"second={slopes[2]:.2f}")


def test_criterion_11_torus_oracle():
    t0 = time.perf_counter()
    ident = lambda v: np.asarray(v, dtype=float) + 0.0
    prob = TorusProblem(f=lambda u: 0.5 * u * u, df=ident, inv_df=ident,
                        u0=np.sin, u0_antiderivative=lambda y: 1.0 - np.cos(y))
    rows = compare(prob, [64, 128, 256, 512], 0.5)
    errs = [r[1] for r in rows]
    ratios = [errs[i] / errs[i + 1] for i in range(len(errs) - 1)]
    assert all(1.6 <= r <= 2.6 for r in ratios)
    xs = np.linspace(0, 2 * math.pi, 256, endpoint=False)
    u_lax = lax_solution(prob, 0.5, xs)
    u_newton = np.sin(xs)
    for _ in range(200):
        u_newton = u_newton - ((u_newton - np.sin(xs - u_newton * 0.5))
                               / (1 + 0.5 * np.cos(xs - u_newton * 0.5)))
    gap = float(np.max(np.abs(u_lax - u_newton)))
    elapsed = time.perf_counter() - t0
    assert gap <= 1e-8
    assert elapsed < 60.0
    _report(11, elapsed, f"error ratios {['%.2f' % r for r in ratios]}, "
                         f"oracle gap {gap:.2e}")


def test_criterion_12_mesh_validity():
    t0 = time.perf_counter()
    worst = 0.0
    for res in RESOLUTIONS:
        mesh = build_web_mesh(*res)
        worst = max(worst, abs(float(mesh.cell_area.sum()) - 4 * math.pi))
        rep = validate(mesh)
        assert rep.passed, rep.failures
    elapsed = time.perf_counter() - t0
    assert worst <= 1e-12
    assert elapsed < 1.0
    _report(12, elapsed, f"area defect {worst:.2e}, validation PASS at all "
                         "resolutions")
