import math

import numpy as np
import pytest

from spherefv.flux import HomogeneousFlux, make_flux
from spherefv.mesh import build_web_mesh
from spherefv.scheme import (CellState, CFLViolation, SchemeConfig,
                             SpeedTooSmall, cfl_dt, godunov_numflux,
                             lax_friedrichs_numflux, make_edge_ops, run_states,
                             step_first_order, step_muscl)


def exhaustive_godunov(g, a, b, n=200001):
    lo, hi = min(a, b), max(a, b)
    ws = np.linspace(lo, hi, n)
    vals = g(ws)
    return float(np.min(vals) if a <= b else np.max(vals))


def test_godunov_frozen_values():
    g = lambda w: w * w / 4.0
    assert godunov_numflux(g, 1.0, -1.0) == 0.25
    assert godunov_numflux(g, -1.0, 1.0) == 0.0


def test_godunov_consistency():
    g = lambda w: math.sin(3 * w) + 0.2 * w
    for u in (-2.0, 0.0, 0.731):
        assert godunov_numflux(g, u, u) == g(u)


def test_godunov_against_exhaustive_oracle():
    rng = np.random.default_rng(0)
    shapes = [lambda w: 0.5 * w * w, np.sin,
              lambda w: np.sin(w) + 0.3 * w * w]
    for g in shapes:
        for _ in range(60):
            a, b = rng.uniform(-2.5, 2.5, 2)
            got = godunov_numflux(lambda w: float(g(w)), a, b)
            ref = exhaustive_godunov(g, a, b)
            assert abs(got - ref) < 1e-9


def test_lax_friedrichs_values():
    zero = lambda w: 0.0
    assert lax_friedrichs_numflux(zero, 1.0, 0.0, 1.0) == 0.5
    g = lambda w: w * w / 4.0
    for u in (-1.0, 0.4):
        assert lax_friedrichs_numflux(g, u, u, 1.0) == g(u)


def test_lax_friedrichs_monotone_by_fd():
    g = lambda w: w * w / 4.0
    speed = 1.2
    h = 1e-6
    for a, b in [(-1.0, 0.5), (0.3, 0.9), (2.0, -2.0)]:
        q = lambda x, y: lax_friedrichs_numflux(g, x, y, speed)
        da = (q(a + h, b) - q(a - h, b)) / (2 * h)
        db = (q(a, b + h) - q(a, b - h)) / (2 * h)
        assert da >= -1e-9
        assert db <= 1e-9


def test_lax_friedrichs_speed_too_small():
    g = lambda w: 3.0 * w
    with pytest.raises(SpeedTooSmall):
        lax_friedrichs_numflux(g, 0.0, 1.0, 0.5)


@pytest.fixture(scope="module")
def small_mesh():
    return build_web_mesh(8, 16)


def test_cfl_dt_zero_flux_fallback(small_mesh):
    F = make_flux("linear", axis=(0, 0, 1))
    zero = HomogeneousFlux(f=lambda u: np.zeros(3), fprime=lambda u: np.zeros(3),
                           name="zero")
    s = CellState(small_mesh, np.zeros(small_mesh.n_cells))
    cfg = SchemeConfig(cfl=0.3)
    assert cfl_dt(s, zero, cfg, t_max=2.0) == 0.3 * 2.0
    assert cfl_dt(s, F, cfg, t_max=2.0) < 1.0


def test_cfl_dt_linear_in_cfl(small_mesh):
    F = make_flux("burgers", axis=(0.3, -0.5, 0.8))
    s = CellState(small_mesh, np.linspace(-1, 1, small_mesh.n_cells))
    d1 = cfl_dt(s, F, SchemeConfig(cfl=0.2))
    d2 = cfl_dt(s, F, SchemeConfig(cfl=0.4))
    assert abs(d2 - 2 * d1) < 1e-15


def test_cfl_dt_halves_under_refinement():
    F = make_flux("linear", axis=(0, 0, 1))
    cfg = SchemeConfig(cfl=0.45)
    dts = []
    for nb, nl in [(8, 16), (16, 32)]:
        m = build_web_mesh(nb, nl)
        s = CellState(m, np.ones(m.n_cells))
        dts.append(cfl_dt(s, F, cfg))
    ratio = dts[0] / dts[1]
    assert 2 / 1.5 <= ratio <= 2 * 1.5


def test_constant_states_are_exact_fixed_points(small_mesh):
    # bit-for-bit equality over 100 steps, tilted axes included
    for kind, axis in [("linear", (0.3, -0.5, 0.8)),
                       ("burgers", (0.2, 0.7, -0.4)),
                       ("trig", (0, 0, 1)),
                       ("custom-axis", (1.0, 0.2, 0.1))]:
        F = make_flux(kind, axis)
        for nf in ("godunov", "lax_friedrichs"):
            cfg = SchemeConfig(numerical_flux=nf, cfl=0.45)
            u0 = np.full(small_mesh.n_cells, 0.83)
            s = CellState(small_mesh, u0.copy())
            ops = make_edge_ops(small_mesh, F)
            dt = cfl_dt(s, F, cfg, t_max=1.0, ops=ops)
            for _ in range(100):
                s = step_first_order(s, F, cfg, dt, ops=ops)
            assert np.array_equal(s.u, u0)


def test_constant_states_exact_muscl(small_mesh):
    F = make_flux("burgers", axis=(0.3, -0.5, 0.8))
    cfg = SchemeConfig(order=2, cfl=0.4)
    u0 = np.full(small_mesh.n_cells, -0.37)
    s = CellState(small_mesh, u0.copy())
    dt = cfl_dt(s, F, cfg)
    for _ in range(50):
        s = step_muscl(s, F, cfg, dt)
    assert np.array_equal(s.u, u0)


def test_mass_conserved(small_mesh):
    rng = np.random.default_rng(1)
    F = make_flux("burgers", axis=(0.3, -0.5, 0.8))
    for order in (1, 2):
        cfg = SchemeConfig(order=order, cfl=0.4)
        s = CellState(small_mesh, rng.uniform(-1, 1, small_mesh.n_cells))
        ops = make_edge_ops(small_mesh, F)
        m0 = s.mass()
        scale = float(np.sum(small_mesh.cell_area * np.abs(s.u)))
        dt = cfl_dt(s, F, cfg, ops=ops)
        for _ in range(60):
            s = (step_first_order if order == 1 else step_muscl)(
                s, F, cfg, dt, ops=ops)
            assert abs(s.mass() - m0) <= 1e-13 * scale


def test_max_principle_randomized(small_mesh):
    rng = np.random.default_rng(2)
    F = make_flux("burgers", axis=(0.3, -0.5, 0.8))
    for nf in ("godunov", "lax_friedrichs"):
        cfg = SchemeConfig(numerical_flux=nf, cfl=0.45)
        ops = make_edge_ops(small_mesh, F)
        for _ in range(20):
            s = CellState(small_mesh, rng.uniform(-1, 1, small_mesh.n_cells))
            lo0, hi0 = s.u.min(), s.u.max()
            dt = cfl_dt(s, F, cfg, ops=ops)
            for _ in range(20):
                s = step_first_order(s, F, cfg, dt, ops=ops)
            assert s.u.max() <= hi0 + 1e-13
            assert s.u.min() >= lo0 - 1e-13


def test_muscl_bounds_randomized(small_mesh):
    rng = np.random.default_rng(3)
    F = make_flux("trig")
    cfg = SchemeConfig(order=2, cfl=0.4)
    ops = make_edge_ops(small_mesh, F)
    for _ in range(10):
        s = CellState(small_mesh, rng.uniform(-1, 1, small_mesh.n_cells))
        lo0, hi0 = s.u.min(), s.u.max()
        dt = cfl_dt(s, F, cfg, ops=ops)
        for _ in range(25):
            s = step_muscl(s, F, cfg, dt, ops=ops)
        assert s.u.max() <= hi0 + 1e-12
        assert s.u.min() >= lo0 - 1e-12


def test_cfl_violation_refused(small_mesh):
    F = make_flux("linear", axis=(0, 0, 1))
    cfg = SchemeConfig(cfl=0.45)
    s = CellState(small_mesh, np.linspace(-1, 1, small_mesh.n_cells))
    dt = cfl_dt(s, F, cfg)
    with pytest.raises(CFLViolation):
        step_first_order(s, F, cfg, 2.5 * dt)


def test_separable_and_generic_paths_agree(small_mesh):
    rng = np.random.default_rng(4)
    axis = np.array([0.3, -0.5, 0.8])
    axis = axis / np.linalg.norm(axis)
    Fsep = make_flux("burgers", axis=axis)
    Fgen = HomogeneousFlux(
        f=lambda u: 0.5 * u * u * axis,
        fprime=lambda u: u * axis, name="burgers-generic")
    u0 = rng.uniform(-1, 1, small_mesh.n_cells)
    for nf in ("godunov", "lax_friedrichs"):
        cfg = SchemeConfig(numerical_flux=nf, cfl=0.4)
        s1 = CellState(small_mesh, u0.copy())
        s2 = CellState(small_mesh, u0.copy())
        dt = min(cfl_dt(s1, Fsep, cfg), cfl_dt(s2, Fgen, cfg))
        for _ in range(4):
            s1 = step_first_order(s1, Fsep, cfg, dt)
            s2 = step_first_order(s2, Fgen, cfg, dt)
        assert np.max(np.abs(s1.u - s2.u)) < 1e-14


def _rotated_exact(mesh, F, init_fn, t):
    from spherefv.cli import exact_rotated_values
    return exact_rotated_values(mesh, F, init_fn, t)


def _bump(lam, phi):
    from spherefv.config import InitConfig
    from spherefv.initial import initial_function
    return initial_function(InitConfig(kind="gaussian_bump", kappa=2.0))(lam, phi)


def test_muscl_convergence_ratio():
    # smooth rotation: refining (16,32) -> (32,64) shrinks L1 error >= 2.8x
    F = make_flux("linear", axis=(0, 0, 1))
    cfg = SchemeConfig(order=2, cfl=0.4)
    t_end = math.pi / 2
    errs = []
    for nb, nl in [(16, 32), (32, 64)]:
        m = build_web_mesh(nb, nl)
        s0 = CellState.from_function(m, _bump)
        traj = run_states(s0, F, cfg, t_end, 1)
        assert traj.error is None
        ex = _rotated_exact(m, F, _bump, t_end)
        errs.append(float(np.sum(m.cell_area * np.abs(traj.states[-1].u - ex))))
    assert errs[0] / errs[1] >= 2.8


def test_godunov_not_worse_than_lf():
    F = make_flux("linear", axis=(0, 0, 1))
    m = build_web_mesh(16, 32)
    s0 = CellState.from_function(m, _bump)
    t_end = math.pi / 2
    errs = {}
    for nf in ("godunov", "lax_friedrichs"):
        cfg = SchemeConfig(numerical_flux=nf, order=1, cfl=0.45)
        traj = run_states(s0, F, cfg, t_end, 1)
        ex = _rotated_exact(m, F, _bump, t_end)
        errs[nf] = float(np.sum(m.cell_area * np.abs(traj.states[-1].u - ex)))
    assert errs["godunov"] <= errs["lax_friedrichs"]


def test_run_zero_time(small_mesh):
    F = make_flux("linear", axis=(0, 0, 1))
    s0 = CellState(small_mesh, np.linspace(-1, 1, small_mesh.n_cells))
    traj = run_states(s0, F, SchemeConfig(), 0.0, 3)
    assert len(traj.states) == 1
    assert traj.states[0] is s0


def test_run_hits_output_times_exactly(small_mesh):
    F = make_flux("burgers", axis=(0.3, -0.5, 0.8))
    s0 = CellState.from_function(small_mesh, _bump)
    traj = run_states(s0, F, SchemeConfig(cfl=0.45), 0.7, 4)
    assert traj.error is None
    assert traj.times == list(np.linspace(0.0, 0.7, 5))
    for s, t in zip(traj.states, traj.times):
        assert s.t == t


def test_run_deterministic(small_mesh):
    F = make_flux("burgers", axis=(0.3, -0.5, 0.8))
    s0 = CellState.from_function(small_mesh, _bump)
    t1 = run_states(s0, F, SchemeConfig(cfl=0.45), 0.5, 2)
    t2 = run_states(s0, F, SchemeConfig(cfl=0.45), 0.5, 2)
    for a, b in zip(t1.states, t2.states):
        assert np.array_equal(a.u, b.u)


def test_run_from_config_object():
    from spherefv.config import parse_config
    from spherefv.scheme import run
    cfg = parse_config(
        "mesh.n_bands = 8\nmesh.n_lon_equator = 16\nflux.kind = linear\n"
        "init.kind = gaussian_bump\ntime.t_end = 0.2\ntime.n_outputs = 2\n",
        "run")
    traj = run(cfg)
    assert traj.error is None
    assert len(traj.states) == 3
    assert traj.times == [0.0, 0.1, 0.2]


def test_run_states_flags_runtime_error(small_mesh):
    # a misbehaving custom flux (non-finite values) must yield a partial
    # trajectory with the error recorded, not an exception
    bad = HomogeneousFlux(
        f=lambda u: np.array([0.0, 0.0, math.nan]),
        fprime=lambda u: np.array([0.0, 0.0, math.nan]),
        name="nan-flux")
    s0 = CellState(small_mesh, np.linspace(-1, 1, small_mesh.n_cells))
    traj = run_states(s0, bad, SchemeConfig(cfl=0.45), 1.0, 2)
    assert traj.error is not None
    assert len(traj.states) >= 1


def test_scheme_config_validation():
    with pytest.raises(ValueError):
        SchemeConfig(numerical_flux="roe")
    with pytest.raises(ValueError):
        SchemeConfig(order=3)
    with pytest.raises(ValueError):
        SchemeConfig(order=2, cfl=0.6)
    with pytest.raises(ValueError):
        SchemeConfig(cfl=0.0)
