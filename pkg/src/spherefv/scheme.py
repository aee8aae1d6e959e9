"""Total-flux finite volume scheme on the web mesh.

First-order update for cell K with boundary edges (e, s):

    area(K) u_K^{n+1} = area(K) u_K^n - dt * sum_e s * q_e(u_K, u_Ke)

with a monotone two-point numerical flux q_e built from the total edge flux
function g_e.  Each edge flux is evaluated once and consumed by both cells
with opposite signs, so conservation holds to rounding.

The per-cell divergence is actually accumulated as

    D_K = sum_e s * (q_e - g_e(u_K)),

which is the same scheme for geometry-compatible fluxes (the subtracted term
telescopes to zero at fixed u) but makes constant states exact fixed points
in floating point: at u == c every edge gives q_e(c, c) - g_e(c) == 0.0
bit-for-bit, so 100 steps change nothing.  For non-gradient fluxes the plain
sum is used instead (the subtraction would spoil conservation there).

Second order is MUSCL-Hancock: per-cell minmod slopes in lambda and phi
(area-weighted averages across non-conformal interfaces), a half-step
predictor from the cell's own boundary flux balance, then the total-flux
update on the reconstructed traces.  Polar caps stay first-order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ._backend import kernels as _K
from . import _kernels_py as _kp
from .flux import (FluxField, SeparableFlux, edge_flux_function,
                   lipschitz_bound)
from .mesh import WebMesh

GOLDEN = _kp.GOLDEN
W_TOL = _kp.W_TOL
N_SAMPLES = _kp.N_SAMPLES


class CFLViolation(Exception):
    """Requested time step exceeds the stable bound."""


class SpeedTooSmall(Exception):
    """Lax-Friedrichs speed fails the monotonicity spot-check."""


@dataclass
class SchemeConfig:
    numerical_flux: str = "godunov"
    order: int = 1
    cfl: float = 0.45
    limiter: str = "minmod"
    # optional fixed range for LF speeds / CFL; freezes the update operator,
    # which pairwise-contraction experiments need
    fixed_range: Optional[tuple] = None

    def __post_init__(self):
        if self.numerical_flux not in ("godunov", "lax_friedrichs"):
            raise ValueError(f"unknown numerical flux {self.numerical_flux!r}")
        if self.order not in (1, 2):
            raise ValueError("order must be 1 or 2")
        if not 0.0 < self.cfl <= 1.0:
            raise ValueError("cfl must lie in (0, 1]")
        if self.order == 2 and self.cfl > 0.5:
            raise ValueError("order 2 requires cfl <= 0.5")
        if self.order == 2 and self.limiter != "minmod":
            raise ValueError(f"unknown limiter {self.limiter!r}")


@dataclass
class CellState:
    mesh: WebMesh
    u: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        if self.u.shape != (self.mesh.n_cells,):
            raise ValueError("state length does not match mesh")
        if not np.all(np.isfinite(self.u)):
            raise ValueError("non-finite cell values")

    @staticmethod
    def from_function(mesh: WebMesh, fn: Callable, t: float = 0.0) -> "CellState":
        """Initialize from a pointwise function of (lam, phi) at cell centers
        (polar caps sample the pole)."""
        return CellState(mesh, np.asarray(fn(mesh.cell_lam_c, mesh.cell_phi_c),
                                          dtype=float) + np.zeros(mesh.n_cells), t)

    def mass(self) -> float:
        return float(self.mesh.cell_area @ self.u)


# -- scalar two-point fluxes ---------------------------------------------------


def godunov_numflux(g: Callable, a: float, b: float) -> float:
    """Godunov flux of a scalar flux function g:

    min over [a, b] of g when a <= b, max over [b, a] when a > b.  The
    extremum is located by 129-point sampling plus golden-section refinement
    to 1e-12 in the argument (no convexity assumed); a == b returns g(a).
    """
    if a == b:
        return float(g(a))
    sgn = 1.0 if a < b else -1.0
    lo, hi = (a, b) if a < b else (b, a)
    step = (hi - lo) / (N_SAMPLES - 1)
    best = math.inf
    bi = 0
    for i in range(N_SAMPLES):
        w = hi if i == N_SAMPLES - 1 else lo + i * step
        v = sgn * float(g(w))
        if v < best:
            best = v
            bi = i
    left = lo if bi == 0 else lo + (bi - 1) * step
    right = hi if bi + 1 >= N_SAMPLES - 1 else lo + (bi + 1) * step
    it = 0
    while (right - left) > W_TOL and it < _kp.MAX_REFINE:
        d = right - left
        x1 = left + GOLDEN * d
        x2 = right - GOLDEN * d
        if sgn * float(g(x1)) < sgn * float(g(x2)):
            right = x2
        else:
            left = x1
        it += 1
    wm = 0.5 * (left + right)
    vm = sgn * float(g(wm))
    return sgn * min(best, vm)


def lax_friedrichs_numflux(g: Callable, a: float, b: float, speed: float) -> float:
    """0.5 (g(a) + g(b)) - 0.5 speed (b - a); raises SpeedTooSmall when a
    finite-difference monotonicity spot-check fails."""
    scale = max(1.0, abs(a), abs(b))
    h = 1e-6 * scale
    da = (float(g(a + h)) - float(g(a - h))) / (2 * h)
    db = (float(g(b + h)) - float(g(b - h))) / (2 * h)
    if speed < max(abs(da), abs(db)) * (1.0 - 1e-8) - 1e-12:
        raise SpeedTooSmall(f"speed {speed} < local |g'| ~ {max(abs(da), abs(db))}")
    return 0.5 * (float(g(a)) + float(g(b))) - 0.5 * speed * (b - a)


# -- per-edge flux evaluation paths ---------------------------------------------


class _SeparableOps:
    """Vectorized edge operations for separable fluxes, via the active
    kernel backend (compiled or NumPy)."""

    generic = False

    def __init__(self, mesh: WebMesh, F: SeparableFlux, kernels=None):
        self.mesh = mesh
        self.flux = F
        self.K = kernels if kernels is not None else _K
        self.alpha = mesh.edge_cart_diff @ F.axis
        self.shape_id = F.shape_id

    def g_edges(self, vals):
        return self.K.edge_g(self.shape_id, self.alpha, vals)

    def lipschitz_edges(self, lo, hi):
        m = self.K.max_abs_shape_derivative(self.shape_id, lo, hi)
        return 1.1 * (np.abs(self.alpha) * m)

    def numflux_edges(self, a, b, lo, hi, method):
        if method == "godunov":
            return self.K.godunov_edges(self.shape_id, self.alpha, a, b)
        speed = self.lipschitz_edges(lo, hi)
        return self.K.lax_friedrichs_edges(self.shape_id, self.alpha, a, b, speed)


class _GenericOps:
    """Scalar-loop edge operations for arbitrary gradient fluxes."""

    generic = True

    def __init__(self, mesh: WebMesh, F: FluxField):
        self.mesh = mesh
        self.flux = F
        self.ge = [edge_flux_function(F, e) for e in mesh.edges]

    def g_edges(self, vals):
        return np.array([float(g(v)) for g, v in zip(self.ge, vals)])

    def lipschitz_edges(self, lo, hi):
        return np.array([lipschitz_bound(self.flux, e, lo, hi)
                         for e in self.mesh.edges])

    def numflux_edges(self, a, b, lo, hi, method):
        if method == "godunov":
            return np.array([godunov_numflux(g, x, y)
                             for g, x, y in zip(self.ge, a, b)])
        speed = self.lipschitz_edges(lo, hi)
        return np.array([lax_friedrichs_numflux(g, x, y, s)
                         for g, x, y, s in zip(self.ge, a, b, speed)])


def make_edge_ops(mesh: WebMesh, F: FluxField, kernels=None):
    if isinstance(F, SeparableFlux):
        return _SeparableOps(mesh, F, kernels)
    return _GenericOps(mesh, F)


def _state_range(cfg: SchemeConfig, u: np.ndarray):
    if cfg.fixed_range is not None:
        return float(cfg.fixed_range[0]), float(cfg.fixed_range[1])
    return float(u.min()), float(u.max())


# -- CFL ------------------------------------------------------------------------


def cfl_dt(state: CellState, F: FluxField, cfg: SchemeConfig,
           t_max: float = 1.0, ops=None) -> float:
    """Stable step: cfl * min_K area(K) / sum of edge Lipschitz bounds over
    the state's range.  Degenerate (all-zero) fluxes fall back to
    cfl * t_max."""
    if ops is None:
        ops = make_edge_ops(state.mesh, F)
    mesh = state.mesh
    lo, hi = _state_range(cfg, state.u)
    lip = ops.lipschitz_edges(lo, hi)
    per_cell = (np.bincount(mesh.edge_left, weights=lip, minlength=mesh.n_cells)
                + np.bincount(mesh.edge_right, weights=lip, minlength=mesh.n_cells))
    active = per_cell > 0.0
    if not active.any():
        return cfg.cfl * t_max
    return cfg.cfl * float(np.min(mesh.cell_area[active] / per_cell[active]))


def _require_cfl(state, F, cfg, dt, ops):
    # sampled Lipschitz bounds jitter by ~1e-4 relative as the data range
    # moves between steps; the 1.1 safety factor absorbs that, so only a
    # clearly oversized dt is refused
    limit = cfl_dt(state, F, cfg, t_max=math.inf, ops=ops)
    if not math.isfinite(limit):
        return
    if dt > limit * (1.0 + 1e-3):
        raise CFLViolation(f"dt={dt} exceeds stable bound {limit}")


# -- first order -----------------------------------------------------------------


def _divergence(ops, cfg: SchemeConfig, u: np.ndarray, lo, hi) -> np.ndarray:
    mesh = ops.mesh
    a = u[mesh.edge_left]
    b = u[mesh.edge_right]
    q = ops.numflux_edges(a, b, lo, hi, cfg.numerical_flux)
    if ops.flux.is_gradient:
        w_left = q - ops.g_edges(a)
        w_right = q - ops.g_edges(b)
    else:
        w_left = w_right = q
    return _kp.accumulate_signed(mesh.n_cells, mesh.edge_left,
                                 mesh.edge_right, w_left, w_right)


def step_first_order(state: CellState, F: FluxField, cfg: SchemeConfig,
                     dt: float, ops=None) -> CellState:
    """One forward-Euler total-flux step; requires dt within the CFL bound."""
    if ops is None:
        ops = make_edge_ops(state.mesh, F)
    _require_cfl(state, F, cfg, dt, ops)
    u = state.u
    lo, hi = _state_range(cfg, u)
    div = _divergence(ops, cfg, u, lo, hi)
    u_new = u - (dt / state.mesh.cell_area) * div
    return CellState(state.mesh, u_new, state.t + dt)


# -- second order (MUSCL-Hancock) -------------------------------------------------


MINMOD_THETA = 1.5  # generalized minmod steepness, TVD for theta in [1, 2]


def _minmod_slope(dw, de):
    """Generalized minmod of theta-scaled one-sided and central differences;
    when dw, de share a sign the central difference shares it too."""
    same = (np.sign(dw) == np.sign(de)) & (dw != 0.0)
    mag = np.minimum(np.abs(0.5 * (dw + de)),
                     MINMOD_THETA * np.minimum(np.abs(dw), np.abs(de)))
    return np.where(same, np.sign(dw) * mag, 0.0)


def _slopes(mesh: WebMesh, u: np.ndarray):
    st = mesh.stencil()
    caps = mesh.cell_is_cap
    u_w = u[st.west]
    u_e = u[st.east]
    s_lam = _minmod_slope(u - u_w, u_e - u) / st.dlam
    nbar = np.zeros_like(u)
    np.add.at(nbar, np.repeat(np.arange(mesh.n_cells),
                              np.diff(st.north_ptr)),
              st.north_w * u[st.north_idx])
    sbar = np.zeros_like(u)
    np.add.at(sbar, np.repeat(np.arange(mesh.n_cells),
                              np.diff(st.south_ptr)),
              st.south_w * u[st.south_idx])
    s_phi = _minmod_slope(u - sbar, nbar - u) / st.dphi
    s_lam[caps] = 0.0
    s_phi[caps] = 0.0
    return s_lam, s_phi


def step_muscl(state: CellState, F: FluxField, cfg: SchemeConfig,
               dt: float, ops=None) -> CellState:
    """MUSCL-Hancock step: minmod reconstruction, half-step predictor from
    the cell's own flux balance, total-flux corrector on the traces."""
    if cfg.order != 2:
        raise ValueError("step_muscl requires an order-2 configuration")
    if ops is None:
        ops = make_edge_ops(state.mesh, F)
    _require_cfl(state, F, cfg, dt, ops)
    mesh = state.mesh
    st = mesh.stencil()
    u = state.u
    el, er = mesh.edge_left, mesh.edge_right

    s_lam, s_phi = _slopes(mesh, u)
    tr_l = u[el] + s_lam[el] * st.off_l_lam + s_phi[el] * st.off_l_phi
    tr_r = u[er] + s_lam[er] * st.off_r_lam + s_phi[er] * st.off_r_phi

    if ops.flux.is_gradient:
        p_left = ops.g_edges(tr_l) - ops.g_edges(u[el])
        p_right = ops.g_edges(tr_r) - ops.g_edges(u[er])
    else:
        p_left = ops.g_edges(tr_l)
        p_right = ops.g_edges(tr_r)
    pred = _kp.accumulate_signed(mesh.n_cells, el, er, p_left, p_right)
    u_half = u - (0.5 * dt / mesh.cell_area) * pred

    th_l = u_half[el] + s_lam[el] * st.off_l_lam + s_phi[el] * st.off_l_phi
    th_r = u_half[er] + s_lam[er] * st.off_r_lam + s_phi[er] * st.off_r_phi

    lo, hi = _state_range(cfg, u)
    lo = min(lo, float(th_l.min()), float(th_r.min()))
    hi = max(hi, float(th_l.max()), float(th_r.max()))
    q = ops.numflux_edges(th_l, th_r, lo, hi, cfg.numerical_flux)
    if ops.flux.is_gradient:
        w_left = q - ops.g_edges(u[el])
        w_right = q - ops.g_edges(u[er])
    else:
        w_left = w_right = q
    div = _kp.accumulate_signed(mesh.n_cells, el, er, w_left, w_right)
    u_new = u - (dt / mesh.cell_area) * div
    return CellState(mesh, u_new, state.t + dt)


def step(state: CellState, F: FluxField, cfg: SchemeConfig, dt: float,
         ops=None) -> CellState:
    if cfg.order == 1:
        return step_first_order(state, F, cfg, dt, ops)
    return step_muscl(state, F, cfg, dt, ops)


# -- trajectory driver ------------------------------------------------------------


@dataclass
class Trajectory:
    states: list
    times: list
    error: Optional[str] = None
    step_dt: float = 0.0


MAX_STEPS_PER_RUN = 10_000_000  # guard against degenerate CFL bounds


def run(config) -> Trajectory:
    """Run an experiment described by a RunConfig.

    Deterministic: the step size is fixed from the initial state's CFL bound
    and clipped only at output boundaries, so identical configs produce
    bit-identical trajectories on the same build.
    """
    from .initial import initial_function
    from .mesh import CoarseningRule, build_web_mesh
    from .flux import make_flux

    mesh = build_web_mesh(config.mesh.n_bands, config.mesh.n_lon_equator,
                          CoarseningRule(config.mesh.merge_threshold))
    F = make_flux(config.flux.kind, config.flux.axis)
    cfg = SchemeConfig(numerical_flux=config.scheme.numerical_flux,
                       order=config.scheme.order, cfl=config.scheme.cfl,
                       limiter=config.scheme.limiter)
    state = CellState.from_function(mesh, initial_function(config.init))
    return run_states(state, F, cfg, config.time.t_end, config.time.n_outputs)


def run_states(state: CellState, F: FluxField, cfg: SchemeConfig,
               t_end: float, n_outputs: int) -> Trajectory:
    """Advance an initial state, recording n_outputs+1 states at the uniform
    output times including t=0 and t_end (hit exactly)."""
    ops = make_edge_ops(state.mesh, F)
    out_times = np.linspace(0.0, t_end, n_outputs + 1)
    traj = Trajectory(states=[state], times=[0.0])
    if t_end == 0.0:
        return traj
    dt0 = cfl_dt(state, F, cfg, t_max=t_end, ops=ops)
    traj.step_dt = dt0
    t = 0.0
    n_steps = 0
    try:
        for T in out_times[1:]:
            while t < T:
                last = (T - t) <= dt0 * (1.0 + 1e-9)
                dt = (T - t) if last else dt0
                state = step(state, F, cfg, dt, ops)
                t = T if last else t + dt
                state.t = t
                n_steps += 1
                if n_steps > MAX_STEPS_PER_RUN:
                    raise FloatingPointError(
                        f"step limit {MAX_STEPS_PER_RUN} exceeded (dt={dt0})")
            if not np.all(np.isfinite(state.u)):
                raise FloatingPointError("non-finite state")
            traj.states.append(state)
            traj.times.append(float(T))
    except (CFLViolation, FloatingPointError, ValueError) as exc:
        traj.error = f"{type(exc).__name__}: {exc}"
    return traj
