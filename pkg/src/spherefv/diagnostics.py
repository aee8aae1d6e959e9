"""Discrete verification quantities: weighted norms, L1 distances, Kruzkov
entropy residuals, total variation along the zonal field, and the
divergence-measure norm of the flux."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels_py as _kp
from .flux import FluxField
from .scheme import CellState, SchemeConfig, make_edge_ops, _state_range
from .mesh import MERIDIONAL


class MeshMismatch(Exception):
    """States live on different meshes."""


def lq_norm(state: CellState, q) -> float:
    """(sum_K area |u_K|^q)^(1/q); max |u_K| for q = inf."""
    if q == math.inf:
        return float(np.max(np.abs(state.u)))
    if not q >= 1:
        raise ValueError("q must be >= 1 or inf")
    return float(np.sum(state.mesh.cell_area * np.abs(state.u) ** q) ** (1.0 / q))


def _same_mesh(a: CellState, b: CellState):
    if a.mesh is b.mesh:
        return
    if (a.mesh.n_cells != b.mesh.n_cells
            or not np.array_equal(a.mesh.cell_area, b.mesh.cell_area)):
        raise MeshMismatch("states use different meshes")


def l1_distance(state_a: CellState, state_b: CellState) -> float:
    """Area-weighted L1 distance between two states on the same mesh."""
    _same_mesh(state_a, state_b)
    return float(np.sum(state_a.mesh.cell_area * np.abs(state_a.u - state_b.u)))


def entropy_residual(state_n: CellState, state_np1: CellState, dt: float,
                     F: FluxField, cfg: SchemeConfig, k: float,
                     ops=None) -> np.ndarray:
    """Per-cell Kruzkov entropy residual of one first-order step:

        R_K = area (|u^{n+1}-k| - |u^n-k|)/dt + sum_e s Q_e(u^n_K, u^n_Ke)

    with Q_e(a,b) = q_e(a v k, b v k) - q_e(a ^ k, b ^ k) built on the same
    monotone flux (and, for Lax-Friedrichs, the same speeds) as the step.
    A monotone step satisfies max_K R_K <= 0 up to rounding.
    """
    _same_mesh(state_n, state_np1)
    mesh = state_n.mesh
    if ops is None:
        ops = make_edge_ops(mesh, F)
    u0 = state_n.u
    u1 = state_np1.u
    a = u0[mesh.edge_left]
    b = u0[mesh.edge_right]
    lo, hi = _state_range(cfg, u0)
    q_hi = ops.numflux_edges(np.maximum(a, k), np.maximum(b, k), lo, hi,
                             cfg.numerical_flux)
    q_lo = ops.numflux_edges(np.minimum(a, k), np.minimum(b, k), lo, hi,
                             cfg.numerical_flux)
    q_kruzkov = q_hi - q_lo
    flux_sum = _kp.accumulate_signed(mesh.n_cells, mesh.edge_left,
                                     mesh.edge_right, q_kruzkov, q_kruzkov)
    return (mesh.cell_area * (np.abs(u1 - k) - np.abs(u0 - k)) / dt + flux_sum)


def kruzkov_k_grid(state: CellState, n: int = 16) -> np.ndarray:
    """Uniform Kruzkov constants spanning the data range, padded by 10%."""
    lo = float(state.u.min())
    hi = float(state.u.max())
    r = hi - lo
    return np.linspace(lo - 0.1 * r, hi + 0.1 * r, n)


def tv_along_zonal_field(state: CellState) -> float:
    """Discrete total variation along the zonal rotation field:
    sum over meridional edges of length * cos(phi_mid) * |jump|."""
    mesh = state.mesh
    merid = mesh.edge_kind == MERIDIONAL
    phi_mid = 0.5 * (mesh.edge_start_phi[merid] + mesh.edge_end_phi[merid])
    jump = np.abs(state.u[mesh.edge_left[merid]] - state.u[mesh.edge_right[merid]])
    return float(np.sum(mesh.edge_length[merid] * np.cos(phi_mid) * jump))


def divergence_measure_norm(state: CellState, F: FluxField,
                            cfg: SchemeConfig, ops=None) -> float:
    """sum_K |sum_e s q_e(u_K, u_Ke)|, the discrete mass of div f(u); uses
    the compatibility-corrected per-cell divergence so constants give 0."""
    from .scheme import _divergence
    if ops is None:
        ops = make_edge_ops(state.mesh, F)
    lo, hi = _state_range(cfg, state.u)
    div = _divergence(ops, cfg, state.u, lo, hi)
    return float(np.sum(np.abs(div)))


@dataclass
class DiagnosticsReport:
    """Per-output-time records for a trajectory; distances optional."""

    times: list = field(default_factory=list)
    mass: list = field(default_factory=list)
    l1: list = field(default_factory=list)
    l2: list = field(default_factory=list)
    linf: list = field(default_factory=list)
    entropy_residual_max: list = field(default_factory=list)
    tv_zonal: list = field(default_factory=list)
    div_measure: list = field(default_factory=list)
    pair_l1: list = field(default_factory=list)

    CSV_COLUMNS = ("time", "mass", "l1", "l2", "linf",
                   "entropy_residual_max", "tv_zonal", "div_measure")

    def rows(self):
        for i, t in enumerate(self.times):
            yield (t, self.mass[i], self.l1[i], self.l2[i], self.linf[i],
                   self.entropy_residual_max[i], self.tv_zonal[i],
                   self.div_measure[i])


def report_for_trajectory(traj, F: FluxField, cfg: SchemeConfig,
                          other=None) -> DiagnosticsReport:
    """Diagnostics at every output time of a trajectory.

    The entropy residual at each time is measured on a probe first-order
    step from that state (size = the trajectory's step), maximized over a
    16-value Kruzkov grid from the initial state's range; the first state
    probes its own step.  When a second trajectory is given, pairwise L1
    distances are recorded too.
    """
    from .scheme import step_first_order

    rep = DiagnosticsReport()
    if not traj.states:
        return rep
    mesh = traj.states[0].mesh
    ops = make_edge_ops(mesh, F)
    ks = kruzkov_k_grid(traj.states[0])
    probe_cfg = SchemeConfig(numerical_flux=cfg.numerical_flux, order=1,
                             cfl=min(cfg.cfl, 0.45),
                             fixed_range=cfg.fixed_range)
    for i, s in enumerate(traj.states):
        rep.times.append(traj.times[i])
        rep.mass.append(s.mass())
        rep.l1.append(lq_norm(s, 1))
        rep.l2.append(lq_norm(s, 2))
        rep.linf.append(lq_norm(s, math.inf))
        rep.tv_zonal.append(tv_along_zonal_field(s))
        rep.div_measure.append(divergence_measure_norm(s, F, cfg, ops=ops))
        from .scheme import cfl_dt
        dt = cfl_dt(s, F, probe_cfg, t_max=1.0, ops=ops)
        nxt = step_first_order(s, F, probe_cfg, dt, ops=ops)
        rmax = max(float(np.max(entropy_residual(s, nxt, dt, F, probe_cfg,
                                                 k, ops=ops))) for k in ks)
        rep.entropy_residual_max.append(rmax)
        if other is not None:
            rep.pair_l1.append(l1_distance(s, other.states[i]))
    return rep
