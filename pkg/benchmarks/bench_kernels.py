"""Benchmark the compiled kernels against the NumPy fallback.

Times the full first-order and MUSCL steps (whose cost is dominated by the
per-edge Godunov extremum search) with each backend driving the same mesh,
flux and state, and reports the speedup plus the worst value disagreement.

    python benchmarks/bench_kernels.py [--mesh 32x64] [--steps 50]
"""
import argparse
import time

import numpy as np

from spherefv import _kernels_py
from spherefv.flux import make_flux
from spherefv.mesh import build_web_mesh
from spherefv.scheme import (CellState, SchemeConfig, cfl_dt, make_edge_ops,
                             step_first_order, step_muscl)

try:
    from spherefv import _kernels
except ImportError:
    _kernels = None


def time_steps(mesh, F, cfg, dt, state, kernels, n_steps):
    ops = make_edge_ops(mesh, F, kernels=kernels)
    s = state
    t0 = time.perf_counter()
    for _ in range(n_steps):
        if cfg.order == 1:
            s = step_first_order(s, F, cfg, dt, ops=ops)
        else:
            s = step_muscl(s, F, cfg, dt, ops=ops)
    return time.perf_counter() - t0, s


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--mesh", default="32x64")
    ap.add_argument("--steps", type=int, default=50)
    args = ap.parse_args()
    nb, nl = (int(p) for p in args.mesh.split("x"))

    mesh = build_web_mesh(nb, nl)
    F = make_flux("burgers", axis=(0.3, -0.5, 0.8))
    rng = np.random.default_rng(0)
    state = CellState(mesh, rng.uniform(-1.0, 1.0, mesh.n_cells))
    print(f"mesh {nb}x{nl}: {mesh.n_cells} cells, {mesh.n_edges} edges; "
          f"{args.steps} steps per timing")

    for order, cfl in ((1, 0.45), (2, 0.4)):
        cfg = SchemeConfig(order=order, cfl=cfl)
        dt = cfl_dt(state, F, cfg)
        t_py, s_py = time_steps(mesh, F, cfg, dt, state, _kernels_py, args.steps)
        line = (f"order {order}:  python {args.steps / t_py:8.1f} steps/s")
        if _kernels is not None:
            t_cy, s_cy = time_steps(mesh, F, cfg, dt, state, _kernels, args.steps)
            diff = float(np.max(np.abs(s_py.u - s_cy.u)))
            line += (f"   cython {args.steps / t_cy:8.1f} steps/s"
                     f"   speedup {t_py / t_cy:5.1f}x   max|diff| {diff:.2e}")
        else:
            line += "   (compiled backend not built)"
        print(line)


if __name__ == "__main__":
    main()
