"""Pure-NumPy edge kernels.

These are the hot operations of the time stepper: monotone numerical fluxes
for separable edge flux functions g_e(w) = alpha_e * G(w), where G is one of
the built-in scalar shapes, plus the signed per-cell accumulation.

The compiled extension spherefv._kernels implements the same operations with
the same sampling grid, the same golden-section refinement and the same
tie-breaking (first minimum wins), so either module can serve as the active
backend.  Arithmetic is written so both backends perform the identical
sequence of IEEE operations per edge.

Godunov extremum location follows the sampling-plus-refinement approach
(129 samples, golden-section to 1e-12 in the argument) rather than assuming
convexity, because the trigonometric shape makes g_e non-convex.
"""
from __future__ import annotations

import numpy as np

GOLDEN = 0.3819660112501051  # (3 - sqrt(5)) / 2
W_TOL = 1e-12
N_SAMPLES = 129
N_LIP = 64
MAX_REFINE = 200

LINEAR, BURGERS, TRIG = 0, 1, 2

BACKEND_NAME = "python"


def shape_values(shape_id, w):
    if shape_id == LINEAR:
        return np.asarray(w, dtype=float) + 0.0
    if shape_id == BURGERS:
        return 0.5 * w * w
    if shape_id == TRIG:
        return np.sin(w)
    raise ValueError(f"unknown shape id {shape_id}")


def shape_derivative(shape_id, w):
    if shape_id == LINEAR:
        return np.ones_like(np.asarray(w, dtype=float))
    if shape_id == BURGERS:
        return np.asarray(w, dtype=float) + 0.0
    if shape_id == TRIG:
        return np.cos(w)
    raise ValueError(f"unknown shape id {shape_id}")


def edge_g(shape_id, alpha, u):
    """Total edge flux g_e(u) = alpha_e * G(u)."""
    return alpha * shape_values(shape_id, u)


def max_abs_shape_derivative(shape_id, lo, hi) -> float:
    """max |G'| over N_LIP uniform samples of [lo, hi] (endpoints included)."""
    step = (hi - lo) / (N_LIP - 1)
    w = lo + np.arange(N_LIP) * step
    w[-1] = hi
    return float(np.max(np.abs(shape_derivative(shape_id, w))))


def godunov_edges(shape_id, alpha, a, b):
    """Godunov flux per edge for g_e(w) = alpha_e * G(w).

    a <= b: min of g over [a, b]; a > b: max of g over [b, a]; ties a == b
    return g(a) directly so consistency is exact.
    """
    alpha = np.asarray(alpha, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    q = np.empty_like(a)
    eq = a == b
    if eq.any():
        q[eq] = alpha[eq] * shape_values(shape_id, a[eq])
    act = ~eq
    if act.any():
        q[act] = _godunov_active(shape_id, alpha[act], a[act], b[act])
    return q


def _godunov_active(shape_id, alpha, a, b):
    sgn = np.where(a < b, 1.0, -1.0)
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    c = sgn * alpha

    step = (hi - lo) / (N_SAMPLES - 1)
    w = lo[None, :] + np.arange(N_SAMPLES)[:, None] * step[None, :]
    w[-1, :] = hi
    v = c[None, :] * shape_values(shape_id, w)
    idx = np.argmin(v, axis=0)
    cols = np.arange(v.shape[1])
    best = v[idx, cols]
    left = w[np.maximum(idx - 1, 0), cols]
    right = w[np.minimum(idx + 1, N_SAMPLES - 1), cols]

    for _ in range(MAX_REFINE):
        act = (right - left) > W_TOL
        if not act.any():
            break
        d = right - left
        x1 = left + GOLDEN * d
        x2 = right - GOLDEN * d
        f1 = c * shape_values(shape_id, x1)
        f2 = c * shape_values(shape_id, x2)
        take = f1 < f2
        right = np.where(act & take, x2, right)
        left = np.where(act & ~take, x1, left)
    wm = 0.5 * (left + right)
    vm = c * shape_values(shape_id, wm)
    return sgn * np.minimum(best, vm)


def lax_friedrichs_edges(shape_id, alpha, a, b, speed):
    """Lax-Friedrichs flux per edge; speed must dominate |g_e'| on the data
    range.  Exactly consistent at a == b."""
    ga = alpha * shape_values(shape_id, a)
    gb = alpha * shape_values(shape_id, b)
    return 0.5 * (ga + gb) - 0.5 * speed * (b - a)


def accumulate_signed(n_cells, left, right, w_left, w_right):
    """D[left[e]] += w_left[e]; D[right[e]] -= w_right[e], in edge order."""
    add = np.bincount(left, weights=w_left, minlength=n_cells)
    sub = np.bincount(right, weights=w_right, minlength=n_cells)
    return add - sub


def godunov_callable(g, a, b):
    """Godunov flux for a vectorized callable g, same algorithm as the
    separable kernel.  Used by the 1-D torus scheme."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    q = np.empty_like(a)
    eq = a == b
    if eq.any():
        q[eq] = g(a[eq])
    act = ~eq
    if not act.any():
        return q
    aa, bb = a[act], b[act]
    sgn = np.where(aa < bb, 1.0, -1.0)
    lo = np.minimum(aa, bb)
    hi = np.maximum(aa, bb)

    step = (hi - lo) / (N_SAMPLES - 1)
    w = lo[None, :] + np.arange(N_SAMPLES)[:, None] * step[None, :]
    w[-1, :] = hi
    v = sgn[None, :] * g(w)
    idx = np.argmin(v, axis=0)
    cols = np.arange(v.shape[1])
    best = v[idx, cols]
    left = w[np.maximum(idx - 1, 0), cols]
    right = w[np.minimum(idx + 1, N_SAMPLES - 1), cols]
    for _ in range(MAX_REFINE):
        mask = (right - left) > W_TOL
        if not mask.any():
            break
        d = right - left
        x1 = left + GOLDEN * d
        x2 = right - GOLDEN * d
        f1 = sgn * g(x1)
        f2 = sgn * g(x2)
        take = f1 < f2
        right = np.where(mask & take, x2, right)
        left = np.where(mask & ~take, x1, left)
    wm = 0.5 * (left + right)
    vm = sgn * g(wm)
    q[act] = sgn * np.minimum(best, vm)
    return q
