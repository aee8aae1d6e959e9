"""Initial-data library: intrinsic functions of (lam, phi), mesh-independent
so convergence studies compare like with like."""
from __future__ import annotations

import numpy as np

from .geometry import sph_to_cart_arrays

INIT_KINDS = ("constant", "gaussian_bump", "band_step", "two_bumps")


def _bump(lam, phi, center_lam, center_phi, kappa, amplitude):
    x = sph_to_cart_arrays(lam, phi)
    c = sph_to_cart_arrays(center_lam, center_phi)
    dot = np.clip(x @ c, -1.0, 1.0)
    d = np.arccos(dot)
    return amplitude * np.exp(-kappa * d * d)


def initial_function(init_cfg):
    """Build a vectorized (lam, phi) -> u callable from an InitConfig."""
    kind = init_cfg.kind
    if kind == "constant":
        value = init_cfg.value
        return lambda lam, phi: np.full_like(np.asarray(lam, dtype=float), value)
    if kind == "gaussian_bump":
        return lambda lam, phi: _bump(lam, phi, init_cfg.center_lambda,
                                      init_cfg.center_phi, init_cfg.kappa,
                                      init_cfg.amplitude)
    if kind == "band_step":
        lo, hi = init_cfg.phi_min, init_cfg.phi_max
        inside, outside = init_cfg.inside, init_cfg.outside
        return lambda lam, phi: np.where(
            (np.asarray(phi) >= lo) & (np.asarray(phi) <= hi), inside, outside)
    if kind == "two_bumps":
        def fn(lam, phi):
            first = _bump(lam, phi, init_cfg.center_lambda, init_cfg.center_phi,
                          init_cfg.kappa, init_cfg.amplitude)
            second = _bump(lam, phi, init_cfg.center_lambda + np.pi,
                           -init_cfg.center_phi, init_cfg.kappa,
                           init_cfg.amplitude2)
            return first + second
        return fn
    raise ValueError(f"unknown initial data kind {kind!r}")
