"""Parametrized flux fields tangent to the sphere.

A gradient flux is built from a potential h(x, u) on the ambient space:

    F(x, u) = n(x) ^ grad_x h(x, u),      n(x) = x on the unit sphere.

Such fields are geometry-compatible (constants solve the conservation law),
and the flux integrated across an edge reduces to a difference of endpoint
potentials: with the mesh's traversal convention (nu = t x n),

    int_e F . nu ds = h(p_start, u) - h(p_end, u),

which is exact and makes the discrete compatibility residual a pure
telescoping sum.  Homogeneous fluxes F = n ^ Phi(u) are the special case
h(x, u) = f(u) . x.  Generic (non-potential) tangent fields are integrated
by Gauss-Legendre quadrature along the edge instead.

Built-in potentials are all separable, h(x, u) = G(u) * (axis . x), which
the scheme kernels exploit:

    linear      G(u) = u         (solid-body transport about `axis`)
    burgers     G(u) = u^2 / 2   (convex)
    trig        G(u) = sin(u)    (non-convex), fixed polar axis
    custom-axis G(u) = sin(u)    about a configurable axis
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad

from . import _kernels_py as _kp
from .geometry import SpherePoint, sph_to_cart, tangent_basis, tangent_basis_arrays
from .mesh import Edge, WebMesh

LIPSCHITZ_SAFETY = 1.1
LIPSCHITZ_SAMPLES = 64


class FluxField:
    """Abstract tangent flux field F(x, u)."""

    is_gradient = False
    name = "flux"

    def vector(self, x, u):
        raise NotImplementedError

    def __repr__(self):
        return f"<{type(self).__name__} {self.name}>"


class GradientFlux(FluxField):
    """Flux from an ambient potential: F = n ^ grad h."""

    is_gradient = True

    def __init__(self, h, dh_du, grad_h, name="gradient"):
        self._h = h
        self._dh_du = dh_du
        self._grad_h = grad_h
        self.name = name

    def h(self, x, u):
        return self._h(np.asarray(x, dtype=float), u)

    def dh_du(self, x, u):
        return self._dh_du(np.asarray(x, dtype=float), u)

    def grad_h(self, x, u):
        return self._grad_h(np.asarray(x, dtype=float), u)

    def vector(self, x, u):
        x = np.asarray(x, dtype=float)
        return np.cross(x, self.grad_h(x, u))


class HomogeneousFlux(GradientFlux):
    """F = n ^ Phi(u) with Phi = (f1, f2, f3); equivalent potential f(u).x."""

    def __init__(self, f: Callable, fprime: Callable, name="homogeneous"):
        self.f = f
        self.fprime = fprime
        super().__init__(
            h=lambda x, u: x @ np.asarray(f(u), dtype=float),
            dh_du=lambda x, u: x @ np.asarray(fprime(u), dtype=float),
            grad_h=lambda x, u: np.broadcast_to(
                np.asarray(f(u), dtype=float), np.asarray(x).shape).copy(),
            name=name,
        )


class SeparableFlux(GradientFlux):
    """Potential h(x, u) = G(u) * (axis . x); the kernel-friendly class."""

    def __init__(self, kind: str, axis, shape_id: int, G, dG):
        axis = np.asarray(axis, dtype=float)
        nrm = float(np.linalg.norm(axis))
        if not nrm > 0:
            raise ValueError("flux axis must be nonzero")
        self.axis = axis / nrm
        self.shape_id = shape_id
        self.G = G
        self.dG = dG
        super().__init__(
            h=lambda x, u: G(u) * (x @ self.axis),
            dh_du=lambda x, u: dG(u) * (x @ self.axis),
            grad_h=lambda x, u: G(u) * np.broadcast_to(
                self.axis, np.asarray(x).shape).copy(),
            name=kind,
        )


class TangentVectorFlux(FluxField):
    """Generic tangent field given directly as F(x, u); quadrature only."""

    def __init__(self, F: Callable, name="vector"):
        self._F = F
        self.name = name

    def vector(self, x, u):
        return self._F(np.asarray(x, dtype=float), u)


FLUX_KINDS = ("linear", "burgers", "trig", "custom-axis")


def make_flux(kind: str, axis=(0.0, 0.0, 1.0)) -> FluxField:
    """Built-in flux library; axis is normalized internally."""
    if kind == "linear":
        return SeparableFlux(kind, axis, _kp.LINEAR, lambda u: u, lambda u: 1.0)
    if kind == "burgers":
        return SeparableFlux(kind, axis, _kp.BURGERS,
                             lambda u: 0.5 * u * u, lambda u: u)
    if kind == "trig":
        return SeparableFlux(kind, (0.0, 0.0, 1.0), _kp.TRIG, np.sin, np.cos)
    if kind == "custom-axis":
        return SeparableFlux(kind, axis, _kp.TRIG, np.sin, np.cos)
    if kind == "noncompat-fixture":
        return noncompat_fixture()
    raise ValueError(f"unknown flux kind {kind!r}")


def noncompat_fixture() -> TangentVectorFlux:
    """Deliberately non-compatible field F = u * i_phi (nonzero divergence);
    used to exercise the compatibility checker's failure path."""

    def F(x, u):
        x = np.asarray(x, dtype=float)
        cphi = np.sqrt(x[..., 0] ** 2 + x[..., 1] ** 2)
        i_phi = np.stack([-x[..., 2] * x[..., 0] / cphi,
                          -x[..., 2] * x[..., 1] / cphi,
                          cphi], axis=-1)
        return u * i_phi

    return TangentVectorFlux(F, name="noncompat-fixture")


# -- pointwise components ----------------------------------------------------


def flux_components(F: FluxField, p: SpherePoint, u: float):
    """(F_lambda, F_phi) in the tangent basis at p; undefined at the poles."""
    i_lam, i_phi = tangent_basis(p)
    v = F.vector(sph_to_cart(p), u)
    return float(v @ i_lam), float(v @ i_phi)


# -- edge integrals ------------------------------------------------------------


def _edge_quadrature(F: FluxField, e: Edge, u: float, order: int) -> float:
    """Gauss-Legendre quadrature of F.nu along the edge arc."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    if e.kind == "meridional":
        lam0 = e.start.lam
        p1, p2 = e.start.phi, e.end.phi
        a, b = min(p1, p2), max(p1, p2)
        phi = 0.5 * (a + b) + 0.5 * (b - a) * nodes
        lam = np.full_like(phi, lam0)
        i_lam, _ = tangent_basis_arrays(lam, phi)
        x = _carts(lam, phi)
        vals = np.einsum("ij,ij->i", F.vector(x, u), i_lam)
        integral = 0.5 * (b - a) * float(weights @ vals)
        return integral if p2 >= p1 else -integral
    # zonal / polar-cap-rim: integrate westward-stored interval, nu = north
    phi0 = e.start.phi
    width = e.length / math.cos(phi0)
    lam_w = e.end.lam
    lam = lam_w + 0.5 * width + 0.5 * width * nodes
    phi = np.full_like(lam, phi0)
    _, i_phi = tangent_basis_arrays(lam, phi)
    x = _carts(lam, phi)
    vals = np.einsum("ij,ij->i", F.vector(x, u), i_phi)
    return 0.5 * width * math.cos(phi0) * float(weights @ vals)


def _carts(lam, phi):
    from .geometry import sph_to_cart_arrays

    return sph_to_cart_arrays(lam, phi)


def edge_total_flux_exact(F: FluxField, e: Edge, u: float, quad_order: int = 8) -> float:
    """Total flux across an edge, int_e F.nu ds.

    Gradient fluxes use the exact endpoint form h(start) - h(end); generic
    fields fall back to Gauss-Legendre quadrature along the arc.
    """
    if F.is_gradient:
        xs = sph_to_cart(e.start)
        xe = sph_to_cart(e.end)
        return float(F.h(xs, u) - F.h(xe, u))
    return _edge_quadrature(F, e, u, quad_order)


class EdgeFluxFunction:
    """Scalar total-flux function of one edge, g_e(u), with derivative."""

    def __init__(self, F: GradientFlux, e: Edge):
        self.xs = sph_to_cart(e.start)
        self.xe = sph_to_cart(e.end)
        self.flux = F
        self.edge_id = e.id

    def __call__(self, u):
        return self.flux.h(self.xs, u) - self.flux.h(self.xe, u)

    def derivative(self, u):
        return self.flux.dh_du(self.xs, u) - self.flux.dh_du(self.xe, u)


def edge_flux_function(F: FluxField, e: Edge) -> EdgeFluxFunction:
    if not F.is_gradient:
        raise TypeError("edge flux functions exist only for gradient fluxes")
    return EdgeFluxFunction(F, e)


def lipschitz_bound(F: FluxField, e: Edge, u_min: float, u_max: float) -> float:
    """Upper bound on |g_e'| over [u_min, u_max]: sampled max times 1.1."""
    if u_min > u_max:
        raise ValueError("need u_min <= u_max")
    ge = edge_flux_function(F, e)
    step = (u_max - u_min) / (LIPSCHITZ_SAMPLES - 1)
    m = 0.0
    for i in range(LIPSCHITZ_SAMPLES):
        w = u_max if i == LIPSCHITZ_SAMPLES - 1 else u_min + i * step
        v = abs(float(ge.derivative(w)))
        if v > m:
            m = v
    return LIPSCHITZ_SAFETY * m


# -- compatibility -------------------------------------------------------------


def _compat_scan(F: FluxField, mesh: WebMesh, u_samples, quad_order=8,
                 use_quadrature=False):
    """Max over cells and samples of |sum of signed edge fluxes| / area."""
    worst = (-1.0, -1, 0.0)
    gradient_fast = F.is_gradient and not use_quadrature
    for u in u_samples:
        if gradient_fast:
            hs = F.h(mesh.edge_start_cart, float(u))
            he = F.h(mesh.edge_end_cart, float(u))
            q = hs - he
        else:
            q = np.array([_edge_quadrature(F, e, float(u), quad_order)
                          for e in mesh.edges])
        div = _kp.accumulate_signed(mesh.n_cells, mesh.edge_left,
                                    mesh.edge_right, q, q)
        res = np.abs(div) / mesh.cell_area
        k = int(np.argmax(res))
        if res[k] > worst[0]:
            worst = (float(res[k]), k, float(u))
    return worst


def check_compatibility(F: FluxField, mesh: WebMesh, u_samples,
                        quad_order: int = 8, use_quadrature: bool = False) -> float:
    """Discrete geometric-compatibility residual of the flux on the mesh."""
    return _compat_scan(F, mesh, u_samples, quad_order, use_quadrature)[0]


# -- entropy machinery ---------------------------------------------------------


@dataclass(frozen=True)
class EntropyPair:
    """Convex entropy U with the flux potential H(x, u) induced by a
    gradient flux: H = int_0^u U'(v) dh/du(x, v) dv (adaptive quadrature)."""

    U: Callable
    dU: Callable
    flux: GradientFlux

    def H(self, x, ubar: float) -> float:
        x = np.asarray(x, dtype=float)
        val, _ = quad(lambda v: float(self.dU(v)) * float(self.flux.dh_du(x, v)),
                      0.0, ubar, epsabs=1e-10, epsrel=1e-12, limit=200)
        return val


def kruzkov_edge_flux(numflux: Callable, k: float) -> Callable:
    """Numerical entropy flux for the Kruzkov entropy |u - k|:

        Q(a, b) = q(a v k, b v k) - q(a ^ k, b ^ k)

    built on a monotone two-point flux q; consistent with
    sgn(u - k) (g(u) - g(k)) at a = b = u.
    """

    def Q(a, b):
        return (numflux(max(a, k), max(b, k))
                - numflux(min(a, k), min(b, k)))

    return Q
