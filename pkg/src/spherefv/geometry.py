"""Exact geometry on the unit sphere: geographic chart, tangent bases, arc
lengths and zonal patch areas.

All angles are double-precision radians.  Longitudes are normalized to
[-pi, pi); latitudes live in [-pi/2, pi/2].  The sphere has radius 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi
HALF_PI = 0.5 * math.pi


class PoleSingularity(Exception):
    """Tangent basis requested at a pole, where the chart is singular."""


class InvalidRange(Exception):
    """Coordinate arguments violate ordering or bounds."""


def normalize_lon(lam: float) -> float:
    """Wrap a longitude into the canonical interval [-pi, pi)."""
    if -math.pi <= lam < math.pi:
        return lam
    return lam - TWO_PI * math.floor((lam + math.pi) / TWO_PI)


@dataclass(frozen=True)
class SpherePoint:
    """Point on the unit sphere in geographic coordinates (radians)."""

    lam: float
    phi: float

    def __post_init__(self):
        if not math.isfinite(self.lam) or not math.isfinite(self.phi):
            raise InvalidRange("non-finite coordinates")
        if abs(self.phi) > HALF_PI + 1e-12:
            raise InvalidRange(f"latitude {self.phi} outside [-pi/2, pi/2]")
        phi = min(max(self.phi, -HALF_PI), HALF_PI)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "lam", normalize_lon(self.lam))

    def cart(self) -> np.ndarray:
        return sph_to_cart(self)


def sph_to_cart(p: SpherePoint) -> np.ndarray:
    """Cartesian coordinates (cos phi cos lam, cos phi sin lam, sin phi)."""
    cphi = math.cos(p.phi)
    return np.array([cphi * math.cos(p.lam), cphi * math.sin(p.lam), math.sin(p.phi)])


def sph_to_cart_arrays(lam, phi) -> np.ndarray:
    """Vectorized chart: stacks to shape (..., 3)."""
    lam = np.asarray(lam, dtype=float)
    phi = np.asarray(phi, dtype=float)
    cphi = np.cos(phi)
    return np.stack([cphi * np.cos(lam), cphi * np.sin(lam), np.sin(phi)], axis=-1)


def cart_to_sph(v) -> SpherePoint:
    """Inverse chart for a unit vector; at the poles longitude is set to 0."""
    v = np.asarray(v, dtype=float)
    lam = math.atan2(v[1], v[0])
    phi = math.asin(min(1.0, max(-1.0, float(v[2]))))
    return SpherePoint(lam, phi)


def tangent_basis(p: SpherePoint):
    """Orthonormal tangent basis (i_lam, i_phi) of the geographic chart.

    Undefined at the poles: raises PoleSingularity when |phi| = pi/2.
    """
    if abs(p.phi) >= HALF_PI:
        raise PoleSingularity(f"tangent basis undefined at phi={p.phi}")
    sl, cl = math.sin(p.lam), math.cos(p.lam)
    sp, cp = math.sin(p.phi), math.cos(p.phi)
    i_lam = np.array([-sl, cl, 0.0])
    i_phi = np.array([-sp * cl, -sp * sl, cp])
    return i_lam, i_phi


def tangent_basis_arrays(lam, phi):
    """Vectorized tangent basis; caller must keep |phi| < pi/2."""
    lam = np.asarray(lam, dtype=float)
    phi = np.asarray(phi, dtype=float)
    sl, cl = np.sin(lam), np.cos(lam)
    sp, cp = np.sin(phi), np.cos(phi)
    zeros = np.zeros_like(sl)
    i_lam = np.stack([-sl, cl, zeros], axis=-1)
    i_phi = np.stack([-sp * cl, -sp * sl, cp], axis=-1)
    return i_lam, i_phi


def zonal_patch_area(lam1: float, lam2: float, phi1: float, phi2: float) -> float:
    """Exact area of the patch [lam1, lam2] x [phi1, phi2]."""
    if not lam1 < lam2 <= lam1 + TWO_PI + 1e-12:
        raise InvalidRange("need lam1 < lam2 <= lam1 + 2*pi")
    if not (-HALF_PI <= phi1 < phi2 <= HALF_PI):
        raise InvalidRange("need -pi/2 <= phi1 < phi2 <= pi/2")
    return (lam2 - lam1) * (math.sin(phi2) - math.sin(phi1))


def arc_length(kind: str, fixed_coord: float, a: float, b: float) -> float:
    """Exact arc length of a coordinate-line segment.

    kind="latitude": segment lam in [a, b] at latitude fixed_coord.
    kind="meridian": segment phi in [a, b] at longitude fixed_coord.
    """
    if not a < b:
        raise InvalidRange("need a < b")
    if kind == "latitude":
        return (b - a) * math.cos(fixed_coord)
    if kind == "meridian":
        return b - a
    raise InvalidRange(f"unknown arc kind {kind!r}")


def great_circle_distance(x, y) -> float:
    """Great-circle distance between two unit vectors."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    cross = np.cross(x, y)
    return math.atan2(float(np.linalg.norm(cross)), float(np.dot(x, y)))
