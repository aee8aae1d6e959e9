"""Intrinsic finite volume schemes for scalar conservation laws on the unit
sphere, with discrete well-posedness diagnostics and a 1-D torus oracle."""

from ._backend import BACKEND

__all__ = ["BACKEND"]
__version__ = "0.1.0"
