"""Closed-form solution family for constant right-hand side on ellipsoids.

For the ellipsoid ``E = {x : Ax . x < 1}`` with isotropic ``A = a I`` (a
ball of radius ``a**-0.5``) the solution of ``(-Delta)^s u = 1`` with zero
exterior data is

    ``u_s(x) = c(s, A) (1 - Ax . x)_+^s,   c(s, aI) = d(N, s) a^{-s}``,

with ``d(N, s)`` the unit-ball center coefficient.  Because the family is
explicit in ``s``, its s-derivative is explicit too; these two functions
are the ground truth against which the numerically assembled derivative
machinery is judged.
"""

from __future__ import annotations

import math

import numpy as np

from .core import CapabilityError, DomainError
from .specfun import ball_torsion_constant

__all__ = [
    "isotropic_scale",
    "torsion_value",
    "torsion_s_derivative",
]


def isotropic_scale(A) -> tuple[float, int]:
    """Return ``(a, N)`` for an isotropic matrix ``A = a I``.

    The closed-form constant is only available for balls; a genuinely
    anisotropic ellipsoid raises :class:`CapabilityError` (the solution
    family exists but its constant has no elementary form here).
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    N = A.shape[0]
    if A.shape != (N, N) or N not in (2, 3):
        raise DomainError(f"matrix must be 2x2 or 3x3, got shape {A.shape}")
    if not np.allclose(A, A.T, rtol=0.0, atol=1e-12 * np.abs(A).max()):
        raise DomainError("ellipsoid matrix must be symmetric")
    diag = np.diag(A)
    a = float(diag[0])
    if a <= 0.0:
        raise DomainError("ellipsoid matrix must be positive definite")
    iso = (np.allclose(diag, a, rtol=1e-12, atol=0.0)
           and np.allclose(A - np.diag(diag), 0.0, atol=1e-12 * a))
    if not iso:
        raise CapabilityError(
            "the torsion constant is only in closed form for isotropic "
            "matrices (balls); anisotropic ellipsoids are not offered")
    return a, N


def _quadratic_form(A, x) -> float:
    x = np.asarray(x, dtype=float)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if x.shape != (A.shape[0],):
        raise DomainError(
            f"point of dimension {x.shape} does not match matrix {A.shape}")
    return float(x @ A @ x)


def torsion_value(A, s, x) -> float:
    """``u_s(x) = c(s, A) (1 - Ax . x)_+^s`` for isotropic ``A``.

    Vanishes on and outside the boundary (positive part); admits
    ``0 < s < 2`` so difference quotients across ``s = 1`` stay inside
    the closed-form family.
    """
    a, N = isotropic_scale(A)
    d, _ = ball_torsion_constant(N, s)
    v = 1.0 - _quadratic_form(A, x)
    if v <= 0.0:
        return 0.0
    return d * a ** -float(s) * v ** float(s)


def torsion_s_derivative(A, s, x) -> float:
    """``d/ds u_s(x)`` of the closed family, at any ``0 < s < 2``:

    ``a^{-s} [ (d'(N,s) - d(N,s) ln a) v^s + d(N,s) v^s ln v ]`` with
    ``v = 1 - Ax . x``.  Both terms vanish as ``v -> 0+``, so the value
    on and outside the boundary is 0.
    """
    a, N = isotropic_scale(A)
    d, dp = ball_torsion_constant(N, s)
    v = 1.0 - _quadratic_form(A, x)
    if v <= 0.0:
        return 0.0
    s = float(s)
    return a ** -s * ((dp - d * math.log(a)) * v ** s
                      + d * v ** s * math.log(v))
