"""Domains (balls and origin-centered ellipsoids) and their geometry.

Everything downstream -- quadrature segmentation, boundary layers, kernel
formulas -- is driven by three primitives implemented here: the signed
distance to the boundary, exact ray/boundary intersections, and boundary
quadrature rules.

Both domain types are frozen dataclasses (hence hashable), which lets
expensive per-domain data such as eigendecompositions and cached quadrature
rules key off the domain object directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .core import DomainError

__all__ = [
    "Ball",
    "Ellipsoid",
    "Domain",
    "BoundaryQuadrature",
    "unit_ball",
    "dim",
    "delta",
    "contains",
    "measures",
    "boundary_quadrature",
    "ray_span",
    "ray_spans",
    "parse_domain",
]


@dataclass(frozen=True)
class Ball:
    """Open ball ``{ |x - center| < radius }``."""

    center: tuple
    radius: float

    def __post_init__(self):
        if not self.radius > 0.0:
            raise DomainError(f"ball radius must be positive, got {self.radius}")
        if len(self.center) not in (2, 3):
            raise DomainError("only dimensions 2 and 3 are supported")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def center_array(self) -> np.ndarray:
        return np.asarray(self.center, dtype=float)


@dataclass(frozen=True)
class Ellipsoid:
    """Open ellipsoid ``{ x : x . A x < 1 }``, centered at the origin.

    ``a`` holds the row-major entries of the symmetric positive definite
    matrix ``A``; the constructor validates symmetry and positivity.
    """

    a: tuple

    def __post_init__(self):
        n2 = len(self.a)
        n = int(round(math.sqrt(n2)))
        if n * n != n2 or n not in (2, 3):
            raise DomainError(
                f"ellipsoid matrix must be 2x2 or 3x3 row-major, got {n2} entries")
        object.__setattr__(self, "a", tuple(float(v) for v in self.a))
        A = self.matrix
        if not np.allclose(A, A.T, rtol=0.0, atol=1e-12 * np.abs(A).max()):
            raise DomainError("ellipsoid matrix must be symmetric")
        evals = np.linalg.eigvalsh(A)
        if evals.min() <= 0.0:
            raise DomainError("ellipsoid matrix must be positive definite")

    @property
    def dim(self) -> int:
        return int(round(math.sqrt(len(self.a))))

    @property
    def matrix(self) -> np.ndarray:
        n = self.dim
        return np.asarray(self.a, dtype=float).reshape(n, n)


Domain = Ball | Ellipsoid


@dataclass(frozen=True)
class BoundaryQuadrature:
    """Nodes, surface-measure weights, and outward unit normals on a boundary."""

    nodes: np.ndarray     # (M, N)
    weights: np.ndarray   # (M,)
    normals: np.ndarray   # (M, N)


def unit_ball(N: int) -> Ball:
    return Ball(center=(0.0,) * N, radius=1.0)


def dim(domain: Domain) -> int:
    return domain.dim


@lru_cache(maxsize=64)
def _spectral(domain: Ellipsoid):
    """Eigendecomposition ``A = Q diag(d) Q^T`` plus derived maps (cached)."""
    A = domain.matrix
    d, Q = np.linalg.eigh(A)
    # B = A^{-1/2}: maps the unit sphere onto the ellipsoid boundary.
    B = (Q * (d ** -0.5)) @ Q.T
    Binv = (Q * (d ** 0.5)) @ Q.T
    return d, Q, B, Binv


def _ellipsoid_delta_one(domain: Ellipsoid, x: np.ndarray) -> float:
    """Signed distance for one point: positive inside, negative outside.

    The nearest boundary point is the projection ``y = (I + lam A)^{-1} x``
    where ``lam`` solves ``sum_i d_i xt_i^2 / (1 + lam d_i)^2 = 1`` in the
    eigenbasis.  On ``(-1/d_active_max, inf)`` that function is strictly
    decreasing, so the root is unique and gives the global nearest point.
    """
    d, Q, _, _ = _spectral(domain)
    xt = Q.T @ x
    active = np.abs(xt) > 0.0
    if not active.any():
        # Center of the ellipsoid: nearest boundary point lies along the
        # stiffest axis.
        return float(d.max() ** -0.5)
    da = d[active]
    xa = xt[active]

    def g(lam: float) -> float:
        return float(np.sum(da * xa ** 2 / (1.0 + lam * da) ** 2) - 1.0)

    pole = -1.0 / da.max()
    span = abs(pole)
    lo = pole + 1e-14 * span
    while g(lo) < 0.0:
        # x has a negligible component on the stiffest axis; tighten toward
        # the pole until the bracket opens (g -> +inf at the pole).
        lo = pole + (lo - pole) * 1e-3
        if lo - pole < 1e-300:
            lo = pole + 1e-300
            break
    hi = span
    while g(hi) > 0.0:
        hi *= 4.0
    lam = brentq(g, lo, hi, xtol=1e-15, rtol=8.9e-16, maxiter=200)
    yt = xt / (1.0 + lam * d)
    dist = float(np.linalg.norm(xt - yt))
    inside = float(np.sum(d * xt ** 2)) < 1.0
    return dist if inside else -dist


def delta(domain: Domain, x) -> float | np.ndarray:
    """Signed distance to the boundary: positive inside, negative outside.

    Accepts a single point ``(N,)`` or a batch ``(M, N)``; returns a float
    or an array accordingly.
    """
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[1] != domain.dim:
        raise DomainError(
            f"point dimension {pts.shape[1]} != domain dimension {domain.dim}")
    if isinstance(domain, Ball):
        out = domain.radius - np.linalg.norm(pts - domain.center_array, axis=1)
    else:
        out = np.array([_ellipsoid_delta_one(domain, p) for p in pts])
    return float(out[0]) if single else out


def contains(domain: Domain, x) -> bool | np.ndarray:
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if isinstance(domain, Ball):
        out = np.linalg.norm(pts - domain.center_array, axis=1) < domain.radius
    else:
        A = domain.matrix
        out = np.einsum("ij,jk,ik->i", pts, A, pts) < 1.0
    return bool(out[0]) if single else out


def measures(domain: Domain) -> tuple[float, float]:
    """Return ``(volume, diameter)``."""
    N = domain.dim
    omega = math.pi if N == 2 else 4.0 * math.pi / 3.0
    if isinstance(domain, Ball):
        return omega * domain.radius ** N, 2.0 * domain.radius
    d, _, _, _ = _spectral(domain)
    vol = omega / math.sqrt(float(np.prod(d)))
    diam = 2.0 / math.sqrt(float(d.min()))
    return vol, diam


def _sphere_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Product rule on the unit sphere: Gauss in cos(polar) x uniform azimuth.

    Returns unit vectors (M, 3) and weights summing to 4 pi.
    """
    n_mu = max(4, int(order))
    n_phi = max(8, 2 * int(order))
    mu, wmu = np.polynomial.legendre.leggauss(n_mu)
    phi = 2.0 * math.pi * (np.arange(n_phi) + 0.5) / n_phi
    sin_th = np.sqrt(1.0 - mu ** 2)
    cp, sp = np.cos(phi), np.sin(phi)
    dirs = np.empty((n_mu * n_phi, 3))
    dirs[:, 0] = np.outer(sin_th, cp).ravel()
    dirs[:, 1] = np.outer(sin_th, sp).ravel()
    dirs[:, 2] = np.repeat(mu, n_phi)
    w = np.repeat(wmu, n_phi) * (2.0 * math.pi / n_phi)
    return dirs, w


def boundary_quadrature(domain: Domain, order: int) -> BoundaryQuadrature:
    """Quadrature for surface integrals over the domain boundary.

    In dimension 2 the rule is the trapezoid rule in the (elliptic) angle,
    which converges spectrally on these analytic closed curves; ``order``
    is the number of nodes.  In dimension 3 it is a Gauss x azimuth product
    rule mapped through the linear parametrization, with the surface
    Jacobian folded into the weights.
    """
    if order < 4:
        raise DomainError("boundary quadrature needs order >= 4")
    N = domain.dim
    if N == 2:
        t = 2.0 * math.pi * np.arange(order) / order
        omega = np.stack([np.cos(t), np.sin(t)], axis=1)
        if isinstance(domain, Ball):
            nodes = domain.center_array + domain.radius * omega
            weights = np.full(order, 2.0 * math.pi * domain.radius / order)
            normals = omega
        else:
            _, _, B, Binv = _spectral(domain)
            nodes = omega @ B.T
            tangent = np.stack([-np.sin(t), np.cos(t)], axis=1) @ B.T
            weights = np.linalg.norm(tangent, axis=1) * (2.0 * math.pi / order)
            raw = omega @ Binv.T          # A x is parallel to B^{-1} omega
            normals = raw / np.linalg.norm(raw, axis=1, keepdims=True)
        return BoundaryQuadrature(nodes, weights, normals)

    dirs, w = _sphere_rule(order)
    if isinstance(domain, Ball):
        nodes = domain.center_array + domain.radius * dirs
        weights = w * domain.radius ** 2
        normals = dirs
    else:
        _, _, B, Binv = _spectral(domain)
        nodes = dirs @ B.T
        raw = dirs @ Binv.T
        scale = np.linalg.norm(raw, axis=1)
        weights = w * float(np.linalg.det(B)) * scale
        normals = raw / scale[:, None]
    return BoundaryQuadrature(nodes, weights, normals)


def ray_spans(domain: Domain, x, thetas) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Intersection parameters of the lines ``x + t theta`` with the boundary.

    ``thetas`` is (M, N) with unit rows.  Returns ``(t_lo, t_hi, hit)``;
    where ``hit`` is False the other entries are NaN.  Because the domains
    are quadrics, the intersections are the roots of a quadratic and exact
    to rounding.
    """
    x = np.asarray(x, dtype=float)
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    if isinstance(domain, Ball):
        xc = x - domain.center_array
        a = np.ones(len(thetas))
        b = thetas @ xc
        c = float(xc @ xc) - domain.radius ** 2
        disc = b ** 2 - a * c
    else:
        A = domain.matrix
        Ath = thetas @ A
        a = np.einsum("ij,ij->i", Ath, thetas)
        b = Ath @ x
        c = float(x @ A @ x) - 1.0
        disc = b ** 2 - a * c
    hit = disc > 0.0
    t_lo = np.full(len(thetas), np.nan)
    t_hi = np.full(len(thetas), np.nan)
    root = np.sqrt(np.where(hit, disc, 0.0))
    # Stable quadratic roots (avoid cancellation when b is large).
    sgn = np.where(b >= 0.0, 1.0, -1.0)
    q = -(b + sgn * root)
    with np.errstate(divide="ignore", invalid="ignore"):
        r1 = np.where(hit, q / a, np.nan)
        r2 = np.where(hit & (q != 0.0), c / q, np.nan)
        r2 = np.where(hit & (q == 0.0), -r1, r2)
    t_lo[hit] = np.minimum(r1, r2)[hit]
    t_hi[hit] = np.maximum(r1, r2)[hit]
    return t_lo, t_hi, hit


def ray_span(domain: Domain, x, theta):
    """Scalar convenience wrapper around :func:`ray_spans`."""
    t_lo, t_hi, hit = ray_spans(domain, x, np.asarray(theta, dtype=float)[None, :])
    if not hit[0]:
        return None
    return float(t_lo[0]), float(t_hi[0])


def parse_domain(literal: str, dims: int | None = None) -> Domain:
    """Parse a command-line domain literal.

    ``ball:R`` gives a ball of radius ``R`` centered at the origin (the
    dimension comes from ``dims``, default 2); ``ellipsoid:a11,a12,...``
    takes the row-major matrix entries, with the dimension inferred from
    their count.
    """
    kind, _, payload = literal.partition(":")
    if kind == "ball":
        try:
            radius = float(payload)
        except ValueError as exc:
            raise DomainError(f"bad ball literal {literal!r}") from exc
        n = dims if dims is not None else 2
        return Ball(center=(0.0,) * n, radius=radius)
    if kind == "ellipsoid":
        try:
            entries = tuple(float(v) for v in payload.split(","))
        except ValueError as exc:
            raise DomainError(f"bad ellipsoid literal {literal!r}") from exc
        dom = Ellipsoid(a=entries)
        if dims is not None and dom.dim != dims:
            raise DomainError(
                f"ellipsoid literal has dimension {dom.dim}, expected {dims}")
        return dom
    raise DomainError(f"unknown domain literal {literal!r}")
