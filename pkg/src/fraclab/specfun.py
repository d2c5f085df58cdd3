"""Gamma-family special functions and the named constants of the model.

The gamma and digamma evaluations are self-contained (Lanczos approximation
and Bernoulli asymptotics) rather than imported, so that the constant
formulas below are reproducible to their stated accuracy without trusting a
third-party implementation; the test suite pins both functions against a
frozen high-precision table.

Conventions
-----------
* ``frac_normalization`` is the constant ``c(N, s)`` making the principal
  value integral equal the Fourier multiplier ``|xi|^(2s)``.
* ``log_constants`` returns ``(c_N, rho_N)`` for the logarithmic operator
  with symbol ``2 log |xi|``: the kernel constant ``c_N = Gamma(N/2) /
  pi^(N/2)`` and the zero-order constant ``rho_N = 2 ln 2 + psi(N/2) +
  gamma_E``  (Euler's constant entering through ``psi(1) = -gamma_E``).
* ``riesz_constant`` is the coefficient of ``|z|^(2s - N)`` in the
  fundamental solution, defined for ``0 < s < N/2``.
* ``ball_poisson_constant`` is the coefficient in the exterior Poisson
  kernel of a ball.
* ``ball_torsion_constant`` is the center coefficient ``d(N, s)`` of the
  ball torsion function together with its exact s-derivative.
"""

from __future__ import annotations

import math

from .core import DomainError

__all__ = [
    "gamma",
    "ln_gamma",
    "digamma",
    "frac_normalization",
    "log_constants",
    "riesz_constant",
    "ball_poisson_constant",
    "ball_torsion_constant",
]

# Lanczos approximation, g = 607/128, 15 coefficients (Godfrey's set).
# Relative accuracy is ~1e-15 over the right half plane, which is more
# headroom than the 1e-12 the constant formulas are tested to.
_LANCZOS_G = 607.0 / 128.0
_LANCZOS_C = (
    0.99999999999999709182,
    57.156235665862923517,
    -59.597960355475491248,
    14.136097974741747174,
    -0.49191381609762019978,
    0.33994649984811888699e-4,
    0.46523628927048575665e-4,
    -0.98374475304879564677e-4,
    0.15808870322491248884e-3,
    -0.21026444172410488319e-3,
    0.21743961811521264320e-3,
    -0.16431810653676389022e-3,
    0.84418223983852743293e-4,
    -0.26190838401581408670e-4,
    0.36899182659531622704e-5,
)

_HALF_LOG_TWO_PI = 0.5 * math.log(2.0 * math.pi)


def ln_gamma(x: float) -> float:
    """Natural log of the gamma function for ``x > 0``."""
    x = float(x)
    if not x > 0.0:
        raise DomainError(f"ln_gamma requires x > 0, got {x}")
    if x < 0.5:
        # Reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x).  For 0 < x < 0.5
        # both factors are positive, so no sign bookkeeping is needed.
        return math.log(math.pi / math.sin(math.pi * x)) - ln_gamma(1.0 - x)
    acc = _LANCZOS_C[0]
    for k in range(1, len(_LANCZOS_C)):
        acc += _LANCZOS_C[k] / (x - 1.0 + k)
    t = x + _LANCZOS_G - 0.5
    return _HALF_LOG_TWO_PI + (x - 0.5) * math.log(t) - t + math.log(acc)


def gamma(x: float) -> float:
    """Gamma function for ``x > 0``."""
    return math.exp(ln_gamma(x))


# Bernoulli numbers B_2 .. B_14 divided by 2k, for the asymptotic series
# psi(x) ~ ln x - 1/(2x) - sum B_2k / (2k x^{2k}).
_DIGAMMA_ASYMPTOTIC = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
)

_DIGAMMA_SHIFT = 10.0


def digamma(x: float) -> float:
    """Digamma function ``psi(x)`` for ``x > 0``.

    Uses the recurrence ``psi(x+1) = psi(x) + 1/x`` to push the argument
    past 10, then the Bernoulli asymptotic series, which at that point is
    accurate to well below 1e-14.
    """
    x = float(x)
    if not x > 0.0:
        raise DomainError(f"digamma requires x > 0, got {x}")
    acc = 0.0
    while x < _DIGAMMA_SHIFT:
        acc -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    series = 0.0
    power = inv2
    for coeff in _DIGAMMA_ASYMPTOTIC:
        series += coeff * power
        power *= inv2
    return acc + math.log(x) - 0.5 / x - series


_EULER_GAMMA = 0.57721566490153286061


def frac_normalization(N: int, s) -> float:
    """Normalization ``c(N, s)`` of the fractional Laplacian, ``0 < s < 1``.

    ``c(N, s) = 4^s Gamma(N/2 + s) s (1 - s) / (Gamma(2 - s) pi^(N/2))``,
    the constant for which the symmetrized principal-value integral has
    Fourier symbol ``|xi|^(2s)``.  Vanishes linearly at both endpoints,
    which is what drives the entire small-``1-s`` analysis; the endpoint
    values themselves are excluded because the principal-value operator is
    not defined there.
    """
    _check_dim(N)
    s = float(s)
    if not 0.0 < s < 1.0:
        raise DomainError(f"frac_normalization requires 0 < s < 1, got s={s}")
    return (4.0 ** s * gamma(0.5 * N + s) * s * (1.0 - s)
            / (gamma(2.0 - s) * math.pi ** (0.5 * N)))


def log_constants(N: int) -> tuple[float, float]:
    """Kernel and zero-order constants ``(c_N, rho_N)`` of the log operator.

    ``c_N = Gamma(N/2) / pi^(N/2)`` and ``rho_N = 2 ln 2 + psi(N/2) -
    gamma_E``.  These are the s-derivatives at ``s = 0`` of ``c(N, s)``'s
    numerator structure; concretely ``rho_2 = 2 ln 2 - 2 gamma_E``.
    """
    _check_dim(N)
    c_N = gamma(0.5 * N) / math.pi ** (0.5 * N)
    rho_N = 2.0 * math.log(2.0) + digamma(0.5 * N) - _EULER_GAMMA
    return c_N, rho_N


def riesz_constant(N: int, s) -> float:
    """Coefficient ``kappa(N, s)`` of the fundamental solution, ``0 < s < N/2``.

    ``kappa(N, s) = Gamma(N/2 - s) / (4^s pi^(N/2) Gamma(s))`` multiplies
    ``|z|^(2s - N)``.  The upper restriction ``s < N/2`` is genuine: at
    ``s = N/2`` the fundamental solution changes to logarithmic type, which
    this package does not provide.
    """
    _check_dim(N)
    s = float(s)
    if not 0.0 < s < 0.5 * N:
        raise DomainError(
            f"riesz_constant requires 0 < s < N/2 = {0.5 * N}, got s={s}")
    return gamma(0.5 * N - s) / (4.0 ** s * math.pi ** (0.5 * N) * gamma(s))


def ball_poisson_constant(N: int, s) -> float:
    """Coefficient ``tau(N, s)`` of the exterior Poisson kernel of a ball.

    ``tau(N, s) = Gamma(N/2) sin(pi s) / pi^(N/2 + 1)``; equivalently
    ``Gamma(N/2) / (pi^(N/2) Gamma(s) Gamma(1 - s))``.  Defined for
    ``0 < s < 1`` and vanishing at both ends.
    """
    _check_dim(N)
    s = float(s)
    if not 0.0 < s < 1.0:
        raise DomainError(f"ball_poisson_constant requires 0 < s < 1, got s={s}")
    return gamma(0.5 * N) * math.sin(math.pi * s) / math.pi ** (0.5 * N + 1.0)


def ball_torsion_constant(N: int, s) -> tuple[float, float]:
    """Center coefficient ``d(N, s)`` of the ball torsion function and ``d/ds``.

    ``d(N, s) = Gamma(N/2) / (4^s Gamma(N/2 + s) Gamma(1 + s))`` is the
    value at the center of the unit-ball solution with unit right-hand
    side; the solution itself is ``d(N, s) (1 - |x|^2)^s``.  Both the value
    and the exact derivative

    ``d'(N, s) = d(N, s) (-ln 4 - psi(N/2 + s) - psi(1 + s))``

    extend real-analytically to ``0 < s < 2``, and the wider range is
    deliberately admitted: two-sided difference quotients across ``s = 1``
    need evaluations slightly above 1.
    """
    _check_dim(N)
    s = float(s)
    if not 0.0 < s < 2.0:
        raise DomainError(
            f"ball_torsion_constant requires 0 < s < 2, got s={s}")
    value = gamma(0.5 * N) / (4.0 ** s * gamma(0.5 * N + s) * gamma(1.0 + s))
    slope = value * (-math.log(4.0) - digamma(0.5 * N + s) - digamma(1.0 + s))
    return value, slope


def _check_dim(N: int) -> None:
    if N not in (2, 3):
        raise DomainError(f"dimension must be 2 or 3, got {N!r}")
