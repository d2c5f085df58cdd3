"""Shared primitives: the fractional order type and the exception taxonomy.

Every public entry point of the package funnels its order argument through
:func:`as_order`, so range checking and the one-sided-limit convention live
in exactly one place.
"""

from __future__ import annotations

from dataclasses import dataclass

__all__ = [
    "Order",
    "as_order",
    "FracLabError",
    "DomainError",
    "CapabilityError",
    "SingularityError",
    "DivergenceError",
    "EvaluationError",
]


class FracLabError(Exception):
    """Base class for every error raised deliberately by this package."""


class DomainError(FracLabError, ValueError):
    """An argument lies outside the mathematical domain of the operation.

    Examples: an order outside its admissible interval, an evaluation point
    on the wrong side of the boundary, a point where a contract forbids
    evaluation.
    """


class CapabilityError(FracLabError, NotImplementedError):
    """The request is meaningful but outside what this code implements."""


class SingularityError(FracLabError, ValueError):
    """Evaluation requested exactly at a non-removable singularity."""


class DivergenceError(FracLabError, ArithmeticError):
    """A quadrature detected that the integral does not converge."""


class EvaluationError(FracLabError, ArithmeticError):
    """An integrand returned a non-finite value away from known singularities."""

    def __init__(self, message: str, point=None):
        super().__init__(message)
        self.point = point


@dataclass(frozen=True)
class Order:
    """Fractional exponent with an optional one-sided-limit tag.

    Parameters
    ----------
    s : float
        The exponent.  Operations validate their own admissible range
        (most require ``0 < s <= 1``; the torsion closed forms allow
        ``0 < s < 2``).
    limit : str or None
        ``None`` for a plain value, ``"below"`` / ``"above"`` when the
        value marks a one-sided limit (used by finite differences at the
        local endpoint ``s = 1``, where only the limit from below is part
        of the differentiability statement).
    """

    s: float
    limit: str | None = None

    def __post_init__(self):
        if not (self.s > 0.0):
            raise DomainError(f"order must be positive, got {self.s}")
        if self.limit not in (None, "below", "above"):
            raise DomainError(f"unknown limit tag {self.limit!r}")

    def __float__(self) -> float:
        return float(self.s)


def as_order(s, *, low: float = 0.0, high: float = 1.0,
             include_high: bool = True) -> Order:
    """Coerce ``s`` (number or :class:`Order`) and check its range.

    The default range is the fractional regime ``(0, 1]`` used by the
    operators; callers with a wider or narrower admissible interval pass
    their own bounds.
    """
    order = s if isinstance(s, Order) else Order(float(s))
    v = order.s
    ok = (v > low) and (v < high or (include_high and v == high))
    if not ok:
        bracket = "]" if include_high else ")"
        raise DomainError(
            f"order s={v} outside admissible range ({low}, {high}{bracket}")
    return order
