"""fraclab: a numerical laboratory for the fractional Poisson problem.

The package implements the operator zoo around the exterior-value problem
``(-Delta)^s u = f`` on bounded smooth domains -- fractional and
logarithmic Laplacians, ball Green and Poisson kernels, the complementary
Poisson kernel, the source term and solution of the order-derivative
problem at the local endpoint ``s = 1`` -- together with closed-form
torsion oracles on balls and ellipsoids and quantitative operator-norm
bounds.  Everything is validated against exact formulas in the test suite.
"""

from .core import (
    CapabilityError,
    DivergenceError,
    DomainError,
    EvaluationError,
    FracLabError,
    Order,
    SingularityError,
    as_order,
)

__version__ = "0.1.0"

__all__ = [
    "Order",
    "as_order",
    "FracLabError",
    "DomainError",
    "CapabilityError",
    "SingularityError",
    "DivergenceError",
    "EvaluationError",
    "__version__",
]
