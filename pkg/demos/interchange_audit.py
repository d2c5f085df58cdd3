"""Audit the interchange of the fractional and logarithmic Laplacians.

Applying the logarithmic Laplacian to the solution ``u_s`` and then the
fractional Laplacian gives the same result as applying the operators in
the opposite order — provided the boundary term (the complementary
Poisson contribution at ``s = 1``, the exterior tail for ``s < 1``) is
kept.  This script evaluates both sides at interior points for the two
branches and then deliberately drops the boundary term to show the
identity break.

Run with ``python3 demos/interchange_audit.py`` (about a minute).
"""

import numpy as np

from fraclab import operators
from fraclab.geometry import Ball
from fraclab.operators import ScalarField
from fraclab.quadrature import QuadConfig

DISC = Ball(center=(0.0, 0.0), radius=1.0)
CFG = QuadConfig()

ONES = ScalarField(fn=lambda p: np.ones(len(np.atleast_2d(p))), dim=2,
                   radial=True, smooth_scale=1.0,
                   cache_token=("demo-ones", 2))


def main():
    pts = [np.array([r, 0.0]) for r in (0.0, 0.4, 0.8)]
    for s in (1.0, 0.5):
        print(f"Interchange residual at s = {s}:")
        print(f"{'r':>6} {'lhs':>14} {'rhs':>14} {'relative':>10}")
        for x in pts:
            rep = operators.interchange_residual(DISC, ONES, s, x, CFG)
            print(f"{x[0]:>6.2f} {rep.lhs:>14.8f} {rep.rhs:>14.8f} "
                  f"{rep.relative:>10.2e}")
        print()

    print("Same identity with the boundary term dropped (s = 1, r = 0.4):")
    rep = operators.interchange_residual(DISC, ONES, 1.0, pts[1], CFG,
                                         drop_boundary_term=True)
    print(f"  lhs = {rep.lhs:.8f}, rhs = {rep.rhs:.8f}, "
          f"relative residual = {rep.relative:.2f}")
    print(f"  dropped boundary contribution = {rep.boundary_term:.8f}")


if __name__ == "__main__":
    main()
