"""Portraits of the ball kernels: Green, Poisson, and complementary
Poisson, with their defining mass identities.

On the unit disc this script prints

1. the Green function ``G_s(x, y)`` along a ray for two orders,
2. the exterior Poisson kernel's unit mass ``int_{B^c} P_s(x, y) dy = 1``
   (boundary integral of the classical kernel at ``s = 1``), and
3. the L2 distance (over the source slot) between the complementary
   kernel ``P_s^c(x, .)`` and its endpoint limit ``P_1^c(x, .)`` as the
   order climbs toward 1.

Run with ``python3 demos/kernel_portraits.py`` (a few seconds).
"""

import numpy as np

from fraclab import kernels, quadrature as quad
from fraclab.geometry import Ball
from fraclab.quadrature import QuadConfig

DISC = Ball(center=(0.0, 0.0), radius=1.0)
CFG = QuadConfig()


def ones(y):
    return np.ones(len(np.atleast_2d(y)))


def main():
    x = np.array([0.3, 0.0])
    print("Green function G_s(x, y) on the unit disc, x = (0.3, 0):")
    print(f"{'y1':>6} {'s=0.5':>12} {'s=1.0':>12}")
    for y1 in (-0.6, -0.2, 0.0, 0.2, 0.6):
        y = np.array([y1, 0.1])
        g_half = kernels.green_ball(DISC, 0.5, x, y)
        g_one = kernels.green_ball(DISC, 1.0, x, y)
        print(f"{y1:>6.2f} {g_half:>12.8f} {g_one:>12.8f}")

    print()
    print("Unit mass of the Poisson kernels at x = (0.5, 0.2):")
    x = np.array([0.5, 0.2])
    for s in (0.3, 0.7, 1.0):
        mass = kernels.poisson_extend(DISC, ones, s, x, CFG).value
        print(f"  s = {s}: mass = {mass:.10f}")

    print()
    print("L2 distance of the complementary kernel to its endpoint limit:")
    rn, rw = quad.unit_power_rule(0.0, -0.5, 18, 12)
    thetas = np.linspace(0.0, 2.0 * np.pi, 12, endpoint=False)
    zs = np.concatenate([rn[:, None] * np.array([[np.cos(t), np.sin(t)]])
                         for t in thetas])
    w = np.tile(rw * rn, len(thetas)) * (2.0 * np.pi / len(thetas))
    x = np.array([0.4, 0.2])

    def on_grid(s):
        return np.array([kernels.comp_poisson_kernel(DISC, s, x, z, CFG)
                         for z in zs])

    p1 = on_grid(1.0)
    ref = float(np.sqrt(w @ p1 ** 2))
    print(f"  ||P_1^c(x, .)||_L2 = {ref:.6f}   (x = (0.4, 0.2))")
    for s in (0.8, 0.9, 0.95, 0.99):
        dist = float(np.sqrt(w @ (on_grid(s) - p1) ** 2))
        print(f"  s = {s}: ||P_s^c - P_1^c||_L2 = {dist:.6f} "
              f"({dist / ref:.1%} of the limit norm)")


if __name__ == "__main__":
    main()
