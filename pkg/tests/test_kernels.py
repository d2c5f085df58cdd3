"""Kernel tests: Green function of the ball, Poisson kernels, and the
complementary Poisson kernel, against frozen high-precision oracles and
closed-form identities."""

import math

import numpy as np
import pytest
from scipy.special import beta as sp_beta, betainc as sp_betainc

from fraclab.core import (DivergenceError, DomainError, SingularityError)
from fraclab.geometry import Ball, Ellipsoid
from fraclab.quadrature import QuadConfig, unit_power_rule, map_rule
from fraclab.specfun import ball_torsion_constant, log_constants, riesz_constant
from fraclab import kernels
from fraclab.kernels import (comp_poisson_apply, comp_poisson_kernel,
                             fundamental_solution, green_apply, green_ball,
                             poisson_ball, poisson_ball_classical,
                             poisson_extend)

CFG = QuadConfig()


def radial_field(fn):
    fn.radial = True
    fn.cache_token = getattr(fn, "__name__", "anon")
    return fn


# ---------------------------------------------------------------------------
# Fundamental solution.
# ---------------------------------------------------------------------------

def test_fundamental_solution_values():
    z = np.array([0.3, -0.4])
    got = fundamental_solution(2, 0.4, z)
    assert got == pytest.approx(riesz_constant(2, 0.4) * 0.5 ** (-1.2),
                                rel=1e-14)
    batch = fundamental_solution(3, 0.5, np.array([[1.0, 0, 0], [0, 2.0, 0]]))
    assert batch[1] == pytest.approx(batch[0] / 4.0, rel=1e-14)


def test_fundamental_solution_origin_raises():
    with pytest.raises(SingularityError):
        fundamental_solution(2, 0.5, np.zeros(2))


# ---------------------------------------------------------------------------
# The incomplete integral behind the Green function.
# Frozen values: 25-digit direct quadrature of int_0^r0 t^(s-1)(1+t)^(-N/2).
# ---------------------------------------------------------------------------

FACTOR_TABLE = [
    (2, 0.5, 0.3, 1.0021860265307144),
    (3, 0.25, 0.9, 3.230065891518468),
    (2, 0.1, 1e-06, 2.5118862031563878),
]

TAIL_TABLE = [  # J(r0) = B(inf) - B(r0), frozen via B(r0)
    (2, 0.75, 4.0, 1.7390937441091078),
    (3, 0.6, 12.0, 1.6835649935771523),
    (2, 0.99, 1e8, 16.840074132899456),
    (3, 0.9, 1e6, 1.7952767148805012),
    (3, 0.5, 2e5, 1.9999950000187499),
]


def _beta_total(N, s):
    return sp_beta(s, 0.5 * N - s)


@pytest.mark.parametrize("N,s,r0,expected", FACTOR_TABLE)
def test_green_factor_small_oracle(N, s, r0, expected):
    got = kernels._green_factor_small(N, s, np.array([r0]))[0]
    assert got == pytest.approx(expected, rel=1e-13)


@pytest.mark.parametrize("N,s,r0,b_r0", TAIL_TABLE)
def test_green_tail_oracle(N, s, r0, b_r0):
    expected = _beta_total(N, s) - b_r0
    got = kernels._green_tail(N, s, np.array([r0]))[0]
    assert got == pytest.approx(expected, rel=1e-12)


def test_green_factor_matches_incomplete_beta():
    # B(r0) = Beta(s, N/2-s) * I(s, N/2-s; r0/(1+r0)) via t = u/(1-u).
    for N, s, r0 in [(2, 0.35, 0.8), (3, 0.7, 0.5)]:
        expected = _beta_total(N, s) * sp_betainc(s, 0.5 * N - s,
                                                  r0 / (1.0 + r0))
        got = kernels._green_factor_small(N, s, np.array([r0]))[0]
        assert got == pytest.approx(expected, rel=1e-12)


# ---------------------------------------------------------------------------
# Green function point values.
# ---------------------------------------------------------------------------

GREEN_TABLE = [
    (2, 0.5, [0.1, 0.2], [-0.3, 0.4], 0.24549788674082103),
    (2, 0.8, [0.0, 0.0], [0.5, 0.0], 0.15547271282940487),
    (3, 0.5, [0.2, 0.0, 0.0], [0.1, 0.3, -0.2], 0.33460192630292743),
    (3, 0.3, [0.0, 0.0, 0.0], [0.25, 0.25, 0.25], 0.26050302007404001),
    (2, 0.95, [0.9, 0.0], [0.88, 0.05], 0.28427313872621329),
]


@pytest.mark.parametrize("N,s,x,y,expected", GREEN_TABLE)
def test_green_ball_frozen(N, s, x, y, expected):
    ball = Ball(center=(0.0,) * N, radius=1.0)
    assert green_ball(ball, s, x, y) == pytest.approx(expected, rel=2e-13)


def test_green_ball_translation_invariance():
    base = Ball(center=(0.0, 0.0), radius=1.0)
    moved = Ball(center=(2.0, -1.0), radius=1.0)
    a = green_ball(base, 0.6, [0.1, 0.2], [-0.3, 0.4])
    b = green_ball(moved, 0.6, [2.1, -0.8], [1.7, -0.6])
    assert b == pytest.approx(a, rel=1e-14)


def test_green_ball_classical_disc():
    # (1/2pi) ln( |R^2 - z conj(w)| / (R |z - w|) ) on the disc of radius R.
    R = 2.0
    ball = Ball(center=(0.0, 0.0), radius=R)
    rng = np.random.default_rng(7)
    for _ in range(5):
        z = complex(*(rng.uniform(-1, 1, 2)))
        w = complex(*(rng.uniform(-1, 1, 2)))
        expected = math.log(abs(R * R - z * w.conjugate())
                            / (R * abs(z - w))) / (2.0 * math.pi)
        got = green_ball(ball, 1.0, [z.real, z.imag], [w.real, w.imag])
        assert got == pytest.approx(expected, rel=1e-12)


def test_green_ball_classical_3d_image_formula():
    R = 1.5
    ball = Ball(center=(0.0, 0.0, 0.0), radius=R)
    x = np.array([0.3, -0.2, 0.5])
    y = np.array([-0.4, 0.1, 0.6])
    ystar = R * R * y / (y @ y)
    expected = (1.0 / np.linalg.norm(x - y)
                - R / (np.linalg.norm(y) * np.linalg.norm(x - ystar))) \
        / (4.0 * math.pi)
    assert green_ball(ball, 1.0, x, y) == pytest.approx(expected, rel=1e-12)


def test_green_ball_symmetry():
    ball = Ball(center=(0.0, 0.0), radius=1.0)
    for s in (0.3, 0.7, 1.0):
        a = green_ball(ball, s, [0.5, 0.1], [-0.2, 0.6])
        b = green_ball(ball, s, [-0.2, 0.6], [0.5, 0.1])
        assert a == pytest.approx(b, rel=1e-12)


def test_green_ball_edges():
    ball = Ball(center=(0.0, 0.0), radius=1.0)
    assert green_ball(ball, 0.5, [0.2, 0.0], [3.0, 0.0]) == 0.0
    assert green_ball(ball, 0.5, [0.2, 0.0], [0.0, 1.0]) == 0.0
    batch = green_ball(ball, 0.5, [0.2, 0.0],
                       np.array([[0.5, 0.5], [5.0, 0.0]]))
    assert batch[1] == 0.0 and batch[0] > 0.0
    with pytest.raises(SingularityError):
        green_ball(ball, 0.5, [0.2, 0.0], [0.2, 0.0])
    with pytest.raises(DomainError):
        green_ball(ball, 0.5, [1.2, 0.0], [0.2, 0.0])
    with pytest.raises(kernels.CapabilityError):
        green_ball(Ellipsoid(a=(1.0, 0.0, 0.0, 2.0)), 0.5,
                   [0.1, 0.0], [0.2, 0.0])


# ---------------------------------------------------------------------------
# Acceptance gate at the kernel level: the torsion identity
# int_B G_s(x, y) dy = d(N, s) (R^2 - |x|^2)^s.
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("N", [2, 3])
@pytest.mark.parametrize("s", [0.25, 0.5, 0.75, 0.95])
def test_green_center_mass_matches_torsion_constant(N, s):
    ball = Ball(center=(0.0,) * N, radius=1.0)
    surf = 2.0 * math.pi if N == 2 else 4.0 * math.pi
    xu, wu = unit_power_rule(2.0 * s - 1.0, s, 24, 26)
    e1 = np.zeros(N)
    e1[0] = 1.0
    ys = xu[:, None] * e1[None, :]
    vals = green_ball(ball, s, np.zeros(N), ys)
    got = surf * float(wu @ (vals * xu ** (N - 1)))
    expected, _ = ball_torsion_constant(N, s)
    assert got == pytest.approx(expected, rel=1e-11)


@pytest.mark.parametrize("N,s,x", [
    (2, 0.25, (0.0, 0.0)),
    (2, 0.75, (0.3, 0.4)),
    (3, 0.5, (0.0, 0.0, 0.0)),
    (3, 0.8, (0.1, -0.2, 0.55)),
])
def test_green_apply_torsion_profile(N, s, x):
    ball = Ball(center=(0.0,) * N, radius=1.0)
    res = green_apply(ball, lambda y: np.ones(len(np.atleast_2d(y))), s, x,
                      CFG)
    d, _ = ball_torsion_constant(N, s)
    r2 = float(np.asarray(x) @ np.asarray(x))
    assert res.value == pytest.approx(d * (1.0 - r2) ** s, rel=1e-9)


def test_green_apply_scaled_shifted_ball():
    # u(x) = d(N,s) (R^2 - |x-c|^2)^s for f = 1 on B_R(c).
    ball = Ball(center=(1.0, -2.0), radius=2.0)
    s = 0.6
    x = np.array([1.5, -1.0])
    res = green_apply(ball, lambda y: np.ones(len(np.atleast_2d(y))), s, x,
                      CFG)
    d, _ = ball_torsion_constant(2, s)
    r2 = float((x - ball.center_array) @ (x - ball.center_array))
    assert res.value == pytest.approx(d * (4.0 - r2) ** s, rel=1e-9)


@pytest.mark.parametrize("N", [2, 3])
def test_green_apply_classical_torsion(N):
    # s = 1: u(x) = (R^2 - |x|^2) / (2N).
    ball = Ball(center=(0.0,) * N, radius=1.0)
    x = np.zeros(N)
    x[0] = 0.4
    res = green_apply(ball, lambda y: np.ones(len(np.atleast_2d(y))), 1.0, x,
                      CFG)
    assert res.value == pytest.approx((1.0 - 0.16) / (2.0 * N), rel=1e-9)


def test_green_apply_near_boundary():
    ball = Ball(center=(0.0, 0.0), radius=1.0)
    s = 0.75
    x = np.array([1.0 - 1e-3, 0.0])
    res = green_apply(ball, lambda y: np.ones(len(np.atleast_2d(y))), s, x,
                      CFG)
    d, _ = ball_torsion_constant(2, s)
    expected = d * (1.0 - float(x @ x)) ** s
    assert res.value == pytest.approx(expected, rel=1e-5)


# ---------------------------------------------------------------------------
# Poisson kernel and extension.
# ---------------------------------------------------------------------------

def test_poisson_ball_errors():
    ball = Ball(center=(0.0, 0.0), radius=1.0)
    with pytest.raises(SingularityError):
        poisson_ball(ball, 0.5, [0.2, 0.0], [1.0, 0.0])
    with pytest.raises(DomainError):
        poisson_ball(ball, 0.5, [0.2, 0.0], [0.5, 0.0])
    with pytest.raises(DomainError):
        poisson_ball(ball, 0.5, [1.2, 0.0], [2.0, 0.0])


@pytest.mark.parametrize("N,s,x", [
    (2, 0.25, (0.0, 0.0)),
    (2, 0.6, (0.5, 0.1)),
    (2, 0.9, (-0.3, 0.2)),
    (3, 0.5, (0.2, 0.1, -0.4)),
])
def test_poisson_extension_of_one_is_one(N, s, x):
    ball = Ball(center=(0.0,) * N, radius=1.0)
    res = poisson_extend(ball, lambda y: np.ones(len(np.atleast_2d(y))), s,
                         x, CFG)
    assert res.value == pytest.approx(1.0, rel=1e-8)


def test_poisson_extension_reproduces_linear_s_harmonic():
    # y -> y_1 is s-harmonic and below the growth bound once 2s > 1.
    ball = Ball(center=(0.0, 0.0), radius=1.0)
    x = np.array([0.35, -0.2])
    res = poisson_extend(ball, lambda y: np.atleast_2d(y)[:, 0], 0.75, x, CFG)
    assert res.value == pytest.approx(x[0], abs=1e-7)


def test_poisson_extension_growth_guard():
    ball = Ball(center=(0.0, 0.0), radius=1.0)
    with pytest.raises(DivergenceError):
        poisson_extend(ball,
                       lambda y: np.einsum("ij,ij->i", np.atleast_2d(y),
                                           np.atleast_2d(y)),
                       0.5, np.zeros(2), CFG)


def test_poisson_classical_extension():
    ball = Ball(center=(0.0, 0.0), radius=1.0)
    x = np.array([0.3, 0.4])
    one = poisson_extend(ball, lambda y: np.ones(len(np.atleast_2d(y))), 1.0,
                         x, CFG)
    lin = poisson_extend(ball, lambda y: np.atleast_2d(y)[:, 0], 1.0, x, CFG)
    assert one.value == pytest.approx(1.0, rel=1e-12)
    assert lin.value == pytest.approx(x[0], rel=1e-10)


@pytest.mark.parametrize("N", [2, 3])
def test_poisson_classical_kernel_mass(N):
    from fraclab.geometry import boundary_quadrature
    ball = Ball(center=(0.0,) * N, radius=1.5)
    rule = boundary_quadrature(ball, 40)
    z = np.zeros(N)
    z[0] = 0.7
    pk = poisson_ball_classical(ball, z, rule.nodes)
    assert float(rule.weights @ pk) == pytest.approx(1.0, rel=1e-10)


# ---------------------------------------------------------------------------
# Complementary Poisson kernel.
# ---------------------------------------------------------------------------

def test_comp_kernel_disc_classical_center():
    c2, _ = log_constants(2)
    for R in (1.0, 2.0):
        ball = Ball(center=(0.0, 0.0), radius=R)
        for z in ([0.3, 0.1], [-0.5 * R, 0.4 * R]):
            got = comp_poisson_kernel(ball, 1.0, [0.0, 0.0], z)
            assert got == pytest.approx(c2 / R ** 2, rel=1e-12)


def test_comp_kernel_disc_vs_direct_exterior_quadrature():
    from fraclab.quadrature import integrate_exterior
    ball = Ball(center=(0.0, 0.0), radius=1.0)
    s = 0.6
    x = np.array([0.2, 0.1])
    z = np.array([-0.3, 0.25])
    c2, _ = log_constants(2)

    def integrand(y):
        y = np.atleast_2d(y)
        d = np.linalg.norm(y - x[None, :], axis=1)
        return c2 * d ** -2.0 * poisson_ball(ball, s, z, y)

    direct = integrate_exterior(ball, integrand, CFG, boundary_power=-s)
    fast = comp_poisson_kernel(ball, s, x, z)
    assert fast == pytest.approx(direct.value, rel=1e-6)


PC3_TABLE = [  # one argument at the origin; 25-digit radial quadrature
    (0.5, 0.3, 0.072818743121003224),
    (0.5, 0.4, 0.077576706306605805),
    (0.75, 0.6, 0.16477219982302364),
]


@pytest.mark.parametrize("s,r,expected", PC3_TABLE)
def test_comp_kernel_ball3_frozen(s, r, expected):
    # The frozen values hold the radial integral without the interior
    # weight; P^c(x, 0) carries (R^2 - 0)^s = 1 while P^c(0, z) carries
    # (1 - r^2)^s, so the kernel is *not* symmetric under swapping the
    # pole and the field point.
    ball = Ball(center=(0.0, 0.0, 0.0), radius=1.0)
    got_x = comp_poisson_kernel(ball, s, [0.0, r, 0.0], [0.0, 0.0, 0.0])
    got_z = comp_poisson_kernel(ball, s, [0.0, 0.0, 0.0], [r, 0.0, 0.0])
    assert got_x == pytest.approx(expected, rel=1e-6)
    assert got_z == pytest.approx((1.0 - r * r) ** s * expected, rel=1e-6)


@pytest.mark.parametrize("N,r", [(2, 0.0), (2, 0.5), (2, 0.9),
                                 (3, 0.0), (3, 0.5)])
def test_comp_apply_classical_torsion_datum(N, r):
    # s = 1, f = 1:  (2/N) / (R^2 - r^2) * R^... reduces to (2/N)/(1-r^2)
    # on the unit ball.
    ball = Ball(center=(0.0,) * N, radius=1.0)
    x = np.zeros(N)
    x[0] = r
    f = radial_field(lambda y: np.ones(len(np.atleast_2d(y))))
    res = comp_poisson_apply(ball, f, 1.0, x, CFG)
    assert res.value == pytest.approx((2.0 / N) / (1.0 - r * r), rel=1e-12)


PI_TABLE = [  # 25-digit Fubini quadrature of the comp kernel datum, f = 1
    (2, 0.75, 0.5, 1.0699040677094331),
    (2, 0.5, 0.0, 0.61370563888010938),   # = 2 - 2 ln 2
    (3, 0.5, 0.0, 0.38629436111989062),   # = 2 ln 2 - 1
    (3, 0.5, 0.6, 0.56463161169538855),
]


@pytest.mark.parametrize("N,s,r,expected", PI_TABLE)
def test_comp_apply_radial_frozen(N, s, r, expected):
    ball = Ball(center=(0.0,) * N, radius=1.0)
    x = np.zeros(N)
    x[0] = r
    f = radial_field(lambda y: np.ones(len(np.atleast_2d(y))))
    res = comp_poisson_apply(ball, f, s, x, CFG)
    assert res.value == pytest.approx(expected, rel=1e-8)


def test_comp_apply_generic_matches_radial_fast_path():
    ball = Ball(center=(0.0, 0.0), radius=1.0)
    x = np.array([0.2, 0.0])
    s = 0.5
    fast = comp_poisson_apply(
        ball, radial_field(lambda y: np.ones(len(np.atleast_2d(y)))), s, x,
        CFG)
    generic = comp_poisson_apply(
        ball, lambda y: np.ones(len(np.atleast_2d(y))), s, x, CFG)
    assert generic.value == pytest.approx(fast.value, rel=1e-5)


def test_comp_apply_radial_nonconstant_profile():
    # f(z) = 1 - |z|^2: check the cached inner integrals against a direct
    # z-outermost evaluation through the pointwise kernel.
    ball = Ball(center=(0.0, 0.0), radius=1.0)
    s = 0.4
    x = np.array([0.45, 0.0])

    def prof(y):
        y = np.atleast_2d(y)
        return 1.0 - np.einsum("ij,ij->i", y, y)

    fast = comp_poisson_apply(ball, radial_field(prof), s, x, CFG)
    generic = comp_poisson_apply(ball, prof, s, x, CFG)
    assert generic.value == pytest.approx(fast.value, rel=1e-5)
