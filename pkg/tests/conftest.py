"""Shared fixtures and independent oracles for the test suite."""

import math

import numpy as np
import pytest

from aragospot.constants import CONST
from aragospot.eikonal import Beam
from aragospot.materials import indium, silica

# the paper-anchored half-space constant used for regression inputs
C3_REF = 9.77e-50


@pytest.fixture(scope="session")
def sio2():
    return silica()


@pytest.fixture(scope="session")
def atom():
    return indium()


@pytest.fixture(scope="session")
def thermal_beam():
    """Indium beam from the 1200 C source (1473.15 K)."""
    mass = 114.8 * CONST.amu
    speed = math.sqrt(8.0 * CONST.k_B * 1473.15 / (math.pi * mass))
    return Beam(mass=mass, speed=speed)


@pytest.fixture(scope="session")
def reduced_scene():
    """Large-sphere low-Fresnel-number scene for brute-force comparisons."""
    from aragospot.eikonal import PhaseProfile
    from aragospot.fresnel import Scene

    beam = Beam(mass=1.675e-27, speed=CONST.h / (1.675e-27 * 1e-9))  # 1 nm
    radius = 2e-6
    c52_val = 4.0 * math.pi * (0.2e-6) ** 2.5
    a = np.geomspace(1e-8, 4e-6, 400)
    prof = PhaseProfile(
        c3=0.0,
        c52=c52_val,
        radius=radius,
        a=a,
        phase=c52_val / a**2.5,
        r_i_cp=radius + 0.2e-6,
        r_o_cp=radius + (c52_val / (math.pi / 1000.0)) ** 0.4,
    )
    return Scene(
        radius=radius, g=2e-3, b=2e-3, beam=beam, phase=prof, n_theta=997, cp_step=2e-9
    )


# ---------------------------------------------------------------------------
# arbitrary-precision oracles (mpmath)
# ---------------------------------------------------------------------------


def mp_first_kind(l: int, x: float) -> float:
    """i^(-l) j_l(ix) = sqrt(pi/2x) I_{l+1/2}(x) via mpmath."""
    from mpmath import besseli, mp, mpf, pi, sqrt

    mp.dps = 50
    xm = mpf(repr(x))
    return float(sqrt(pi / (2 * xm)) * besseli(l + mpf("0.5"), xm))


def mp_first_kind_ratio(l: int, x: float, value: float) -> float:
    from mpmath import besseli, mp, mpf, pi, sqrt

    mp.dps = 60
    xm = mpf(repr(x))
    ref = sqrt(pi / (2 * xm)) * besseli(l + mpf("0.5"), xm)
    return float(mpf(repr(value)) / ref - 1)


def mp_third_kind_ratio(l: int, x: float, mantissa: float, exponent: int) -> float:
    """Relative error of mantissa*2^exponent against i^l h_l^(1)(ix).

    Uses the exact terminating sum
    i^l h_l^(1)(ix) = -e^(-x)/x sum_j (l+j)! / (j! (l-j)! (2x)^j),
    which stays valid where mpmath's uniform besselk expansion gives up.
    """
    from mpmath import exp, factorial, mp, mpf

    mp.dps = 80
    xm = mpf(repr(x))
    acc = mpf(0)
    for j in range(l + 1):
        acc += factorial(l + j) / (
            factorial(j) * factorial(l - j) * (2 * xm) ** j
        )
    ref = -exp(-xm) / xm * acc
    mine = mpf(repr(mantissa)) * mpf(2) ** exponent
    return float(mine / ref - 1)


def mp_first_kind_scaled_ratio(l: int, x: float, mantissa: float, exponent: int) -> float:
    from mpmath import besseli, mp, mpf, pi, sqrt

    mp.dps = 60
    xm = mpf(repr(x))
    ref = sqrt(pi / (2 * xm)) * besseli(l + mpf("0.5"), xm)
    mine = mpf(repr(mantissa)) * mpf(2) ** exponent
    return float(mine / ref - 1)


def mp_legendre(l: int, m: int, theta: float) -> float:
    """Condon-Shortley P_l^m(cos theta) by high-precision recurrence."""
    from mpmath import cos, mp, mpf, sin, sqrt

    mp.dps = 50
    th = mpf(repr(theta))
    ct, st = cos(th), sin(th)
    pmm = mpf(1)
    for k in range(1, m + 1):
        pmm *= -(2 * k - 1) * st
    if l == m:
        return float(pmm)
    pm1 = (2 * m + 1) * ct * pmm
    if l == m + 1:
        return float(pm1)
    for ll in range(m + 2, l + 1):
        pm2 = ((2 * ll - 1) * ct * pm1 - (ll + m - 1) * pmm) / (ll - m)
        pmm, pm1 = pm1, pm2
    return float(pm1)


def mie_reference(l: int, xi: float, radius: float, eps: float):
    """Literal Mie reflection coefficients at z = i x by complex mpmath."""
    from mpmath import besselj, bessely, diff, mp, mpc, mpf, pi, sqrt

    mp.dps = 40

    def sph_j(n, z):
        return sqrt(pi / (2 * z)) * besselj(n + mpf("0.5"), z)

    def sph_h1(n, z):
        return sqrt(pi / (2 * z)) * (
            besselj(n + mpf("0.5"), z) + 1j * bessely(n + mpf("0.5"), z)
        )

    def ric(f, n, z):
        return diff(lambda t: t * f(n, t), z)

    c = CONST.c
    z1 = mpc(0, xi * radius / c)
    z2 = mpc(0, xi * radius * math.sqrt(eps) / c)
    num_te = sph_j(l, z1) * ric(sph_j, l, z2) - ric(sph_j, l, z1) * sph_j(l, z2)
    den_te = sph_h1(l, z1) * ric(sph_j, l, z2) - ric(sph_h1, l, z1) * sph_j(l, z2)
    num_tm = eps * sph_j(l, z2) * ric(sph_j, l, z1) - sph_j(l, z1) * ric(sph_j, l, z2)
    den_tm = eps * ric(sph_h1, l, z1) * sph_j(l, z2) - sph_h1(l, z1) * ric(sph_j, l, z2)
    r_te = complex(-num_te / den_te)
    r_tm = complex(-num_tm / den_tm)
    return r_te, r_tm


def lorentz_eps_imag_axis(wp: float, wt: float, gamma: float, xi):
    """Closed-form single-oscillator eps(i xi)."""
    xi = np.asarray(xi, dtype=float)
    return 1.0 + wp**2 / (wt**2 + gamma * xi + xi**2)


def series_summand_reference(l: int, xi: float, r: float, radius: float, eps: float):
    """One angular-momentum summand of the sphere potential series,
    (2l+1){ r_TE h_l(kr)^2 + r_TM [ l(l+1) h_l^2/(kr)^2 + ([kr h_l]')^2/(kr)^2 ] },
    by literal complex mpmath arithmetic at k r = i x."""
    from mpmath import besselj, bessely, diff, mp, mpc, mpf, pi, sqrt

    mp.dps = 40

    def sph_j(n, z):
        return sqrt(pi / (2 * z)) * besselj(n + mpf("0.5"), z)

    def sph_h1(n, z):
        return sqrt(pi / (2 * z)) * (
            besselj(n + mpf("0.5"), z) + 1j * bessely(n + mpf("0.5"), z)
        )

    def ric(f, n, z):
        return diff(lambda t: t * f(n, t), z)

    c = CONST.c
    z1 = mpc(0, xi * radius / c)
    z2 = mpc(0, xi * radius * math.sqrt(eps) / c)
    zr = mpc(0, xi * r / c)
    num_te = sph_j(l, z1) * ric(sph_j, l, z2) - ric(sph_j, l, z1) * sph_j(l, z2)
    den_te = sph_h1(l, z1) * ric(sph_j, l, z2) - ric(sph_h1, l, z1) * sph_j(l, z2)
    num_tm = eps * sph_j(l, z2) * ric(sph_j, l, z1) - sph_j(l, z1) * ric(sph_j, l, z2)
    den_tm = eps * ric(sph_h1, l, z1) * sph_j(l, z2) - sph_h1(l, z1) * ric(sph_j, l, z2)
    h = sph_h1(l, zr)
    hr = ric(sph_h1, l, zr)
    bracket = (-num_te / den_te) * h**2 + (-num_tm / den_tm) * (
        l * (l + 1) * h**2 / zr**2 + hr**2 / zr**2
    )
    return complex((2 * l + 1) * bracket)
