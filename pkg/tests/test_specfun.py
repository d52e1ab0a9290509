"""Scaled Bessel rows and associated Legendre rows."""

import math

import numpy as np
import pytest

from aragospot.errors import ConfigurationError, DomainError
from aragospot.specfun import (
    assoc_legendre_row,
    bessel_batch,
    first_kind_upward,
    legendre_triangle,
    modified_sph_bessel,
)
from conftest import (
    mp_first_kind_scaled_ratio,
    mp_legendre,
    mp_third_kind_ratio,
)


def unscale(mant, expo, idx):
    return math.ldexp(float(mant[idx]), int(expo[idx]))


class TestClosedForms:
    def test_first_kind_l0(self):
        row = modified_sph_bessel(0, 1.0)
        assert row.first(0) == pytest.approx(math.sinh(1.0) / 1.0, rel=1e-14)

    def test_third_kind_l0(self):
        row = modified_sph_bessel(0, 1.0)
        assert row.third(0) == pytest.approx(-math.exp(-1.0) / 1.0, rel=1e-14)

    def test_third_kind_alternates(self):
        row = modified_sph_bessel(6, 2.5)
        signs = np.sign([row.third_kind[l] for l in range(7)])
        assert np.array_equal(signs, [-1, 1, -1, 1, -1, 1, -1])

    def test_riccati_l0(self):
        # [z h_0(z)]' at z = ix equals e^(-x) (times i^0)
        row = modified_sph_bessel(0, 0.7)
        val = math.ldexp(row.ric_third[0], int(row.e_minus[0]))
        assert val == pytest.approx(math.exp(-0.7), rel=1e-13)


class TestHighOrderOracle:
    @pytest.mark.parametrize(
        "l_max,x",
        [(800, 50.0), (800, 2686.6), (200, 0.3), (1000, 1e-6), (1000, 1e4), (5, 1e4)],
    )
    def test_against_mpmath(self, l_max, x):
        b = bessel_batch(l_max, np.array([x]))
        for l in {0, 1, l_max // 3, l_max // 2, l_max}:
            err_i = mp_first_kind_scaled_ratio(
                l, x, float(b.first[l, 0]), int(b.e_plus[l, 0])
            )
            err_k = mp_third_kind_ratio(
                l, x, float(b.third[l, 0]), int(b.e_minus[l, 0])
            )
            assert abs(err_i) < 1e-8
            assert abs(err_k) < 1e-8

    def test_scaling_prevents_under_overflow(self):
        for x in (1e-6, 1.0, 1e4):
            b = bessel_batch(1000, np.array([x]))
            for arr in (b.first, b.third, b.ric_first, b.ric_third):
                assert np.all(np.isfinite(arr))
                assert np.all(arr != 0.0)


class TestWronskian:
    # j_l h_l' - j_l' h_l = i/z^2 at z = ix reduces to I KD - JI K = 1/x
    @pytest.mark.parametrize("seed", range(6))
    def test_random_orders_and_args(self, seed):
        rng = np.random.default_rng(1234 + seed)
        l_max = int(rng.integers(1, 1000))
        x = float(10.0 ** rng.uniform(-6, 4))
        b = bessel_batch(l_max, np.array([x]))
        for l in (0, l_max // 2, l_max):
            scale = 2.0 ** float(b.e_plus[l, 0] + b.e_minus[l, 0])
            w = (
                b.first[l, 0] * b.ric_third[l, 0]
                - b.ric_first[l, 0] * b.third[l, 0]
            ) * scale
            assert w * x == pytest.approx(1.0, rel=1e-10)


class TestRecurrenceDirections:
    # both directions agree where both are stable (l below ~x)
    @pytest.mark.parametrize("l_max,x", [(3, 10.0), (5, 8.0), (8, 10.0), (2, 0.9)])
    def test_down_vs_up(self, l_max, x):
        b = bessel_batch(l_max, np.array([x]))
        up = first_kind_upward(l_max, x)
        for l in range(l_max + 1):
            mine = unscale(b.first[:, 0], b.e_plus[:, 0], l)
            assert mine == pytest.approx(up[l], rel=1e-12)

    def test_hankel_products_sign(self):
        # [h_l(kr)]^2 at k = i xi/c is real; fixed-sign kernels keep K_l < 0
        b = bessel_batch(40, np.array([3.0]))
        assert np.all(b.third < 0.0)
        assert np.all(b.ric_third > 0.0)


class TestDomainErrors:
    def test_nonpositive_argument(self):
        with pytest.raises(DomainError):
            modified_sph_bessel(5, 0.0)
        with pytest.raises(DomainError):
            modified_sph_bessel(5, -1.0)
        with pytest.raises(DomainError):
            modified_sph_bessel(5, float("nan"))

    def test_order_cap(self):
        with pytest.raises(ConfigurationError):
            modified_sph_bessel(10_001, 1.0)


class TestLegendre:
    def test_p20_at_equator(self):
        row = assoc_legendre_row(2, math.pi / 2)
        assert row.values[0] == pytest.approx(-0.5, abs=1e-14)

    def test_p11_over_sin_limit(self):
        # Condon-Shortley: P_1^1/sin(theta) -> -1 at theta -> 0
        row = assoc_legendre_row(1, 0.0)
        assert row.m_over_sin[1] == pytest.approx(-1.0, abs=1e-14)

    def test_p0_at_pole(self):
        for l in (1, 7, 60):
            assert assoc_legendre_row(l, 0.0).values[0] == pytest.approx(1.0)

    def test_row_against_mpmath(self):
        row = assoc_legendre_row(50, 1.0)
        for m in (0, 1, 7, 25, 50):
            ref = mp_legendre(50, m, 1.0)
            assert row.values[m] == pytest.approx(ref, rel=1e-10)

    def test_derivative_against_finite_difference(self):
        l, th, h = 14, 0.8, 1e-6
        row = assoc_legendre_row(l, th)
        hi = assoc_legendre_row(l, th + h)
        lo = assoc_legendre_row(l, th - h)
        fd = (hi.values - lo.values) / (2 * h)
        assert np.allclose(row.dtheta, fd, rtol=1e-7, atol=1e-9)

    @pytest.mark.parametrize("theta", [1e-9, 0.3, 1.0, 2.0, math.pi - 1e-9])
    @pytest.mark.parametrize("l", [5, 30, 1000])
    def test_addition_theorem_sums(self, l, theta):
        # sum (2-d_m0) Q^2 = 1 and sum (2-d_m0)[(mQ/sin)^2 + dQ^2] = l(l+1)
        q, dq, s = legendre_triangle(l, theta)
        m = np.arange(l + 1, dtype=float)
        w = np.where(m == 0, 1.0, 2.0)
        s1 = float(np.sum(w * q[l] ** 2))
        s2 = float(np.sum(w * ((m * s[l]) ** 2 + dq[l] ** 2)))
        assert s1 == pytest.approx(1.0, rel=1e-10)
        assert s2 == pytest.approx(l * (l + 1.0), rel=1e-9)

    def test_angle_domain(self):
        with pytest.raises(DomainError):
            assoc_legendre_row(3, -0.1)
        with pytest.raises(DomainError):
            assoc_legendre_row(3, math.pi + 0.1)
