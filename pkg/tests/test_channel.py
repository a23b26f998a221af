import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from mmse_poly import dist as D
from mmse_poly.channel import channel_view
from mmse_poly.derivs import central_difference
from mmse_poly.quadrature import QuadConfig

FAMILY = ["two-point", "uniform", "triangular", "coswindow", "gaussian", "constant", "shifted-uniform"]
COMPACT = ["two-point", "uniform", "triangular", "coswindow", "constant", "shifted-uniform"]
SQRT2PI = math.sqrt(2 * math.pi)
Y = np.linspace(-6, 6, 49)


def view(name, cfg=None):
    return channel_view(D.PRESETS[name](), cfg or QuadConfig(precision="double"))


def sym_grid(v):
    mu, sd = float(v.mean_y), float(v.std_y)
    return np.linspace(mu - 6 * sd, mu + 6 * sd, 101)


class TestOutputDensity:
    def test_pure_noise_is_standard_normal(self):
        np.testing.assert_allclose(view("constant").output_density(Y), np.exp(-Y**2 / 2) / SQRT2PI, rtol=1e-14)

    def test_gaussian_input(self):
        assert view("gaussian").output_density(0.0) == pytest.approx(1 / math.sqrt(4 * math.pi), rel=1e-14)

    def test_two_point(self):
        assert view("two-point").output_density(0.0) == pytest.approx(math.exp(-0.5) / SQRT2PI, rel=1e-14)

    @pytest.mark.parametrize("name", FAMILY)
    def test_positive_and_unit_mass(self, name):
        v = view(name)
        assert np.all(v.output_density(np.linspace(-30, 30, 121)) > 0)
        assert sum(v.output_rule().weights) == pytest.approx(1, abs=1e-9)

    def test_uniform_against_scipy_convolution(self):
        v = view("uniform")
        for y in (-2.5, 0.3, 4.0):
            ref, _ = integrate.quad(lambda x: 0.5 * math.exp(-(y - x) ** 2 / 2) / SQRT2PI, -1, 1, epsabs=1e-15)
            assert v.output_density(y) == pytest.approx(ref, rel=1e-12)


class TestCondMean:
    def test_two_point_is_tanh(self):
        np.testing.assert_allclose(view("two-point").cond_mean(Y), np.tanh(Y), rtol=1e-14, atol=1e-16)

    def test_gaussian_is_linear(self):
        np.testing.assert_allclose(view("gaussian").cond_mean(Y), Y / 2, rtol=1e-15)
        v = channel_view(D.gaussian(1, 3), QuadConfig(precision="double"))
        assert v.cond_mean(2.0) == pytest.approx(1 + 0.75 * 1, rel=1e-15)

    def test_constant(self):
        v = channel_view(D.constant(2.5), QuadConfig(precision="double"))
        assert np.all(v.cond_mean(Y) == 2.5)

    def test_no_underflow_far_out(self):
        v = view("uniform")
        assert v.cond_mean(60.0) == pytest.approx(1 - 1 / 59, rel=1e-2)
        assert np.isfinite(v.cond_mean(1e4))

    def test_uniform_against_scipy_ratio(self):
        v = view("uniform")
        for y in (-1.7, 0.4, 3.3):
            num, _ = integrate.quad(lambda x: x * math.exp(-(x - y) ** 2 / 2), -1, 1, epsabs=1e-15)
            den, _ = integrate.quad(lambda x: math.exp(-(x - y) ** 2 / 2), -1, 1, epsabs=1e-15)
            assert v.cond_mean(y) == pytest.approx(num / den, rel=1e-12, abs=1e-15)

    @pytest.mark.parametrize("name", COMPACT)
    def test_contraction(self, name):
        v = view(name)
        M = v.dist.halfwidth
        assert np.all(np.abs(v.cond_mean(np.linspace(-50, 50, 201))) <= M + 1e-12)


class TestCentralMoments:
    def test_first_is_zero_and_zeroth_is_one(self):
        for name in FAMILY:
            g = view(name).central_moments(Y, 3)
            assert np.all(g[0] == 1) and np.all(g[1] == 0)

    def test_two_point_closed_forms(self):
        v = view("two-point")
        sech2 = 1 / np.cosh(Y) ** 2
        np.testing.assert_allclose(v.cond_central_moment(Y, 2), sech2, rtol=1e-12, atol=1e-15)
        np.testing.assert_allclose(v.cond_central_moment(Y, 3), -2 * np.tanh(Y) * sech2, rtol=1e-10, atol=1e-15)

    @pytest.mark.parametrize("name", FAMILY)
    def test_variance_nonnegative(self, name):
        assert np.all(view(name).cond_central_moment(np.linspace(-20, 20, 81), 2) >= 0)

    def test_gaussian_posterior_moments(self):
        g = view("gaussian").central_moments(Y, 4)
        assert np.allclose(g[2], 0.5) and np.allclose(g[3], 0) and np.allclose(g[4], 0.75)


class TestTweedieAndQprime:
    def test_examples(self):
        assert np.all(view("constant").tweedie(Y) == pytest.approx(0, abs=1e-14))
        assert view("two-point").tweedie(1.0) == pytest.approx(math.tanh(1), rel=1e-14)
        assert view("gaussian").tweedie(2.0) == pytest.approx(1, rel=1e-14)

    def test_qprime_examples(self):
        np.testing.assert_array_equal(view("constant").q_prime(Y), Y)
        assert view("two-point").q_prime(0.0) == 0
        assert 9 <= view("uniform").q_prime(10.0) <= 11

    @pytest.mark.parametrize("name", FAMILY)
    def test_tweedie_equals_ratio(self, name):
        v = view(name)
        y = sym_grid(v)
        assert np.max(np.abs(v.tweedie(y) - v.cond_mean(y))) <= 1e-8

    @pytest.mark.parametrize("name", FAMILY)
    def test_first_derivative_law(self, name):
        v = view(name)
        eps = np.finfo(float).eps
        for y in sym_grid(v)[::5]:
            fd = central_difference(v.cond_mean, y, 1, (abs(y) + 1) * eps ** (1 / 3))
            assert abs(fd - v.cond_central_moment(y, 2)) <= 1e-6

    @pytest.mark.parametrize("name", COMPACT)
    def test_envelope(self, name):
        v = view(name)
        M = v.dist.halfwidth
        y = np.linspace(-40, 40, 161)
        qp = v.q_prime(y)
        assert np.all(qp >= y - M - 1e-9) and np.all(qp <= y + M + 1e-9)

    @given(st.floats(-30, 30))
    def test_tweedie_extended_matches(self, y):
        v = view("triangular", QuadConfig(precision="extended"))
        assert abs(float(v.tweedie(y)) - float(v.cond_mean(y))) < 1e-25


def test_extended_agrees_with_double():
    d, e = view("coswindow"), view("coswindow", QuadConfig(precision="extended"))
    y = np.linspace(-8, 8, 17)
    np.testing.assert_allclose([float(v) for v in e.cond_mean(y)], d.cond_mean(y), rtol=1e-13, atol=1e-15)
