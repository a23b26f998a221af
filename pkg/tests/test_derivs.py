import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.polynomial import polynomial as P

from mmse_poly import dist as D
from mmse_poly.channel import channel_view
from mmse_poly.derivs import (GPoly, beta_r, closed_form_derivative, derivative_norm_bound, eval_gpoly,
                              fd_derivative, gamma_r, q_r, symbolic_derivative)
from mmse_poly.errors import InvalidArgument
from mmse_poly.partitions import C_r, recurrence_coeffs
from mmse_poly.quadrature import QuadConfig, l2_norm_pY

DOUBLE = QuadConfig(precision="double")


def tanh_derivative(order, y):
    """d^order/dy^order tanh(y) via P(T) -> P'(T) (1 - T^2), an oracle independent of g-symbols."""
    coeffs = np.array([0.0, 1.0])
    for _ in range(order):
        coeffs = P.polymul(P.polyder(coeffs), [1.0, 0.0, -1.0])
    return P.polyval(np.tanh(y), coeffs)


class TestGPoly:
    def test_arithmetic_and_printing(self):
        g2, g4 = GPoly.g(2), GPoly.g(4)
        poly = g4 - 3 * g2 * g2
        assert poly == {(0, 0, 1): 1, (2,): -3}
        assert str(poly) == "-3 g2^2 + g4"
        assert (poly - poly) == GPoly() and len(poly - poly) == 0

    def test_g1_dropped(self):
        assert GPoly.g(1) == GPoly()
        assert GPoly.g(0) == GPoly({(): 1}) or GPoly.g(0) == 1

    def test_g_rule(self):
        # g_3' = g_4 - 3 g_2 g_2, the g_1 term of the product rule vanishing
        assert GPoly.g(3).derivative() == {(0, 0, 1): 1, (2,): -3}


class TestSymbolic:
    def test_low_order_forms(self):
        assert symbolic_derivative(2) == {(1,): 1}
        assert symbolic_derivative(3) == {(0, 1): 1}
        assert symbolic_derivative(4) == {(0, 0, 1): 1, (2,): -3}
        assert symbolic_derivative(5) == {(0, 0, 0, 1): 1, (1, 1): -10}

    def test_r6_abs_sum_is_C6(self):
        poly = closed_form_derivative(6)
        assert len(poly) == 4 and sum(abs(c) for _, c in poly.items()) == C_r(6) == 56

    @pytest.mark.parametrize("r", range(2, 13))
    def test_three_routes_agree(self, r):
        sym = symbolic_derivative(r)
        assert sym == closed_form_derivative(r)
        assert sym == dict(recurrence_coeffs(r))
        assert sym.weighted_degrees() == {r}

    def test_invalid_r(self):
        with pytest.raises(InvalidArgument):
            symbolic_derivative(1)


class TestNumerics:
    def test_examples(self):
        v = channel_view(D.two_point(1), DOUBLE)
        assert eval_gpoly(GPoly.g(2), v, 0.0) == pytest.approx(1, rel=1e-15)
        expected = -2 * math.tanh(1) / math.cosh(1) ** 2
        assert eval_gpoly(closed_form_derivative(3), v, 1.0) == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("r", range(2, 9))
    def test_two_point_matches_tanh_oracle(self, r):
        v = channel_view(D.two_point(1), DOUBLE)
        y = np.linspace(-3, 3, 13)
        np.testing.assert_allclose(eval_gpoly(closed_form_derivative(r), v, y), tanh_derivative(r - 1, y),
                                   atol=1e-10 * math.factorial(r))

    @pytest.mark.parametrize("r", range(3, 8))
    def test_gaussian_vanishes(self, r):
        v = channel_view(D.gaussian(0, 1), DOUBLE)
        assert np.max(np.abs(eval_gpoly(closed_form_derivative(r), v, np.linspace(-5, 5, 11)))) <= 1e-12

    @pytest.mark.parametrize("name", ["two-point", "uniform", "triangular", "coswindow"])
    @pytest.mark.parametrize("r", range(2, 6))
    def test_finite_differences(self, name, r):
        v = channel_view(D.PRESETS[name](), DOUBLE)
        poly = closed_form_derivative(r)
        for y in (-2.0, -1.0, 0.0, 1.0, 2.0):
            assert abs(float(eval_gpoly(poly, v, y)) - float(fd_derivative(v, y, r - 1))) <= 1e-5

    def test_fd_against_tanh(self):
        v = channel_view(D.two_point(1), DOUBLE)
        for order in (1, 2, 3, 4):
            assert float(fd_derivative(v, 0.7, order)) == pytest.approx(tanh_derivative(order, 0.7), abs=1e-7)

    def test_fd_order_validated(self):
        with pytest.raises(InvalidArgument):
            fd_derivative(channel_view(D.two_point(1), DOUBLE), 0.0, 0)


class TestBound:
    def test_constants(self):
        assert [q_r(r) for r in range(2, 8)] == [1, 1, 1, 2, 2, 2]
        assert gamma_r(2) == pytest.approx(24 ** 0.25, rel=1e-14) == pytest.approx(2.2134, abs=1e-4)
        assert 7 * q_r(7) == 14 and beta_r(7) == pytest.approx(10, rel=1e-12)

    @given(st.integers(2, 10**6))
    def test_q_r_matches_float_formula_away_from_squares(self, r):
        q = q_r(r)
        assert q * (q + 3) <= 2 * r and (q + 1) * (q + 4) > 2 * r

    def test_two_point_r2(self):
        rep = derivative_norm_bound(D.two_point(1), 2)
        sech2 = l2_norm_pY(lambda y: 1 / np.cosh(y) ** 2, D.two_point(1))
        assert rep.lhs == pytest.approx(sech2, rel=1e-10)
        assert rep.rhs == pytest.approx(4.0, rel=1e-14) and rep.holds

    @pytest.mark.parametrize("name", ["two-point", "uniform", "triangular", "coswindow", "gaussian"])
    @pytest.mark.parametrize("r", range(2, 7))
    def test_bound_holds(self, name, r):
        rep = derivative_norm_bound(D.PRESETS[name](), r)
        assert rep.holds and rep.lhs >= 0 and rep.rhs == 2**r * C_r(r) * min(rep.gamma_r, rep.rhs / (2**r * C_r(r)))

    def test_gaussian_higher_norms_vanish(self):
        assert all(derivative_norm_bound(D.gaussian(0, 1), r).lhs <= 1e-8 for r in range(3, 7))

    def test_beta_variant_reported(self):
        rep = derivative_norm_bound(D.uniform(1), 7, use_beta=True)
        assert rep.beta_r == pytest.approx(10) and rep.rhs_beta > 0
        assert set(rep.as_dict()) >= {"r", "q_r", "gamma_r", "lhs", "rhs", "holds", "beta_r"}

    def test_moment_cap(self):
        d = D.uniform(1)
        small = D.InputDist(**{**d.__dict__, "moment_cap": 4})
        with pytest.raises(InvalidArgument):
            derivative_norm_bound(small, 3)
