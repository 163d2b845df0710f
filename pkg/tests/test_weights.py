import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from subdiff import (ParameterDomainError, combined_cn_fbdf2_weights,
                     fbdf2_weights, sftr_weights, weights_series_oracle)


def binomial_series(alpha, kmax):
    # coefficients of (1 - xi)**alpha: (-1)^k C(alpha, k)
    c = np.empty(kmax + 1)
    c[0] = 1.0
    for k in range(1, kmax + 1):
        c[k] = c[k - 1] * (alpha - k + 1) / k * (-1.0)
    return c


class TestSftrRecursion:
    def test_zeroth_weight_unity_case(self):
        # 2a/(a+2t) = 1 here, so the leading weight is exactly 1
        tab = sftr_weights(0.5, 0.25, 0)
        assert tab.weights[0] == 1.0

    def test_square_root_series_case(self):
        # theta/alpha = 1/2 collapses the generating function to (1-xi)^(1/2)
        tab = sftr_weights(0.5, 0.25, 3)
        np.testing.assert_allclose(tab.weights, [1.0, -0.5, -0.125, -0.0625],
                                   rtol=0, atol=1e-15)

    def test_square_root_series_long(self):
        tab = sftr_weights(0.5, 0.25, 100)
        ref = binomial_series(0.5, 100)
        np.testing.assert_allclose(tab.weights, ref, rtol=0, atol=1e-13)

    def test_leading_weight_closed_form(self):
        tab = sftr_weights(0.9, 0.5, 0)
        assert tab.weights[0] == pytest.approx((1.8 / 1.9) ** 0.9, rel=1e-15)

    def test_crank_nicolson_alpha_one_limit(self):
        # generating function degenerates to 1 - xi; zeros are exact
        tab = sftr_weights(1.0, 0.5, 6)
        assert tab.weights[0] == 1.0
        assert tab.weights[1] == -1.0
        assert np.all(tab.weights[2:] == 0.0)

    def test_partial_sums_decay(self):
        w = sftr_weights(0.5, 0.3, 10_000).weights
        sums = np.abs(np.cumsum(w))
        assert sums[-1] <= 1e-2
        tail = sums[100:]
        assert np.all(np.diff(tail) <= 1e-14)

    @given(alpha=st.floats(0.05, 1.0), theta=st.floats(0.0, 1.4))
    def test_weights_finite_and_real(self, alpha, theta):
        w = sftr_weights(alpha, theta, 200).weights
        assert np.all(np.isfinite(w))

    @pytest.mark.parametrize("alpha,theta", [(0.0, 0.1), (1.2, 0.1), (0.5, -0.1)])
    def test_domain_errors(self, alpha, theta):
        with pytest.raises(ParameterDomainError):
            sftr_weights(alpha, theta, 4)

    def test_negative_count_rejected(self):
        with pytest.raises(ParameterDomainError):
            sftr_weights(0.5, 0.1, -1)

    def test_table_is_immutable(self):
        tab = sftr_weights(0.5, 0.1, 4)
        with pytest.raises(ValueError):
            tab.weights[0] = 2.0


class TestSeriesOracle:
    def test_square_root_case(self):
        tab = weights_series_oracle(0.5, 0.25, 3)
        np.testing.assert_allclose(tab.weights, [1.0, -0.5, -0.125, -0.0625],
                                   rtol=0, atol=1e-14)

    def test_theta_zero_reduction(self):
        # [2(1-xi)/(1+xi)]^alpha, assembled from two binomial series
        alpha, kmax = 0.7, 60
        num = binomial_series(alpha, kmax) * 2.0 ** alpha
        den = np.empty(kmax + 1)
        den[0] = 1.0
        for k in range(1, kmax + 1):
            den[k] = den[k - 1] * (-alpha - k + 1) / k
        ref = np.convolve(num, den)[: kmax + 1]
        got = weights_series_oracle(alpha, 0.0, kmax).weights
        np.testing.assert_allclose(got, ref, rtol=0, atol=1e-13)

    @given(alpha=st.floats(0.05, 1.0), theta=st.floats(0.0, 0.5))
    def test_constant_term_is_generating_function_at_zero(self, alpha, theta):
        got = weights_series_oracle(alpha, theta, 0).weights[0]
        expect = (1.0 / (0.5 + theta / alpha)) ** alpha
        assert got == pytest.approx(expect, rel=1e-13)

    @pytest.mark.parametrize("alpha", [0.1, 0.5, 0.9])
    @pytest.mark.parametrize("theta", [0.0, 0.2, 0.5])
    def test_matches_recursion(self, alpha, theta):
        a = sftr_weights(alpha, theta, 1000).weights
        b = weights_series_oracle(alpha, theta, 1000).weights
        bound = 1e-12 * np.maximum(1.0, np.abs(a))
        assert np.all(np.abs(a - b) <= bound)


class TestFbdf2:
    def test_alpha_one_is_the_polynomial(self):
        tab = fbdf2_weights(1.0, 2)
        np.testing.assert_array_equal(tab.weights, [1.5, -2.0, 0.5])

    def test_leading_weight(self):
        tab = fbdf2_weights(0.5, 0)
        assert tab.weights[0] == pytest.approx(math.sqrt(1.5), rel=1e-15)

    def test_weights_sum_to_zero_in_the_limit(self):
        # the generating polynomial vanishes at 1, so partial sums decay
        # algebraically like K**(-alpha)
        for alpha in (0.2, 0.5, 0.8):
            w = fbdf2_weights(alpha, 20_000).weights
            s = np.cumsum(w)
            assert abs(s[-1]) < abs(s[5000]) < abs(s[1000])
            ratio = abs(s[-1]) / abs(s[10_000])
            assert ratio == pytest.approx(2.0 ** -alpha, rel=0.1)


class TestCombined:
    def test_theta_zero_is_plain_fbdf2(self):
        a = combined_cn_fbdf2_weights(0.6, 0.0, 50).weights
        b = fbdf2_weights(0.6, 50).weights
        np.testing.assert_array_equal(a, b)

    def test_hand_polynomial_product(self):
        tab = combined_cn_fbdf2_weights(1.0, 0.5, 3)
        np.testing.assert_allclose(tab.weights, [0.75, -0.25, -0.75, 0.25],
                                   rtol=0, atol=1e-15)

    @given(alpha=st.floats(0.05, 1.0), theta=st.floats(0.0, 0.5))
    def test_leading_weight_product_form(self, alpha, theta):
        tab = combined_cn_fbdf2_weights(alpha, theta, 0)
        assert tab.weights[0] == pytest.approx((1 - theta) * 1.5 ** alpha,
                                               rel=1e-14)
