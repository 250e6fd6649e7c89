import numpy as np
import pytest
from scipy import special as sps

from levelband.errors import DomainError, SingularityError
from levelband.special_functions import airy_ai, branched_log, lambert_w0, lambert_w0_exp


def bisect_lambert(x, lo=0.0, hi=10.0, iters=200):
    """Independent oracle: bisection on w e^w - x."""
    f = lambda w: w * np.exp(w) - x
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


# Frozen from the bisection oracle above with x = 1.
W_OF_ONE = 0.5671432904097838


class TestLambertW:
    def test_trivial_points(self):
        assert lambert_w0(0.0) == 0.0
        assert lambert_w0(np.e) == pytest.approx(1.0, abs=1e-15)

    def test_against_bisection_oracle(self):
        assert bisect_lambert(1.0) == pytest.approx(W_OF_ONE, abs=1e-14)
        assert lambert_w0(1.0) == pytest.approx(W_OF_ONE, abs=1e-14)

    def test_inverse_identity_on_log_grid(self):
        xs = np.concatenate([
            [-np.exp(-1.0) + 1e-6],
            np.logspace(-6, 6, 120),
        ])
        w = lambert_w0(xs)
        assert np.all(np.abs(w * np.exp(w) - xs) <= 1e-13 * np.maximum(1.0, np.abs(xs)))

    def test_monotone(self):
        xs = np.linspace(-np.exp(-1.0), 50.0, 500)
        w = lambert_w0(xs)
        assert np.all(np.diff(w) > 0)

    def test_domain_error(self):
        with pytest.raises(DomainError):
            lambert_w0(-1.0)

    def test_exp_form_matches(self):
        for a in (0.5, 3.0, 40.0, 300.0):
            assert lambert_w0_exp(a) == pytest.approx(
                float(sps.lambertw(np.exp(a)).real), rel=1e-13)

    def test_exp_form_huge_argument(self):
        w = lambert_w0_exp(900.0)
        assert w + np.log(w) == pytest.approx(900.0, rel=1e-13)


def maclaurin_ai(x, n_terms=80):
    """Independent oracle: Maclaurin summation with explicit gamma constants."""
    from math import gamma
    a = 3.0 ** (-2.0 / 3.0) / gamma(2.0 / 3.0)
    b = 3.0 ** (-1.0 / 3.0) / gamma(1.0 / 3.0)
    f_term, g_term = 1.0, x
    f_sum, g_sum = f_term, g_term
    for k in range(n_terms):
        f_term *= x**3 / ((3 * k + 2) * (3 * k + 3))
        g_term *= x**3 / ((3 * k + 3) * (3 * k + 4))
        f_sum += f_term
        g_sum += g_term
    return a * f_sum - b * g_sum


class TestAiryAi:
    def test_value_at_zero(self):
        from math import gamma
        assert airy_ai(0.0) == pytest.approx(3.0 ** (-2.0 / 3.0) / gamma(2.0 / 3.0),
                                             abs=1e-14)

    def test_defining_ode_by_finite_differences(self):
        h = 1e-3
        for x in (-5.0, -1.3, 0.4, 2.5, 6.0):
            second = (airy_ai(x + h) - 2 * airy_ai(x) + airy_ai(x - h)) / h**2
            assert second == pytest.approx(x * airy_ai(x), abs=1e-6)

    def test_against_maclaurin_oracle(self):
        assert airy_ai(1.0) == pytest.approx(maclaurin_ai(1.0), abs=1e-13)
        assert airy_ai(-2.0) == pytest.approx(maclaurin_ai(-2.0), abs=1e-13)

    def test_against_scipy_across_domain(self):
        grid = np.linspace(-30.0, 30.0, 2001)
        assert np.abs(airy_ai(grid) - sps.airy(grid)[0]).max() < 1e-10

    def test_domain_error(self):
        with pytest.raises(DomainError):
            airy_ai(31.0)


class TestBranchedLog:
    def test_negative_real_axis_is_real(self):
        assert branched_log(-2.0) == pytest.approx(np.log(2.0))
        assert branched_log(-2.0).imag == 0.0

    def test_positive_real_axis_convention(self):
        val = branched_log(2.0)
        assert val == pytest.approx(np.log(2.0) - 1j * np.pi)

    def test_continuous_across_positive_imaginary_axis(self):
        y = 3.0
        left = branched_log(-1e-12 + 1j * y)
        right = branched_log(1e-12 + 1j * y)
        assert abs(left - right) < 1e-9

    def test_jump_across_cut_is_2_pi_i(self):
        y = 0.7
        right = branched_log(1e-15 - 1j * y)
        left = branched_log(-1e-15 - 1j * y)
        assert (left - right) == pytest.approx(2j * np.pi, abs=1e-9)

    def test_singular_at_zero(self):
        with pytest.raises(SingularityError):
            branched_log(0.0)

    def test_matches_resolvent_sum_inside_band(self):
        # +w*log(-eps) must reproduce the retarded continuum limit of the
        # level-shift sum, whose imaginary part inside the band is -pi*w.
        w = 0.25
        val = w * branched_log(5.0)
        assert val.imag == pytest.approx(-np.pi * w)
