import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate, special as sp
from scipy.stats import ncx2

from paharq.special import (
    bessel_i,
    inv_marcum_q1,
    inv_marcum_q1_asymptotic,
    lambert_w,
    marcum_q1,
    marcum_q1_weibull,
)


def marcum_q1_quadrature(s: float, rho: float) -> float:
    """Independent oracle: adaptive quadrature of the defining integral."""
    f = lambda x: x * np.exp(-0.5 * (x - s) ** 2) * sp.i0e(x * s)
    hi = max(rho, s) + 14.0
    val, _ = integrate.quad(f, rho, hi, epsabs=1e-14, epsrel=1e-13, limit=400)
    return val


class TestBesselI:
    def test_at_origin(self):
        assert bessel_i(0, 0.0) == 1.0
        assert bessel_i(1, 0.0) == 0.0
        assert bessel_i(5, 0.0) == 0.0

    def test_series_value(self):
        # truncated power series summed to machine precision
        half = 1.0
        term, total = 1.0, 1.0
        for i in range(1, 60):
            term *= half * half / (i * i)
            total += term
        assert bessel_i(0, 2.0) == pytest.approx(total, rel=1e-14)
        assert bessel_i(0, 2.0) == pytest.approx(2.2795853023360673, rel=1e-12)

    @pytest.mark.parametrize("n", [0, 1, 2, 7])
    @pytest.mark.parametrize("x", [0.1, 1.0, 10.0, 59.0, 61.0, 200.0, 700.0])
    def test_against_scipy(self, n, x):
        assert bessel_i(n, x) == pytest.approx(float(sp.iv(n, x)), rel=1e-12)

    def test_overflow_signalled(self):
        with pytest.raises(OverflowError):
            bessel_i(0, 800.0)

    def test_branch_seam_consistent(self):
        assert bessel_i(1, 60.0) == pytest.approx(bessel_i(1, 60.0 + 1e-12), rel=1e-9)

    @given(st.floats(min_value=0.0, max_value=50.0))
    def test_order_zero_at_least_one(self, x):
        assert bessel_i(0, x) >= 1.0

    def test_rejects_bad_args(self):
        with pytest.raises(ValueError):
            bessel_i(-1, 1.0)
        with pytest.raises(ValueError):
            bessel_i(0, -1.0)


class TestMarcumQ1:
    def test_boundary_values(self):
        assert marcum_q1(0.0, 0.0) == 1.0
        assert marcum_q1(3.0, 0.0) == 1.0
        assert marcum_q1(0.0, 2.0) == pytest.approx(math.exp(-2.0), abs=1e-14)

    def test_against_quadrature_oracle(self):
        assert marcum_q1(1.0, 1.0) == pytest.approx(0.7328798037968203, abs=1e-10)
        for s, rho in [(0.5, 2.0), (2.0, 0.5), (3.0, 3.0), (5.0, 1.0), (1.0, 5.0)]:
            assert marcum_q1(s, rho) == pytest.approx(
                marcum_q1_quadrature(s, rho), abs=1e-10)

    def test_quadrature_agreement_on_grid(self):
        # series and integral evaluations agree to 1e-9 on [0, 6]^2
        for s in np.linspace(0.0, 6.0, 7):
            for rho in np.linspace(0.0, 6.0, 7):
                assert marcum_q1(s, rho) == pytest.approx(
                    marcum_q1_quadrature(s, rho), abs=1e-9)

    def test_matches_noncentral_chi_square_tail(self):
        for s, rho in [(0.7, 1.3), (4.0, 4.5), (6.0, 2.0), (20.0, 21.0)]:
            assert marcum_q1(s, rho) == pytest.approx(
                float(ncx2.sf(rho * rho, 2, s * s)), rel=1e-11, abs=1e-13)

    def test_far_tail(self):
        for s in (0.0, 2.0, 5.0):
            assert marcum_q1(s, 50.0) < 1e-12

    @given(st.floats(min_value=0.0, max_value=6.0),
           st.floats(min_value=0.0, max_value=6.0),
           st.floats(min_value=1e-3, max_value=2.0))
    def test_monotone_decreasing_in_rho(self, s, rho, drho):
        assert marcum_q1(s, rho) >= marcum_q1(s, rho + drho) - 1e-12

    @given(st.floats(min_value=0.0, max_value=6.0),
           st.floats(min_value=0.0, max_value=6.0),
           st.floats(min_value=1e-3, max_value=2.0))
    def test_monotone_increasing_in_s(self, s, rho, ds):
        assert marcum_q1(s + ds, rho) >= marcum_q1(s, rho) - 1e-12

    def test_rejects_bad_args(self):
        with pytest.raises(ValueError):
            marcum_q1(-0.1, 1.0)
        with pytest.raises(ValueError):
            marcum_q1(1.0, math.inf)


class TestMarcumWeibullFit:
    def test_fit_values(self):
        # quartic parameters at s=0: -0.840 and 2.174
        assert marcum_q1_weibull(0.0, 1.0) == pytest.approx(
            math.exp(-math.exp(-0.840)), rel=1e-12)
        # at s=1 the quartics sum to -1.174 and 2.088
        assert marcum_q1_weibull(1.0, 1.0) == pytest.approx(
            math.exp(-math.exp(-1.174)), rel=1e-12)

    @given(st.floats(min_value=0.0, max_value=6.0))
    def test_unit_at_rho_zero(self, s):
        assert marcum_q1_weibull(s, 0.0) == 1.0

    @given(st.floats(min_value=0.0, max_value=6.0),
           st.floats(min_value=0.0, max_value=10.0))
    def test_stays_in_unit_interval(self, s, rho):
        assert 0.0 <= marcum_q1_weibull(s, rho) <= 1.0


class TestInverseMarcum:
    def test_rayleigh_inverse(self):
        assert inv_marcum_q1(0.0, math.exp(-2.0)) == pytest.approx(2.0, abs=1e-12)

    def test_against_bisection_oracle(self):
        assert inv_marcum_q1(2.0, 0.999) == pytest.approx(
            0.1213426789760658, abs=1e-10)

    @pytest.mark.parametrize("s", [0.5, 2.0, 5.0])
    @pytest.mark.parametrize("p", [0.1, 0.5, 0.9])
    def test_roundtrip(self, s, p):
        assert marcum_q1(s, inv_marcum_q1(s, p)) == pytest.approx(p, abs=1e-10)

    def test_roundtrip_grid(self):
        for s in np.linspace(0.0, 6.0, 7):
            for p in (1e-6, 1e-3, 0.3, 0.7, 1.0 - 1e-3, 1.0 - 1e-6):
                rho = inv_marcum_q1(s, p)
                assert abs(marcum_q1(s, rho) - p) <= 1e-9

    def test_rejects_bad_p(self):
        with pytest.raises(ValueError):
            inv_marcum_q1(1.0, 0.0)
        with pytest.raises(ValueError):
            inv_marcum_q1(1.0, 1.0)


class TestInverseMarcumAsymptotic:
    def test_exact_at_s_zero(self):
        assert inv_marcum_q1_asymptotic(0.0, 1.0 - math.exp(-2.0)) == \
            pytest.approx(2.0, rel=1e-12)

    def test_small_quantile_value(self):
        assert inv_marcum_q1_asymptotic(2.0, 1e-3) == pytest.approx(
            math.sqrt(-2.0 * math.log(0.999)) * math.e, rel=1e-12)
        assert inv_marcum_q1_asymptotic(2.0, 1e-3) == pytest.approx(
            0.12159566679653973, abs=1e-9)

    def test_accuracy_trend_vs_exact(self):
        # recorded deviation from the exact inverse: tight for small
        # quantiles and small s, degrading as either grows
        rel = lambda s, eps: abs(
            inv_marcum_q1_asymptotic(s, eps) - inv_marcum_q1(s, 1.0 - eps)
        ) / inv_marcum_q1(s, 1.0 - eps)
        assert rel(0.0, 1e-5) < 1e-10
        assert rel(1.0, 1e-5) < 2e-5
        assert rel(1.0, 1e-3) < 2e-3
        assert rel(1.0, 1e-1) < 0.12
        assert rel(3.0, 1e-3) < 0.3


class TestLambertW:
    def test_principal_values(self):
        assert lambert_w(0.0) == 0.0
        assert lambert_w(math.e) == pytest.approx(1.0, rel=1e-14)
        assert lambert_w(-1.0 / math.e) == -1.0

    def test_lower_branch_point(self):
        assert lambert_w(-1.0 / math.e, branch=-1) == -1.0

    def test_lower_branch_value(self):
        w = lambert_w(-0.1, branch=-1)
        assert w == pytest.approx(-3.5771520639572, abs=1e-10)
        assert w * math.exp(w) == pytest.approx(-0.1, abs=1e-13)

    @pytest.mark.parametrize("x", [-0.367879, -0.36, -0.2, -0.05, -1e-4, -1e-10])
    def test_lower_branch_residual_and_range(self, x):
        w = lambert_w(x, branch=-1)
        assert w <= -1.0
        assert abs(w * math.exp(w) - x) <= 1e-12 * max(1.0, abs(x))

    @given(st.floats(min_value=-0.367879, max_value=100.0))
    def test_principal_residual(self, x):
        w = lambert_w(x)
        assert abs(w * math.exp(w) - x) <= 1e-12 * max(1.0, abs(x))

    @given(st.floats(min_value=-0.3678794, max_value=-1e-12))
    def test_lower_residual(self, x):
        w = lambert_w(x, branch=-1)
        assert abs(w * math.exp(w) - x) <= 1e-12 * max(1.0, abs(x))

    def test_against_scipy(self):
        for x in (-0.3, -0.15, -0.01, 0.5, 3.0, 50.0):
            assert lambert_w(x) == pytest.approx(
                float(sp.lambertw(x).real), rel=1e-12)
        for x in (-0.36, -0.2, -0.01, -1e-6):
            assert lambert_w(x, branch=-1) == pytest.approx(
                float(sp.lambertw(x, k=-1).real), rel=1e-12)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            lambert_w(-0.4)
        with pytest.raises(ValueError):
            lambert_w(-0.4, branch=-1)
        with pytest.raises(ValueError):
            lambert_w(0.1, branch=-1)
        with pytest.raises(ValueError):
            lambert_w(0.1, branch=2)
