import math

import numpy as np
import pytest

from paharq.allocation import (
    BracketError,
    ClosedFormDomainError,
    avg_power_given_p1,
    c_coefficient,
    closed_form_avg_power,
    golden_section_min,
    m_coefficient,
    optimal_p1_closed_form,
    optimal_p1_numeric,
)
from paharq.channel import QuantileMethod, sample_g1
from paharq.harq import HarqConfig, P2Rule, Protocol


def cfg(protocol=Protocol.RTD, rate=2.0, eps=1e-3, p1=None):
    return HarqConfig(protocol, rate, eps, p1)


class TestCoefficients:
    def test_values(self):
        assert m_coefficient(0.8) == pytest.approx(1.5625, rel=1e-12)
        assert c_coefficient(1e-3, 0.8) == pytest.approx(
            -1.0 / (0.64 * math.log(0.999)), rel=1e-12)

    def test_c_positive(self):
        for eps in (1e-6, 0.5, 1 - 1e-6):
            assert c_coefficient(eps, 0.7) > 0.0


class TestAveragePower:
    def test_sigma_one_closed_integral(self):
        # with full decorrelation the asymptotic objective is exact: m = 1
        c = cfg(eps=1e-2, p1=None)
        p1 = 20.0
        m = 1.0
        cc = c_coefficient(c.eps, 1.0)
        expected = p1 + cc / m**2 * (p1 * math.exp(-m * c.theta / p1)
                                     - p1 + m * c.theta)
        got = avg_power_given_p1(p1, c, 1.0, QuantileMethod.EXACT)
        assert got == pytest.approx(expected, rel=1e-6)

    def test_quadrature_matches_monte_carlo(self, qcache):
        # spent power only involves g1 and the rule, so the oracle is a plain
        # 1e7-draw average of p1 + P2(g1) over the failure region
        c = cfg(rate=2.0, eps=1e-3, p1=10.0)
        q = qcache.get(1e-3, 0.8)
        quad = avg_power_given_p1(10.0, c, 0.8, QuantileMethod.EXACT, quantile=q)
        rule = P2Rule(c, 0.8, QuantileMethod.EXACT, quantile=q)
        rng = np.random.default_rng(7)
        total, total_sq, n = 0.0, 0.0, 10**7
        for _ in range(10):
            g1 = sample_g1(rng, size=n // 10)
            spent = 10.0 + rule(g1)
            spent[g1 >= c.theta / 10.0] = 10.0
            total += spent.sum()
            total_sq += (spent * spent).sum()
        mean = total / n
        se = math.sqrt((total_sq / n - mean**2) / n)
        assert abs(quad - mean) < 3.0 * se

    def test_closed_form_is_integral_of_asymptotic_rule(self):
        for protocol in (Protocol.RTD, Protocol.INR):
            for p1 in (5.0, 50.0):
                c = cfg(protocol=protocol, rate=2.0, eps=1e-3)
                quad = avg_power_given_p1(p1, c, 0.8, QuantileMethod.ASYMPTOTIC)
                closed = closed_form_avg_power(p1, c, 0.8)
                assert quad == pytest.approx(closed, rel=1e-6)

    def test_tiny_rate_reduces_to_p1(self):
        c = HarqConfig(Protocol.RTD, rate=1e-9, eps=1e-3)
        assert closed_form_avg_power(7.0, c, 0.8) == pytest.approx(7.0, rel=1e-8)

    def test_loose_target_shrinks_retransmission_term(self):
        # eps -> 1 drives the retransmission weight c -> 0 (logarithmically),
        # leaving avg power = p1 + O(c)
        cfg_loose = HarqConfig(Protocol.RTD, rate=2.0, eps=1.0 - 1e-9)
        cc = c_coefficient(cfg_loose.eps, 0.8)
        avg = closed_form_avg_power(7.0, cfg_loose, 0.8)
        assert 0.0 <= avg - 7.0 <= cc * cfg_loose.theta / m_coefficient(0.8)

    def test_large_p1_approaches_p1(self):
        c = cfg()
        for p1 in (1e6, 1e8):
            assert closed_form_avg_power(p1, c, 0.8) == pytest.approx(
                p1, rel=1e-4)

    def test_rejects_nonpositive_p1(self):
        with pytest.raises(ValueError):
            avg_power_given_p1(0.0, cfg(), 0.8)
        with pytest.raises(ValueError):
            closed_form_avg_power(-1.0, cfg(), 0.8)


class TestClosedFormOptimum:
    def test_stationarity_identity(self):
        for rate in (0.5, 2.0, 4.0):
            for eps in (1e-5, 1e-3, 1e-1):
                sol = optimal_p1_closed_form(cfg(rate=rate, eps=eps), 0.8)
                assert abs(sol.diagnostics["stationarity_residual"]) <= 1e-9

    def test_matches_golden_section_on_closed_objective(self):
        c = cfg(rate=2.0, eps=1e-3)
        sol = optimal_p1_closed_form(c, 0.8)
        obj = lambda t: closed_form_avg_power(math.exp(t), c, 0.8)
        t = golden_section_min(obj, math.log(sol.p1) - 2.0,
                               math.log(sol.p1) + 2.0, 1e-7)
        assert abs(10 * math.log10(math.exp(t)) - sol.p1_db) <= 0.01

    def test_inr_needs_less_power(self):
        for rate in (0.5, 2.0):
            for eps in (1e-4, 1e-2):
                rtd = optimal_p1_closed_form(cfg(Protocol.RTD, rate, eps), 0.8)
                inr = optimal_p1_closed_form(cfg(Protocol.INR, rate, eps), 0.8)
                assert inr.p1 <= rtd.p1
                assert inr.avg_power <= rtd.avg_power

    def test_finite_difference_stationarity(self):
        c = cfg(rate=2.0, eps=1e-3)
        sol = optimal_p1_closed_form(c, 0.8)
        h = 1e-6 * sol.p1
        deriv = (closed_form_avg_power(sol.p1 + h, c, 0.8)
                 - closed_form_avg_power(sol.p1 - h, c, 0.8)) / (2 * h)
        assert abs(deriv) <= 1e-8

    def test_domain_error_for_infeasible_pair(self):
        # |log(1-eps)| >= sigma^2 pushes the Lambert argument out of range
        with pytest.raises(ClosedFormDomainError):
            optimal_p1_closed_form(cfg(eps=0.5), 0.8)
        with pytest.raises(ClosedFormDomainError):
            optimal_p1_closed_form(cfg(eps=1e-3), 0.02)

    def test_avg_power_decreases_with_eps(self):
        prev = math.inf
        for eps in (1e-5, 1e-4, 1e-3, 1e-2, 1e-1):
            sol = optimal_p1_closed_form(cfg(eps=eps), 0.8)
            assert sol.avg_power < prev
            prev = sol.avg_power

    def test_avg_power_decreases_with_sigma(self):
        for protocol in (Protocol.RTD, Protocol.INR):
            for rate, eps in ((0.5, 1e-2), (2.0, 1e-3)):
                values = [optimal_p1_closed_form(
                    cfg(protocol, rate, eps), s).avg_power
                    for s in np.linspace(0.3, 1.0, 8)]
                assert all(a >= b - 1e-9 for a, b in zip(values, values[1:]))


class TestNumericOptimum:
    @pytest.mark.parametrize("rate", [0.5, 2.0])
    @pytest.mark.parametrize("eps", [1e-5, 1e-3, 1e-1])
    def test_agrees_with_closed_form_under_asymptotic_rule(self, rate, eps):
        c = cfg(rate=rate, eps=eps)
        closed = optimal_p1_closed_form(c, 0.8)
        numeric = optimal_p1_numeric(c, 0.8, QuantileMethod.ASYMPTOTIC)
        assert abs(numeric.p1_db - closed.p1_db) <= 0.05
        assert abs(numeric.avg_power_db - closed.avg_power_db) <= 0.01

    def test_unimodality_audit(self, qcache):
        c = cfg(rate=2.0, eps=1e-3)
        sol = optimal_p1_numeric(c, 0.8, QuantileMethod.EXACT,
                                 quantile=qcache.get(1e-3, 0.8))
        assert sol.diagnostics["n_grid_local_minima"] == 1

    def test_exact_optimum_dominates_other_rules(self, qcache):
        # evaluating any other rule's optimizer under the exact objective
        # cannot beat the exact optimizer
        c = cfg(rate=2.0, eps=1e-3)
        q = qcache.get(1e-3, 0.8)
        exact = optimal_p1_numeric(c, 0.8, QuantileMethod.EXACT, quantile=q)
        for method in (QuantileMethod.WEIBULL, QuantileMethod.ASYMPTOTIC):
            other = optimal_p1_numeric(c, 0.8, method)
            other_under_exact = avg_power_given_p1(other.p1, c, 0.8,
                                                   QuantileMethod.EXACT,
                                                   quantile=q)
            assert exact.avg_power <= other_under_exact * (1.0 + 1e-6)

    def test_bracket_expansion_diagnostic(self):
        c = cfg(rate=2.0, eps=1e-3)
        with pytest.raises(BracketError):
            optimal_p1_numeric(c, 0.8, QuantileMethod.ASYMPTOTIC,
                               p_hi=1e-2, p_hi_max=1e-2, grid_points=30)

    def test_method_label(self, qcache):
        c = cfg(rate=2.0, eps=1e-3)
        sol = optimal_p1_numeric(c, 0.8, QuantileMethod.EXACT,
                                 quantile=qcache.get(1e-3, 0.8))
        assert sol.method == "numeric-exact"
        assert sol.protocol is Protocol.RTD
