"""Outage-constrained minimization of the expected two-round power.

The objective is p1 plus the exponentially weighted integral of the
round-two rule over the round-one failure region.  Two first-class routes:

* a numeric route (grid-scan bracket plus golden section over log-power)
  against the quadrature objective with any quantile method, and
* the closed form: with the asymptotic quantile the objective integrates
  exactly, its stationary point lands on the lower Lambert branch, and the
  minimum average power follows by substitution.  For INR the closed form
  uses the Jensen-simplified threshold.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .channel import GainQuantile, QuantileMethod
from .harq import HarqConfig, P2Rule, Protocol
from .special import lambert_w

# Round-one gains above this carry weight e^-50 ~ 2e-22; the integral tail
# beyond it is far below the quadrature tolerance.
G_MAX = 50.0

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
_LN10_OVER_10 = math.log(10.0) / 10.0


class ClosedFormDomainError(ValueError):
    """The closed-form optimum is undefined for this (sigma, eps).

    Happens when m^2/c = |log(1-eps)|/sigma^2 >= 1, pushing the Lambert
    argument out of the lower branch's domain; callers should fall back to
    the numeric route.
    """


class BracketError(RuntimeError):
    """The average power was still decreasing at the largest bracket power."""


class QuadratureError(RuntimeError):
    """The averaged-power integral did not reach a usable error estimate."""


@dataclass(frozen=True)
class PowerSolution:
    """An optimized round-one power and the average power it achieves."""

    p1: float
    avg_power: float
    protocol: Protocol
    method: str              # "closed-form" or "numeric-<quantile method>"
    m: float                 # 1 / sigma^2
    c: float                 # -1 / (sigma^2 log(1 - eps))
    diagnostics: dict = field(default_factory=dict)

    @property
    def p1_db(self) -> float:
        return 10.0 * math.log10(self.p1)

    @property
    def avg_power_db(self) -> float:
        return 10.0 * math.log10(self.avg_power)


def m_coefficient(sigma: float) -> float:
    return 1.0 / (sigma * sigma)


def c_coefficient(eps: float, sigma: float) -> float:
    return -1.0 / (sigma * sigma * math.log1p(-eps))


def avg_power_given_p1(p1: float, cfg: HarqConfig, sigma: float,
                       method: QuantileMethod = QuantileMethod.EXACT,
                       quantile: GainQuantile | None = None) -> float:
    """Expected total power p1 + E[P2(g1); round one fails], by quadrature.

    For INR with the ASYMPTOTIC method the integrand keeps the Jensen
    numerator floored at zero (the convention whose integral the closed
    form reproduces); the simulator-side fallback is a separate choice.
    """
    if p1 <= 0:
        raise ValueError(f"p1 must be > 0, got {p1}")
    cfg = _with_p1(cfg, p1)
    rule = P2Rule(cfg, sigma, method, jensen_fallback=False, quantile=quantile)
    g_hi = min(cfg.theta / p1, G_MAX)
    points = None
    if (cfg.protocol is Protocol.INR and method is QuantileMethod.ASYMPTOTIC
            and 0.0 < cfg.theta1 / p1 < g_hi):
        points = [cfg.theta1 / p1]  # kink where the floored numerator hits 0
    integrand = lambda x: math.exp(-x) * float(rule(x))
    with warnings.catch_warnings():
        # the tabulated quantile is piecewise cubic, so the roundoff
        # detector fires at its knots; the returned estimate is checked
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(integrand, 0.0, g_hi, epsabs=0.0,
                                  epsrel=1e-8, limit=300, points=points)
    if err > 1e-6 * max(val, p1):
        raise QuadratureError(
            f"integral error estimate {err:.3g} too large for value {val:.6g} "
            f"(p1={p1:.6g}, sigma={sigma}, method={method.value})")
    return p1 + val


def closed_form_avg_power(p1: float, cfg: HarqConfig, sigma: float) -> float:
    """Exact integral of the asymptotic-rule objective.

    p1 + c/m^2 (p1 e^{-m th / p1} - p1 + m th) with th = theta for RTD and
    theta1 for INR.
    """
    if p1 <= 0:
        raise ValueError(f"p1 must be > 0, got {p1}")
    m = m_coefficient(sigma)
    c = c_coefficient(cfg.eps, sigma)
    th = cfg.theta if cfg.protocol is Protocol.RTD else cfg.theta1
    x = m * th / p1
    # p1 e^{-x} - p1 + m theta rearranged through expm1 to avoid cancellation
    return p1 + c / (m * m) * p1 * (math.expm1(-x) + x)


def optimal_p1_closed_form(cfg: HarqConfig, sigma: float) -> PowerSolution:
    """Closed-form optimal round-one power via the lower Lambert branch.

    p1* = -m th / (W_{-1}(m^2/(c e) - 1/e) + 1).  Requires m^2/c < 1 so the
    Lambert argument stays in [-1/e, 0); otherwise ClosedFormDomainError.
    The stationarity residual e^{-m th/p1}(m th/p1 + 1) - (1 - m^2/c) is
    recorded in the diagnostics.
    """
    m = m_coefficient(sigma)
    c = c_coefficient(cfg.eps, sigma)
    ratio = m * m / c
    if ratio >= 1.0:
        raise ClosedFormDomainError(
            f"closed form undefined: |log(1-eps)|/sigma^2 = {ratio:.6g} >= 1 "
            f"(eps={cfg.eps}, sigma={sigma})")
    th = cfg.theta if cfg.protocol is Protocol.RTD else cfg.theta1
    arg = (ratio - 1.0) / math.e
    w = lambert_w(arg, branch=-1)
    p1 = -m * th / (w + 1.0)
    x = m * th / p1
    residual = math.exp(-x) * (x + 1.0) - (1.0 - ratio)
    return PowerSolution(
        p1=p1,
        avg_power=closed_form_avg_power(p1, cfg, sigma),
        protocol=cfg.protocol,
        method="closed-form",
        m=m,
        c=c,
        diagnostics={"stationarity_residual": residual},
    )


def golden_section_min(f, a: float, b: float, tol: float) -> float:
    """Scalar golden-section minimizer on [a, b] for a unimodal f."""
    h = b - a
    c = b - _INV_PHI * h
    d = a + _INV_PHI * h
    yc, yd = f(c), f(d)
    while h > tol:
        if yc < yd:
            b, d, yd = d, c, yc
            h = b - a
            c = b - _INV_PHI * h
            yc = f(c)
        else:
            a, c, yc = c, d, yd
            h = b - a
            d = a + _INV_PHI * h
            yd = f(d)
    return 0.5 * (a + b)


def optimal_p1_numeric(cfg: HarqConfig, sigma: float,
                       method: QuantileMethod = QuantileMethod.EXACT,
                       quantile: GainQuantile | None = None,
                       p_lo: float = 1e-3, p_hi: float = 1e8,
                       p_hi_max: float = 1e12,
                       grid_points: int = 200,
                       tol_db: float = 1e-3) -> PowerSolution:
    """Minimize the quadrature objective over log p1.

    A log-spaced grid scan locates the bracket (and audits unimodality:
    extra local minima are counted in the diagnostics and the global grid
    argmin wins); golden section then resolves p1 to `tol_db`.  The upper
    bound expands tenfold, up to `p_hi_max`, while the objective is still
    decreasing at the edge.
    """
    if quantile is None:
        quantile = GainQuantile(cfg.eps, sigma, method)
    obj = lambda t: avg_power_given_p1(math.exp(t), cfg, sigma, method,
                                       quantile=quantile)
    while True:
        ts = np.log(np.geomspace(p_lo, p_hi, grid_points))
        ys = np.array([obj(t) for t in ts])
        i = int(np.argmin(ys))
        if i < grid_points - 1:
            break
        if p_hi >= p_hi_max:
            raise BracketError(
                f"average power still decreasing at p1={p_hi:.3g}")
        p_hi *= 10.0
    interior = (ys[1:-1] < ys[:-2]) & (ys[1:-1] < ys[2:])
    n_local_minima = int(interior.sum())
    t_opt = golden_section_min(obj, ts[max(i - 1, 0)],
                               ts[min(i + 1, grid_points - 1)],
                               tol_db * _LN10_OVER_10)
    p1 = math.exp(t_opt)
    return PowerSolution(
        p1=p1,
        avg_power=obj(t_opt),
        protocol=cfg.protocol,
        method=f"numeric-{method.value}",
        m=m_coefficient(sigma),
        c=c_coefficient(cfg.eps, sigma),
        diagnostics={"n_grid_local_minima": n_local_minima,
                     "grid_argmin_p1": float(np.exp(ts[i]))},
    )


def _with_p1(cfg: HarqConfig, p1: float) -> HarqConfig:
    if cfg.p1 == p1:
        return cfg
    return HarqConfig(protocol=cfg.protocol, rate=cfg.rate, eps=cfg.eps, p1=p1)
