"""Special functions used throughout the link model.

The conditional gain distribution of a correlated Rayleigh pair is a
noncentral chi-square with two degrees of freedom, so everything here
revolves around the first-order Marcum Q function: a stable series
evaluation, a stretched-exponential (Weibull-type) fit with polynomial
parameters, numeric and asymptotic inverses, the modified Bessel function
feeding the series, and the two real branches of the Lambert W function
used by the closed-form power optimum.
"""

import math

import numpy as np
from scipy import optimize, special

_CHUNK = 2048
_MAX_TERMS = 1 << 21
# exp() overflows above this, so unscaled Bessel values are unrepresentable
_LOG_FLOAT_MAX = math.log(np.finfo(float).max)

# Quartic parameter polynomials of the stretched-exponential fit
# Q1(s, rho) ~ exp(-exp(I(s)) * rho**J(s)).
_WEIBULL_LOG_SCALE = (-0.840, 0.327, -0.740, 0.083, -0.004)
_WEIBULL_SHAPE = (2.174, -0.592, 0.593, -0.092, 0.005)


def bessel_i(n: int, x: float) -> float:
    """Modified Bessel function of the first kind, integer order n >= 0.

    Power series for moderate arguments (all terms positive, no
    cancellation); exponentially scaled evaluation rescaled by exp(x) for
    large arguments.  Raises OverflowError once I_n(x) exceeds the float
    range.
    """
    if n < 0 or not isinstance(n, (int, np.integer)):
        raise ValueError(f"order must be a nonnegative integer, got {n!r}")
    if x < 0 or not math.isfinite(x):
        raise ValueError(f"argument must be finite and >= 0, got {x!r}")
    if x == 0.0:
        return 1.0 if n == 0 else 0.0
    if x <= 60.0:
        half = 0.5 * x
        term = half**n / math.factorial(n)
        total = term
        for i in range(1, 1000):
            term *= half * half / (i * (n + i))
            total += term
            if term < 1e-17 * total:
                return total
        return total
    # I_n(x) ~ e^x / sqrt(2 pi x); overflows slightly above log(float max)
    if x > _LOG_FLOAT_MAX + 10.0:
        raise OverflowError(f"bessel_i({n}, {x}) exceeds float range")
    value = special.ive(n, x) * math.exp(min(x, _LOG_FLOAT_MAX))
    if x > _LOG_FLOAT_MAX:
        value *= math.exp(x - _LOG_FLOAT_MAX)
    if not math.isfinite(value):
        raise OverflowError(f"bessel_i({n}, {x}) exceeds float range")
    return float(value)


def _scaled_series(ratio: float, z: float, k_start: int) -> float:
    """Sum of ratio**k * e^{-z} I_k(z) for k >= k_start, ratio <= 1.

    Terms are positive and eventually decay geometrically; summation stops
    once a chunk's last term falls below 1e-16 of the running total.
    """
    total = 0.0
    k0 = k_start
    log_ratio = math.log(ratio) if ratio > 0.0 else -math.inf
    while k0 < _MAX_TERMS:
        k = np.arange(k0, k0 + _CHUNK)
        if ratio > 0.0:
            terms = np.exp(k * log_ratio) * special.ive(k, z)
        else:
            terms = special.ive(k, z) * (k == 0)
        total += float(terms.sum())
        if terms[-1] < 1e-16 * max(total, 1e-300):
            return total
        k0 += _CHUNK
    raise RuntimeError(f"series did not converge (ratio={ratio}, z={z})")


def marcum_q1(s: float, rho: float) -> float:
    """First-order Marcum Q function Q1(s, rho).

    Equals the tail, beyond rho, of a Rician envelope with noncentrality s,
    i.e. the survival function of a 2-DOF noncentral chi-square evaluated at
    rho**2 with noncentrality s**2.  Evaluated through the scaled-Bessel
    series; for rho <= s the complement series is used so the term ratio
    stays below one in both regimes.
    """
    if s < 0 or rho < 0 or not (math.isfinite(s) and math.isfinite(rho)):
        raise ValueError(f"arguments must be finite and >= 0, got ({s}, {rho})")
    if rho == 0.0:
        return 1.0
    if s == 0.0:
        return math.exp(-0.5 * rho * rho)
    z = s * rho
    log_pref = -0.5 * (s - rho) ** 2
    if log_pref < -746.0:  # prefactor underflows; the tail is 0 or 1
        return 0.0 if rho > s else 1.0
    pref = math.exp(log_pref)
    if rho > s:
        q = pref * _scaled_series(s / rho, z, 0)
    else:
        q = 1.0 - pref * _scaled_series(rho / s, z, 1)
    return min(max(q, 0.0), 1.0)


def _quartic(coeffs, s: float) -> float:
    c0, c1, c2, c3, c4 = coeffs
    return c0 + s * (c1 + s * (c2 + s * (c3 + s * c4)))


def marcum_q1_weibull(s: float, rho: float) -> float:
    """Stretched-exponential fit of Q1 with quartic-in-s parameters.

    A Weibull-type tail exp(-exp(I(s)) rho**J(s)); fast and closed-form
    invertible, at the cost of a few percent accuracy.  Result clamped to
    [0, 1].
    """
    if s < 0 or rho < 0:
        raise ValueError(f"arguments must be >= 0, got ({s}, {rho})")
    if rho == 0.0:
        return 1.0
    log_scale = _quartic(_WEIBULL_LOG_SCALE, s)
    shape = _quartic(_WEIBULL_SHAPE, s)
    q = math.exp(-math.exp(log_scale) * rho**shape)
    return min(max(q, 0.0), 1.0)


def weibull_fit_parameters(s):
    """(exp(I(s)), J(s)) of the stretched-exponential fit, vectorized."""
    s = np.asarray(s, dtype=float)
    scale = np.exp(
        _WEIBULL_LOG_SCALE[0]
        + s * (_WEIBULL_LOG_SCALE[1] + s * (_WEIBULL_LOG_SCALE[2]
               + s * (_WEIBULL_LOG_SCALE[3] + s * _WEIBULL_LOG_SCALE[4])))
    )
    shape = (
        _WEIBULL_SHAPE[0]
        + s * (_WEIBULL_SHAPE[1] + s * (_WEIBULL_SHAPE[2]
               + s * (_WEIBULL_SHAPE[3] + s * _WEIBULL_SHAPE[4])))
    )
    return scale, shape


def inv_marcum_q1(s: float, p: float, max_doublings: int = 200) -> float:
    """rho such that Q1(s, rho) = p, for p in (0, 1).

    Q1 is strictly decreasing in rho, so a bracket always exists.  The
    initial bracket comes from the concentration of the Rician envelope
    around s (width governed by log(1/min(p, 1-p))); it is then widened
    geometrically if needed and resolved by Brent's method.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must be in (0, 1), got {p}")
    if s < 0:
        raise ValueError(f"s must be >= 0, got {s}")
    t = math.sqrt(2.0 * math.log(2.0 / min(p, 1.0 - p))) + 2.0
    lo = max(s - t, 0.0)
    hi = s + t
    f = lambda rho: marcum_q1(s, rho) - p
    if f(lo) < 0.0:
        lo = 0.0
    n = 0
    while f(hi) > 0.0:
        hi = 2.0 * hi + 1.0
        n += 1
        if n > max_doublings:
            raise RuntimeError(
                f"bracket for inv_marcum_q1(s={s}, p={p}) did not close")
    rho = optimize.brentq(f, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps,
                          maxiter=200)
    return float(rho)


def inv_marcum_q1_asymptotic(s: float, eps: float) -> float:
    """Closed-form rho with 1 - Q1(s, rho) ~ eps, for small quantiles.

    sqrt(-2 log(1 - eps)) * exp(s**2 / 4): exact at s = 0 (Rayleigh
    quantile), accurate while s**2 * rho**2 stays small.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must be in (0, 1), got {eps}")
    return math.sqrt(-2.0 * math.log1p(-eps)) * math.exp(0.25 * s * s)


def lambert_w(x: float, branch: int = 0) -> float:
    """Real Lambert W: solves w * exp(w) = x on the requested branch.

    branch 0 is the principal branch (x >= -1/e); branch -1 is the lower
    branch (-1/e <= x < 0, w <= -1).  Halley iteration from a series or
    asymptotic starting point; residual |w e^w - x| <= 1e-12 max(1, |x|).
    """
    if branch == 0:
        return _lambert_w0(x)
    if branch == -1:
        return _lambert_wm1(x)
    raise ValueError(f"branch must be 0 or -1, got {branch}")


def _halley(w: float, x: float) -> float:
    eps = np.finfo(float).eps
    for _ in range(80):
        e = math.exp(w)
        r = w * e - x
        if r == 0.0:
            break
        w1 = w + 1.0
        dw = r / (e * w1 - (w + 2.0) * r / (2.0 * w1))
        w -= dw
        if abs(dw) <= 4.0 * eps * abs(w):
            break
    return w


def _lambert_w0(x: float) -> float:
    branch_point = -math.exp(-1.0)
    if x < branch_point:
        raise ValueError(f"principal branch needs x >= -1/e, got {x}")
    if x == branch_point:
        return -1.0
    if x == 0.0:
        return 0.0
    if abs(x) < 1e-3:
        w = x * (1.0 - x + 1.5 * x * x)
    elif x < 0.0:
        p = math.sqrt(2.0 * (1.0 + math.e * x))
        w = -1.0 + p - p * p / 3.0
    else:
        w = math.log1p(x)
        if w > 1.0:
            w -= math.log(w)
    return _halley(w, x)


def _lambert_wm1(x: float) -> float:
    branch_point = -math.exp(-1.0)
    if not branch_point <= x < 0.0:
        raise ValueError(f"lower branch needs -1/e <= x < 0, got {x}")
    if x == branch_point:
        return -1.0
    p = -math.sqrt(2.0 * (1.0 + math.e * x))
    if p > -0.3:
        # series around the branch point
        w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p**3
    else:
        log_mx = math.log(-x)
        log_mlog = math.log(-log_mx)
        w = log_mx - log_mlog + log_mlog / log_mx
    w = _halley(w, x)
    return min(w, -1.0)
