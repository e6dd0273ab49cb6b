"""Correlated Rayleigh channel seen by a predictor/receive antenna pair.

The gain g1 measured at the front antenna and the gain g2 later seen by the
rear antenna come from complex Gaussians linked by a mixing parameter
sigma: h2 = sqrt(1 - sigma^2) h1 + sigma q.  Conditioned on g1 = |h1|^2,
g2 = |h2|^2 is noncentral chi-square, so its CDF is a Marcum Q expression.
sigma itself can be supplied directly or derived from the drive geometry
(speed, processing delay, carrier frequency, antenna separation) through a
pluggable spatial-correlation mapping.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import special as sp_special
from scipy.interpolate import PchipInterpolator

from .special import (
    inv_marcum_q1,
    inv_marcum_q1_asymptotic,
    marcum_q1,
    weibull_fit_parameters,
)

SPEED_OF_LIGHT = 299792458.0

# sigma = 0 makes the conditional distribution degenerate; this floor keeps
# every formula finite.  Numerical guard, not a physical claim.
SIGMA_MIN = 1e-3


class QuantileMethod(enum.Enum):
    """How the conditional-gain quantile (inverse CDF) is evaluated."""

    EXACT = "exact"
    WEIBULL = "weibull"        # stretched-exponential fit of the Marcum tail
    ASYMPTOTIC = "asymptotic"  # small-quantile closed form


@dataclass(frozen=True)
class ChannelGeometry:
    """Drive geometry from which the spatial mismatch is derived."""

    v: float        # vehicle speed [m/s]
    delta: float    # processing delay between probe and data [s]
    f_c: float      # carrier frequency [Hz]
    d_a: float      # antenna separation [m]

    def __post_init__(self):
        for name in ("v", "delta", "f_c", "d_a"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.f_c

    @property
    def mismatch_distance(self) -> float:
        """|antenna separation - distance driven during the delay|."""
        return abs(self.d_a - self.v * self.delta)

    @property
    def alignment_speed(self) -> float:
        """Speed at which the rear antenna lands on the probed spot [m/s]."""
        return self.d_a / self.delta


def jakes_sigma(d: float, wavelength: float) -> float:
    """Mismatch parameter from Jakes spatial correlation.

    The h1-h2 correlation magnitude for isotropic scattering at spacing d is
    |J0(2 pi d / wavelength)|, so sigma^2 = 1 - J0^2.  Unclamped.
    """
    return math.sqrt(max(1.0 - sp_special.j0(2.0 * math.pi * d / wavelength) ** 2, 0.0))


def sigma_from_geometry(v: float, delta: float, f_c: float, d_a: float,
                        mapping=None) -> float:
    """sigma for a given drive geometry, clamped to [SIGMA_MIN, 1].

    `mapping(d, wavelength)` converts the mismatch distance to sigma;
    defaults to the Jakes correlation model.
    """
    geom = ChannelGeometry(v=v, delta=delta, f_c=f_c, d_a=d_a)
    fn = jakes_sigma if mapping is None else mapping
    sigma = fn(geom.mismatch_distance, geom.wavelength)
    return min(max(sigma, SIGMA_MIN), 1.0)


@dataclass(frozen=True)
class ChannelParams:
    """Mismatch parameter, optionally carrying the geometry it came from."""

    sigma: float
    geometry: ChannelGeometry | None = None

    def __post_init__(self):
        if not 0.0 < self.sigma <= 1.0:
            raise ValueError(f"sigma must be in (0, 1], got {self.sigma}")

    @classmethod
    def from_geometry(cls, geometry: ChannelGeometry, mapping=None):
        sigma = sigma_from_geometry(geometry.v, geometry.delta, geometry.f_c,
                                    geometry.d_a, mapping=mapping)
        return cls(sigma=sigma, geometry=geometry)


def _noncentrality(g1: float, sigma: float) -> float:
    return math.sqrt(2.0 * g1 * (1.0 - sigma * sigma)) / sigma


def cond_cdf_g2(x: float, g1: float, sigma: float) -> float:
    """P(g2 <= x | g1): one minus a Marcum Q tail.

    At sigma = 1 the antennas decorrelate completely and this reduces to the
    unit-mean exponential CDF 1 - exp(-x).
    """
    _check_sigma(sigma)
    if g1 < 0:
        raise ValueError(f"g1 must be >= 0, got {g1}")
    if x <= 0.0:
        return 0.0
    s = _noncentrality(g1, sigma)
    rho = math.sqrt(2.0 * x) / sigma
    return min(max(1.0 - marcum_q1(s, rho), 0.0), 1.0)


def inv_cond_cdf_g2(eps: float, g1: float, sigma: float,
                    method: QuantileMethod = QuantileMethod.EXACT) -> float:
    """eps-quantile of g2 given g1.

    EXACT inverts the Marcum tail numerically; WEIBULL inverts the
    stretched-exponential fit in closed form; ASYMPTOTIC uses the
    small-quantile expression sigma^2 |log(1-eps)| exp(g1 (1-sigma^2)/sigma^2).
    """
    _check_sigma(sigma)
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must be in (0, 1), got {eps}")
    if g1 < 0:
        raise ValueError(f"g1 must be >= 0, got {g1}")
    s = _noncentrality(g1, sigma)
    if method is QuantileMethod.EXACT:
        rho = inv_marcum_q1(s, 1.0 - eps)
        return 0.5 * sigma * sigma * rho * rho
    if method is QuantileMethod.WEIBULL:
        scale, shape = weibull_fit_parameters(s)
        rho2 = (-math.log1p(-eps) / scale) ** (2.0 / shape)
        return 0.5 * sigma * sigma * float(rho2)
    if method is QuantileMethod.ASYMPTOTIC:
        rho = inv_marcum_q1_asymptotic(s, eps)
        return 0.5 * sigma * sigma * rho * rho
    raise ValueError(f"unknown method {method!r}")


def _quantile_weibull_vec(eps: float, g1, sigma: float):
    g1 = np.asarray(g1, dtype=float)
    s = np.sqrt(2.0 * g1 * (1.0 - sigma * sigma)) / sigma
    scale, shape = weibull_fit_parameters(s)
    rho2 = (-np.log1p(-eps) / scale) ** (2.0 / shape)
    return 0.5 * sigma * sigma * rho2


def _quantile_asymptotic_vec(eps: float, g1, sigma: float):
    g1 = np.asarray(g1, dtype=float)
    return (-sigma * sigma * np.log1p(-eps)
            * np.exp(g1 * (1.0 - sigma * sigma) / (sigma * sigma)))


class GainQuantile:
    """Vectorized eps-quantile of g2 given g1, for a fixed (eps, sigma).

    The closed-form methods evaluate directly.  The exact method solves the
    Marcum inverse on a geometric g1 grid once and interpolates
    log-quantile against log-g1 with a monotone cubic; interpolation error
    is orders of magnitude below the Monte Carlo resolutions it feeds.
    """

    def __init__(self, eps: float, sigma: float,
                 method: QuantileMethod = QuantileMethod.EXACT,
                 g_max: float = 50.0, nodes: int = 513):
        _check_sigma(sigma)
        if not 0.0 < eps < 1.0:
            raise ValueError(f"eps must be in (0, 1), got {eps}")
        self.eps = eps
        self.sigma = sigma
        self.method = method
        self.g_max = g_max
        if method is QuantileMethod.EXACT:
            g_lo = 1e-9
            grid = np.geomspace(g_lo, g_max, nodes)
            vals = np.empty(nodes)
            for i, g in enumerate(grid):
                vals[i] = inv_cond_cdf_g2(eps, g, sigma, QuantileMethod.EXACT)
            self._x0 = inv_cond_cdf_g2(eps, 0.0, sigma, QuantileMethod.EXACT)
            self._g_lo = g_lo
            self._interp = PchipInterpolator(np.log(grid), np.log(vals),
                                             extrapolate=True)

    def __call__(self, g1):
        g1 = np.asarray(g1, dtype=float)
        if self.method is QuantileMethod.WEIBULL:
            return _quantile_weibull_vec(self.eps, g1, self.sigma)
        if self.method is QuantileMethod.ASYMPTOTIC:
            return _quantile_asymptotic_vec(self.eps, g1, self.sigma)
        out = np.exp(self._interp(np.log(np.maximum(g1, self._g_lo))))
        return np.where(g1 <= self._g_lo, self._x0, out)


def sample_g1(rng: np.random.Generator, size=None):
    """Unit-mean exponential gain of the probing antenna."""
    return rng.exponential(size=size)


def sample_g2_given_g1(rng: np.random.Generator, g1, sigma: float):
    """Draw g2 | g1 from the mixing model.

    h1 is placed uniformly on the circle of radius sqrt(g1) (the conditional
    law only depends on |h1|, asserted by the distribution tests), q is
    circularly symmetric unit-variance complex normal.
    """
    _check_sigma(sigma)
    g1 = np.asarray(g1, dtype=float)
    phase = rng.uniform(0.0, 2.0 * np.pi, size=g1.shape)
    h1 = np.sqrt(g1) * np.exp(1j * phase)
    q = (rng.normal(size=g1.shape) + 1j * rng.normal(size=g1.shape)) * np.sqrt(0.5)
    h2 = np.sqrt(1.0 - sigma * sigma) * h1 + sigma * q
    return np.abs(h2) ** 2


def _check_sigma(sigma: float) -> None:
    if not 0.0 < sigma <= 1.0:
        raise ValueError(f"sigma must be in (0, 1], got {sigma}")
