"""Seeded protocol-level Monte Carlo for the two-round schemes.

Every run is deterministic given (parameters, seed): trials are organized
in fixed-size batches and batch j draws from a Philox stream whose counter
starts at j * 2**192, so streams never overlap, trial i is the same
regardless of n_trials, and whole batches can be farmed out to workers
without changing any result.  Power totals are reduced with math.fsum
(exactly rounded, hence order-independent).
"""

import math
from dataclasses import dataclass

import numpy as np

from .channel import GainQuantile, QuantileMethod, sample_g1, sample_g2_given_g1
from .harq import HarqConfig, P2Rule, Protocol, theta

BATCH_SIZE = 1 << 16


class DegenerateConditioningError(RuntimeError):
    """Too few trials satisfied the conditioning event for a usable estimate."""


@dataclass(frozen=True)
class MCReport:
    """Aggregated trial statistics with binomial / sample standard errors.

    `outage_rate` is unconditional (outage after the final round, over all
    trials); `cond_round2_outage` conditions on entering round two, with
    numerator and denominator counts kept for auditing.  For single-round
    runs the conditional fields are NaN / zero.
    """

    n_trials: int
    seed: int
    outage_rate: float
    outage_se: float
    cond_round2_outage: float
    cond_round2_se: float
    avg_power: float
    avg_power_se: float
    n_round2: int            # trials entering round two (denominator)
    n_outage: int            # trials still failing afterwards (numerator)
    jensen_fallback_count: int = 0


def _batch_rng(seed: int, batch_index: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.Philox(key=seed, counter=batch_index << 192))


def _batches(n_trials: int, batch_size: int):
    n_batches = (n_trials + batch_size - 1) // batch_size
    for j in range(n_batches):
        yield j, min(batch_size, n_trials - j * batch_size)


def _finalize(n_trials, seed, n_round2, n_outage, power_sums, power_sqsums,
              fallback_count=0) -> MCReport:
    outage = n_outage / n_trials
    outage_se = math.sqrt(outage * (1.0 - outage) / n_trials)
    if n_round2 > 0:
        cond = n_outage / n_round2
        cond_se = math.sqrt(cond * (1.0 - cond) / n_round2)
    else:
        cond, cond_se = math.nan, math.nan
    total = math.fsum(power_sums)
    total_sq = math.fsum(power_sqsums)
    mean = total / n_trials
    var = max(total_sq / n_trials - mean * mean, 0.0)
    if n_trials > 1:
        var *= n_trials / (n_trials - 1)
    return MCReport(
        n_trials=n_trials, seed=seed,
        outage_rate=outage, outage_se=outage_se,
        cond_round2_outage=cond, cond_round2_se=cond_se,
        avg_power=mean, avg_power_se=math.sqrt(var / n_trials),
        n_round2=n_round2, n_outage=n_outage,
        jensen_fallback_count=fallback_count,
    )


def run_closed_loop(cfg: HarqConfig, sigma: float,
                    method: QuantileMethod = QuantileMethod.EXACT,
                    n_trials: int = 100_000, seed: int = 0,
                    jensen_fallback: bool = True,
                    quantile: GainQuantile | None = None,
                    batch_size: int = BATCH_SIZE) -> MCReport:
    """Simulate the feedback scheme: blind round one at cfg.p1, then a
    g1-adapted round two using the selected quantile method.

    Round one decodes when rate <= log(1 + g1 p1).  On failure the rule's
    round-two power is spent and decoding is retried with RTD combining
    (g1 p1 + g2 P2 >= theta) or INR accumulation
    (log(1+g1 p1) + log(1+g2 P2) >= rate).
    """
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    rule = P2Rule(cfg, sigma, method, jensen_fallback=jensen_fallback,
                  quantile=quantile)
    p1 = cfg.p1
    th = cfg.theta
    n_round2 = 0
    n_outage = 0
    fallback = 0
    sums, sqsums = [], []
    for j, m in _batches(n_trials, batch_size):
        rng = _batch_rng(seed, j)
        g1 = sample_g1(rng, size=batch_size)[:m]
        failed = g1 * p1 < th
        g1f = g1[failed]
        p2 = rule(g1f)
        g2 = sample_g2_given_g1(rng, g1f, sigma)
        if cfg.protocol is Protocol.RTD:
            out2 = g1f * p1 + g2 * p2 < th
        else:
            out2 = np.log1p(g1f * p1) + np.log1p(g2 * p2) < cfg.rate
        n_round2 += int(failed.sum())
        n_outage += int(out2.sum())
        fallback += int(rule.jensen_fallback_mask(g1f).sum())
        spent = np.full(m, p1)
        spent[failed] += p2
        sums.append(float(spent.sum()))
        sqsums.append(float((spent * spent).sum()))
    return _finalize(n_trials, seed, n_round2, n_outage, sums, sqsums,
                     fallback)


def run_open_loop(P: float, rate: float, sigma: float, protocol: Protocol,
                  n_trials: int = 100_000, seed: int = 0,
                  batch_size: int = BATCH_SIZE,
                  min_conditioned: int = 100) -> MCReport:
    """Simulate equal-power two-round HARQ without feedback.

    The conditional outage is estimated by rejection: only trials whose
    first-round gain fails (g1 < theta/P) enter the denominator.  Raises
    DegenerateConditioningError when fewer than `min_conditioned` survive.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    if P <= 0:
        raise ValueError(f"P must be > 0, got {P}")
    th = theta(rate)
    n_cond = 0
    n_out = 0
    sums, sqsums = [], []
    for j, m in _batches(n_trials, batch_size):
        rng = _batch_rng(seed, j)
        g1 = sample_g1(rng, size=batch_size)[:m]
        cond = g1 * P < th
        g1c = g1[cond]
        g2 = sample_g2_given_g1(rng, g1c, sigma)
        if protocol is Protocol.RTD:
            out = (g1c + g2) * P < th
        else:
            out = np.log1p(g1c * P) + np.log1p(g2 * P) < rate
        n_cond += int(cond.sum())
        n_out += int(out.sum())
        spent = np.where(cond, 2.0 * P, P)
        sums.append(float(spent.sum()))
        sqsums.append(float((spent * spent).sum()))
    if n_cond < min_conditioned:
        raise DegenerateConditioningError(
            f"only {n_cond} of {n_trials} trials met g1 < theta/P "
            f"(P={P:.6g}, rate={rate}); conditional estimate unusable")
    return _finalize(n_trials, seed, n_cond, n_out, sums, sqsums)


def run_open_loop_conditional(P: float, rate: float, sigma: float,
                              protocol: Protocol, n_trials: int = 100_000,
                              seed: int = 0,
                              batch_size: int = BATCH_SIZE) -> MCReport:
    """Open-loop conditional outage with every trial inside the condition.

    Draws g1 directly from the unit exponential truncated to the
    round-one-failure region [0, theta/P) (inverse-CDF sampling), which is
    the same conditional law that `run_open_loop` reaches by rejection, so
    small outage targets can be resolved at a fixed trial count.  The
    average power is not estimated here (the conditioning discards the
    no-retransmission trials); it is NaN in the report.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    if P <= 0:
        raise ValueError(f"P must be > 0, got {P}")
    th = theta(rate)
    p_cond = -math.expm1(-th / P)
    n_out = 0
    for j, m in _batches(n_trials, batch_size):
        rng = _batch_rng(seed, j)
        u = rng.uniform(size=batch_size)[:m]
        g1 = -np.log1p(-u * p_cond)
        g2 = sample_g2_given_g1(rng, g1, sigma)
        if protocol is Protocol.RTD:
            out = (g1 + g2) * P < th
        else:
            out = np.log1p(g1 * P) + np.log1p(g2 * P) < rate
        n_out += int(out.sum())
    zeta = n_out / n_trials
    se = math.sqrt(zeta * (1.0 - zeta) / n_trials)
    return MCReport(
        n_trials=n_trials, seed=seed,
        outage_rate=zeta * p_cond, outage_se=se * p_cond,
        cond_round2_outage=zeta, cond_round2_se=se,
        avg_power=math.nan, avg_power_se=math.nan,
        n_round2=n_trials, n_outage=n_out,
    )


def run_no_retx(P: float, rate: float, n_trials: int = 100_000,
                seed: int = 0, batch_size: int = BATCH_SIZE) -> MCReport:
    """Simulate single-shot transmission; outage estimates 1 - e^{-theta/P}."""
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    if P <= 0:
        raise ValueError(f"P must be > 0, got {P}")
    th = theta(rate)
    n_out = 0
    for j, m in _batches(n_trials, batch_size):
        rng = _batch_rng(seed, j)
        g1 = sample_g1(rng, size=batch_size)[:m]
        n_out += int((g1 * P < th).sum())
    outage = n_out / n_trials
    se = math.sqrt(outage * (1.0 - outage) / n_trials)
    return MCReport(
        n_trials=n_trials, seed=seed,
        outage_rate=outage, outage_se=se,
        cond_round2_outage=math.nan, cond_round2_se=math.nan,
        avg_power=P, avg_power_se=0.0,
        n_round2=0, n_outage=n_out,
    )
