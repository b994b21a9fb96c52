"""Annual emissions uncertainty from weather-day sampling.

A year realized from the representative-day distribution draws 365
independent days; the annual emissions total is then approximately normal
(central limit theorem), with mean 365 times the probability-weighted
daily expectation and variance 365 times the single-day variance. The
attainment probability of an annual target follows from the normal CDF.

All targets passed to attainment_probability are annual tons; callers
holding a daily target scale it by DAYS_PER_YEAR first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

DAYS_PER_YEAR = 365


def normal_cdf(x: float) -> float:
    """Standard normal CDF via the complementary error function."""
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


@dataclass(frozen=True)
class EmissionsDistribution:
    """Normal approximation of annual emissions under day resampling."""

    mean: float                        # tons per year
    variance: float                    # tons^2 per year
    day_emissions: tuple[float, ...]   # daily E_a per representative day
    probabilities: tuple[float, ...]

    @property
    def sigma(self) -> float:
        return math.sqrt(self.variance)


def emissions_distribution(result) -> EmissionsDistribution:
    """Annualized emissions distribution of a solved commitment result.

    Variance is 365 * sum_a pi_a (E_a - E[E])^2: the single-day variance of
    the representative-day lottery, scaled by the number of independent
    draws in a year.
    """
    e = tuple(d.emissions for d in result.days)
    p = tuple(d.probability for d in result.days)
    daily_mean = sum(pi * ea for pi, ea in zip(p, e))
    var = DAYS_PER_YEAR * sum(pi * (ea - daily_mean) ** 2 for pi, ea in zip(p, e))
    return EmissionsDistribution(mean=DAYS_PER_YEAR * daily_mean, variance=var,
                                 day_emissions=e, probabilities=p)


def attainment_probability(dist: EmissionsDistribution, target: float) -> float:
    """Probability that realized annual emissions land at or below target."""
    if dist.variance == 0.0:
        return 1.0 if dist.mean <= target else 0.0
    return normal_cdf((target - dist.mean) / dist.sigma)
