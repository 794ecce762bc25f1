"""Outbreak summary metrics.

Includes the population-level positive-rate estimator, maximum-likelihood
dispersion fitting of secondary-infection counts, daily test/infection
correlation, rolling 14-day threat levels (from true or inferred incidence),
and per-community attack fractions.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import gammaln

from .engine import COMP_S
from .errors import ParameterError
from .netgen import connected_component_labels

K_HAT_MIN = 1e-4
K_HAT_MAX = 1e6

THREAT_THRESHOLDS = (25.0, 50.0, 150.0, 250.0)
THREAT_WINDOW = 14

THREAT_BASES = (
    "actual",
    "confirmed_counts",
    "positive_rate_all",
    "positive_rate_rt_only",
)


def positive_rate(positives, tests, ctd, n):
    """Population positive fraction estimated from one day of testing.

    The day's positives/tests ratio is extrapolated to everyone who is not
    currently a confirmed active case, then the ctd confirmed active cases
    are added back as known positives. With zero tests the ratio term is
    dropped and only the confirmed cases contribute.
    """
    if n <= 0:
        raise ParameterError("population must be positive")
    if tests < 0 or positives < 0 or ctd < 0:
        raise ParameterError("counts must be non-negative")
    if positives > tests:
        raise ParameterError("positives cannot exceed tests")
    if ctd > n:
        raise ParameterError("ctd cannot exceed the population")
    ratio = positives / tests if tests > 0 else 0.0
    return (ratio * (n - ctd) + ctd) / n


@dataclass(frozen=True)
class DispersionEstimate:
    k_hat: float
    mean_hat: float
    sample_size: int


def estimate_dispersion(counts):
    """Negative-binomial dispersion MLE for the given counts.

    The mean is profiled at the sample mean; k is found by a bounded
    scalar search on log k over [1e-4, 1e6]. When the sample variance does
    not exceed the sample mean there is no finite optimum and k_hat is
    +inf (Poisson-like spread). A search that runs into the upper bound is
    reported the same way: no interior maximum means the data carry no
    evidence of overdispersion.
    """
    x = np.asarray(counts, dtype=np.float64)
    if x.ndim != 1:
        raise ParameterError("counts must be one-dimensional")
    n = x.shape[0]
    if n < 2:
        raise ParameterError("need at least two counts")
    if np.any(x < 0) or np.any(x != np.floor(x)):
        raise ParameterError("counts must be non-negative integers")
    m = float(x.mean())
    v = float(x.var(ddof=1))
    if m <= 0 or v <= m:
        return DispersionEstimate(k_hat=math.inf, mean_hat=m, sample_size=n)

    def negloglik(log_k):
        k = math.exp(log_k)
        # up to additive terms that do not involve k
        ll = (
            float(gammaln(x + k).sum())
            - n * float(gammaln(k))
            + n * k * math.log(k / (k + m))
            + float(x.sum()) * math.log(m / (k + m))
        )
        return -ll

    res = minimize_scalar(
        negloglik,
        bounds=(math.log(K_HAT_MIN), math.log(K_HAT_MAX)),
        method="bounded",
        options={"xatol": 1e-10},
    )
    k_hat = float(math.exp(res.x))
    if k_hat >= 0.99 * K_HAT_MAX:
        k_hat = math.inf
    return DispersionEstimate(k_hat=k_hat, mean_hat=m, sample_size=n)


def daily_correlation(positive_rates, infection_ratios):
    """Pearson correlation between the two daily series.

    Returns nan when either series is constant (the correlation is
    undefined there); callers exclude nan values from averages.
    """
    a = np.asarray(positive_rates, dtype=np.float64)
    b = np.asarray(infection_ratios, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ParameterError("series must be one-dimensional and equally long")
    if a.shape[0] < 3:
        raise ParameterError("need at least three days")
    if float(a.std()) == 0.0 or float(b.std()) == 0.0:
        return math.nan
    return float(np.corrcoef(a, b)[0, 1])


@dataclass(frozen=True)
class ThreatSeries:
    daily_level: list
    basis: str


def threat_levels(new_infections_per_day, n):
    """Five-tier threat level from a daily new-case series.

    Level is set by the trailing 14-day case sum per 100k population
    against thresholds 25 / 50 / 150 / 250; a sum exactly on a threshold
    takes the higher level.
    """
    if n <= 0:
        raise ParameterError("population must be positive")
    x = np.asarray(new_infections_per_day, dtype=np.float64)
    if x.ndim != 1:
        raise ParameterError("series must be one-dimensional")
    if np.any(x < 0):
        raise ParameterError("daily counts must be non-negative")
    csum = np.concatenate([[0.0], np.cumsum(x)])
    d = np.arange(x.shape[0])
    window = csum[d + 1] - csum[np.maximum(0, d - (THREAT_WINDOW - 1))]
    per100k = window * (100000.0 / n)
    levels = np.searchsorted(THREAT_THRESHOLDS, per100k, side="right") + 1
    return ThreatSeries(daily_level=[int(v) for v in levels], basis="actual")


def inferred_threat_levels(traj, basis, n):
    """Threat series recomputed from what an observer of testing would see.

    actual: true daily new infections. confirmed_counts: daily confirmed
    positives. positive_rate_all / positive_rate_rt_only: daily increments
    of the estimated positive count, floored at zero; the rt_only variant
    uses random tests alone and requires that some were recorded.
    """
    if basis not in THREAT_BASES:
        raise ParameterError(f"unknown basis {basis!r}, expected one of {THREAT_BASES}")
    records = traj.daily
    if basis == "actual":
        series = [r.new_infections for r in records]
    elif basis == "confirmed_counts":
        series = [r.positives_found for r in records]
    elif basis == "positive_rate_all":
        series = _rate_increments([r.positive_rate for r in records], n)
    else:
        if not any(r.tests_rt > 0 for r in records):
            raise ParameterError(
                "basis positive_rate_rt_only needs random tests, none were recorded"
            )
        rates = [
            positive_rate(r.positives_rt, r.tests_rt, r.ctd, n) for r in records
        ]
        series = _rate_increments(rates, n)
    result = threat_levels(series, n)
    return ThreatSeries(daily_level=result.daily_level, basis=basis)


def _rate_increments(rates, n):
    est = np.asarray(rates, dtype=np.float64) * n
    prev = np.concatenate([[0.0], est[:-1]])
    return np.maximum(est - prev, 0.0)


def community_infection(net, final_states, top_n):
    """Infected fraction of the population inside the top_n largest components.

    Components are ranked by size, ties broken toward the component
    holding the lowest node id. A node counts as infected when it left the
    susceptible state at any point. The members of the selected components
    are pooled, so the result reads "what share of the people living in the
    densest communities got infected".
    """
    if top_n <= 0:
        raise ParameterError("top_n must be positive")
    comp = np.asarray(final_states)
    if comp.shape[0] != net.node_count:
        raise ParameterError("final_states length must match the network")
    labels = connected_component_labels(net)
    sizes = np.bincount(labels)
    # labels appear in node order, so return_index gives each component's
    # lowest node id
    _, first_node = np.unique(labels, return_index=True)
    order = np.lexsort((first_node, -sizes))
    top = order[: min(top_n, sizes.shape[0])]
    infected = (comp != COMP_S).astype(np.float64)
    infected_per_comp = np.bincount(labels, weights=infected)
    return float(infected_per_comp[top].sum() / sizes[top].sum())


def days_to_end(traj):
    """Last day with a new infection; 0 when none occurred after seeding."""
    last = 0
    for r in traj.daily:
        if r.new_infections > 0:
            last = r.day
    return last
