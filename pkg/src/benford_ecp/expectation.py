"""Expected divergence statistics of a contaminated Benford sample.

Closed forms treat each observed proportion O_d as normal with mean p_d and
variance p_d(1 - p_d)/n, where p_d = B_d + f·δ_d.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import erfc

from .contamination import ContaminantDistribution, contamination_constants, uniform_contaminant
from .digits import benford_probabilities
from .sampling import sample_frequency_matrix
from .statistics import StatisticKind, all_statistic_values

CLOSED_FORM = "closed-form"
TAYLOR = "taylor-approx"
MONTE_CARLO = "monte-carlo"


@dataclass(frozen=True)
class ExpectationResult:
    kind: StatisticKind
    value: float
    method: str
    std_error: float | None = None

    def __post_init__(self):
        if (self.std_error is not None) != (self.method == MONTE_CARLO):
            raise ValueError("std_error is reported for Monte Carlo results only")


def normal_cdf(x):
    """Standard normal CDF through erfc; accurate to ~1e-16 absolute."""
    return 0.5 * erfc(-np.asarray(x, dtype=float) / math.sqrt(2.0))


def folded_normal_mean(mu, sigma):
    """E|X| for X ~ N(mu, sigma^2); reduces to |mu| when sigma == 0."""
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    safe = np.where(sigma > 0, sigma, 1.0)
    z = mu / safe
    val = safe * math.sqrt(2.0 / math.pi) * np.exp(-0.5 * z * z) + mu * (2.0 * normal_cdf(z) - 1.0)
    return np.where(sigma > 0, val, np.abs(mu))


def _check(n, f):
    if n < 1:
        raise ValueError("sample size must be at least 1")
    if not 0.0 <= f <= 1.0:
        raise ValueError(f"contamination proportion must lie in [0, 1], got {f}")


def chi_squared_mean(n: float, f: float, contaminant: ContaminantDistribution | None = None) -> float:
    c = contamination_constants(contaminant)
    return (n - 1) * f * f * c.chi2_quadratic + f * c.chi2_linear + c.chi2_constant


def ssd_mean(n: float, f: float, contaminant: ContaminantDistribution | None = None) -> float:
    c = contamination_constants(contaminant)
    return ((n - 1) * f * f * c.ssd_quadratic + f * c.ssd_linear + c.ssd_constant) / n


def mad_mean(n: float, f: float, contaminant: ContaminantDistribution | None = None) -> float:
    contaminant = contaminant or uniform_contaminant()
    b = benford_probabilities()
    shift = f * (contaminant.array - b)
    p = np.clip(b + shift, 0.0, 1.0)
    sd = np.sqrt(p * (1.0 - p) / n)
    return float(np.mean(folded_normal_mean(shift, sd)))


def expected_chi_squared(n: int, f: float, contaminant: ContaminantDistribution | None = None) -> ExpectationResult:
    _check(n, f)
    return ExpectationResult(StatisticKind.CHI2, chi_squared_mean(n, f, contaminant), CLOSED_FORM)


def expected_ssd(n: int, f: float, contaminant: ContaminantDistribution | None = None) -> ExpectationResult:
    _check(n, f)
    return ExpectationResult(StatisticKind.SSD, ssd_mean(n, f, contaminant), CLOSED_FORM)


def expected_mad(n: int, f: float, contaminant: ContaminantDistribution | None = None) -> ExpectationResult:
    """Mean over digits of the folded-normal expectation of |O_d - B_d|."""
    _check(n, f)
    return ExpectationResult(StatisticKind.MAD, mad_mean(n, f, contaminant), CLOSED_FORM)


def expected_ed(n: int, f: float, contaminant: ContaminantDistribution | None = None) -> ExpectationResult:
    """First-order approximation sqrt(E[SSD]); biased upward for small n and f."""
    _check(n, f)
    return ExpectationResult(StatisticKind.ED, math.sqrt(ssd_mean(n, f, contaminant)), TAYLOR)


_CLOSED = {
    StatisticKind.CHI2: expected_chi_squared,
    StatisticKind.SSD: expected_ssd,
    StatisticKind.MAD: expected_mad,
    StatisticKind.ED: expected_ed,
}


def expected_statistic(kind: StatisticKind, n: int, f: float, contaminant=None) -> ExpectationResult:
    kind = StatisticKind(kind)
    try:
        fn = _CLOSED[kind]
    except KeyError:
        raise ValueError(f"no closed-form expectation for {kind.value}; use mc_expected_statistic") from None
    return fn(n, f, contaminant)


def mixture_array(f: float, contaminant: ContaminantDistribution | None = None) -> np.ndarray:
    contaminant = contaminant or uniform_contaminant()
    b = benford_probabilities()
    return np.clip(b + f * (contaminant.array - b), 0.0, 1.0)


@lru_cache(maxsize=24)
def _simulated(n, probs_key, replications, seed, model, workers):
    freqs = sample_frequency_matrix(n, np.asarray(probs_key), replications, seed, model, workers)
    out = all_statistic_values(freqs, n)
    for arr in out.values():
        arr.setflags(write=False)
    return out


def simulated_statistics(
    n: int,
    f: float,
    contaminant: ContaminantDistribution | None = None,
    replications: int = 5000,
    seed: int = 0,
    model: str = "multinomial",
    workers: int = 1,
) -> dict[StatisticKind, np.ndarray]:
    """Per-replicate values of all seven statistics for samples at contamination ``f``.

    Results are memoized, so callers that evaluate several statistics at the
    same (n, f, seed) share one set of draws.
    """
    _check(n, f)
    if replications < 2:
        raise ValueError("replications ≥ 2 required")
    key = tuple(float(p) for p in mixture_array(f, contaminant))
    return _simulated(int(n), key, int(replications), int(seed), model, int(workers))


def mean_and_se(values: np.ndarray) -> tuple[float, float]:
    """Order-insensitive mean (fsum) and its standard error."""
    values = np.asarray(values, dtype=float)
    m = math.fsum(values) / values.size
    var = math.fsum((values - m) ** 2) / (values.size - 1)
    return m, math.sqrt(var / values.size)


def mc_expected_statistic(
    kind: StatisticKind,
    n: int,
    f: float,
    contaminant: ContaminantDistribution | None = None,
    replications: int = 5000,
    seed: int = 0,
    workers: int = 1,
) -> ExpectationResult:
    kind = StatisticKind(kind)
    values = simulated_statistics(n, f, contaminant, replications, seed, workers=workers)[kind]
    m, se = mean_and_se(values)
    return ExpectationResult(kind, m, MONTE_CARLO, se)

