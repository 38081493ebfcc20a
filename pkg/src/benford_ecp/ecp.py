"""Equivalent Contamination Proportion (ECP) estimation.

The ECP is the contamination fraction f at which the expected statistic of a
hypothetical Benford sample of the same size equals the observed statistic.
Observations below the f=0 expectation map to 0, observations at or above the
f=1 expectation map to 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .contamination import ContaminantDistribution, contamination_constants
from .errors import InversionError, SearchCapError, SearchExhaustedError
from .expectation import chi_squared_mean, mad_mean, simulated_statistics, ssd_mean
from .statistics import StatisticKind, StatisticValue

QUADRATIC = "quadratic"
ROOT_FIND = "root-find"
SIMULATED = "simulated"

NO_CLAMP = "none"
FLOOR_ZERO = "floor-zero"
CEIL_ONE = "ceil-one"

MAD_TOLERANCE = 1e-9
MAD_PROBES = 8


@dataclass(frozen=True)
class EcpEstimate:
    f: float
    kind: StatisticKind
    method: str
    clamped: str = NO_CLAMP
    std_error: float | None = None
    iterations: int = 0
    approximate: bool = False
    # Local d E[T] / d f at the estimate; simulated searches only.
    slope: float | None = None
    bracket: tuple[float, float] | None = None

    def __post_init__(self):
        if not 0.0 <= self.f <= 1.0:
            raise ValueError(f"ECP must lie in [0, 1], got {self.f}")
        if self.clamped == FLOOR_ZERO and self.f != 0.0:
            raise ValueError("floor-zero clamp requires f == 0")
        if self.clamped == CEIL_ONE and self.f != 1.0:
            raise ValueError("ceil-one clamp requires f == 1")

    @property
    def percent(self) -> float:
        return 100.0 * self.f


@dataclass(frozen=True)
class SearchConfig:
    """Settings of the simulation-based search.

    ``accept_width``: the "no significant difference" stop is honoured only
    once the bracket is narrower than this; ``tolerance`` is the hard stop.
    """

    replications: int = 5000
    confidence: float = 0.95
    tolerance: float = 1e-4
    max_iterations: int = 60
    seed: int = 0
    accept_width: float = 0.05
    workers: int = 1

    def __post_init__(self):
        if self.replications < 2:
            raise ValueError("replications ≥ 2 required")
        if not 0.0 < self.confidence < 1.0:
            raise ValueError("confidence must lie in (0, 1)")
        if self.tolerance <= 0 or self.max_iterations < 1 or self.accept_width <= 0:
            raise ValueError("tolerance, max_iterations and accept_width must be positive")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


def _value(observed) -> float:
    v = observed.value if isinstance(observed, StatisticValue) else float(observed)
    if not v >= 0:
        raise ValueError(f"observed statistic must be non-negative, got {v}")
    return v


def _quadratic(kind, obs, quad, lin, const, approximate=False) -> EcpEstimate:
    """Positive root of quad·f² + lin·f + const = obs, clamped to [0, 1]."""
    if obs <= const:
        return EcpEstimate(0.0, kind, QUADRATIC, FLOOR_ZERO, approximate=approximate)
    if obs >= quad + lin + const:
        return EcpEstimate(1.0, kind, QUADRATIC, CEIL_ONE, approximate=approximate)
    excess = obs - const
    disc = lin * lin + 4.0 * quad * excess
    assert disc >= 0.0
    # Rationalized form of (-lin + sqrt(disc)) / (2 quad); no cancellation.
    f = 2.0 * excess / (lin + math.sqrt(disc))
    return EcpEstimate(min(max(f, 0.0), 1.0), kind, QUADRATIC, approximate=approximate)


def _require_n(n, minimum=2):
    if n < minimum:
        raise ValueError(f"sample size must be at least {minimum}")


def ecp_chi_squared(observed, n: int, contaminant: ContaminantDistribution | None = None) -> EcpEstimate:
    _require_n(n)
    c = contamination_constants(contaminant)
    return _quadratic(
        StatisticKind.CHI2, _value(observed), (n - 1) * c.chi2_quadratic, c.chi2_linear, c.chi2_constant
    )


def ecp_ssd(observed, n: int, contaminant: ContaminantDistribution | None = None) -> EcpEstimate:
    _require_n(n)
    c = contamination_constants(contaminant)
    v = _value(observed)
    quad, lin, const = (n - 1) * c.ssd_quadratic, c.ssd_linear, c.ssd_constant
    # Clamp on the SSD scale, then work on n·SSD so the coefficients stay O(1).
    if v <= const / n:
        return EcpEstimate(0.0, StatisticKind.SSD, QUADRATIC, FLOOR_ZERO)
    if v >= (quad + lin + const) / n:
        return EcpEstimate(1.0, StatisticKind.SSD, QUADRATIC, CEIL_ONE)
    return _quadratic(StatisticKind.SSD, n * v, quad, lin, const)


def ecp_ed_approx(observed, n: int, contaminant: ContaminantDistribution | None = None) -> EcpEstimate:
    """ED inverted through sqrt(E[SSD]); less precise for small n and f."""
    _require_n(n)
    c = contamination_constants(contaminant)
    v = _value(observed)
    quad, lin, const = (n - 1) * c.ssd_quadratic, c.ssd_linear, c.ssd_constant
    # Clamp on the ED scale; squaring a square root can land an ulp past the bound.
    if v <= math.sqrt(const / n):
        return EcpEstimate(0.0, StatisticKind.ED, QUADRATIC, FLOOR_ZERO, approximate=True)
    if v >= math.sqrt((quad + lin + const) / n):
        return EcpEstimate(1.0, StatisticKind.ED, QUADRATIC, CEIL_ONE, approximate=True)
    return _quadratic(StatisticKind.ED, n * v * v, quad, lin, const, approximate=True)


def bisect_increasing(fn, target, lo=0.0, hi=1.0, tol=MAD_TOLERANCE):
    """Bisection for fn(x) = target with fn increasing on [lo, hi].

    Returns (root, iterations).
    """
    it = 0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if fn(mid) < target:
            lo = mid
        else:
            hi = mid
        it += 1
    return 0.5 * (lo + hi), it


def ecp_mad(observed, n: int, contaminant: ContaminantDistribution | None = None, tol: float = MAD_TOLERANCE) -> EcpEstimate:
    """Numeric inversion of the folded-normal MAD expectation.

    Raises InversionError when the expectation is not increasing on the probe
    grid, rather than returning a silently wrong root.
    """
    _require_n(n, 1)
    v = _value(observed)
    probes = np.linspace(0.0, 1.0, MAD_PROBES + 2)
    curve = np.array([mad_mean(n, f, contaminant) for f in probes])
    if not curve[0] < curve[-1] or np.any(np.diff(curve) <= 0):
        raise InversionError("inversion bracket invalid")
    kind = StatisticKind.MAD
    if v <= curve[0]:
        return EcpEstimate(0.0, kind, ROOT_FIND, FLOOR_ZERO)
    if v >= curve[-1]:
        return EcpEstimate(1.0, kind, ROOT_FIND, CEIL_ONE)
    # Start from the probe interval that holds the root.
    k = int(np.searchsorted(curve, v))
    f, it = bisect_increasing(lambda x: mad_mean(n, x, contaminant), v, probes[k - 1], probes[k], tol)
    return EcpEstimate(f, kind, ROOT_FIND, iterations=it)


@dataclass
class _Point:
    f: float
    values: np.ndarray
    mean: float = field(init=False)
    se: float = field(init=False)

    def __post_init__(self):
        self.mean = float(np.mean(self.values))
        self.se = float(np.std(self.values, ddof=1) / math.sqrt(self.values.size))


def _paired_se(a: _Point, b: _Point) -> float:
    d = a.values - b.values
    return float(np.std(d, ddof=1) / math.sqrt(d.size))


def ecp_simulated(
    kind: StatisticKind,
    observed,
    n: int,
    contaminant: ContaminantDistribution | None = None,
    config: SearchConfig = SearchConfig(),
) -> EcpEstimate:
    """Simulation-based ECP search.

    Monte Carlo means at f=0 and f=1 decide the clamps.  Inside the range the
    search bisects on f; each candidate's Monte Carlo mean is compared with the
    observation by a two-sided z-test, and the search stops at the first
    non-significant difference once the bracket is narrower than
    ``config.accept_width``, or when the bracket falls below
    ``config.tolerance``.  Every candidate reuses the same replicate streams
    (common random numbers).
    """
    kind = StatisticKind(kind)
    _require_n(n, 1)
    v = _value(observed)
    z_crit = float(norm.ppf(0.5 + config.confidence / 2.0))

    def evaluate(f):
        sims = simulated_statistics(n, f, contaminant, config.replications, config.seed, workers=config.workers)
        return _Point(f, sims[kind])

    lo, hi = evaluate(0.0), evaluate(1.0)
    if not lo.mean < hi.mean:
        raise InversionError("inversion bracket invalid")
    if v <= lo.mean:
        return EcpEstimate(0.0, kind, SIMULATED, FLOOR_ZERO, iterations=2)
    if v >= hi.mean:
        return EcpEstimate(1.0, kind, SIMULATED, CEIL_ONE, iterations=2)

    it = 2
    for _ in range(config.max_iterations):
        width = hi.f - lo.f
        if width < config.tolerance:
            break
        mid = evaluate(0.5 * (lo.f + hi.f))
        it += 1
        # Means outside the bracket beyond Monte Carlo noise: not monotone.
        if mid.mean < lo.mean - z_crit * _paired_se(mid, lo) or mid.mean > hi.mean + z_crit * _paired_se(hi, mid):
            raise InversionError("inversion bracket invalid")
        if width < config.accept_width and abs(mid.mean - v) <= z_crit * mid.se:
            return _finish(kind, mid.f, mid.se, it, (lo.f, hi.f), evaluate)
        if mid.mean < v:
            lo = mid
        else:
            hi = mid
    else:
        if hi.f - lo.f >= config.tolerance:
            raise SearchExhaustedError("maximum iterations exhausted", (lo.f, hi.f))
    return _finish(kind, 0.5 * (lo.f + hi.f), 0.5 * (lo.se + hi.se), it, (lo.f, hi.f), evaluate)


SLOPE_STEP = 0.025


def _finish(kind, f, mean_se, iterations, bracket, evaluate):
    # Central difference over a fixed step; the final bracket is too narrow
    # for a stable slope once common random numbers make nearby draws equal.
    a, b = max(0.0, f - SLOPE_STEP), min(1.0, f + SLOPE_STEP)
    slope = (evaluate(b).mean - evaluate(a).mean) / (b - a)
    std_error = mean_se / slope if slope > 0 else None
    return EcpEstimate(
        f, kind, SIMULATED, std_error=std_error, iterations=iterations, slope=slope, bracket=bracket
    )


def estimate_ecp(
    kind: StatisticKind,
    observed,
    n: int,
    contaminant: ContaminantDistribution | None = None,
    method: str = "auto",
    config: SearchConfig | None = None,
) -> EcpEstimate:
    """Dispatch to the right estimator.

    ``method``: ``auto`` (closed form for chi2/SSD/MAD, Taylor form for ED,
    simulation otherwise), ``closed`` or ``simulated``.
    """
    kind = StatisticKind(kind)
    if method not in ("auto", "closed", "simulated"):
        raise ValueError(f"unknown method {method!r}")
    if method == "simulated" or (method == "auto" and kind in (StatisticKind.KS, StatisticKind.KUIPER, StatisticKind.CVM)):
        return ecp_simulated(kind, observed, n, contaminant, config or SearchConfig())
    if kind is StatisticKind.CHI2:
        return ecp_chi_squared(observed, n, contaminant)
    if kind is StatisticKind.SSD:
        return ecp_ssd(observed, n, contaminant)
    if kind is StatisticKind.MAD:
        return ecp_mad(observed, n, contaminant)
    if kind is StatisticKind.ED:
        return ecp_ed_approx(observed, n, contaminant)
    raise ValueError(f"no closed-form ECP for {kind.value}; use method='simulated'")


PLANNING_KINDS = (StatisticKind.CHI2, StatisticKind.SSD, StatisticKind.MAD)

_EXPECTATION = {
    StatisticKind.CHI2: chi_squared_mean,
    StatisticKind.SSD: ssd_mean,
    StatisticKind.MAD: mad_mean,
}


def min_ecp_for_significance(
    kind: StatisticKind,
    n: int,
    level: float,
    contaminant: ContaminantDistribution | None = None,
    critical_value: float | None = None,
    **calibration,
) -> float:
    """Smallest f whose expected statistic reaches the ``level`` null quantile at size n.

    ``critical_value`` overrides calibration; otherwise ``calibration`` is
    forwarded to :func:`benford_ecp.simulation.null_critical_value`.
    """
    kind = StatisticKind(kind)
    if kind not in PLANNING_KINDS:
        raise ValueError("planning tables cover chi2, ssd and mad only")
    _require_n(n)
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    if critical_value is None:
        from .simulation import null_critical_value

        critical_value = null_critical_value(kind, n, level, **calibration)
    return estimate_ecp(kind, critical_value, n, contaminant, method="closed").f


DEFAULT_N_CAP = 10**8


def min_n_for_significance(
    kind: StatisticKind,
    f: float,
    level: float,
    contaminant: ContaminantDistribution | None = None,
    critical=None,
    cap: int = DEFAULT_N_CAP,
    **calibration,
) -> int:
    """Smallest n whose expected statistic at contamination f exceeds the null quantile.

    ``critical`` is a callable n -> critical value (see
    :func:`benford_ecp.simulation.critical_value_curve`); built from
    ``calibration`` when omitted.
    """
    kind = StatisticKind(kind)
    if kind not in PLANNING_KINDS:
        raise ValueError("planning tables cover chi2, ssd and mad only")
    if not 0.0 < f <= 1.0:
        raise ValueError("f must lie in (0, 1]")
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    if critical is None:
        from .simulation import critical_value_curve

        critical = critical_value_curve(kind, level, **calibration)
    expect = _EXPECTATION[kind]

    def exceeds(n):
        return expect(n, f, contaminant) > critical(n)

    if exceeds(2):
        return 2
    lo, hi = 2, 4
    while not exceeds(hi):
        if hi >= cap:
            raise SearchCapError("exceeds search cap")
        lo, hi = hi, min(2 * hi, cap)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if exceeds(mid):
            hi = mid
        else:
            lo = mid
    return hi
