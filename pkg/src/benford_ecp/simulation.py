"""Contaminated-sample simulation grids and null critical values."""

from __future__ import annotations

import csv
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.stats import chi2

from .contamination import ContaminantDistribution, mixture_probabilities
from .digits import FIRST_DIGITS, DigitCounts, benford_probabilities
from .ecp import SearchConfig, estimate_ecp
from .errors import BenfordError
from .expectation import mean_and_se, simulated_statistics
from .sampling import NULL_MODELS, RNG_VERSION, replicate_generator
from .statistics import ALL_KINDS, StatisticKind

ANALYTIC = "analytic"
MONTE_CARLO = "monte-carlo"
FORMULA = "formula"

DEFAULT_NULL_REPLICATIONS = 100_000
MIN_NULL_REPLICATIONS = 1000

# Asymptotic KS coefficients c with critical value c / sqrt(n).
KS_FORMULA = {0.90: 1.22, 0.95: 1.36, 0.975: 1.48, 0.99: 1.63}

MARK_95 = "†"
MARK_99 = "*"


def sample_counts(
    n: int, f: float, contaminant: ContaminantDistribution | None = None, seed: int = 0
) -> DigitCounts:
    """One multinomial sample of n first digits from the contaminated mixture."""
    if n < 1:
        raise ValueError("sample size must be at least 1")
    p = mixture_probabilities(f, contaminant).mixture.probs
    counts = replicate_generator(seed, 0).multinomial(int(n), p / p.sum())
    return DigitCounts(counts)


# ---------------------------------------------------------------------------
# Null critical values


def weighted_chi2_sf(x: float, weights) -> float:
    """P(sum w_i Z_i^2 > x) for independent standard normals (Imhof inversion)."""
    lam = np.asarray(weights, dtype=float)
    if x <= 0:
        return 1.0
    omega = 0.5 * x

    def phase(u):
        return 0.5 * np.sum(np.arctan(lam * u))

    def envelope(u):
        return 1.0 / (u * np.prod((1.0 + (lam * u) ** 2) ** 0.25))

    head, _ = quad(lambda u: math.sin(phase(u) - omega * u) * envelope(u), 0.0, 1.0, limit=200)
    # sin(a - wu) = sin(a)cos(wu) - cos(a)sin(wu); Fourier-weighted tails converge reliably.
    tail_cos, _ = quad(lambda u: math.sin(phase(u)) * envelope(u), 1.0, np.inf, weight="cos", wvar=omega)
    tail_sin, _ = quad(lambda u: math.cos(phase(u)) * envelope(u), 1.0, np.inf, weight="sin", wvar=omega)
    val = head + tail_cos - tail_sin
    return min(max(0.5 + val / math.pi, 0.0), 1.0)


def weighted_chi2_quantile(level: float, weights) -> float:
    lam = np.asarray(weights, dtype=float)
    # The integral is best conditioned with weights of order one.
    scale = lam.sum()
    lam = lam / scale
    hi = 1.0 + 10.0 * math.sqrt(2.0 * np.sum(lam * lam))
    while weighted_chi2_sf(hi, lam) > 1.0 - level:
        hi *= 2.0
    q = brentq(lambda x: (1.0 - weighted_chi2_sf(x, lam)) - level, 1e-9, hi, xtol=1e-13, rtol=1e-12)
    return scale * q


def _normal_null_weights(kind: StatisticKind, n: int):
    """Weights of the statistic as a weighted chi-square under independent normal digits."""
    b = benford_probabilities()
    if kind is StatisticKind.CHI2:
        return 1.0 - b
    if kind in (StatisticKind.SSD, StatisticKind.ED):
        return b * (1.0 - b) / n
    return None


def _analytic_value(kind, n, level, null_model):
    if null_model == "multinomial":
        if kind is StatisticKind.CHI2:
            return float(chi2.ppf(level, len(FIRST_DIGITS) - 1))
        return None
    weights = _normal_null_weights(kind, n)
    if weights is None:
        return None
    q = weighted_chi2_quantile(level, weights)
    return math.sqrt(q) if kind is StatisticKind.ED else q


def ks_formula_value(n: int, level: float) -> float:
    try:
        coef = KS_FORMULA[round(level, 6)]
    except KeyError:
        raise ValueError(f"no KS formula coefficient for level {level}; known: {sorted(KS_FORMULA)}") from None
    return coef / math.sqrt(n)


def critical_key(kind, n, level, replications, seed, null_model) -> str:
    return f"{StatisticKind(kind).value}|{int(n)}|{level:.6g}|{int(replications)}|{int(seed)}|{null_model}|{RNG_VERSION}"


class CriticalValueCache:
    """JSON file of Monte Carlo critical values; the key includes the RNG version."""

    FILENAME = "critical_values.json"

    def __init__(self, directory: str | Path):
        self.path = Path(directory) / self.FILENAME
        self._data = None

    @classmethod
    def from_env(cls) -> "CriticalValueCache":
        default = Path.home() / ".cache" / "benford-ecp"
        return cls(os.environ.get("ECP_CACHE_DIR") or default)

    def _load(self) -> dict:
        if self._data is None:
            try:
                self._data = json.loads(self.path.read_text(encoding="utf-8"))
            except (FileNotFoundError, json.JSONDecodeError):
                self._data = {}
        return self._data

    def get(self, key: str) -> float | None:
        return self._load().get(key)

    def put(self, key: str, value: float) -> None:
        data = self._load()
        data[key] = value
        self.path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=self.path.parent, suffix=".tmp")
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(data, fh, indent=1, sort_keys=True)
        os.replace(tmp, self.path)


def _null_sample(kind, n, replications, seed, null_model, workers):
    return simulated_statistics(n, 0.0, None, replications, seed, null_model, workers)[kind]


def _resolve_method(kind, method, null_model):
    if method == "auto":
        if kind is StatisticKind.CHI2 or (null_model == "normal" and kind in (StatisticKind.SSD, StatisticKind.ED)):
            return ANALYTIC
        return MONTE_CARLO
    if method not in (ANALYTIC, MONTE_CARLO, FORMULA):
        raise ValueError(f"unknown critical-value method {method!r}")
    if method == FORMULA and kind is not StatisticKind.KS:
        raise ValueError("the formula method exists for KS only")
    return method


def null_critical_value(
    kind: StatisticKind,
    n: int,
    level: float,
    replications: int = DEFAULT_NULL_REPLICATIONS,
    seed: int = 0,
    method: str = "auto",
    null_model: str = "multinomial",
    workers: int = 1,
    cache: CriticalValueCache | None = None,
) -> float:
    """``level`` quantile of the statistic for exact Benford samples of size n.

    ``method="auto"`` is analytic where a distribution is available (chi2
    with 8 df under multinomial sampling; weighted chi-square for chi2, SSD
    and ED under the independent-normal model) and Monte Carlo otherwise.
    """
    return null_critical_values(
        kind, n, (level,), replications, seed, method, null_model, workers, cache
    ).levels[level]


@dataclass(frozen=True)
class CriticalValueTable:
    kind: StatisticKind
    n: int
    levels: dict[float, float]
    method: str
    replications: int | None = None
    seed: int | None = None
    null_model: str = "multinomial"

    def __post_init__(self):
        ordered = [self.levels[k] for k in sorted(self.levels)]
        if any(b < a for a, b in zip(ordered, ordered[1:])):
            raise ValueError("critical values must not decrease with level")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "n": self.n,
            "levels": {f"{k:g}": v for k, v in sorted(self.levels.items())},
            "method": self.method,
            "replications": self.replications,
            "seed": self.seed,
            "null_model": self.null_model,
            "rng": RNG_VERSION,
        }


def null_critical_values(
    kind: StatisticKind,
    n: int,
    levels=(0.95, 0.99),
    replications: int = DEFAULT_NULL_REPLICATIONS,
    seed: int = 0,
    method: str = "auto",
    null_model: str = "multinomial",
    workers: int = 1,
    cache: CriticalValueCache | None = None,
) -> CriticalValueTable:
    kind = StatisticKind(kind)
    if n < 1:
        raise ValueError("sample size must be at least 1")
    if null_model not in NULL_MODELS:
        raise ValueError(f"unknown null model {null_model!r}; choose from {NULL_MODELS}")
    levels = tuple(float(lv) for lv in levels)
    for lv in levels:
        if not 0.0 < lv < 1.0:
            raise ValueError("level must lie in (0, 1)")
    method = _resolve_method(kind, method, null_model)

    if method == FORMULA:
        return CriticalValueTable(kind, n, {lv: ks_formula_value(n, lv) for lv in levels}, FORMULA)
    if method == ANALYTIC:
        values = {lv: _analytic_value(kind, n, lv, null_model) for lv in levels}
        if any(v is None for v in values.values()):
            raise ValueError(f"no analytic null distribution for {kind.value} under the {null_model} model")
        return CriticalValueTable(kind, n, values, ANALYTIC, null_model=null_model)

    if replications < MIN_NULL_REPLICATIONS:
        raise ValueError(f"Monte Carlo critical values need at least {MIN_NULL_REPLICATIONS} replications")
    values = {}
    missing = []
    for lv in levels:
        hit = cache.get(critical_key(kind, n, lv, replications, seed, null_model)) if cache else None
        if hit is None:
            missing.append(lv)
        else:
            values[lv] = hit
    if missing:
        sample = _null_sample(kind, int(n), int(replications), int(seed), null_model, workers)
        for lv, q in zip(missing, np.quantile(sample, missing)):
            values[lv] = float(q)
            if cache:
                cache.put(critical_key(kind, n, lv, replications, seed, null_model), float(q))
    return CriticalValueTable(kind, n, values, MONTE_CARLO, replications, seed, null_model)


CURVE_SIZES = (2, 5, 10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10_000, 100_000, 1_000_000)

# Power of n that makes each null quantile roughly size-free.
_SCALE_POWER = {
    StatisticKind.CHI2: 0.0,
    StatisticKind.SSD: 1.0,
    StatisticKind.MAD: 0.5,
    StatisticKind.ED: 0.5,
    StatisticKind.KS: 0.5,
    StatisticKind.KUIPER: 0.5,
    StatisticKind.CVM: 1.0,
}


def critical_value_curve(kind: StatisticKind, level: float, sizes=CURVE_SIZES, **calibration):
    """Critical value as a function of n, for searches over sample size.

    Quantiles are calibrated at ``sizes``, rescaled by the statistic's natural
    power of n, and interpolated linearly in log n (held constant beyond the
    ends).
    """
    kind = StatisticKind(kind)
    power = _SCALE_POWER[kind]
    sizes = np.asarray(sorted(sizes), dtype=float)
    scaled = np.array(
        [null_critical_value(kind, int(s), level, **calibration) * s**power for s in sizes]
    )
    logs = np.log(sizes)

    def critical(n):
        return float(np.interp(math.log(n), logs, scaled)) / n**power

    critical.sizes = sizes
    critical.scaled = scaled
    return critical


# ---------------------------------------------------------------------------
# Simulation grids

TABLE1_SIZES = (100, 1000, 10_000, 100_000)
TABLE1_FRACTIONS = (0.01, 0.05, 0.25, 0.75, 0.95, 0.99)


@dataclass(frozen=True)
class GridSpec:
    sizes: tuple[int, ...] = TABLE1_SIZES
    fractions: tuple[float, ...] = TABLE1_FRACTIONS
    replications: int = DEFAULT_NULL_REPLICATIONS
    seed: int = 0
    kinds: tuple[StatisticKind, ...] = ALL_KINDS
    contaminant: ContaminantDistribution | None = None
    search: SearchConfig = field(default_factory=SearchConfig)
    null_replications: int = DEFAULT_NULL_REPLICATIONS
    null_seed: int = 0
    levels: tuple[float, float] = (0.95, 0.99)
    workers: int = 1

    def __post_init__(self):
        if any(n < 1 for n in self.sizes):
            raise ValueError("sizes must be at least 1")
        if any(not 0.0 <= f <= 1.0 for f in self.fractions):
            raise ValueError("fractions must lie in [0, 1]")
        if self.replications < 2:
            raise ValueError("replications ≥ 2 required")
        object.__setattr__(self, "kinds", tuple(StatisticKind(k) for k in self.kinds))


@dataclass
class GridCell:
    kind: StatisticKind
    n: int
    f: float
    mean: float | None = None
    std_error: float | None = None
    ecp: float | None = None
    ecp_std_error: float | None = None
    ecp_method: str | None = None
    clamped: str | None = None
    # Square-root-of-SSD inversion, reported alongside the simulated ED ECP.
    ecp_taylor: float | None = None
    marker: str = ""
    error: str | None = None

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["kind"] = self.kind.value
        return d


@dataclass
class GridResult:
    spec: GridSpec
    cells: list[GridCell]
    critical: dict[tuple[str, int], dict[float, float]]

    @property
    def failed(self) -> list[GridCell]:
        return [c for c in self.cells if c.error is not None]

    def cell(self, kind, n, f) -> GridCell:
        kind = StatisticKind(kind)
        for c in self.cells:
            if c.kind is kind and c.n == n and c.f == f:
                return c
        raise KeyError((kind, n, f))


def _marker(mean, crit):
    hi, lo = max(crit), min(crit)
    if mean > crit[hi]:
        return MARK_99
    if mean > crit[lo]:
        return MARK_95
    return ""


def _numeric_slope(kind, n, f, contaminant):
    from .ecp import _EXPECTATION

    h = 1e-4
    a, b = max(0.0, f - h), min(1.0, f + h)
    fn = _EXPECTATION[kind]
    return (fn(n, b, contaminant) - fn(n, a, contaminant)) / (b - a)


def _fill_cell(cell: GridCell, values: np.ndarray, spec: GridSpec, crit) -> None:
    cell.mean, cell.std_error = mean_and_se(values)
    cell.marker = _marker(cell.mean, crit)
    kind, n = cell.kind, cell.n
    if kind is StatisticKind.ED:
        cell.ecp_taylor = estimate_ecp(kind, cell.mean, n, spec.contaminant, "closed").f
    if kind in (StatisticKind.CHI2, StatisticKind.SSD, StatisticKind.MAD):
        est = estimate_ecp(kind, cell.mean, n, spec.contaminant, "closed")
        slope = _numeric_slope(kind, n, est.f, spec.contaminant)
        cell.ecp_std_error = cell.std_error / slope if slope > 0 else None
    else:
        est = estimate_ecp(kind, cell.mean, n, spec.contaminant, "simulated", spec.search)
        if est.slope:
            parts = [cell.std_error / est.slope] + ([est.std_error] if est.std_error else [])
            cell.ecp_std_error = math.hypot(*parts)
    cell.ecp, cell.ecp_method, cell.clamped = est.f, est.method, est.clamped


def run_grid(spec: GridSpec, progress=None) -> GridResult:
    """Mean statistic, its standard error and the recovered ECP for every (kind, n, f).

    A failing cell records its error and the remaining cells still run.
    """
    cells: list[GridCell] = []
    critical: dict[tuple[str, int], dict[float, float]] = {}
    for n in spec.sizes:
        for kind in spec.kinds:
            critical[(kind.value, n)] = null_critical_values(
                kind, n, spec.levels, spec.null_replications, spec.null_seed, workers=spec.workers
            ).levels
        for f in spec.fractions:
            try:
                sims = simulated_statistics(n, f, spec.contaminant, spec.replications, spec.seed, workers=spec.workers)
            except (MemoryError, BenfordError, ValueError) as exc:
                cells.extend(GridCell(k, n, f, error=f"{type(exc).__name__}: {exc}") for k in spec.kinds)
                continue
            for kind in spec.kinds:
                cell = GridCell(kind, n, f)
                try:
                    _fill_cell(cell, sims[kind], spec, critical[(kind.value, n)])
                except (MemoryError, BenfordError, ValueError) as exc:
                    cell.error = f"{type(exc).__name__}: {exc}"
                cells.append(cell)
                if progress:
                    progress(cell)
    return GridResult(spec, cells, critical)


CSV_FIELDS = (
    "kind", "n", "f", "mean", "std_error", "marker", "ecp", "ecp_std_error",
    "ecp_method", "clamped", "ecp_taylor", "error",
)


def write_grid_csv(result: GridResult, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS)
        writer.writeheader()
        for c in result.cells:
            row = c.to_dict()
            writer.writerow({k: "" if row[k] is None else row[k] for k in CSV_FIELDS})


def grid_to_dict(result: GridResult) -> dict:
    s = result.spec
    return {
        "spec": {
            "sizes": list(s.sizes),
            "fractions": list(s.fractions),
            "replications": s.replications,
            "seed": s.seed,
            "kinds": [k.value for k in s.kinds],
            "contaminant": (s.contaminant.name if s.contaminant else "uniform"),
            "null_replications": s.null_replications,
            "null_seed": s.null_seed,
            "search_replications": s.search.replications,
            "rng": RNG_VERSION,
        },
        "critical_values": [
            {"kind": k, "n": n, "levels": {f"{lv:g}": v for lv, v in sorted(levels.items())}}
            for (k, n), levels in result.critical.items()
        ],
        "cells": [c.to_dict() for c in result.cells],
    }


def write_grid_json(result: GridResult, path) -> None:
    Path(path).write_text(json.dumps(grid_to_dict(result), indent=2) + "\n", encoding="utf-8")


def _fmt_mean(kind, value):
    if value is None:
        return "n/a"
    return f"{value:.3f}" if kind is StatisticKind.CHI2 else f"{value:.4f}"


def format_grid(result: GridResult) -> str:
    """Fixed-width text in the layout of the classic simulation table: one block per n."""
    kinds = result.spec.kinds
    lines = []
    header = f"{'f':>6} " + " ".join(f"{k.label:>18}" for k in kinds)
    for n in result.spec.sizes:
        lines.append(f"n = {n}")
        lines.append(header)
        for f in result.spec.fractions:
            means, ecps = [], []
            for k in kinds:
                c = result.cell(k, n, f)
                if c.error:
                    means.append(f"{'error':>18}")
                    ecps.append(f"{'':>18}")
                    continue
                means.append(f"{_fmt_mean(k, c.mean) + c.marker:>18}")
                ecp = f"{100 * c.ecp:.2f}%"
                if c.ecp_taylor is not None:
                    ecp = f"{100 * c.ecp_taylor:.2f}%/{ecp}"
                ecps.append(f"{ecp:>18}")
            lines.append(f"{100 * f:>5.0f}% " + " ".join(means))
            lines.append(f"{'ECP':>6} " + " ".join(ecps))
        lines.append("")
    lines.append(f"{MARK_95} above the 95th and {MARK_99} above the 99th null percentile; ED ECP shown as sqrt-SSD/simulated.")
    return "\n".join(lines) + "\n"
