"""Divergence statistics between observed digit proportions and Benford's law.

Every statistic accepts a single proportion vector or a 2-D array with one
vector per row; the batch form is what the Monte Carlo code uses.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .digits import benford_probabilities


class StatisticKind(str, enum.Enum):
    CHI2 = "chi2"
    SSD = "ssd"
    MAD = "mad"
    ED = "ed"
    KS = "ks"
    KUIPER = "kuiper"
    CVM = "cvm"

    @classmethod
    def parse(cls, text: str) -> "StatisticKind":
        try:
            return cls(text.lower())
        except ValueError:
            raise ValueError(
                f"unknown statistic {text!r}; choose from {', '.join(k.value for k in cls)}"
            ) from None

    @property
    def label(self) -> str:
        return _LABELS[self]


_LABELS = {
    StatisticKind.CHI2: "Chi-squared",
    StatisticKind.SSD: "SSD",
    StatisticKind.MAD: "MAD",
    StatisticKind.ED: "ED",
    StatisticKind.KS: "KS",
    StatisticKind.KUIPER: "Kuiper",
    StatisticKind.CVM: "CvM",
}

ALL_KINDS: tuple[StatisticKind, ...] = tuple(StatisticKind)
CLOSED_FORM_KINDS = (StatisticKind.CHI2, StatisticKind.SSD, StatisticKind.MAD)
SIMULATED_KINDS = (StatisticKind.ED, StatisticKind.KS, StatisticKind.KUIPER, StatisticKind.CVM)


@dataclass(frozen=True)
class StatisticValue:
    kind: StatisticKind
    value: float
    n: int | None = None

    def __post_init__(self):
        if not self.value >= 0:
            raise ValueError(f"statistic value must be non-negative, got {self.value}")


def _dev(obs, reference=None) -> np.ndarray:
    ref = benford_probabilities() if reference is None else np.asarray(reference, dtype=float)
    return np.asarray(obs, dtype=float) - ref


def _cdf_gaps(obs, reference=None) -> np.ndarray:
    return np.cumsum(_dev(obs, reference), axis=-1)


def chi_squared_values(obs, n, reference=None):
    ref = benford_probabilities() if reference is None else np.asarray(reference, dtype=float)
    d = _dev(obs, ref)
    return n * np.sum(d * d / ref, axis=-1)


def ssd_values(obs, reference=None):
    d = _dev(obs, reference)
    return np.sum(d * d, axis=-1)


def mad_values(obs, reference=None):
    d = _dev(obs, reference)
    return np.mean(np.abs(d), axis=-1)


def euclidean_values(obs, reference=None):
    return np.sqrt(ssd_values(obs, reference))


def ks_values(obs, reference=None):
    return np.max(np.abs(_cdf_gaps(obs, reference)), axis=-1)


def kuiper_values(obs, reference=None):
    g = _cdf_gaps(obs, reference)
    return np.max(np.maximum(g, 0.0), axis=-1) + np.max(np.maximum(-g, 0.0), axis=-1)


def cvm_values(obs, reference=None):
    g = _cdf_gaps(obs, reference)
    return np.sum(g * g, axis=-1)


def statistic_values(kind: StatisticKind, obs, n, reference=None):
    """Batch evaluation dispatcher; ``n`` only matters for chi-squared."""
    kind = StatisticKind(kind)
    if kind is StatisticKind.CHI2:
        return chi_squared_values(obs, n, reference)
    return _BATCH[kind](obs, reference)


_BATCH = {
    StatisticKind.SSD: ssd_values,
    StatisticKind.MAD: mad_values,
    StatisticKind.ED: euclidean_values,
    StatisticKind.KS: ks_values,
    StatisticKind.KUIPER: kuiper_values,
    StatisticKind.CVM: cvm_values,
}


def all_statistic_values(obs, n, reference=None) -> dict[StatisticKind, np.ndarray]:
    return {k: statistic_values(k, obs, n, reference) for k in ALL_KINDS}


def _value(kind, raw, n) -> StatisticValue:
    # Rounding can leave -0.0 or a denormal negative; statistics are >= 0.
    return StatisticValue(kind, max(float(raw), 0.0), n)


def chi_squared(obs, n: int) -> StatisticValue:
    """Pearson chi-squared ``n * sum((O - B)^2 / B)`` on proportions."""
    if n < 1:
        raise ValueError("sample size must be at least 1")
    return _value(StatisticKind.CHI2, chi_squared_values(obs, n), n)


def ssd(obs, n: int | None = None) -> StatisticValue:
    return _value(StatisticKind.SSD, ssd_values(obs), n)


def mad(obs, n: int | None = None) -> StatisticValue:
    return _value(StatisticKind.MAD, mad_values(obs), n)


def euclidean(obs, n: int | None = None) -> StatisticValue:
    return _value(StatisticKind.ED, euclidean_values(obs), n)


def ks(obs, n: int | None = None) -> StatisticValue:
    """Largest absolute gap between the observed and Benford CDFs over digits 1..9."""
    return _value(StatisticKind.KS, ks_values(obs), n)


def kuiper(obs, n: int | None = None) -> StatisticValue:
    """D+ + D- over the discrete CDF gaps."""
    return _value(StatisticKind.KUIPER, kuiper_values(obs), n)


def cvm(obs, n: int | None = None) -> StatisticValue:
    """Unweighted sum of squared CDF gaps (the d=9 gap is always zero)."""
    return _value(StatisticKind.CVM, cvm_values(obs), n)


def compute_statistic(kind: StatisticKind, obs, n: int) -> StatisticValue:
    kind = StatisticKind(kind)
    if kind is StatisticKind.CHI2:
        return chi_squared(obs, n)
    return _value(kind, statistic_values(kind, obs, n), n)


def compute_all(obs, n: int) -> dict[StatisticKind, StatisticValue]:
    return {k: compute_statistic(k, obs, n) for k in ALL_KINDS}


# Cut points are exclusive upper bounds of each class; a value sitting exactly
# on a cut point falls in the stricter (lower) class.
MAD_CUTOFFS = (
    (0.006, "close conformity"),
    (0.012, "acceptable conformity"),
    (0.015, "marginally acceptable conformity"),
)
MAD_NONCONFORMITY = "nonconformity"

SSD_CUTOFFS = (
    (0.0002, "perfectly Benford"),
    (0.0025, "acceptable close"),
    (0.0100, "marginally Benford"),
)
SSD_NONCONFORMITY = "non-Benford"


def _classify(value: float, cutoffs, last: str) -> str:
    if value < 0:
        raise ValueError("statistic value must be non-negative")
    for cut, label in cutoffs:
        if value <= cut:
            return label
    return last


def classify_mad(value: float) -> str:
    """First-digit MAD conformity class (cut points 0.006 / 0.012 / 0.015)."""
    return _classify(value, MAD_CUTOFFS, MAD_NONCONFORMITY)


def classify_ssd(value: float) -> str:
    """First-digit SSD conformity class (cut points 0.0002 / 0.0025 / 0.0100)."""
    return _classify(value, SSD_CUTOFFS, SSD_NONCONFORMITY)
