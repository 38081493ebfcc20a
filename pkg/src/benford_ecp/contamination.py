"""Contaminant distributions and the Benford/contaminant mixture."""

from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .digits import FIRST_DIGITS, FrequencyVector, benford_probabilities
from .errors import DataError

log = logging.getLogger(__name__)

# Custom contaminant files may be off by at most this much before rejection;
# anything between PROB_TOL and this is renormalized with a warning.
CUSTOM_SUM_TOL = 1e-9


@dataclass(frozen=True)
class ContaminantDistribution:
    probs: FrequencyVector
    name: str = "custom"

    @property
    def array(self) -> np.ndarray:
        return self.probs.probs

    def key(self) -> tuple[float, ...]:
        return tuple(float(p) for p in self.array)


def uniform_contaminant() -> ContaminantDistribution:
    k = len(FIRST_DIGITS)
    return ContaminantDistribution(FrequencyVector(np.full(k, 1.0 / k)), "uniform")


def degenerate_contaminant(target: int) -> ContaminantDistribution:
    """All contaminant mass on one digit; digit 9 maximizes divergence."""
    if target not in FIRST_DIGITS:
        raise DataError(f"invalid digit category {target!r}")
    probs = np.zeros(len(FIRST_DIGITS))
    probs[FIRST_DIGITS.index(target)] = 1.0
    return ContaminantDistribution(FrequencyVector(probs), f"degenerate({target})")


def custom_contaminant(probs, name: str = "custom") -> ContaminantDistribution:
    arr = np.asarray(probs, dtype=float)
    if arr.shape != (len(FIRST_DIGITS),):
        raise DataError(f"custom contaminant needs {len(FIRST_DIGITS)} probabilities")
    if np.any(~np.isfinite(arr)) or np.any(arr < 0):
        raise DataError("custom contaminant probabilities must be finite and non-negative")
    total = math.fsum(arr)
    if abs(total - 1.0) > CUSTOM_SUM_TOL:
        raise DataError(f"custom contaminant sums to {total:.12g}, not 1")
    if total != 1.0:
        log.warning("renormalizing custom contaminant (sum %.15g)", total)
        arr = arr / total
    return ContaminantDistribution(FrequencyVector(arr), name)


def read_contaminant_file(path: str | Path) -> ContaminantDistribution:
    """Nine whitespace- or comma-separated probabilities, digit order 1..9."""
    text = Path(path).read_text(encoding="utf-8")
    tokens = [t for t in re.split(r"[\s,]+", text) if t]
    try:
        values = [float(t) for t in tokens]
    except ValueError as exc:
        raise DataError(f"bad contaminant file {path}: {exc}") from None
    return custom_contaminant(values, name=f"file:{Path(path).name}")


def parse_contaminant(spec: str) -> ContaminantDistribution:
    """Parse ``uniform``, ``degenerate:D`` or ``file:PATH``."""
    if spec == "uniform":
        return uniform_contaminant()
    if spec.startswith("degenerate:"):
        try:
            target = int(spec.split(":", 1)[1])
        except ValueError:
            raise DataError(f"bad contaminant spec {spec!r}") from None
        return degenerate_contaminant(target)
    if spec.startswith("file:"):
        return read_contaminant_file(spec.split(":", 1)[1])
    raise DataError(f"unknown contaminant {spec!r}")


@dataclass(frozen=True)
class MixtureModel:
    f: float
    contaminant: ContaminantDistribution
    reference: np.ndarray
    delta: np.ndarray
    mixture: FrequencyVector


def mixture_probabilities(f: float, contaminant: ContaminantDistribution | None = None) -> MixtureModel:
    """Digit probabilities ``B + f * (NB - B)`` of a partially contaminated sample."""
    if not 0.0 <= f <= 1.0:
        raise ValueError(f"contamination proportion must lie in [0, 1], got {f}")
    contaminant = contaminant or uniform_contaminant()
    ref = benford_probabilities()
    delta = contaminant.array - ref
    p = ref + f * delta
    # p can stray below 0 or above 1 by an ulp at f == 1.
    p = np.clip(p, 0.0, 1.0)
    for arr in (ref, delta):
        arr.setflags(write=False)
    return MixtureModel(float(f), contaminant, ref, delta, FrequencyVector(p))


def proportion_moments(model: MixtureModel, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-digit mean and variance of the observed proportion in a size-``n`` sample."""
    if n < 1:
        raise ValueError("sample size must be at least 1")
    p = model.mixture.probs
    return p.copy(), p * (1.0 - p) / n


@dataclass(frozen=True)
class ContaminationConstants:
    """Coefficients of the closed-form chi-squared and SSD expectations.

    chi2: (n-1)·chi2_quadratic·f² + chi2_linear·f + chi2_constant
    n·SSD: (n-1)·ssd_quadratic·f² + ssd_linear·f + ssd_constant
    """

    chi2_quadratic: float
    chi2_linear: float
    chi2_constant: float
    ssd_quadratic: float
    ssd_linear: float
    ssd_constant: float


@lru_cache(maxsize=64)
def _constants(key: tuple[float, ...]) -> ContaminationConstants:
    nb = np.asarray(key)
    b = benford_probabilities()
    d = nb - b
    return ContaminationConstants(
        chi2_quadratic=math.fsum(d * d / b),
        chi2_linear=math.fsum(d * (1 - 2 * b) / b),
        # Sum of (1 - B_d) = number of categories minus one.
        chi2_constant=math.fsum(1 - b),
        ssd_quadratic=math.fsum(d * d),
        ssd_linear=math.fsum(d * (1 - 2 * b)),
        ssd_constant=math.fsum(b * (1 - b)),
    )


def contamination_constants(contaminant: ContaminantDistribution | None = None) -> ContaminationConstants:
    contaminant = contaminant or uniform_contaminant()
    return _constants(contaminant.key())
