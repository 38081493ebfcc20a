"""Leading-digit extraction, counting and the Benford reference distribution."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError

FIRST_DIGITS: tuple[int, ...] = tuple(range(1, 10))

# Relative slack used when snapping a normalized mantissa to its integer part.
# Absorbs representation noise such as 0.3 * 10 == 2.9999999999999996.
_MANTISSA_SLACK = 1e-12

PROB_TOL = 1e-12


def benford_probabilities(categories: Sequence[int] = FIRST_DIGITS) -> np.ndarray:
    """Benford probabilities ``log10(1 + 1/d)`` for the first-digit categories."""
    if tuple(categories) != FIRST_DIGITS:
        raise DataError("unsupported digit scheme")
    d = np.asarray(FIRST_DIGITS, dtype=float)
    return np.log10(1.0 + 1.0 / d)


def _as_prob_array(probs, size: int | None = None, tol: float = PROB_TOL) -> np.ndarray:
    arr = np.array(probs, dtype=float)
    if arr.ndim != 1:
        raise DataError("probability vector must be one-dimensional")
    if size is not None and arr.size != size:
        raise DataError(f"expected {size} probabilities, got {arr.size}")
    if np.any(~np.isfinite(arr)) or np.any(arr < 0) or np.any(arr > 1):
        raise DataError("probabilities must lie in [0, 1]")
    if abs(math.fsum(arr) - 1.0) > tol:
        raise DataError(f"probabilities sum to {math.fsum(arr):.15g}, not 1")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class FrequencyVector:
    """Proportions over the digit categories (observed, reference or mixture)."""

    probs: np.ndarray
    labels: tuple[int, ...] = FIRST_DIGITS

    def __post_init__(self):
        object.__setattr__(self, "probs", _as_prob_array(self.probs, len(self.labels)))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.probs, dtype=dtype)

    def __len__(self):
        return len(self.labels)

    def __getitem__(self, digit: int) -> float:
        return float(self.probs[self.labels.index(digit)])

    def as_dict(self) -> dict[int, float]:
        return {d: float(p) for d, p in zip(self.labels, self.probs)}


@dataclass(frozen=True)
class DigitCategorySet:
    """Ordered digit labels plus their reference (Benford) probabilities.

    Only the first-digit preset exists; the structure itself does not assume
    nine categories.
    """

    labels: tuple[int, ...]
    reference_probs: np.ndarray

    def __post_init__(self):
        labels = tuple(self.labels)
        if len(set(labels)) != len(labels) or list(labels) != sorted(labels):
            raise DataError("digit labels must be distinct and ordered")
        ref = _as_prob_array(self.reference_probs, len(labels))
        if np.any(ref <= 0):
            raise DataError("reference probabilities must be strictly positive")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "reference_probs", ref)

    @classmethod
    def first_digit(cls) -> "DigitCategorySet":
        return cls(FIRST_DIGITS, benford_probabilities(FIRST_DIGITS))

    @property
    def size(self) -> int:
        return len(self.labels)


@dataclass(frozen=True)
class DigitCounts:
    counts: np.ndarray
    skipped: int = 0
    labels: tuple[int, ...] = FIRST_DIGITS

    def __post_init__(self):
        arr = np.array(self.counts, dtype=np.int64)
        if arr.shape != (len(self.labels),):
            raise DataError(f"expected {len(self.labels)} counts, got shape {arr.shape}")
        if np.any(arr < 0):
            raise DataError("counts must be non-negative")
        arr.setflags(write=False)
        object.__setattr__(self, "counts", arr)

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    def as_dict(self) -> dict[int, int]:
        return {d: int(c) for d, c in zip(self.labels, self.counts)}


def extract_first_digit(x: float) -> int:
    """Leading significant decimal digit of ``|x|``.

    >>> extract_first_digit(0.00456)
    4
    """
    x = float(x)
    if x == 0.0 or not math.isfinite(x):
        raise DataError("no significant digit")
    return int(first_digits(np.array([x]))[0])


def first_digits(values: np.ndarray) -> np.ndarray:
    """Vectorized leading digits for finite, nonzero values."""
    m = np.abs(np.asarray(values, dtype=float))
    if np.any(m == 0) or np.any(~np.isfinite(m)):
        raise DataError("no significant digit")
    e = np.floor(np.log10(m))
    # Keep 10**-e finite for subnormal inputs.
    tiny = e < -290
    m = m * np.where(tiny, 1e100, 1.0)
    e = np.where(tiny, e + 100, e)
    # Dividing by an exact power of ten (e >= 0) or multiplying by one (e < 0)
    # keeps the rounding error at one ulp for |e| <= 22.
    scaled = np.where(e >= 0, m / 10.0 ** np.maximum(e, 0), m * 10.0 ** np.maximum(-e, 0))
    scaled = np.where(scaled < 1.0, scaled * 10.0, scaled)
    scaled = np.where(scaled >= 10.0, scaled / 10.0, scaled)
    d = np.floor(scaled * (1.0 + _MANTISSA_SLACK)).astype(np.int64)
    # A mantissa within the slack of 10 belongs to the next decade.
    d[d >= 10] = 1
    return d


@dataclass(frozen=True)
class IngestPolicy:
    """How zeros and negatives are treated before digit extraction.

    ``negatives``: ``"abs"`` (default) or ``"drop"``.
    ``zeros``: ``"drop"`` (default) or ``"error"``.
    Non-finite values are always dropped.
    """

    negatives: str = "abs"
    zeros: str = "drop"

    def __post_init__(self):
        if self.negatives not in ("abs", "drop"):
            raise ValueError(f"unknown negatives policy {self.negatives!r}")
        if self.zeros not in ("drop", "error"):
            raise ValueError(f"unknown zeros policy {self.zeros!r}")


def count_digits(values: Iterable[float], policy: IngestPolicy = IngestPolicy()) -> DigitCounts:
    arr = np.asarray(list(values) if not isinstance(values, np.ndarray) else values, dtype=float)
    keep = np.isfinite(arr)
    zero = keep & (arr == 0)
    if policy.zeros == "error" and zero.any():
        raise DataError("dataset contains zeros")
    keep &= ~zero
    if policy.negatives == "drop":
        keep &= arr > 0
    kept = arr[keep]
    if kept.size == 0:
        raise DataError("empty dataset")
    digits = first_digits(kept)
    counts = np.bincount(digits, minlength=10)[1:10]
    return DigitCounts(counts, skipped=int(arr.size - kept.size))


def frequencies(counts: DigitCounts) -> FrequencyVector:
    n = counts.n
    if n == 0:
        raise DataError("empty dataset")
    return FrequencyVector(counts.counts / n, counts.labels)


@dataclass
class ParsedInput:
    values: list[float] = field(default_factory=list)
    parse_failures: int = 0


def read_values(
    path: str | Path,
    column: int | str | None = None,
    delimiter: str | None = None,
    skip_header: bool = False,
) -> ParsedInput:
    """Read numbers from a newline-delimited file or one column of a delimited file.

    ``column`` may be a 0-based index or, with ``skip_header``, a header name.
    Values that fail to parse are counted in ``parse_failures``.
    """
    out = ParsedInput()
    with open(path, newline="", encoding="utf-8") as fh:
        if column is None and delimiter is None:
            lines = iter(fh)
            if skip_header:
                next(lines, None)
            tokens = (line.strip() for line in lines)
        else:
            reader = csv.reader(fh, delimiter=delimiter or ",")
            idx = 0
            if skip_header:
                header = next(reader, [])
                if isinstance(column, str) and not column.isdigit():
                    try:
                        idx = [h.strip() for h in header].index(column)
                    except ValueError:
                        raise DataError(f"column {column!r} not in header") from None
                elif column is not None:
                    idx = int(column)
            elif column is not None:
                if isinstance(column, str) and not column.isdigit():
                    raise DataError("named columns require a header row")
                idx = int(column)
            tokens = (row[idx].strip() if idx < len(row) else "" for row in reader)
        for tok in tokens:
            if not tok:
                continue
            try:
                out.values.append(float(tok))
            except ValueError:
                out.parse_failures += 1
    return out
