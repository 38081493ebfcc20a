"""Reproducible digit sampling.

Every replicate draws from its own Philox-4x64 stream keyed by
``(seed, replicate index)``, so a replicate's sample does not depend on how
many replicates run, in which order, or on which worker.  Multinomial counts
come from numpy's sequential binomial conditioning over categories 1..9.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor

import numpy as np

RNG_ALGORITHM = "philox4x64"
# Part of every calibration cache key; bump when sampling output changes.
RNG_VERSION = f"{RNG_ALGORITHM}/numpy-{np.__version__}/v1"

NULL_MODELS = ("multinomial", "normal")

_MASK64 = (1 << 64) - 1


def replicate_generator(seed: int, index: int) -> np.random.Generator:
    if seed < 0 or index < 0:
        raise ValueError("seed and replicate index must be non-negative")
    key = np.array([index & _MASK64, seed & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _counts_chunk(n, probs, seed, start, stop):
    out = np.empty((stop - start, len(probs)), dtype=np.int64)
    for row, i in enumerate(range(start, stop)):
        out[row] = replicate_generator(seed, i).multinomial(n, probs)
    return out


def _normal_chunk(n, probs, seed, start, stop):
    sd = np.sqrt(probs * (1.0 - probs) / n)
    out = np.empty((stop - start, len(probs)))
    for row, i in enumerate(range(start, stop)):
        out[row] = probs + sd * replicate_generator(seed, i).standard_normal(len(probs))
    return out


def _chunks(total, workers):
    size = -(-total // workers)
    return [(s, min(s + size, total)) for s in range(0, total, size)]


def _run(fn, n, probs, replications, seed, workers):
    if workers <= 1 or replications < 2 * workers:
        return fn(n, probs, seed, 0, replications)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = [pool.submit(fn, n, probs, seed, a, b) for a, b in _chunks(replications, workers)]
        return np.concatenate([p.result() for p in parts])


def _check_probs(probs) -> np.ndarray:
    p = np.asarray(probs, dtype=float)
    # numpy rejects pvals whose leading entries exceed 1 by rounding.
    return p / p.sum()


def sample_count_matrix(n: int, probs, replications: int, seed: int, workers: int = 1) -> np.ndarray:
    """``replications`` multinomial draws of size ``n``; one row per replicate."""
    if n < 1:
        raise ValueError("sample size must be at least 1")
    if replications < 1:
        raise ValueError("replications must be positive")
    return _run(_counts_chunk, int(n), _check_probs(probs), int(replications), int(seed), workers)


def sample_frequency_matrix(
    n: int, probs, replications: int, seed: int, model: str = "multinomial", workers: int = 1
) -> np.ndarray:
    """Observed-proportion vectors, one row per replicate.

    ``model="multinomial"`` is exact sampling.  ``model="normal"`` draws each
    digit proportion independently from N(p_d, p_d(1-p_d)/n), the per-digit
    normal approximation without the multinomial covariance.
    """
    if model == "multinomial":
        return sample_count_matrix(n, probs, replications, seed, workers) / n
    if model == "normal":
        if n < 1 or replications < 1:
            raise ValueError("sample size and replications must be positive")
        return _run(_normal_chunk, int(n), _check_probs(probs), int(replications), int(seed), workers)
    raise ValueError(f"unknown null model {model!r}; choose from {NULL_MODELS}")
