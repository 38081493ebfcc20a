import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from benford_ecp.contamination import (
    contamination_constants,
    custom_contaminant,
    degenerate_contaminant,
    mixture_probabilities,
    parse_contaminant,
    proportion_moments,
    read_contaminant_file,
    uniform_contaminant,
)
from benford_ecp.errors import DataError

mpmath.mp.dps = 30
B = [mpmath.log10(1 + mpmath.mpf(1) / d) for d in range(1, 10)]


def test_uniform_contaminant_and_delta():
    u = uniform_contaminant()
    assert u.probs[1] == pytest.approx(0.111111, abs=5e-7)
    m = mixture_probabilities(0.3, u)
    assert m.delta[0] == pytest.approx(-0.189919, abs=5e-7)
    assert m.delta[8] == pytest.approx(0.065354, abs=5e-7)


def test_degenerate_contaminant():
    assert degenerate_contaminant(9).probs[9] == 1.0
    assert degenerate_contaminant(1).probs[1] == 1.0
    assert math.fsum(degenerate_contaminant(4).array) == 1.0
    with pytest.raises(DataError):
        degenerate_contaminant(0)


def test_mixture_examples():
    b = np.array([float(x) for x in B])
    assert np.allclose(mixture_probabilities(0).mixture.probs, b, atol=1e-15)
    assert np.allclose(mixture_probabilities(1).mixture.probs, 1 / 9, atol=1e-15)
    assert mixture_probabilities(0.5).mixture[1] == pytest.approx(0.206071, abs=5e-7)
    with pytest.raises(ValueError):
        mixture_probabilities(1.01)


def test_proportion_moments_examples():
    mean, var = proportion_moments(mixture_probabilities(0), 100)
    assert mean[0] == pytest.approx(0.301030, abs=5e-7)
    assert var[0] == pytest.approx(float(B[0] * (1 - B[0]) / 100), abs=1e-15)
    mean, var = proportion_moments(mixture_probabilities(1, degenerate_contaminant(9)), 37)
    assert mean[8] == 1.0 and var[8] == 0.0
    mean, var = proportion_moments(mixture_probabilities(0.25), 1000)
    assert mean[8] == pytest.approx(0.062096, abs=5e-7)
    assert var[8] == pytest.approx(5.8240e-5, abs=5e-9)
    with pytest.raises(ValueError):
        proportion_moments(mixture_probabilities(0.1), 0)


@given(st.floats(0, 1), st.lists(st.floats(0.01, 1), min_size=9, max_size=9))
def test_mixture_invariants(f, weights):
    w = np.array(weights) / math.fsum(weights)
    c = custom_contaminant(w / math.fsum(w))
    m = mixture_probabilities(f, c)
    assert abs(math.fsum(m.mixture.probs) - 1) < 1e-12
    assert abs(math.fsum(m.delta)) < 1e-12
    assert np.allclose(m.mixture.probs - m.reference, f * m.delta, atol=1e-15)


def test_constants_against_mpmath_oracle():
    nb = mpmath.mpf(1) / 9
    d = [nb - b for b in B]
    oracle = {
        "chi2_quadratic": sum(x * x / b for x, b in zip(d, B)),
        "chi2_linear": sum(x * (1 - 2 * b) / b for x, b in zip(d, B)),
        "chi2_constant": sum(1 - b for b in B),
        "ssd_quadratic": sum(x * x for x in d),
        "ssd_linear": sum(x * (1 - 2 * b) for x, b in zip(d, B)),
        "ssd_constant": sum(b * (1 - b) for b in B),
    }
    c = contamination_constants()
    for name, value in oracle.items():
        assert getattr(c, name) == pytest.approx(float(value), abs=1e-14), name
    assert c.chi2_constant == pytest.approx(8.0, abs=1e-14)


def test_custom_contaminant_validation(tmp_path, caplog):
    with pytest.raises(DataError):
        custom_contaminant([0.2] * 9)
    with pytest.raises(DataError):
        custom_contaminant([0.5] * 2)
    p = np.full(9, 1 / 9)
    p[0] += 5e-11
    with caplog.at_level("WARNING"):
        c = custom_contaminant(p)
    assert math.fsum(c.array) == pytest.approx(1.0, abs=1e-15)
    assert "renormalizing" in caplog.text

    f = tmp_path / "nb.txt"
    f.write_text("0.1, 0.1 0.1\n0.1 0.1 0.1 0.1 0.1 0.2\n")
    assert read_contaminant_file(f).probs[9] == pytest.approx(0.2)
    assert parse_contaminant(f"file:{f}").name == "file:nb.txt"
    assert parse_contaminant("degenerate:9").name == "degenerate(9)"
    assert parse_contaminant("uniform").name == "uniform"
    for bad in ("gaussian", "degenerate:x"):
        with pytest.raises(DataError):
            parse_contaminant(bad)
