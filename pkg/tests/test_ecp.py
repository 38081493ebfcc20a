import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq

from benford_ecp import ecp as ecp_module
from benford_ecp.contamination import contamination_constants, degenerate_contaminant, mixture_probabilities
from benford_ecp.ecp import (
    CEIL_ONE,
    FLOOR_ZERO,
    EcpEstimate,
    SearchConfig,
    bisect_increasing,
    ecp_chi_squared,
    ecp_ed_approx,
    ecp_mad,
    ecp_simulated,
    ecp_ssd,
    estimate_ecp,
    min_ecp_for_significance,
    min_n_for_significance,
)
from benford_ecp.errors import InversionError, SearchCapError, SearchExhaustedError
from benford_ecp.expectation import (
    expected_chi_squared,
    expected_ed,
    expected_mad,
    expected_ssd,
    mc_expected_statistic,
)
from benford_ecp.statistics import StatisticKind, StatisticValue, compute_all


def brentq_oracle(expect, obs, n):
    return brentq(lambda f: expect(n, f).value - obs, 0.0, 1.0, xtol=1e-14)


def test_chi_squared_examples():
    assert ecp_chi_squared(14, 100).f == pytest.approx(0.346, abs=0.002)
    est = ecp_chi_squared(7.2, 500)
    assert est.f == 0.0 and est.clamped == FLOOR_ZERO
    assert ecp_chi_squared(15.507, 100).f == pytest.approx(0.3914, abs=5e-5)
    assert ecp_chi_squared(StatisticValue(StatisticKind.CHI2, 14.0, 100), 100).f == ecp_chi_squared(14, 100).f


def test_ssd_examples():
    assert ecp_ssd(0.0305, 100000).f == pytest.approx(0.7503, abs=0.002)
    n = 1234
    est = ecp_ssd(0.8345 / n, n)
    assert est.f == 0.0 and est.clamped == FLOOR_ZERO
    # The tabulated 0.0002 is the display-rounded mean 0.000219 of the f=5% cell.
    assert ecp_ssd(0.000219, 10000).f == pytest.approx(0.0501, abs=0.002)
    assert ecp_ssd(0.0002, 10000).f == pytest.approx(0.04621, abs=1e-5)


def test_mad_examples():
    assert ecp_mad(0.0296, 125).f == pytest.approx(0.3473, abs=0.005)
    assert ecp_mad(0.0212, 200).f == pytest.approx(0.22, abs=0.01)
    assert ecp_mad(0.0011, 100000).f == pytest.approx(0.0142, abs=0.001)


def test_ed_examples():
    est = ecp_ed_approx(0.1749, 100000)
    assert est.approximate and est.method == "quadratic"
    assert est.f == pytest.approx(0.7503, abs=0.003)
    est = ecp_ed_approx(0.0878, 100)
    assert est.f == 0.0 and est.clamped == FLOOR_ZERO
    assert ecp_ed_approx(0.0589, 10000).f == pytest.approx(0.2496, abs=0.003)


@pytest.mark.parametrize("n", [100, 1000, 10000])
@pytest.mark.parametrize("f", [0.05, 0.25, 0.75, 0.95])
def test_round_trip(n, f):
    assert ecp_chi_squared(expected_chi_squared(n, f).value, n).f == pytest.approx(f, abs=1e-6)
    assert ecp_ssd(expected_ssd(n, f).value, n).f == pytest.approx(f, abs=1e-6)
    assert ecp_ed_approx(expected_ed(n, f).value, n).f == pytest.approx(f, abs=1e-6)
    assert ecp_mad(expected_mad(n, f).value, n).f == pytest.approx(f, abs=1e-4)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 10**6), st.floats(0.0, 60.0))
def test_quadratic_root_matches_brentq(n, obs):
    est = ecp_chi_squared(obs, n)
    lo, hi = expected_chi_squared(n, 0).value, expected_chi_squared(n, 1).value
    if obs <= lo:
        assert est.clamped == FLOOR_ZERO
    elif obs >= hi:
        assert est.clamped == CEIL_ONE
    else:
        assert est.f == pytest.approx(brentq_oracle(expected_chi_squared, obs, n), abs=1e-10)


@settings(max_examples=25, deadline=None)
@given(st.integers(10, 10**6), st.floats(0.0, 0.08))
def test_mad_root_matches_brentq(n, obs):
    est = ecp_mad(obs, n)
    assert 0.0 <= est.f <= 1.0
    if est.clamped == "none":
        assert est.f == pytest.approx(brentq_oracle(expected_mad, obs, n), abs=1e-8)


@pytest.mark.parametrize("fn, expect", [(ecp_chi_squared, expected_chi_squared), (ecp_ssd, expected_ssd), (ecp_mad, expected_mad), (ecp_ed_approx, expected_ed)])
@pytest.mark.parametrize("n", [2, 50, 5000])
def test_clamps(fn, expect, n):
    lo, hi = expect(n, 0).value, expect(n, 1).value
    for obs in (0.0, lo * 0.5, lo):
        est = fn(obs, n)
        assert est.f == 0.0 and est.clamped == FLOOR_ZERO
    for obs in (hi, hi * 1.5, hi * 100):
        est = fn(obs, n)
        assert est.f == 1.0 and est.clamped == CEIL_ONE


def test_cross_statistic_congruence_on_exact_mixture():
    n = 100000
    for f in (0.05, 0.25, 0.75, 0.95):
        stats = compute_all(mixture_probabilities(f).mixture.probs, n)
        ecps = [
            ecp_chi_squared(stats[StatisticKind.CHI2], n).f,
            ecp_ssd(stats[StatisticKind.SSD], n).f,
            ecp_mad(stats[StatisticKind.MAD], n).f,
        ]
        assert max(ecps) - min(ecps) < 0.005


def test_estimate_validation():
    with pytest.raises(ValueError):
        EcpEstimate(1.2, StatisticKind.SSD, "quadratic")
    with pytest.raises(ValueError):
        EcpEstimate(0.3, StatisticKind.SSD, "quadratic", FLOOR_ZERO)
    with pytest.raises(ValueError):
        ecp_chi_squared(14, 1)
    with pytest.raises(ValueError):
        ecp_ssd(-0.1, 100)
    with pytest.raises(ValueError):
        SearchConfig(confidence=1.5)
    with pytest.raises(ValueError):
        SearchConfig(replications=1)
    with pytest.raises(ValueError, match="closed-form"):
        estimate_ecp("ks", 0.1, 100, method="closed")


def test_mad_non_monotone_bracket_raises(monkeypatch):
    monkeypatch.setattr(ecp_module, "mad_mean", lambda n, f, c=None: math.sin(6 * f) + 1.0)
    with pytest.raises(InversionError, match="inversion bracket invalid"):
        ecp_mad(0.5, 100)


def test_bisect_increasing():
    root, it = bisect_increasing(lambda x: x**3, 0.125, 0.0, 1.0, 1e-12)
    assert root == pytest.approx(0.5, abs=1e-12)
    assert it == 40


def test_simulated_ks_retrospective_anchor():
    est = ecp_simulated("ks", 0.1216, 125)
    assert est.method == "simulated"
    assert est.f == pytest.approx(0.3829, abs=0.01)
    assert est.std_error is not None and est.std_error > 0


def test_simulated_cvm_large_n():
    assert ecp_simulated("cvm", 0.1909, 100000).f == pytest.approx(0.75, abs=0.005)


def test_simulated_floor_and_ceiling():
    est = ecp_simulated("ks", 0.001, 500)
    assert est.f == 0.0 and est.clamped == FLOOR_ZERO
    est = ecp_simulated("kuiper", 5.0, 500)
    assert est.f == 1.0 and est.clamped == CEIL_ONE


def test_simulated_is_reproducible():
    cfg = SearchConfig(replications=800, seed=12)
    assert ecp_simulated("kuiper", 0.1, 300, config=cfg) == ecp_simulated("kuiper", 0.1, 300, config=cfg)


def test_simulated_search_exhaustion_carries_bracket():
    cfg = SearchConfig(replications=200, max_iterations=3, tolerance=1e-9, accept_width=1e-12)
    with pytest.raises(SearchExhaustedError) as info:
        ecp_simulated("ks", 0.1, 200, config=cfg)
    lo, hi = info.value.bracket
    assert 0.0 <= lo < hi <= 1.0


@pytest.mark.parametrize("n", [1000, 10000])
@pytest.mark.parametrize("f", [0.05, 0.25, 0.75, 0.95])
def test_simulated_ed_agrees_with_taylor_form(n, f):
    obs = mc_expected_statistic("ed", n, f, replications=5000, seed=99)
    sim = ecp_simulated("ed", obs.value, n)
    taylor = ecp_ed_approx(obs.value, n)
    se = math.hypot(sim.std_error or 0.0, obs.std_error / sim.slope)
    assert abs(sim.f - taylor.f) <= 3 * se


def test_min_ecp_examples():
    assert 100 * min_ecp_for_significance("chi2", 1000, 0.95) == pytest.approx(13.23, abs=0.01)
    assert 100 * min_ecp_for_significance("mad", 100, 0.95) == pytest.approx(42.95, abs=0.15)
    assert 100 * min_ecp_for_significance("ssd", 10000, 0.99, null_model="normal") == pytest.approx(5.17, abs=0.02)


def test_min_ecp_decreases_in_n():
    sizes = (100, 500, 1000, 5000, 10000, 50000, 100000)
    for kind, model in (("chi2", "multinomial"), ("ssd", "normal"), ("mad", "multinomial")):
        for level in (0.95, 0.99):
            vals = [min_ecp_for_significance(kind, n, level, null_model=model, replications=20000) for n in sizes]
            assert all(b < a for a, b in zip(vals, vals[1:])), (kind, level, vals)


def test_min_n_chi_squared_examples():
    assert min_n_for_significance("chi2", 0.05, 0.95) == pytest.approx(7296, rel=0.01)
    assert min_n_for_significance("chi2", 0.25, 0.95) == pytest.approx(264, rel=0.02)


def test_min_n_matches_brute_force_scan():
    from scipy.stats import chi2

    crit = chi2.ppf(0.99, 8)
    brute = next(n for n in range(2, 1000) if expected_chi_squared(n, 1.0).value > crit)
    assert min_n_for_significance("chi2", 1.0, 0.99) == brute
    assert 10 <= brute < 100


def test_min_n_with_custom_critical_curve():
    n = min_n_for_significance("ssd", 0.25, 0.95, critical=lambda n: 2.0 / n)
    assert expected_ssd(n, 0.25).value > 2.0 / n
    assert expected_ssd(n - 1, 0.25).value <= 2.0 / (n - 1)


def test_min_n_search_cap():
    with pytest.raises(SearchCapError, match="exceeds search cap"):
        min_n_for_significance("chi2", 1e-4, 0.95, cap=10**5)


def test_degenerate_contaminant_inversion():
    c = degenerate_contaminant(9)
    k = contamination_constants(c)
    assert k.chi2_quadratic > contamination_constants().chi2_quadratic
    obs = expected_chi_squared(400, 0.1, c).value
    assert ecp_chi_squared(obs, 400, c).f == pytest.approx(0.1, abs=1e-9)
