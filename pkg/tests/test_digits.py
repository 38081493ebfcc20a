import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from benford_ecp.digits import (
    DigitCategorySet,
    DigitCounts,
    FrequencyVector,
    IngestPolicy,
    benford_probabilities,
    count_digits,
    extract_first_digit,
    first_digits,
    frequencies,
    read_values,
)
from benford_ecp.errors import DataError

mpmath.mp.dps = 30


def test_benford_probabilities_match_high_precision_oracle():
    b = benford_probabilities()
    for d in range(1, 10):
        assert b[d - 1] == pytest.approx(float(mpmath.log10(1 + mpmath.mpf(1) / d)), abs=1e-15)
    assert b[0] == pytest.approx(0.301030, abs=5e-7)
    assert b[8] == pytest.approx(0.045757, abs=5e-7)
    assert math.fsum(b) == pytest.approx(1.0, abs=1e-15)


def test_benford_probabilities_decreasing():
    assert np.all(np.diff(benford_probabilities()) < 0)


def test_unsupported_scheme():
    with pytest.raises(DataError, match="unsupported digit scheme"):
        benford_probabilities(range(10, 100))


@pytest.mark.parametrize("x, d", [(123.45, 1), (0.00456, 4), (-9.1, 9), (2.5e-310, 2), (9.999999e300, 9), (0.3, 3)])
def test_extract_first_digit(x, d):
    assert extract_first_digit(x) == d


@pytest.mark.parametrize("x", [0.0, float("inf"), float("nan")])
def test_extract_first_digit_rejects(x):
    with pytest.raises(DataError, match="no significant digit"):
        extract_first_digit(x)


def test_first_digits_agrees_with_decimal_string_oracle():
    rng = np.random.default_rng(3)
    x = 10 ** rng.uniform(-30, 30, 20000) * rng.choice([-1, 1], 20000)
    expected = [int(f"{abs(v):.15e}"[0]) for v in x]
    assert first_digits(x).tolist() == expected


def test_edge_mantissas():
    # Products that land a hair below an integer mantissa snap up to it.
    assert first_digits(np.array([0.1 * 3, 0.7 * 100, 1e23, 0.09999999999999999])).tolist() == [3, 7, 1, 1]
    assert first_digits(np.array([999.9999999999999, 999.99999])).tolist() == [1, 9]


@given(
    st.integers(min_value=1, max_value=10**15),
    st.integers(min_value=-150, max_value=150),
    st.integers(min_value=-100, max_value=100),
)
def test_scale_invariance(mantissa, exponent, k):
    x = float(f"{mantissa}e{exponent}")
    assert extract_first_digit(x) == extract_first_digit(float(f"{mantissa}e{exponent + k}")) == int(str(mantissa)[0])


def test_count_digits_examples():
    c = count_digits([1.2, 15, 0.19, 9])
    assert c.as_dict()[1] == 3 and c.as_dict()[9] == 1 and c.n == 4
    c = count_digits([0, 2.5])
    assert c.as_dict()[2] == 1 and c.n == 1 and c.skipped == 1
    c = count_digits([-3, 3])
    assert c.as_dict()[3] == 2 and c.n == 2


def test_count_digits_policies():
    assert count_digits([-3, 3, float("nan")], IngestPolicy(negatives="drop")).n == 1
    with pytest.raises(DataError, match="zeros"):
        count_digits([0, 1], IngestPolicy(zeros="error"))
    with pytest.raises(DataError, match="empty dataset"):
        count_digits([0, float("inf")])
    with pytest.raises(ValueError):
        IngestPolicy(negatives="keep")


def test_frequencies_examples():
    assert frequencies(DigitCounts([9, 0, 0, 0, 0, 0, 0, 0, 0])).as_dict()[1] == 1.0
    assert np.allclose(frequencies(DigitCounts(np.ones(9))).probs, 1 / 9)
    f = frequencies(DigitCounts([3, 1, 0, 0, 0, 0, 0, 0, 0]))
    assert f[1] == 0.75 and f[2] == 0.25
    with pytest.raises(DataError):
        frequencies(DigitCounts(np.zeros(9)))


@given(st.lists(st.floats(allow_nan=True, allow_infinity=True, width=64), min_size=1, max_size=200))
def test_frequencies_sum_to_one(values):
    try:
        counts = count_digits(values)
    except DataError:
        return
    assert counts.n + counts.skipped == len(values)
    assert math.fsum(frequencies(counts).probs) == pytest.approx(1.0, abs=1e-12)


def test_value_types_validate():
    with pytest.raises(DataError):
        FrequencyVector([0.5, 0.6, 0, 0, 0, 0, 0, 0, 0])
    with pytest.raises(DataError):
        DigitCounts([-1] + [0] * 8)
    with pytest.raises(DataError):
        DigitCategorySet((2, 1), [0.5, 0.5])
    assert DigitCategorySet.first_digit().size == 9


def test_read_values_plain_and_csv(tmp_path):
    p = tmp_path / "plain.txt"
    p.write_text("12\n\nabc\n-0.5\n3e4\n")
    parsed = read_values(p)
    assert parsed.values == [12.0, -0.5, 3e4] and parsed.parse_failures == 1

    c = tmp_path / "data.csv"
    c.write_text("id;amount\n1;250\n2;x\n3;71.5\n")
    by_name = read_values(c, column="amount", delimiter=";", skip_header=True)
    by_index = read_values(c, column=1, delimiter=";", skip_header=True)
    assert by_name.values == by_index.values == [250.0, 71.5]
    assert by_name.parse_failures == 1
    with pytest.raises(DataError):
        read_values(c, column="missing", delimiter=";", skip_header=True)
