"""First-digit Benford conformity statistics and Equivalent Contamination Proportion (ECP) estimates."""

from .contamination import (
    ContaminantDistribution,
    MixtureModel,
    contamination_constants,
    custom_contaminant,
    degenerate_contaminant,
    mixture_probabilities,
    parse_contaminant,
    uniform_contaminant,
)
from .digits import (
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
from .ecp import (
    EcpEstimate,
    SearchConfig,
    ecp_chi_squared,
    ecp_ed_approx,
    ecp_mad,
    ecp_simulated,
    ecp_ssd,
    estimate_ecp,
    min_ecp_for_significance,
    min_n_for_significance,
)
from .errors import BenfordError, DataError, InversionError, SearchCapError, SearchExhaustedError
from .expectation import (
    ExpectationResult,
    expected_chi_squared,
    expected_ed,
    expected_mad,
    expected_ssd,
    expected_statistic,
    mc_expected_statistic,
)
from .simulation import (
    CriticalValueTable,
    GridSpec,
    null_critical_value,
    null_critical_values,
    run_grid,
    sample_counts,
)
from .statistics import StatisticKind, StatisticValue, classify_mad, classify_ssd, compute_all, compute_statistic

__version__ = "0.1.0"
