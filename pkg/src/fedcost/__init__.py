"""Cost-aware control of synchronous federated averaging.

The package models the expected wall-clock time and device energy of
federated rounds, estimates the identifiable ratio of the convergence
bound's constants from cheap probe runs, and picks the clients-per-round
and local-iteration counts that minimize the blended cost of training to
a target loss.  A numpy simulator validates the analytical choices end
to end, and a small CLI wraps the common workflows.
"""

from .cardano import real_cubic_roots
from .core import (
    BoundParams,
    ConfigError,
    ControlPoint,
    CostMeans,
    CostWeights,
    DeviceProfile,
    EstimationError,
    FedCostError,
    Population,
    RngSeed,
    UnidentifiedBoundError,
    UnreachableLossError,
    build_population,
    derive_seed,
    draw_heterogeneous_population,
    substream,
)
from .costs import (
    CostBreakdown,
    P3Value,
    approx_expected_time,
    exact_expected_total_cost,
    expected_energy,
    expected_round_time_exact,
    expected_round_time_mc,
    p3_objective,
    p3_relative,
    r_required,
    rounds_factor,
    sampling_penalty,
    straggler_weights,
)
from .estimation import (
    EstimationSample,
    RatioEstimate,
    estimate_ratio,
    overhead_ratio,
    planted_round_counts,
    probe_pair,
)
from .optimizer import (
    AcsTrace,
    GridSearchResult,
    PropertyCheck,
    PropertyReport,
    acs_optimize,
    closed_form_k,
    grid_search_p3,
    property_check_suite,
    solve_cubic_e,
)
from .simulation import (
    FedRunRecord,
    FedSimulator,
    ModelState,
    TrainingConfig,
    fedavg_run,
    local_sgd,
    measure_cost_to_target,
    softmax_grad,
    softmax_loss,
)
from .synthetic import (
    FEATURE_DIM,
    NUM_CLASSES,
    PowerLawCounts,
    SyntheticDataset,
    generate_synthetic,
    load_dataset,
    partition_by_label,
    power_law_counts,
    save_dataset,
)

__version__ = "0.1.0"

__all__ = [
    "AcsTrace",
    "BoundParams",
    "ConfigError",
    "ControlPoint",
    "CostBreakdown",
    "CostMeans",
    "CostWeights",
    "DeviceProfile",
    "EstimationError",
    "EstimationSample",
    "FEATURE_DIM",
    "FedCostError",
    "FedRunRecord",
    "FedSimulator",
    "GridSearchResult",
    "ModelState",
    "NUM_CLASSES",
    "P3Value",
    "Population",
    "PowerLawCounts",
    "PropertyCheck",
    "PropertyReport",
    "RatioEstimate",
    "RngSeed",
    "SyntheticDataset",
    "TrainingConfig",
    "UnidentifiedBoundError",
    "UnreachableLossError",
    "acs_optimize",
    "approx_expected_time",
    "build_population",
    "closed_form_k",
    "derive_seed",
    "draw_heterogeneous_population",
    "estimate_ratio",
    "exact_expected_total_cost",
    "expected_energy",
    "expected_round_time_exact",
    "expected_round_time_mc",
    "fedavg_run",
    "generate_synthetic",
    "grid_search_p3",
    "load_dataset",
    "local_sgd",
    "measure_cost_to_target",
    "overhead_ratio",
    "p3_objective",
    "p3_relative",
    "partition_by_label",
    "planted_round_counts",
    "power_law_counts",
    "probe_pair",
    "property_check_suite",
    "r_required",
    "real_cubic_roots",
    "rounds_factor",
    "sampling_penalty",
    "save_dataset",
    "softmax_grad",
    "softmax_loss",
    "solve_cubic_e",
    "straggler_weights",
    "substream",
]
