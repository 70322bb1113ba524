"""Label-frugal estimation on unlabeled pools.

Distance approximation for interval unions and blockwise compositions,
k-nearest-neighbor loss estimation, arm-fraction counting, and a seeded
Monte Carlo harness with a CLI.
"""

from .core import (
    ActivePool,
    BudgetExceededError,
    Distribution,
    InsufficientPoolError,
    LabelOracle,
    TargetFunction,
    WeightedSample,
    chernoff_iterations,
    empirical_distance,
    median_repetitions,
    query_label,
    relative_entropy,
)
from .active_reduction import QueryAlgorithm, activeize_da, activeize_pt, active_sample_size
from .composition import (
    CompositionSpec,
    TruncatedBudget,
    at_most_k_ones_spec,
    block_sample_count,
    choose_block_indices,
    composition_da,
    disjoint_union_da,
    distance_to_truncated_composition,
    uniform_block_index,
)
from .intervals import (
    DaResult,
    IntervalUnion,
    exact_distance_to_intervals,
    interval_block_spec,
    interval_da,
    interval_da_plan,
    interval_da_uniform,
    interval_error_curve,
    rank_positions,
    shrink_interval_union,
)
from .knn import (
    KnnInstance,
    LossEstimate,
    MetricSpace,
    best_k,
    best_k_grid,
    estimate_hard_error,
    estimate_loss_lipschitz,
    estimate_soft_loss_pth,
    estimate_weighted_nn_loss,
    exact_hard_error,
    exact_soft_loss,
    exact_soft_loss_table,
    exact_weighted_nn_loss,
    id_distribution,
    knn_instance_from_json,
    knn_instance_to_json,
    knn_predict_hard,
    knn_predict_soft,
    lipschitz_inner_samples,
    loss_stability_bound,
    verify_triangle,
)
from .bandit import (
    ArmSet,
    StarInstance,
    aga_schedule,
    build_star_instance_hard,
    build_star_instance_soft,
    hard_gamma,
    natural_aga,
    pull,
    pull_many,
    recover_good_fraction,
    star_exact_hard_error,
    star_hard_plan,
    star_instance_from_json,
    star_instance_to_json,
    star_metadata,
    star_soft_plan,
)
from .harness import (
    ACCEPTANCE_CRITERIA,
    CriterionResult,
    TrialConfig,
    TrialReport,
    TrialRow,
    acceptance_passed,
    block_noise_target,
    bundled_best_k,
    composition_segment_sample,
    exact_interval_block_da,
    grid_interval_sample,
    noisy_interval_target,
    registered_algorithms,
    run_acceptance,
    run_trials,
    striped_union_target,
)

__version__ = "0.1.0"

__all__ = [
    "ActivePool",
    "BudgetExceededError",
    "Distribution",
    "InsufficientPoolError",
    "LabelOracle",
    "TargetFunction",
    "WeightedSample",
    "chernoff_iterations",
    "empirical_distance",
    "median_repetitions",
    "query_label",
    "relative_entropy",
    "QueryAlgorithm",
    "activeize_da",
    "activeize_pt",
    "active_sample_size",
    "CompositionSpec",
    "TruncatedBudget",
    "at_most_k_ones_spec",
    "block_sample_count",
    "choose_block_indices",
    "composition_da",
    "disjoint_union_da",
    "distance_to_truncated_composition",
    "uniform_block_index",
    "DaResult",
    "IntervalUnion",
    "exact_distance_to_intervals",
    "interval_block_spec",
    "interval_da",
    "interval_da_plan",
    "interval_da_uniform",
    "interval_error_curve",
    "rank_positions",
    "shrink_interval_union",
    "KnnInstance",
    "LossEstimate",
    "MetricSpace",
    "best_k",
    "best_k_grid",
    "estimate_hard_error",
    "estimate_loss_lipschitz",
    "estimate_soft_loss_pth",
    "estimate_weighted_nn_loss",
    "exact_hard_error",
    "exact_soft_loss",
    "exact_soft_loss_table",
    "exact_weighted_nn_loss",
    "id_distribution",
    "knn_instance_from_json",
    "knn_instance_to_json",
    "knn_predict_hard",
    "knn_predict_soft",
    "lipschitz_inner_samples",
    "loss_stability_bound",
    "verify_triangle",
    "ArmSet",
    "StarInstance",
    "aga_schedule",
    "build_star_instance_hard",
    "build_star_instance_soft",
    "hard_gamma",
    "natural_aga",
    "pull",
    "pull_many",
    "recover_good_fraction",
    "star_exact_hard_error",
    "star_hard_plan",
    "star_instance_from_json",
    "star_instance_to_json",
    "star_metadata",
    "star_soft_plan",
    "ACCEPTANCE_CRITERIA",
    "CriterionResult",
    "TrialConfig",
    "TrialReport",
    "TrialRow",
    "acceptance_passed",
    "block_noise_target",
    "bundled_best_k",
    "composition_segment_sample",
    "exact_interval_block_da",
    "grid_interval_sample",
    "noisy_interval_target",
    "registered_algorithms",
    "run_acceptance",
    "run_trials",
    "striped_union_target",
    "__version__",
]
