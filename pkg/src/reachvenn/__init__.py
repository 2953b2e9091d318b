"""Reach Venn diagram estimation: consistency checks, LP bounds, and a
conditional-independence model for the reach of unobserved subsets."""

from .bounds import (
    BoundsSolver,
    ConsistencyReport,
    PrefixBound,
    check_consistency,
    incremental_curve_bounds,
    repair_dataset,
    subset_bounds,
)
from .core import (
    BoundInterval,
    InconsistencyError,
    ReachDataset,
    ReachObservation,
    ReachVennError,
    RegionAllocation,
    SubsetMask,
    UnavailableError,
    basic_masks,
    dataset_from_allocation,
    enumerate_masks,
    incidence_vector,
    oracle_bounds_by_grid,
    subset_reach_from_allocation,
)
from .experiment import ExperimentReport, run_experiment
from .model import (
    CiModel,
    SegmentMatrix,
    build_segment_matrix,
    estimate_universe,
    fit,
    min_perfect_fit_d,
    predict,
    segment_row,
)
from .pipeline import (
    Estimate,
    EstimateOptions,
    SelectionState,
    d_grid,
    error_bar,
    estimate_subset,
    nearest_rank_percentile,
    relative_error,
    select_next_point,
    tune_d,
)
from .synth import (
    GeneratorSpec,
    GroundTruth,
    add_measurement_noise,
    generate,
    independent_truth,
    true_dataset,
    true_reach,
)

__all__ = [
    "BoundInterval",
    "BoundsSolver",
    "CiModel",
    "ConsistencyReport",
    "Estimate",
    "EstimateOptions",
    "ExperimentReport",
    "GeneratorSpec",
    "GroundTruth",
    "InconsistencyError",
    "PrefixBound",
    "ReachDataset",
    "ReachObservation",
    "ReachVennError",
    "RegionAllocation",
    "SegmentMatrix",
    "SelectionState",
    "SubsetMask",
    "UnavailableError",
    "add_measurement_noise",
    "basic_masks",
    "build_segment_matrix",
    "check_consistency",
    "d_grid",
    "dataset_from_allocation",
    "enumerate_masks",
    "error_bar",
    "estimate_subset",
    "estimate_universe",
    "fit",
    "generate",
    "incidence_vector",
    "incremental_curve_bounds",
    "independent_truth",
    "min_perfect_fit_d",
    "nearest_rank_percentile",
    "oracle_bounds_by_grid",
    "predict",
    "relative_error",
    "repair_dataset",
    "run_experiment",
    "segment_row",
    "select_next_point",
    "subset_bounds",
    "subset_reach_from_allocation",
    "true_dataset",
    "true_reach",
    "tune_d",
]
