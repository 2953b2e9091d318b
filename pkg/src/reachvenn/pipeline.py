"""Integrated estimation framework.

Glues the model-free and model-based halves together: adaptive selection of
the next subset to measure (largest bound gap first), leave-one-out cross
validation of the tuning parameter d on the non-basic training points, error
bars from the validation-error quantiles, and a one-call estimator returning
a point estimate inside its 100%-confidence interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .bounds import BoundsSolver, check_consistency, repair_dataset, subset_bounds
from .core import (
    BoundInterval,
    ReachDataset,
    SubsetMask,
    UnavailableError,
    basic_masks,
)
from .model import CiModel, estimate_universe, fit, predict

DEFAULT_D_MIN = 1.0
DEFAULT_D_MAX = 5.0
DEFAULT_D_GRID = 10

# Definition of the segment probabilities degenerates at exactly d = 1, so the
# grid point 1 is evaluated just above it.
_D_ONE_NUDGE = 1e-9


def _effective_d(d: float) -> float:
    return d if d > 1.0 else 1.0 + _D_ONE_NUDGE


def d_grid(
    d_min: float = DEFAULT_D_MIN,
    d_max: float = DEFAULT_D_MAX,
    size: int = DEFAULT_D_GRID,
) -> list[float]:
    """Evenly spaced candidate values: d_min + c*(d_max-d_min)/(size-1)."""
    if size < 2 or d_max <= d_min:
        raise ValueError("need size >= 2 and d_max > d_min")
    step = (d_max - d_min) / (size - 1)
    return [d_min + c * step for c in range(size)]


@dataclass(frozen=True)
class SelectionState:
    """Bookkeeping for adaptive training-point selection.

    ``chosen`` lists the measured masks in acquisition order (basics first),
    ``candidates`` the masks still eligible for measurement, and
    ``measurements`` the accumulated dataset.  Masks excluded up front (for
    example held-out testing points) belong to neither.
    """

    chosen: tuple[SubsetMask, ...]
    candidates: tuple[SubsetMask, ...]
    measurements: ReachDataset

    def __post_init__(self) -> None:
        chosen_ids = {m.index for m in self.chosen}
        candidate_ids = {m.index for m in self.candidates}
        if chosen_ids & candidate_ids:
            raise ValueError("chosen and candidate masks overlap")
        basics = {m.index for m in basic_masks(self.measurements.num_bgs)}
        if not basics <= chosen_ids:
            raise ValueError("chosen masks must include the basic points")

    @classmethod
    def initial(
        cls, measurements: ReachDataset, exclude: Sequence[SubsetMask] = ()
    ) -> "SelectionState":
        """Start from an already-measured dataset (must contain the basics)."""
        if not measurements.has_basic_points:
            raise ValueError("selection starts from the basic points")
        observed = {m.index for m in measurements.masks()}
        excluded = {m.index for m in exclude}
        num_bgs = measurements.num_bgs
        candidates = tuple(
            SubsetMask(j, num_bgs)
            for j in range(1, 1 << num_bgs)
            if j not in observed and j not in excluded
        )
        return cls(
            chosen=measurements.masks(),
            candidates=candidates,
            measurements=measurements,
        )


def select_next_point(
    state: SelectionState, measure: Callable[[SubsetMask], float]
) -> SelectionState:
    """Measure the candidate with the widest bound gap and fold it in.

    Gap ties break toward the smallest canonical index so runs are
    reproducible.  The current measurements must be consistent (repair first
    otherwise); raises UnavailableError when no candidates remain.
    """
    if not state.candidates:
        raise UnavailableError("selection exhausted: no candidates remain")
    solver = BoundsSolver(state.measurements)
    best_mask = None
    best_gap = -1.0
    for mask in sorted(state.candidates, key=lambda m: m.index):
        gap = solver.bounds(mask).gap
        if gap > best_gap + 1e-12 * max(1.0, best_gap):
            best_gap = gap
            best_mask = mask
    reach = float(measure(best_mask))
    return SelectionState(
        chosen=state.chosen + (best_mask,),
        candidates=tuple(m for m in state.candidates if m.index != best_mask.index),
        measurements=state.measurements.with_observation(best_mask, reach),
    )


def relative_error(
    estimate: float,
    truth: float,
    interval: BoundInterval,
    scale: float | None = None,
) -> float:
    """(estimate - truth) / (upper - lower), the bound-gap-normalized error.

    When the bounds coincide (gap below 1e-9 of the working scale) the error
    is 0 if the estimate matches the truth to the same tolerance and signed
    infinity otherwise.
    """
    if scale is None:
        scale = max(1.0, abs(interval.upper), abs(estimate), abs(truth))
    tol_gap = 1e-9 * scale
    gap = interval.gap
    if gap < tol_gap:
        if abs(estimate - truth) <= tol_gap:
            return 0.0
        return math.copysign(math.inf, estimate - truth)
    return (estimate - truth) / gap


def nearest_rank_percentile(values: Sequence[float], alpha: float) -> float:
    """The alpha-th percentile by the nearest-rank rule (alpha in (0, 100])."""
    if not values:
        raise ValueError("no values")
    if not 0 < alpha <= 100:
        raise ValueError("alpha must lie in (0, 100]")
    ordered = sorted(values)
    rank = max(1, math.ceil(alpha / 100.0 * len(ordered)))
    return ordered[rank - 1]


def _validation_masks(dataset: ReachDataset) -> list[SubsetMask]:
    basics = {m.index for m in basic_masks(dataset.num_bgs)}
    return [m for m in dataset.masks() if m.index not in basics]


def _holdout_errors(
    dataset: ReachDataset,
    d_values: Sequence[float],
    universe: float,
) -> dict[float, list[float]]:
    """Leave-one-out relative errors per d over the non-basic points.

    The held-out point's bounds come from the remaining n-1 points and are
    shared across the d grid.
    """
    holdouts = _validation_masks(dataset)
    errors: dict[float, list[float]] = {d: [] for d in d_values}
    for mask in holdouts:
        rest = dataset.without(mask)
        interval = BoundsSolver(rest).bounds(mask)
        truth = dataset.reach_of(mask)
        for d in d_values:
            model = fit(rest, _effective_d(d))
            err = relative_error(predict(model, mask), truth, interval, scale=universe)
            errors[d].append(err)
    return errors


def tune_d(
    dataset: ReachDataset,
    d_min: float = DEFAULT_D_MIN,
    d_max: float = DEFAULT_D_MAX,
    grid_size: int = DEFAULT_D_GRID,
) -> float:
    """Pick d from the grid by minimum mean absolute leave-one-out error.

    Each non-basic training point is held out once: the model fits on the
    other n-1 points and the error is normalized by the held-out point's
    bound gap under those n-1 points.  Ties go to the smaller d.  Requires
    n > P+1; the basics are never held out.
    """
    if dataset.n <= dataset.num_bgs + 1:
        raise UnavailableError("no validation points; use default_d")
    universe = dataset.universe_size
    if universe is None:
        universe = estimate_universe(dataset)
    grid = d_grid(d_min, d_max, grid_size)
    errors = _holdout_errors(dataset, grid, universe)
    best_d = grid[0]
    best_score = math.inf
    # Scores within 1e-8 (solver noise, e.g. the d=1 nudge) count as ties,
    # and ties -- including all-infinite columns -- keep the smaller d.
    for d in grid:
        score = float(np.mean(np.abs(errors[d])))
        if not math.isnan(score) and score < best_score - 1e-8:
            best_score = score
            best_d = d
    return best_d


def alpha_interval(
    estimate: float, interval: BoundInterval, q_alpha: float
) -> BoundInterval:
    """[estimate -/+ q_alpha/2 * gap] intersected with the 100% interval."""
    half = q_alpha / 2.0 * interval.gap
    return BoundInterval(
        lower=max(interval.lower, estimate - half),
        upper=min(interval.upper, estimate + half),
    )


def error_bar(
    dataset: ReachDataset,
    d: float,
    target: SubsetMask,
    alpha: float,
    model: CiModel | None = None,
) -> BoundInterval:
    """alpha%-confidence interval around the model estimate for ``target``.

    The alpha-th nearest-rank percentile q of the absolute leave-one-out
    relative errors (at the final d) scales the bound gap: the interval is
    [estimate - q/2*gap, estimate + q/2*gap] intersected with the
    100%-confidence interval.  Requires n > P+1.
    """
    if dataset.n <= dataset.num_bgs + 1:
        raise UnavailableError("error bar unavailable: no validation points")
    universe = dataset.universe_size
    if universe is None:
        universe = estimate_universe(dataset)
    errors = _holdout_errors(dataset, [d], universe)[d]
    q_alpha = nearest_rank_percentile([abs(e) for e in errors], alpha)
    if model is None:
        model = fit(dataset, _effective_d(d))
    estimate = predict(model, target)
    interval = subset_bounds(dataset, target)
    return alpha_interval(estimate, interval, q_alpha)


@dataclass(frozen=True)
class EstimateOptions:
    clamp: bool = True
    alpha: float | None = None
    d: float | None = None  # None: cross-validate, or d = inf when impossible


@dataclass(frozen=True)
class Estimate:
    """Combined output: model point estimate plus model-free interval(s)."""

    target: SubsetMask
    point: float
    interval_100: BoundInterval
    interval_alpha: BoundInterval | None = None
    alpha: float | None = None
    d: float = math.inf
    d_policy: str = "default_inf"  # "given" | "cross_validated" | "default_inf"
    universe_size: float | None = None
    repaired: bool = False


def estimate_subset(
    dataset: ReachDataset, target: SubsetMask, options: EstimateOptions | None = None
) -> Estimate:
    """Full-pipeline estimate of one subset's reach.

    Repairs the data if inconsistent, settles the universe size and d
    (cross-validation when there are spare points, d = infinity otherwise),
    fits, predicts, and pairs the point with the model-free interval.  The
    point is clamped into the interval unless options.clamp is off; an
    alpha%-interval is attached when requested and achievable.
    """
    options = options or EstimateOptions()
    if not dataset.has_basic_points:
        raise ValueError("estimation needs the basic observations")
    repaired = False
    if not check_consistency(dataset).consistent:
        dataset = repair_dataset(dataset)
        repaired = True

    if options.d is not None:
        d, policy = options.d, "given"
    elif dataset.n > dataset.num_bgs + 1:
        d, policy = tune_d(dataset), "cross_validated"
    else:
        d, policy = math.inf, "default_inf"

    model = fit(dataset, _effective_d(d))
    point = predict(model, target)
    interval = subset_bounds(dataset, target)
    if options.clamp:
        point = min(max(point, interval.lower), interval.upper)

    interval_alpha = None
    if options.alpha is not None and dataset.n > dataset.num_bgs + 1:
        interval_alpha = error_bar(dataset, d, target, options.alpha, model=model)
    return Estimate(
        target=target,
        point=point,
        interval_100=interval,
        interval_alpha=interval_alpha,
        alpha=options.alpha if interval_alpha is not None else None,
        d=d,
        d_policy=policy,
        universe_size=model.universe_size,
        repaired=repaired,
    )
