"""Model-free reach analysis via linear programming.

Consistency of a partial reach Venn diagram is equivalent to the existence of
a non-negative region allocation reproducing every observation.  That gives
three tools: a consistency check (maximize the minimum region reach), tight
lower/upper bounds on any subset's reach (optimize the target's incidence
functional over the feasible polytope), and a least-squares repair that
projects noisy observations back onto the consistent set.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (
    TOL_FEAS,
    BoundInterval,
    InconsistencyError,
    ReachDataset,
    RegionAllocation,
    SubsetMask,
    incidence_vector,
)
from .lp import UNBOUNDED, EqualityFormSolver, LinearProgram, solve_lp
from .lsq import nnls, simplex_lstsq


@dataclass(frozen=True)
class ConsistencyReport:
    """Outcome of the consistency check.

    ``t_star`` is the optimum of the max-min-region program in reach units;
    the data is consistent iff the scaled optimum is >= -TOL_FEAS, in which
    case ``witness`` realizes every observation.
    """

    consistent: bool
    t_star: float
    witness: RegionAllocation | None = None
    diagnostic: str = ""


def _incidence_rows(dataset: ReachDataset, sort: bool = True) -> tuple[np.ndarray, np.ndarray]:
    obs = dataset.sorted_observations() if sort else dataset.observations
    a = np.array([incidence_vector(o.subset) for o in obs])
    b = np.array([o.reach for o in obs]) / dataset.scale
    return a, b


def check_consistency(dataset: ReachDataset) -> ConsistencyReport:
    """Decide whether the observations admit a non-negative region allocation.

    Solves max t subject to the observation equalities and t <= x_j for every
    region j, after substituting y_j = x_j - t so that only t stays free.  The
    optimum equals the best achievable minimum region reach; t is capped at
    the scaled universe to keep degenerate programs bounded.
    """
    if dataset.n == 0:
        raise ValueError("dataset has no observations")
    scale = dataset.scale
    a, b = _incidence_rows(dataset)
    n, m = a.shape

    matrix = np.hstack([a, a.sum(axis=1, keepdims=True)])
    objective = np.zeros(m + 1)
    objective[m] = 1.0
    lower = np.zeros(m + 1)
    lower[m] = -np.inf
    upper = np.full(m + 1, np.inf)
    upper[m] = 1.0
    result = solve_lp(
        LinearProgram(
            objective=objective,
            sense="max",
            eq_matrix=matrix,
            eq_rhs=b,
            lower_bounds=lower,
            upper_bounds=upper,
        )
    )
    if not result.is_optimal:
        return ConsistencyReport(
            consistent=False,
            t_star=float("-inf") if result.status == UNBOUNDED else float("nan"),
            diagnostic=f"observation equality system unsolvable ({result.status})",
        )
    t_scaled = result.value
    consistent = t_scaled >= -TOL_FEAS
    witness = None
    if consistent:
        regions = np.clip(result.solution[:m] + t_scaled, 0.0, None) * scale
        witness = RegionAllocation.from_values(dataset.num_bgs, regions)
    return ConsistencyReport(consistent=consistent, t_star=float(t_scaled * scale), witness=witness)


class BoundsSolver:
    """Tight subset-reach bounds over one dataset's feasible polytope.

    The feasibility phase runs once at construction; each target costs two
    warm-started simplex runs.  Construction raises InconsistencyError when
    the polytope is empty.
    """

    def __init__(self, dataset: ReachDataset):
        if dataset.n == 0:
            raise ValueError("dataset has no observations")
        self.dataset = dataset
        self.scale = dataset.scale
        a, b = _incidence_rows(dataset)
        self._solver = EqualityFormSolver(a, b)
        if not self._solver.feasible:
            raise InconsistencyError(
                "observations are inconsistent; run repair_dataset first"
            )
        self._cap = self._upper_cap()

    def _upper_cap(self) -> float:
        """Scaled fallback ceiling for targets the observations cannot pin down."""
        if self.dataset.universe_size is not None:
            return 1.0
        singles = [
            o.reach for o in self.dataset.observations if o.subset.popcount == 1
        ]
        if len(singles) == self.dataset.num_bgs:
            return float(sum(singles)) / self.scale
        return float(sum(o.reach for o in self.dataset.observations)) / self.scale

    def bounds(self, target: SubsetMask) -> BoundInterval:
        c = incidence_vector(target, self.dataset.num_bgs)
        lo = self._solver.optimize(c, "min")
        hi = self._solver.optimize(c, "max")
        # A non-negative objective over x >= 0 is never unbounded below.
        lower = max(0.0, lo.value) if lo.is_optimal else 0.0
        capped = False
        if hi.status == UNBOUNDED:
            upper = max(self._cap, lower)
            capped = True
        else:
            upper = hi.value
        if upper - lower < TOL_FEAS:
            mid = 0.5 * (lower + upper)
            lower = upper = max(0.0, mid)
        return BoundInterval(
            lower=lower * self.scale, upper=upper * self.scale, upper_capped=capped
        )


def subset_bounds(dataset: ReachDataset, target: SubsetMask) -> BoundInterval:
    """Tightest [lower, upper] for the target's reach given the observations.

    Every value in the interval is realized by some non-negative allocation
    consistent with the data, and no value outside is.  Raises
    InconsistencyError for inconsistent datasets; an upper bound that only
    the cap policy provides (universe size, else the sum of the observed
    single-BG reaches) carries ``upper_capped=True``.
    """
    return BoundsSolver(dataset).bounds(target)


def repair_dataset(dataset: ReachDataset) -> ReachDataset:
    """Project possibly-noisy observations onto the consistent set.

    Finds a non-negative region allocation minimizing the summed squared
    residuals of the observation equalities on the proportion scale, then
    replaces every observed reach with the allocation's value.  Consistent
    inputs come back unchanged up to solver round-off.  When the universe
    size is declared, the allocation is additionally constrained to fit
    inside it (the unreached region absorbs the slack).
    """
    if dataset.n == 0:
        raise ValueError("dataset has no observations")
    scale = dataset.scale
    a, b = _incidence_rows(dataset, sort=False)
    if dataset.universe_size is not None:
        x, _ = simplex_lstsq(a, b)  # column 0 is zero: the unreached region
    else:
        x, _ = nnls(a, b)
    repaired = a @ x * scale
    if dataset.universe_size is not None:
        repaired = np.minimum(repaired, dataset.universe_size)
    return dataset.replace_reaches(np.clip(repaired, 0.0, None))


@dataclass(frozen=True)
class PrefixBound:
    """Bounds for one prefix of an incremental reach curve."""

    prefix_length: int
    subset: SubsetMask
    interval: BoundInterval
    pinned: float | None = None


def incremental_curve_bounds(
    dataset: ReachDataset,
    order: Sequence[int],
    mode: str = "free",
) -> list[PrefixBound]:
    """Bounds along an incremental reach curve for one BG permutation.

    For each strict prefix (lengths 2..P-1) of ``order``, computes the
    prefix-union's reach bounds.  In ``upper_trace``/``lower_trace`` mode the
    prefix is pinned at its upper/lower bound as an extra observation before
    moving on, tracing one boundary of the feasible curve region; ``free``
    mode bounds every prefix against the original observations only.
    """
    num_bgs = dataset.num_bgs
    if sorted(order) != list(range(1, num_bgs + 1)):
        raise ValueError(f"order must be a permutation of 1..{num_bgs}")
    if mode not in ("free", "upper_trace", "lower_trace"):
        raise ValueError(f"unknown mode {mode!r}")

    results: list[PrefixBound] = []
    current = dataset
    solver = BoundsSolver(current)
    for k in range(2, num_bgs):
        prefix = SubsetMask.from_bgs(order[:k], num_bgs)
        interval = solver.bounds(prefix)
        if mode == "free":
            results.append(PrefixBound(k, prefix, interval))
            continue
        pinned = interval.upper if mode == "upper_trace" else interval.lower
        results.append(PrefixBound(k, prefix, interval, pinned=pinned))
        if current.reach_of(prefix) is None:
            current = current.with_observation(prefix, pinned)
            solver = BoundsSolver(current)
    return results
