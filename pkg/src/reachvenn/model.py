"""Conditional-independence reach model.

The universe is split into 2**P latent activity segments, one per P-bit
label: inside segment x, BG i reaches users independently with the high
probability 1 - (1 - r_i)/d when flag i is set, or the low probability r_i/d
when it is not (r_i is BG i's overall reach proportion, d > 1 the tuning
parameter).  A subset's reach proportion is then a convex combination over
segments, and fitting reduces to least squares under w >= 0, sum(w) <= 1.
As d grows the segment rows approach the subset/region incidence pattern, so
consistent data is always perfectly fittable in the limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bounds import check_consistency
from .core import (
    InconsistencyError,
    ReachDataset,
    SubsetMask,
    UnavailableError,
)
from .lsq import simplex_lstsq

# Residuals at or below this (squared, proportion scale) count as a perfect fit.
PERFECT_FIT_EPS = 1e-9


def estimate_universe(dataset: ReachDataset) -> float:
    """Universe size under which the single-BG reaches look independent.

    Solves 1 - R(union)/U == prod_i (1 - R(G_i)/U) for the unique U above the
    union reach, by doubling a bracket and bisecting to 1e-10 relative width.

    Raises:
        ValueError: the basic observations are missing.
        InconsistencyError: some single-BG reach exceeds the union reach.
        UnavailableError: the singles do not overlap (no finite solution).
    """
    if not dataset.has_basic_points:
        raise ValueError("universe estimation needs all single-BG and union reaches")
    union = dataset.reach_of(SubsetMask.full(dataset.num_bgs))
    singles = [
        dataset.reach_of(SubsetMask.single(i, dataset.num_bgs))
        for i in range(1, dataset.num_bgs + 1)
    ]
    if any(s > union for s in singles):
        raise InconsistencyError("inconsistent basics: a single-BG reach exceeds the union")
    if sum(singles) <= union:
        raise UnavailableError("no finite independent universe: the BGs do not overlap")
    if union <= 0:
        raise UnavailableError("no finite independent universe: union reach is zero")

    def gap(u: float) -> float:
        return float(np.prod([1.0 - s / u for s in singles]) - (1.0 - union / u))

    lo = union * (1.0 + 1e-9)
    if gap(lo) <= 0:
        raise UnavailableError("no finite independent universe")
    hi = max(2.0 * union, lo * 2.0)
    while gap(hi) > 0:
        hi *= 2.0
        if hi > union * 1e15:
            raise UnavailableError("no finite independent universe")
    while hi - lo > 1e-10 * hi:
        mid = 0.5 * (lo + hi)
        if gap(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _reach_probabilities(
    single_proportions: np.ndarray, d: float
) -> tuple[np.ndarray, np.ndarray]:
    """Per-BG (low, high) reach probabilities for the given d."""
    r = np.asarray(single_proportions, dtype=np.float64)
    if math.isinf(d):
        return np.zeros_like(r), np.ones_like(r)
    if d <= 1.0:
        raise ValueError("d must exceed 1")
    return r / d, 1.0 - (1.0 - r) / d


def segment_row(
    subset: SubsetMask, single_proportions: np.ndarray, d: float
) -> np.ndarray:
    """Probability of a user in each activity segment being reached by ``subset``.

    Entry at segment index s is 1 - prod over the subset's BGs of
    (1 - r_{s_i}(G_i)); at d = infinity this equals the incidence vector
    exactly (the low/high probabilities are exact 0/1 there).
    """
    if subset.is_empty:
        raise ValueError("empty subset has no reach")
    num_bgs = subset.num_bgs
    low, high = _reach_probabilities(single_proportions, d)
    segments = np.arange(1 << num_bgs)
    survive = np.ones(1 << num_bgs)
    for i in range(num_bgs):
        if not subset.bits >> i & 1:
            continue
        p = np.where(segments >> i & 1, high[i], low[i])
        survive = survive * (1.0 - p)
    return 1.0 - survive


@dataclass(frozen=True)
class SegmentMatrix:
    """Segment-probability matrix: one row per training subset, one column
    per activity segment, both in ascending canonical order."""

    d: float
    rows: tuple[SubsetMask, ...]
    entries: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        arr = np.asarray(self.entries, dtype=np.float64)
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "entries", arr)


def build_segment_matrix(
    dataset: ReachDataset, d: float, rows: list[SubsetMask] | None = None
) -> SegmentMatrix:
    """Segment matrix for the dataset's training subsets at parameter ``d``.

    ``rows`` defaults to the observed masks in ascending canonical order.
    The single-BG proportions come from the declared universe size, or from
    ``estimate_universe`` when none is declared.
    """
    if rows is None:
        rows = list(dataset.masks())
    universe = dataset.universe_size
    if universe is None:
        universe = estimate_universe(dataset)
    singles = []
    for i in range(1, dataset.num_bgs + 1):
        reach = dataset.reach_of(SubsetMask.single(i, dataset.num_bgs))
        if reach is None:
            raise ValueError("segment matrix needs every single-BG reach")
        singles.append(reach)
    proportions = np.array(singles, dtype=np.float64) / universe
    entries = np.array([segment_row(m, proportions, d) for m in rows])
    return SegmentMatrix(d=d, rows=tuple(rows), entries=entries)


@dataclass(frozen=True)
class CiModel:
    """Fitted conditional-independence model.

    ``weights`` holds one non-negative weight per activity segment with
    sum <= 1 (the unreached remainder is implicit); ``training_residual`` is
    the squared fitting error on the proportion scale.
    """

    num_bgs: int
    d: float
    universe_size: float
    single_bg_proportions: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    training_residual: float

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=np.float64)
        r = np.asarray(self.single_bg_proportions, dtype=np.float64)
        if w.shape != (1 << self.num_bgs,) or r.shape != (self.num_bgs,):
            raise ValueError("model dimensions do not match num_bgs")
        if np.any(w < 0) or w.sum() > 1.0 + 1e-9:
            raise ValueError("weights must be non-negative with sum <= 1")
        if self.training_residual < 0:
            raise ValueError("training residual must be non-negative")
        w = w.copy()
        w.flags.writeable = False
        r = r.copy()
        r.flags.writeable = False
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "single_bg_proportions", r)

    def to_json_dict(self) -> dict:
        return {
            "num_bgs": self.num_bgs,
            "d": "inf" if math.isinf(self.d) else self.d,
            "universe_size": self.universe_size,
            "single_bg_proportions": self.single_bg_proportions.tolist(),
            "weights": self.weights.tolist(),
            "training_residual": self.training_residual,
        }

    @classmethod
    def from_json_dict(cls, payload: dict) -> "CiModel":
        d = payload["d"]
        return cls(
            num_bgs=int(payload["num_bgs"]),
            d=math.inf if d == "inf" else float(d),
            universe_size=float(payload["universe_size"]),
            single_bg_proportions=np.array(payload["single_bg_proportions"]),
            weights=np.array(payload["weights"]),
            training_residual=float(payload["training_residual"]),
        )


def fit(dataset: ReachDataset, d: float) -> CiModel:
    """Fit segment weights to the training points at parameter ``d``.

    Solves min ||r - Z(d) w||^2 over w >= 0, sum(w) <= 1 (a slack weight for
    the never-reached remainder turns this into least squares on a simplex).
    The returned objective is within ~1e-10 of the constrained optimum; when
    several weight vectors are optimal, any one of them may be returned.
    """
    if not dataset.has_basic_points:
        raise ValueError("fitting needs all single-BG reaches and the union reach")
    universe = dataset.universe_size
    if universe is None:
        universe = estimate_universe(dataset)
    obs = dataset.sorted_observations()
    rows = [o.subset for o in obs]
    target = np.array([o.reach for o in obs]) / universe
    matrix = build_segment_matrix(dataset, d, rows)
    padded = np.hstack([matrix.entries, np.zeros((len(rows), 1))])
    v, _ = simplex_lstsq(padded, target)
    weights = v[:-1]
    resid = target - matrix.entries @ weights
    singles = np.array(
        [
            dataset.reach_of(SubsetMask.single(i, dataset.num_bgs))
            for i in range(1, dataset.num_bgs + 1)
        ]
    )
    return CiModel(
        num_bgs=dataset.num_bgs,
        d=d,
        universe_size=float(universe),
        single_bg_proportions=singles / universe,
        weights=weights,
        training_residual=float(resid @ resid),
    )


def predict(model: CiModel, target: SubsetMask) -> float:
    """Reach estimate for ``target``: z(target) . w scaled to the universe,
    clamped into [0, U]."""
    row = segment_row(target, model.single_bg_proportions, model.d)
    raw = float(row @ model.weights) * model.universe_size
    return min(max(raw, 0.0), model.universe_size)


def min_perfect_fit_d(
    dataset: ReachDataset,
    eps: float = PERFECT_FIT_EPS,
    d_tol: float = 1e-3,
    floor: float = 1.0 + 1e-6,
) -> float:
    """Smallest d whose fit residual is at or below ``eps``.

    The fit residual is non-increasing in d and reaches zero for consistent
    data (in the limit the segment rows become the incidence pattern), so a
    doubling search brackets the threshold and bisection narrows it to
    ``d_tol``.  Returns the search floor when even the near-independence
    model already fits.

    Raises:
        InconsistencyError: the training points are not consistent (no d can
            reach a zero residual).
    """
    if not check_consistency(dataset).consistent:
        raise InconsistencyError("training points are inconsistent; repair first")

    def residual(d: float) -> float:
        return fit(dataset, d).training_residual

    if residual(floor) <= eps:
        return floor
    hi = 2.0
    while residual(hi) > eps:
        hi *= 2.0
        if hi > 2.0**40:
            raise RuntimeError("no finite d reached a zero residual")
    lo = max(floor, hi / 2.0)
    while hi - lo > d_tol:
        mid = 0.5 * (lo + hi)
        if residual(mid) <= eps:
            hi = mid
        else:
            lo = mid
    return hi
