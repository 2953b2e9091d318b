"""Core types for reach Venn diagrams: subset masks, datasets, region allocations.

A universe of users is carved by P buying groups (BGs) into 2**P primitive
regions.  Every subset of BGs, every primitive region, and every activity
segment is identified by the same P-bit encoding: flag i (1-indexed) marks
BG i and contributes 2**(i-1) to the canonical integer index.  The string
form writes flag 1 leftmost, so "110" with P=3 is the subset {G1, G2} with
canonical index 3.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

MAX_BGS = 20

# Feasibility tolerance on the proportion scale (all LP rows are divided by
# the universe size or the max observed reach before solving).
TOL_FEAS = 1e-7


class ReachVennError(Exception):
    """Base class for errors raised by this package."""


class InconsistencyError(ReachVennError):
    """The observed reaches violate Venn-diagram consistency."""


class UnavailableError(ReachVennError):
    """The requested quantity cannot be computed from the given data."""


@dataclass(frozen=True)
class SubsetMask:
    """A subset of the P buying groups, encoded as a bit mask.

    Bit (i-1) of ``bits`` is set iff BG i belongs to the subset, so the
    integer value of ``bits`` is the canonical index used everywhere for
    ordering regions, segments, and matrix columns.  The all-zero mask is a
    valid primitive-region label but not an observable subset.
    """

    bits: int
    num_bgs: int

    def __post_init__(self) -> None:
        if not 2 <= self.num_bgs <= MAX_BGS:
            raise ValueError(f"num_bgs must be in [2, {MAX_BGS}], got {self.num_bgs}")
        if not 0 <= self.bits < (1 << self.num_bgs):
            raise ValueError(f"bits {self.bits} out of range for {self.num_bgs} BGs")

    @classmethod
    def from_string(cls, text: str) -> "SubsetMask":
        """Parse the "x1...xP" form, leftmost character = BG 1."""
        if not text or any(c not in "01" for c in text):
            raise ValueError(f"subset string must be non-empty over {{0,1}}: {text!r}")
        bits = sum(1 << i for i, c in enumerate(text) if c == "1")
        return cls(bits=bits, num_bgs=len(text))

    @classmethod
    def from_bgs(cls, bgs: Iterable[int], num_bgs: int) -> "SubsetMask":
        """Build from 1-indexed BG numbers."""
        bits = 0
        for i in bgs:
            if not 1 <= i <= num_bgs:
                raise ValueError(f"BG index {i} out of range 1..{num_bgs}")
            bits |= 1 << (i - 1)
        return cls(bits=bits, num_bgs=num_bgs)

    @classmethod
    def single(cls, bg: int, num_bgs: int) -> "SubsetMask":
        return cls.from_bgs([bg], num_bgs)

    @classmethod
    def full(cls, num_bgs: int) -> "SubsetMask":
        return cls(bits=(1 << num_bgs) - 1, num_bgs=num_bgs)

    def to_string(self) -> str:
        return "".join("1" if self.bits >> i & 1 else "0" for i in range(self.num_bgs))

    @property
    def index(self) -> int:
        """Canonical index: flag i contributes 2**(i-1)."""
        return self.bits

    @property
    def popcount(self) -> int:
        return bin(self.bits).count("1")

    @property
    def is_empty(self) -> bool:
        return self.bits == 0

    def has_bg(self, bg: int) -> bool:
        """Membership of 1-indexed BG ``bg``."""
        return bool(self.bits >> (bg - 1) & 1)

    def bg_indices(self) -> tuple[int, ...]:
        return tuple(i + 1 for i in range(self.num_bgs) if self.bits >> i & 1)

    def union(self, other: "SubsetMask") -> "SubsetMask":
        self._check_compatible(other)
        return SubsetMask(self.bits | other.bits, self.num_bgs)

    def __or__(self, other: "SubsetMask") -> "SubsetMask":
        return self.union(other)

    def is_subset_of(self, other: "SubsetMask") -> bool:
        self._check_compatible(other)
        return self.bits & ~other.bits == 0

    def intersects(self, other: "SubsetMask") -> bool:
        self._check_compatible(other)
        return self.bits & other.bits != 0

    def _check_compatible(self, other: "SubsetMask") -> None:
        if self.num_bgs != other.num_bgs:
            raise ValueError("masks have different BG counts")

    def __str__(self) -> str:
        return self.to_string()


def enumerate_masks(
    num_bgs: int, select: str = "all", popcount: int | None = None
) -> list[SubsetMask]:
    """Enumerate subset masks in ascending canonical-index order.

    Args:
        num_bgs: P, the number of buying groups.
        select: one of "all" (all non-zero masks), "single_bgs",
            "full_union", or "popcount" (requires the ``popcount`` argument).
        popcount: subset size when ``select == "popcount"``.

    Returns:
        Masks sorted by canonical index, ascending.
    """
    if num_bgs < 2:
        raise ValueError("num_bgs must be at least 2")
    if select == "all":
        indices = range(1, 1 << num_bgs)
    elif select == "single_bgs":
        indices = [1 << i for i in range(num_bgs)]
    elif select == "full_union":
        indices = [(1 << num_bgs) - 1]
    elif select == "popcount":
        if popcount is None:
            raise ValueError("popcount filter requires the popcount argument")
        indices = [j for j in range(1, 1 << num_bgs) if bin(j).count("1") == popcount]
    else:
        raise ValueError(f"unknown selector {select!r}")
    return [SubsetMask(j, num_bgs) for j in sorted(indices)]


def basic_masks(num_bgs: int) -> list[SubsetMask]:
    """The P single-BG masks plus the all-BGs union, ascending."""
    indices = sorted([1 << i for i in range(num_bgs)] + [(1 << num_bgs) - 1])
    return [SubsetMask(j, num_bgs) for j in indices]


def incidence_vector(subset: SubsetMask, num_bgs: int | None = None) -> np.ndarray:
    """0/1 vector over the 2**P primitive regions covered by ``subset``.

    Entry j is 1 iff region j shares a set flag with the subset; entry 0 is
    always 0.  The dot product of this vector with a region allocation is the
    subset's reach.
    """
    if num_bgs is None:
        num_bgs = subset.num_bgs
    elif num_bgs != subset.num_bgs:
        raise ValueError("num_bgs does not match the subset's BG count")
    if subset.is_empty:
        raise ValueError("empty subset has no reach")
    region_ids = np.arange(1 << num_bgs)
    return ((region_ids & subset.bits) != 0).astype(np.float64)


@dataclass(frozen=True)
class ReachObservation:
    """An observed (subset, reach) pair.  Reach is real-valued to admit noise."""

    subset: SubsetMask
    reach: float

    def __post_init__(self) -> None:
        if self.subset.is_empty:
            raise ValueError("empty subset has no reach")
        if not np.isfinite(self.reach) or self.reach < 0:
            raise ValueError(f"reach must be finite and >= 0, got {self.reach}")


@dataclass(frozen=True)
class ReachDataset:
    """A set of reach observations over distinct subsets of P BGs."""

    num_bgs: int
    universe_size: float | None
    observations: tuple[ReachObservation, ...]

    def __post_init__(self) -> None:
        if not 2 <= self.num_bgs <= MAX_BGS:
            raise ValueError(f"num_bgs must be in [2, {MAX_BGS}]")
        if self.universe_size is not None and not (
            np.isfinite(self.universe_size) and self.universe_size > 0
        ):
            raise ValueError("universe_size must be positive and finite")
        seen: set[int] = set()
        for obs in self.observations:
            if obs.subset.num_bgs != self.num_bgs:
                raise ValueError("observation BG count does not match dataset")
            if obs.subset.index in seen:
                raise ValueError(f"duplicate mask {obs.subset} in dataset")
            seen.add(obs.subset.index)
            if self.universe_size is not None and obs.reach > self.universe_size:
                raise ValueError(
                    f"reach {obs.reach} for {obs.subset} exceeds universe size"
                )

    @classmethod
    def from_pairs(
        cls,
        num_bgs: int,
        pairs: Iterable[tuple[SubsetMask | str, float]],
        universe_size: float | None = None,
    ) -> "ReachDataset":
        obs = []
        for mask, reach in pairs:
            if isinstance(mask, str):
                mask = SubsetMask.from_string(mask)
            obs.append(ReachObservation(mask, float(reach)))
        return cls(num_bgs=num_bgs, universe_size=universe_size, observations=tuple(obs))

    @property
    def n(self) -> int:
        return len(self.observations)

    def sorted_observations(self) -> tuple[ReachObservation, ...]:
        """Observations in ascending canonical-index order."""
        return tuple(sorted(self.observations, key=lambda o: o.subset.index))

    def masks(self) -> tuple[SubsetMask, ...]:
        return tuple(o.subset for o in self.sorted_observations())

    def reach_of(self, subset: SubsetMask) -> float | None:
        for obs in self.observations:
            if obs.subset.index == subset.index:
                return obs.reach
        return None

    @property
    def has_basic_points(self) -> bool:
        """True iff all single-BG masks and the all-ones mask are observed."""
        present = {o.subset.index for o in self.observations}
        needed = {1 << i for i in range(self.num_bgs)} | {(1 << self.num_bgs) - 1}
        return needed <= present

    @property
    def scale(self) -> float:
        """Row-scaling factor for LPs: the universe size when declared, else
        the largest observed reach (1.0 for all-zero data)."""
        if self.universe_size is not None:
            return float(self.universe_size)
        top = max((o.reach for o in self.observations), default=0.0)
        return top if top > 0 else 1.0

    def with_observation(self, subset: SubsetMask, reach: float) -> "ReachDataset":
        return ReachDataset(
            num_bgs=self.num_bgs,
            universe_size=self.universe_size,
            observations=self.observations + (ReachObservation(subset, float(reach)),),
        )

    def without(self, subset: SubsetMask) -> "ReachDataset":
        kept = tuple(o for o in self.observations if o.subset.index != subset.index)
        if len(kept) == len(self.observations):
            raise ValueError(f"mask {subset} not present")
        return ReachDataset(self.num_bgs, self.universe_size, kept)

    def replace_reaches(self, new_reaches: Sequence[float]) -> "ReachDataset":
        """New dataset with the same masks (insertion order) and given reaches."""
        if len(new_reaches) != self.n:
            raise ValueError("reach count mismatch")
        obs = tuple(
            ReachObservation(o.subset, float(r))
            for o, r in zip(self.observations, new_reaches)
        )
        return ReachDataset(self.num_bgs, self.universe_size, obs)


@dataclass(frozen=True)
class RegionAllocation:
    """Non-negative reach of each of the 2**P primitive regions.

    Index 0 is the region reached by no BG.  Values are stored in a
    read-only array indexed by canonical region index.
    """

    num_bgs: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.shape != (1 << self.num_bgs,):
            raise ValueError(
                f"allocation needs {1 << self.num_bgs} entries, got {arr.shape}"
            )
        if np.any(arr < 0):
            raise ValueError("allocation entries must be non-negative")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @classmethod
    def from_values(
        cls, num_bgs: int, values: Sequence[float] | np.ndarray, tol: float = 1e-9
    ) -> "RegionAllocation":
        """Build an allocation, clipping negative round-off up to ``tol``."""
        arr = np.asarray(values, dtype=np.float64)
        if np.any(arr < -tol * max(1.0, float(np.max(np.abs(arr), initial=0.0)))):
            raise ValueError("allocation entries must be non-negative")
        return cls(num_bgs=num_bgs, values=np.clip(arr, 0.0, None))

    @classmethod
    def from_region_dict(
        cls, num_bgs: int, regions: dict[str, float]
    ) -> "RegionAllocation":
        """Build from {region string: reach}; unlisted regions are zero."""
        arr = np.zeros(1 << num_bgs)
        for key, value in regions.items():
            arr[SubsetMask.from_string(key).index] = value
        return cls(num_bgs=num_bgs, values=arr)

    @property
    def total(self) -> float:
        return float(self.values.sum())


def subset_reach_from_allocation(subset: SubsetMask, alloc: RegionAllocation) -> float:
    """Reach of ``subset``: the sum of its primitive regions' reaches."""
    if subset.num_bgs != alloc.num_bgs:
        raise ValueError("subset and allocation have different BG counts")
    return float(incidence_vector(subset) @ alloc.values)


def dataset_from_allocation(
    alloc: RegionAllocation,
    masks: Iterable[SubsetMask],
    universe_size: float | None = None,
) -> ReachDataset:
    """Exact observations of ``masks`` under a ground-truth allocation."""
    obs = tuple(
        ReachObservation(m, subset_reach_from_allocation(m, alloc)) for m in masks
    )
    return ReachDataset(alloc.num_bgs, universe_size, obs)


@dataclass(frozen=True)
class BoundInterval:
    """Lower and upper reach bounds for one subset.

    ``upper_capped`` marks an upper bound imposed by the cap policy (universe
    size or the sum of single-BG reaches) rather than by the observations.
    """

    lower: float
    upper: float
    upper_capped: bool = False

    def __post_init__(self) -> None:
        if not (np.isfinite(self.lower) and np.isfinite(self.upper)):
            raise ValueError("bounds must be finite")
        if self.lower > self.upper:
            raise ValueError(f"lower {self.lower} exceeds upper {self.upper}")

    @property
    def gap(self) -> float:
        return self.upper - self.lower

    def contains(self, value: float, tol: float = 0.0) -> bool:
        return self.lower - tol <= value <= self.upper + tol


# --- Brute-force grid oracle -------------------------------------------------
#
# Exhaustive validation tool for small P: enumerate region allocations that
# satisfy every observation exactly, and read off the extremes of the target
# subset's reach.  The equality system is eliminated exactly over rationals so
# only the leftover free regions are swept on the grid.

_GRID_LIMIT = 20_000_000


def _rref_fraction(
    rows: list[list[Fraction]], rhs: list[Fraction]
) -> tuple[list[list[Fraction]], list[Fraction], list[int], bool]:
    """Reduced row echelon form over exact rationals.

    Returns (matrix, rhs, pivot column per row, consistent flag).
    """
    m = len(rows)
    ncols = len(rows[0]) if rows else 0
    pivots: list[int] = []
    r = 0
    for col in range(ncols):
        sel = next((i for i in range(r, m) if rows[i][col] != 0), None)
        if sel is None:
            continue
        rows[r], rows[sel] = rows[sel], rows[r]
        rhs[r], rhs[sel] = rhs[sel], rhs[r]
        inv = 1 / rows[r][col]
        rows[r] = [v * inv for v in rows[r]]
        rhs[r] = rhs[r] * inv
        for i in range(m):
            if i != r and rows[i][col] != 0:
                f = rows[i][col]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
                rhs[i] = rhs[i] - f * rhs[r]
        pivots.append(col)
        r += 1
        if r == m:
            break
    consistent = all(rhs[i] == 0 for i in range(r, m))
    return rows[:r], rhs[:r], pivots, consistent


def oracle_bounds_by_grid(
    dataset: ReachDataset, target: SubsetMask, step: float
) -> BoundInterval:
    """Grid-search bounds on the target's reach over exact feasible allocations.

    Enumerates allocations whose free regions lie on a grid of spacing
    ``step`` (pivot regions are solved exactly from the observation
    equalities) and keeps the non-negative ones.  Only intended as an
    independent check of the LP bounds at desk scale.

    Args:
        dataset: consistent observations, P <= 4.
        target: non-empty subset whose reach range is sought.
        step: grid spacing per free region, > 0.

    Returns:
        The min/max target reach over surviving allocations.

    Raises:
        ValueError: P > 4, step <= 0, enumeration too large, or no feasible
            grid point ("grid too coarse").
    """
    num_bgs = dataset.num_bgs
    if num_bgs > 4:
        raise ValueError("grid oracle supports P <= 4 only")
    if step <= 0:
        raise ValueError("step must be positive")
    if target.is_empty:
        raise ValueError("empty subset has no reach")
    if dataset.n == 0:
        raise ValueError("dataset has no observations")

    nregions = (1 << num_bgs) - 1  # region 0 never contributes to any reach
    obs = dataset.sorted_observations()
    rows = [
        [Fraction(int(bool((j + 1) & o.subset.bits))) for j in range(nregions)]
        for o in obs
    ]
    rhs = [Fraction(o.reach) for o in obs]
    red_rows, red_rhs, pivots, consistent = _rref_fraction(rows, rhs)
    if not consistent:
        raise ValueError("grid too coarse")

    free_cols = [j for j in range(nregions) if j not in pivots]
    # Each region is bounded by every observed subset that covers it.
    cap = dataset.universe_size
    if cap is None:
        cap = sum(o.reach for o in obs if o.subset.popcount == 1) or dataset.scale
    ub = []
    for j in free_cols:
        covering = [o.reach for o in obs if (j + 1) & o.subset.bits]
        ub.append(min(covering) if covering else cap)
    counts = [int(np.floor(u / step + 0.5)) + 1 for u in ub]
    total = 1
    for c in counts:
        total *= c
    if total > _GRID_LIMIT:
        raise ValueError(f"grid enumeration too large ({total} points)")

    fstep = Fraction(step)
    target_coeff = np.array(
        [1.0 if (j + 1) & target.bits else 0.0 for j in range(nregions)]
    )
    pivot_rhs = red_rhs
    pivot_free = [[row[j] for j in free_cols] for row in red_rows]

    best_lo: Fraction | None = None
    best_hi: Fraction | None = None
    grids = [[fstep * k for k in range(c)] for c in counts]
    for combo in itertools.product(*grids):
        x = [Fraction(0)] * nregions
        for j, v in zip(free_cols, combo):
            x[j] = v
        ok = True
        for row_free, rv, pcol in zip(pivot_free, pivot_rhs, pivots):
            val = rv - sum(c * v for c, v in zip(row_free, combo) if c != 0)
            if val < 0:
                ok = False
                break
            x[pcol] = val
        if not ok:
            continue
        treach = sum(x[j] for j in range(nregions) if target_coeff[j])
        if best_lo is None or treach < best_lo:
            best_lo = treach
        if best_hi is None or treach > best_hi:
            best_hi = treach
    if best_lo is None or best_hi is None:
        raise ValueError("grid too coarse")
    return BoundInterval(lower=float(best_lo), upper=float(best_hi))
