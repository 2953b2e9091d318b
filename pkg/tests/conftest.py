"""Shared fixtures: random ground truths and the projected-gradient oracle."""

from __future__ import annotations

import numpy as np
import pytest

from reachvenn.core import (
    ReachDataset,
    RegionAllocation,
    SubsetMask,
    basic_masks,
    dataset_from_allocation,
)


def random_allocation(
    rng: np.random.Generator,
    num_bgs: int,
    universe: float = 1.0,
    grid_step: float | None = None,
) -> RegionAllocation:
    """A random non-negative allocation summing to ``universe``.

    With ``grid_step`` the entries are multiples of the step (the total then
    lands near ``universe`` instead of exactly on it).
    """
    raw = rng.dirichlet(np.ones(1 << num_bgs)) * universe
    if grid_step is not None:
        raw = np.round(raw / grid_step) * grid_step
    return RegionAllocation.from_values(num_bgs, raw)


def random_consistent_dataset(
    rng: np.random.Generator,
    num_bgs: int,
    extra: int = 0,
    universe: float | None = 1.0,
    grid_step: float | None = None,
) -> tuple[ReachDataset, RegionAllocation]:
    """Exact observations (basics plus ``extra`` random masks) of a random truth."""
    total = universe if universe is not None else 1.0
    alloc = random_allocation(rng, num_bgs, total, grid_step)
    if grid_step is not None:
        universe = None  # rounding can push the covered total past the universe
    masks = basic_masks(num_bgs)
    pool = [
        SubsetMask(j, num_bgs)
        for j in range(1, 1 << num_bgs)
        if SubsetMask(j, num_bgs) not in masks
    ]
    if extra:
        picks = rng.choice(len(pool), size=min(extra, len(pool)), replace=False)
        masks = masks + [pool[i] for i in sorted(picks)]
    return dataset_from_allocation(alloc, masks, universe_size=universe), alloc


def project_to_simplex(y: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {v >= 0, sum(v) == 1} (sort algorithm)."""
    u = np.sort(y)[::-1]
    css = np.cumsum(u)
    ks = np.arange(1, y.size + 1)
    rho = np.nonzero(u * ks > (css - 1.0))[0][-1]
    theta = (css[rho] - 1.0) / (rho + 1.0)
    return np.maximum(y - theta, 0.0)


def pgd_simplex_lstsq(
    a: np.ndarray, b: np.ndarray, iters: int = 100_000
) -> tuple[np.ndarray, float]:
    """Long-run projected gradient for min ||a v - b||^2 on the simplex.

    Deliberately naive: fixed 1/L step, many iterations.  Used as the
    independent optimality oracle for the active-set solver.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    n = a.shape[1]
    lip = np.linalg.norm(a, 2) ** 2
    step = 1.0 / max(lip, 1e-12)
    v = np.full(n, 1.0 / n)
    for _ in range(iters):
        v = project_to_simplex(v - step * (a.T @ (a @ v - b)))
    resid = b - a @ v
    return v, float(resid @ resid)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
