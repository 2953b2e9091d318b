"""JSON file formats for datasets, ground truths, and fitted models.

A dataset document looks like::

    {"num_bgs": 3,
     "universe_size": 10000.0,          # optional
     "observations": [{"subset": "110", "reach": 4000.0}, ...]}

Subset strings follow the canonical convention: character k (from the left)
is BG k+1's flag.  Ground-truth files add an ``allocation`` array of 2**P
region reaches (used by test oracles and the selection harness) and,
when produced by a generator, its parameters.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .core import ReachDataset, RegionAllocation
from .model import CiModel
from .synth import GroundTruth


def dataset_to_dict(dataset: ReachDataset) -> dict:
    payload: dict = {"num_bgs": dataset.num_bgs}
    if dataset.universe_size is not None:
        payload["universe_size"] = dataset.universe_size
    payload["observations"] = [
        {"subset": o.subset.to_string(), "reach": o.reach} for o in dataset.observations
    ]
    return payload


def dataset_from_dict(payload: dict) -> ReachDataset:
    num_bgs = int(payload["num_bgs"])
    universe = payload.get("universe_size")
    pairs = []
    for entry in payload["observations"]:
        subset = str(entry["subset"])
        if len(subset) != num_bgs:
            raise ValueError(
                f"subset string {subset!r} does not have num_bgs={num_bgs} characters"
            )
        pairs.append((subset, float(entry["reach"])))
    return ReachDataset.from_pairs(
        num_bgs, pairs, universe_size=None if universe is None else float(universe)
    )


def load_dataset(path: str | Path) -> ReachDataset:
    with open(path) as handle:
        return dataset_from_dict(json.load(handle))


def save_dataset(dataset: ReachDataset, path: str | Path) -> None:
    with open(path, "w") as handle:
        json.dump(dataset_to_dict(dataset), handle, indent=2)
        handle.write("\n")


def ground_truth_to_dict(truth: GroundTruth) -> dict:
    """Dataset-format document (basic observations included) with the extra
    ``allocation`` field that test oracles and the selection harness read."""
    from .core import basic_masks
    from .synth import true_reach

    spec = truth.generator
    return {
        "num_bgs": spec.num_bgs,
        "universe_size": spec.universe_size,
        "observations": [
            {"subset": m.to_string(), "reach": true_reach(truth, m)}
            for m in basic_masks(spec.num_bgs)
        ],
        "allocation": truth.allocation.values.tolist(),
        "generator": {
            "kind": spec.kind,
            "seed": spec.seed,
            "num_groups": spec.num_groups,
            "reach_beta_a": spec.reach_beta_a,
            "reach_beta_b": spec.reach_beta_b,
            "alpha": spec.alpha,
        },
    }


def save_ground_truth(truth: GroundTruth, path: str | Path) -> None:
    with open(path, "w") as handle:
        json.dump(ground_truth_to_dict(truth), handle, indent=2)
        handle.write("\n")


def load_allocation(path: str | Path) -> tuple[RegionAllocation, float | None]:
    """Read a ground-truth file down to (allocation, universe_size)."""
    with open(path) as handle:
        payload = json.load(handle)
    num_bgs = int(payload["num_bgs"])
    values = np.asarray(payload["allocation"], dtype=np.float64)
    universe = payload.get("universe_size")
    alloc = RegionAllocation.from_values(num_bgs, values)
    return alloc, None if universe is None else float(universe)


def load_model(path: str | Path) -> CiModel:
    with open(path) as handle:
        return CiModel.from_json_dict(json.load(handle))


def save_model(model: CiModel, path: str | Path) -> None:
    with open(path, "w") as handle:
        json.dump(model.to_json_dict(), handle, indent=2)
        handle.write("\n")
