"""Command-line front end.

Subcommands: check, bounds, curve, fit, predict, select, experiment.
Exit codes: 0 ok, 2 inconsistent data, 3 infeasible/unavailable, 64 usage.
Structured output goes to stdout (JSON, or CSV for curves); diagnostics to
stderr.  REACH_VENN_THREADS caps experiment parallelism.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

from . import io
from .bounds import (
    BoundsSolver,
    check_consistency,
    incremental_curve_bounds,
    repair_dataset,
    subset_bounds,
)
from .core import (
    BoundInterval,
    InconsistencyError,
    ReachDataset,
    SubsetMask,
    UnavailableError,
    enumerate_masks,
    subset_reach_from_allocation,
)
from .experiment import run_experiment
from .model import fit as fit_model
from .model import predict
from .pipeline import (
    EstimateOptions,
    SelectionState,
    _effective_d,
    estimate_subset,
    select_next_point,
    tune_d,
)
from .synth import GeneratorSpec

EXIT_OK = 0
EXIT_INCONSISTENT = 2
EXIT_UNAVAILABLE = 3
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _interval_dict(interval: BoundInterval) -> dict:
    payload = {"lower": interval.lower, "upper": interval.upper}
    if interval.upper_capped:
        payload["upper_capped"] = True
    return payload


def _parse_mask(text: str, num_bgs: int) -> SubsetMask:
    mask = SubsetMask.from_string(text)
    if mask.num_bgs != num_bgs:
        raise ValueError(f"mask {text!r} does not have {num_bgs} characters")
    if mask.is_empty:
        raise ValueError("the all-zero mask is not an observable subset")
    return mask


def _parse_d(text: str) -> float | None:
    if text == "auto":
        return None
    if text == "inf":
        return math.inf
    value = float(text)
    if value < 1.0:
        raise ValueError("d must be at least 1 (or 'inf'/'auto')")
    return value


def _emit(payload: dict) -> None:
    json.dump(payload, sys.stdout, indent=2)
    sys.stdout.write("\n")


def cmd_check(args) -> int:
    dataset = io.load_dataset(args.dataset)
    report = check_consistency(dataset)
    print(f"{'consistent' if report.consistent else 'inconsistent'}", file=sys.stdout)
    print(f"t_star: {report.t_star}", file=sys.stdout)
    if report.diagnostic:
        print(f"diagnostic: {report.diagnostic}", file=sys.stdout)
    if args.repair is not None:
        io.save_dataset(repair_dataset(dataset), args.repair)
        print(f"repaired dataset written to {args.repair}", file=sys.stdout)
    return EXIT_OK if report.consistent else EXIT_INCONSISTENT


def cmd_bounds(args) -> int:
    dataset = io.load_dataset(args.dataset)
    if args.all:
        targets = enumerate_masks(dataset.num_bgs)
    else:
        targets = [_parse_mask(args.target, dataset.num_bgs)]
    solver = BoundsSolver(dataset)
    _emit(
        {
            "num_bgs": dataset.num_bgs,
            "bounds": {m.to_string(): _interval_dict(solver.bounds(m)) for m in targets},
        }
    )
    return EXIT_OK


def cmd_curve(args) -> int:
    dataset = io.load_dataset(args.dataset)
    order = [int(tok) for tok in args.order.split(",")]
    mode = {"free": "free", "upper": "upper_trace", "lower": "lower_trace"}[args.mode]
    rows = incremental_curve_bounds(dataset, order, mode)
    writer = sys.stdout
    header = "prefix_length,subset,lower,upper"
    if mode != "free":
        header += ",pinned"
    writer.write(header + "\n")
    for row in rows:
        line = (
            f"{row.prefix_length},{row.subset.to_string()},"
            f"{row.interval.lower},{row.interval.upper}"
        )
        if mode != "free":
            line += f",{row.pinned}"
        writer.write(line + "\n")
    return EXIT_OK


def _resolve_d(dataset: ReachDataset, d_arg: float | None) -> tuple[float, str]:
    if d_arg is not None:
        return d_arg, "given"
    if dataset.n > dataset.num_bgs + 1:
        return tune_d(dataset), "cross_validated"
    return math.inf, "default_inf"


def cmd_fit(args) -> int:
    dataset = io.load_dataset(args.dataset)
    repaired = False
    if not check_consistency(dataset).consistent:
        dataset = repair_dataset(dataset)
        repaired = True
    d, policy = _resolve_d(dataset, _parse_d(args.d))
    model = fit_model(dataset, _effective_d(d))
    payload = model.to_json_dict()
    payload["d_policy"] = policy
    payload["repaired"] = repaired
    if args.out is not None:
        io.save_model(model, args.out)
    _emit(payload)
    return EXIT_OK


def cmd_predict(args) -> int:
    dataset = io.load_dataset(args.dataset)
    target = _parse_mask(args.target, dataset.num_bgs)
    if args.model is not None:
        model = io.load_model(args.model)
        interval = subset_bounds(dataset, target)
        point = predict(model, target)
        if not args.no_clamp:
            point = min(max(point, interval.lower), interval.upper)
        payload = {
            "target": target.to_string(),
            "point": point,
            "interval_100": _interval_dict(interval),
            "d": "inf" if math.isinf(model.d) else model.d,
            "d_policy": "loaded",
            "universe_size": model.universe_size,
        }
        _emit(payload)
        return EXIT_OK
    options = EstimateOptions(
        clamp=not args.no_clamp, alpha=args.alpha, d=_parse_d(args.d)
    )
    estimate = estimate_subset(dataset, target, options)
    payload = {
        "target": target.to_string(),
        "point": estimate.point,
        "interval_100": _interval_dict(estimate.interval_100),
        "d": "inf" if math.isinf(estimate.d) else estimate.d,
        "d_policy": estimate.d_policy,
        "universe_size": estimate.universe_size,
        "repaired": estimate.repaired,
    }
    if args.alpha is not None:
        if estimate.interval_alpha is None:
            payload["interval_alpha"] = None
            payload["alpha_note"] = "unavailable: no spare training points (n = P+1)"
        else:
            payload["interval_alpha"] = _interval_dict(estimate.interval_alpha)
            payload["alpha"] = estimate.alpha
    _emit(payload)
    return EXIT_OK


def cmd_select(args) -> int:
    dataset = io.load_dataset(args.dataset)
    allocation, _ = io.load_allocation(args.truth)
    if allocation.num_bgs != dataset.num_bgs:
        raise ValueError("truth file and dataset disagree on num_bgs")
    exclude = [
        _parse_mask(tok, dataset.num_bgs)
        for tok in (args.exclude.split(",") if args.exclude else [])
    ]
    track = [
        _parse_mask(tok, dataset.num_bgs)
        for tok in (args.track.split(",") if args.track else [])
    ]
    state = SelectionState.initial(dataset, exclude=exclude)
    rounds = []
    warning = None
    for round_index in range(1, args.budget + 1):
        if not state.candidates:
            warning = f"candidates exhausted after {round_index - 1} selections"
            break
        state = select_next_point(
            state, lambda m: subset_reach_from_allocation(m, allocation)
        )
        selected = state.chosen[-1]
        entry = {
            "round": round_index,
            "selected": selected.to_string(),
            "measured_reach": state.measurements.reach_of(selected),
        }
        if track:
            solver = BoundsSolver(state.measurements)
            entry["tracked"] = {
                m.to_string(): _interval_dict(solver.bounds(m)) for m in track
            }
        rounds.append(entry)
    payload = {"rounds": rounds, "chosen": [m.to_string() for m in state.chosen]}
    if warning:
        payload["warning"] = warning
    _emit(payload)
    return EXIT_OK


def cmd_experiment(args) -> int:
    spec = GeneratorSpec(
        kind="ci_groups" if args.generator == "ci" else "dirichlet",
        num_bgs=args.p,
        universe_size=args.universe,
        seed=args.seed,
        num_groups=args.groups,
        reach_beta_a=args.beta_a,
        reach_beta_b=args.beta_b,
        alpha=args.alpha,
    )
    report = run_experiment(
        spec, replicates=args.replicates, seed=args.seed, max_workers=args.workers
    )
    payload = report.to_json_dict()
    if args.out is not None:
        with open(args.out, "w") as handle:
            json.dump(payload, handle, indent=2)
            handle.write("\n")
        payload_summary = dict(payload)
        payload_summary.pop("errors")
        _emit(payload_summary)
    else:
        _emit(payload)
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="reachvenn", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="validate reach consistency", parents=[])
    p.add_argument("dataset", help="dataset JSON file")
    p.add_argument("--repair", metavar="OUT", help="write a repaired dataset here")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("bounds", help="tightest reach bounds for subsets")
    p.add_argument("dataset")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--target", help="subset string, e.g. 101")
    group.add_argument("--all", action="store_true", help="bound every non-zero subset")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("curve", help="incremental reach curve bounds (CSV)")
    p.add_argument("dataset")
    p.add_argument("--order", required=True, help="BG permutation, e.g. 1,2,3,4,5")
    p.add_argument("--mode", choices=["free", "upper", "lower"], default="free")
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("fit", help="fit the conditional-independence model")
    p.add_argument("dataset")
    p.add_argument("--d", default="auto", help="'auto', 'inf', or a number > 1")
    p.add_argument("--out", help="also write the model JSON here")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="estimate one subset's reach")
    p.add_argument("dataset")
    p.add_argument("--target", required=True)
    p.add_argument("--d", default="auto")
    p.add_argument("--alpha", type=float, help="confidence level for the error bar")
    p.add_argument("--no-clamp", action="store_true", help="skip clamping into bounds")
    p.add_argument("--model", help="reuse a saved model instead of fitting")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("select", help="adaptively pick subsets to measure")
    p.add_argument("dataset")
    p.add_argument("--budget", type=int, required=True)
    p.add_argument("--truth", required=True, help="ground-truth JSON with allocation")
    p.add_argument("--exclude", help="comma-separated masks kept out of selection")
    p.add_argument("--track", help="comma-separated masks whose bounds are logged")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("experiment", help="synthetic benchmark harness")
    p.add_argument("--generator", choices=["ci", "dirichlet"], required=True)
    p.add_argument("--p", type=int, required=True, help="number of BGs")
    p.add_argument("--replicates", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--universe", type=float, default=1_000_000.0)
    p.add_argument("--groups", type=int, default=10, help="ci generator group count")
    p.add_argument("--beta-a", type=float, default=0.4)
    p.add_argument("--beta-b", type=float, default=2.0)
    p.add_argument("--alpha", type=float, default=2.0, help="dirichlet concentration")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", help="write the full report JSON here")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits for usage errors and --help
        return int(exc.code or 0)
    try:
        return args.func(args)
    except InconsistencyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INCONSISTENT
    except UnavailableError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNAVAILABLE
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
