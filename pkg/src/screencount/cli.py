"""Command line entry points: benchmark runs, synthetic data, live service.

The subcommands share one dataset vocabulary:

* ``synth`` writes a synthetic detector dataset (CSV + region file) to disk.
* ``simulate`` runs repeated-trial benchmarks over a method/budget grid and
  emits ``trials.jsonl`` and ``summary.csv``; byte-identical for a fixed seed.
* ``serve`` exposes screening sessions over HTTP for a loaded dataset.
* ``estimate`` recomputes a stored session's estimates offline, straight from
  the state directory ``serve`` wrote.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .domain import (DatasetError, load_dataset, load_regions, make_regions,
                     write_dataset_csv)
from .evaluation import (METHODS, SyntheticSpec, TrialConfig, generate_synthetic,
                         run_trials, write_summary_csv, write_trials_jsonl)
from .session import DatasetEntry, SessionError, SessionStore

__all__ = ["main"]


def _add_synthetic_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("synthetic dataset")
    group.add_argument("--size", type=int, default=365, help="number of units")
    group.add_argument("--shape", choices=("seasonal", "annulus"), default="seasonal")
    group.add_argument("--amplitude", type=float, default=100.0)
    group.add_argument("--center", type=float, default=0.5)
    group.add_argument("--width", type=float, default=0.15)
    group.add_argument("--baseline", type=float, default=0.0)
    group.add_argument("--noise", type=float, default=0.0,
                       help="multiplicative detector noise scale")
    group.add_argument("--miss-rate", type=float, default=0.0)
    group.add_argument("--fp-rate", type=float, default=0.0)
    group.add_argument("--covariate-shift", type=float, default=None,
                       help="offset of the covariate peak (enables the covariate)")
    group.add_argument("--covariate-widen", type=float, default=1.0)
    group.add_argument("--data-seed", type=int, default=0,
                       help="seed for dataset generation (independent of trial seed)")


def _spec_from_args(args: argparse.Namespace) -> SyntheticSpec:
    return SyntheticSpec(size=args.size, shape=args.shape, amplitude=args.amplitude,
                         center=args.center, width=args.width, baseline=args.baseline,
                         noise_scale=args.noise, miss_rate=args.miss_rate,
                         fp_rate=args.fp_rate, seed=args.data_seed,
                         covariate_shift=args.covariate_shift,
                         covariate_widen=args.covariate_widen)


def _split_sizes(total: int, k: int) -> list[int]:
    if k < 1 or k > total:
        raise DatasetError(f"cannot split {total} units into {k} regions")
    base, extra = divmod(total, k)
    return [base + (1 if i < extra else 0) for i in range(k)]


def _resolve_regions(domain, args: argparse.Namespace):
    if args.regions:
        return load_regions(args.regions, domain)
    sizes = _split_sizes(len(domain), args.split)
    return make_regions(domain, {"type": "partition", "sizes": sizes})


def cmd_synth(args: argparse.Namespace) -> int:
    domain, oracle = generate_synthetic(_spec_from_args(args))
    write_dataset_csv(domain, args.out, oracle)
    print(f"wrote {args.out} ({len(domain)} units)")
    if args.regions_out:
        sizes = _split_sizes(len(domain), args.split)
        with open(args.regions_out, "w", encoding="utf-8") as fh:
            json.dump({"type": "partition", "sizes": sizes}, fh)
            fh.write("\n")
        print(f"wrote {args.regions_out} ({args.split} regions)")
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    if args.data:
        domain, oracle = load_dataset(args.data)
        if oracle is None:
            raise DatasetError(f"{args.data}: simulation needs a true-count column")
    else:
        domain, oracle = generate_synthetic(_spec_from_args(args))
    regions = _resolve_regions(domain, args)

    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    explicit = args.methods != ",".join(METHODS)
    if domain.covariate is None and "IS" in methods and not explicit:
        print("note: dataset has no covariate; skipping IS", file=sys.stderr)
        methods = [m for m in methods if m != "IS"]

    grid = sorted({int(n) for n in args.grid.split(",") if n.strip()})
    if not grid:
        raise DatasetError("empty budget grid")

    results = []
    for method in methods:
        for n in grid:
            config = TrialConfig(method=method, n=n, regions=regions,
                                 trials=args.trials, seed=args.seed,
                                 variance_mode=args.variance_mode, alpha=args.alpha,
                                 cal_train_n=args.cal_train_n, c=args.cost_factor)
            result = run_trials(domain, oracle, config)
            results.append(result)
            print(f"{method} n={n}: mean_error={result.mean_error:.4f} "
                  f"coverage={'-' if result.coverage is None else f'{result.coverage:.3f}'} "
                  f"effort={result.effort_pct:.2f}%")

    os.makedirs(args.out, exist_ok=True)
    trials_path = os.path.join(args.out, "trials.jsonl")
    summary_path = os.path.join(args.out, "summary.csv")
    write_trials_jsonl(results, trials_path)
    write_summary_csv(results, summary_path)
    print(f"wrote {trials_path} and {summary_path}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .server import create_app

    domain, oracle = load_dataset(args.data)
    regions = load_regions(args.regions, domain)
    name = os.path.splitext(os.path.basename(args.data))[0]
    entry = DatasetEntry(name, domain, tuple(regions), oracle)
    store = SessionStore([entry], state_dir=args.state_dir)
    print(f"serving {name!r} ({len(domain)} units, {len(regions)} regions) "
          f"on {args.host}:{args.port}")
    uvicorn.run(create_app(store, static_dir=args.ui), host=args.host,
                port=args.port, log_level="warning")
    return 0


def cmd_estimate(args: argparse.Namespace) -> int:
    domain, oracle = load_dataset(args.data)
    regions = load_regions(args.regions, domain)
    name = os.path.splitext(os.path.basename(args.data))[0]
    entry = DatasetEntry(name, domain, tuple(regions), oracle)
    store = SessionStore([entry], state_dir=args.state_dir)
    print(json.dumps(store.estimates(args.session)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="screencount",
        description="Detector-guided importance sampling for counting")
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", help="write a synthetic dataset CSV")
    _add_synthetic_flags(synth)
    synth.add_argument("--out", required=True, help="output CSV path")
    synth.add_argument("--regions-out", default=None,
                       help="also write a region spec JSON here")
    synth.add_argument("--split", type=int, default=4,
                       help="regions in the generated spec")
    synth.set_defaults(func=cmd_synth)

    sim = sub.add_parser("simulate", help="run repeated-trial benchmarks")
    sim.add_argument("--data", default=None,
                     help="dataset CSV with true counts (default: synthetic)")
    _add_synthetic_flags(sim)
    sim.add_argument("--regions", default=None, help="region spec JSON")
    sim.add_argument("--split", type=int, default=4,
                     help="equal partition size when --regions is omitted")
    sim.add_argument("--methods", default=",".join(METHODS),
                     help=f"comma-separated subset of {','.join(METHODS)}")
    sim.add_argument("--grid", default="50",
                     help="comma-separated label budgets, e.g. 10,20,40")
    sim.add_argument("--trials", type=int, default=1000)
    sim.add_argument("--seed", type=int, default=0, help="master trial seed")
    sim.add_argument("--variance-mode", choices=("auto", "per-region", "pooled"),
                     default="auto")
    sim.add_argument("--alpha", type=float, default=0.05)
    sim.add_argument("--cal-train-n", type=int, default=15,
                     help="labels spent training the calibrated variants")
    sim.add_argument("--cost-factor", type=float, default=None,
                     help="override the per-method screening cost factor")
    sim.add_argument("--out", required=True, help="output directory")
    sim.set_defaults(func=cmd_simulate)

    serve = sub.add_parser("serve", help="serve screening sessions over HTTP")
    serve.add_argument("--data", required=True, help="dataset CSV")
    serve.add_argument("--regions", required=True, help="region spec JSON")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--state-dir", default=None,
                       help="directory for durable session state")
    serve.add_argument("--ui", default=None,
                       help="directory with a built dashboard to serve at /")
    serve.set_defaults(func=cmd_serve)

    est = sub.add_parser("estimate",
                         help="print estimates for a stored session as JSON")
    est.add_argument("session", help="session id")
    est.add_argument("--data", required=True, help="dataset CSV")
    est.add_argument("--regions", required=True, help="region spec JSON")
    est.add_argument("--state-dir", required=True,
                     help="state directory the service was run with")
    est.set_defaults(func=cmd_estimate)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DatasetError, SessionError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
