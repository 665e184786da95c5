"""Command line front end.

Subcommands: ``gen`` makes labeled synthetic datasets, ``fit`` runs
mixture chains and writes traces, ``eval`` scores clusterings against a
reference, ``loglik`` scores held-out rankings under a trace, and
``approx-error`` tabulates the accuracy of the infinite-items Beta
shortcut.  Exit codes: 0 success, 2 usage, 3 data problems, 4 numerical
failure.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .dataio import (
    read_items,
    read_labels,
    read_manifest,
    read_rankings,
    read_trace,
    write_items,
    write_labels,
    write_manifest,
    write_params,
    write_rankings,
    write_summary_csv,
    write_trace,
)
from .dpm import ChainConfig, run_chain, test_log_likelihood
from .errors import NumericalError, RankingFormatError
from .evaluate import (
    PRESET_NAMES,
    PlantedMixtureSpec,
    approx_error_study,
    gen_planted_mixture,
    preset_spec,
    vi_distance,
)
from .model import PriorParams


def _parse_floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ValueError(f"expected comma-separated numbers, got {text!r}")


def _parse_ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ValueError(f"expected comma-separated integers, got {text!r}")


def _emit(lines, out_path):
    text = "\n".join(lines) + "\n"
    if out_path is None:
        sys.stdout.write(text)
    else:
        Path(out_path).write_text(text)


def cmd_gen(args) -> int:
    if args.preset is not None:
        spec = preset_spec(args.preset, points_per_cluster=args.points_per_cluster)
    else:
        if None in (args.k, args.n, args.t):
            raise ValueError("provide --preset or all of --k/--n/--t")
        theta = _parse_floats(args.theta)
        spec = PlantedMixtureSpec(
            K=args.k, n=args.n, t=args.t,
            theta_star=theta[0] if len(theta) == 1 else tuple(theta),
            points_per_cluster=args.points_per_cluster or 500,
            center_gen=args.center_gen)
    data, labels, params = gen_planted_mixture(spec, np.random.default_rng(args.seed))
    if not 0 <= args.heldout < len(data):
        raise ValueError(f"--heldout must be in [0, {len(data)})")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    names = [str(i + 1) for i in range(spec.n)]
    split = len(data) - args.heldout
    write_rankings(out / "data.txt", data[:split], names, spec.n)
    write_labels(out / "labels.txt", labels[:split])
    if args.heldout:
        write_rankings(out / "heldout.txt", data[split:], names, spec.n)
        write_labels(out / "heldout_labels.txt", labels[split:])
    write_items(out / "items.json", names, spec.n)
    write_params(out / "params.json", params)
    print(f"wrote {split} rankings ({args.heldout} held out) to {out}")
    return 0


def cmd_fit(args) -> int:
    items = read_items(args.items)[0] if args.items else None
    data, names, n = read_rankings(args.data, items=items)
    prior = PriorParams(nu=args.nu, r=args.r, alpha=args.alpha)
    cfg = ChainConfig(
        sampler_kind=args.sampler, T=args.sweeps, prior=prior,
        T_Gibbs=args.t_gibbs, T_Slices=args.t_slices, K_init=args.k_init,
        seed=args.seed, burn_in=args.burn_in, stride=args.stride,
        randomize_scan=args.randomize_scan)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seeds = [args.seed + c for c in range(args.chains)]
    for c, seed in enumerate(seeds):
        trace = run_chain(data, replace(cfg, seed=seed))
        write_trace(trace, out / f"trace_{c}.jsonl")
        write_summary_csv(trace, out / f"summary_{c}.csv")
        print(f"chain {c}: {len(trace.snapshots)} samples -> trace_{c}.jsonl")
    write_items(out / "items.json", names, n)
    write_manifest(out / "manifest.json", cfg, args.data, seeds, __version__)
    return 0


def cmd_eval(args) -> int:
    if (args.truth is None) == (args.trace2 is None):
        raise ValueError("provide exactly one of --truth or --trace2")
    trace = read_trace(args.trace)
    if args.truth is not None:
        truth = read_labels(args.truth)
        references = [truth] * len(trace.snapshots)
    else:
        other = read_trace(args.trace2)
        if len(other.snapshots) != len(trace.snapshots):
            raise RankingFormatError(
                "traces record different snapshot counts "
                f"({len(trace.snapshots)} vs {len(other.snapshots)})")
        references = [s.assignments for s in other.snapshots]
    lines = ["sweep,vi_nats,n_clusters"]
    for snap, ref in zip(trace.snapshots, references):
        if len(ref) != len(snap.assignments):
            raise RankingFormatError(
                f"reference labels {len(ref)} points, trace has "
                f"{len(snap.assignments)}")
        vi = vi_distance(snap.assignments, ref)
        lines.append(f"{snap.sweep},{vi!r},{len(snap.clusters)}")
    _emit(lines, args.out)
    return 0


def cmd_loglik(args) -> int:
    trace_path = Path(args.trace)
    trace = read_trace(trace_path)
    items = None
    items_path = Path(args.items) if args.items else trace_path.parent / "items.json"
    if items_path.exists():
        items = read_items(items_path)[0]
    heldout, _, n = read_rankings(args.test_file, items=items, declared_n=trace.n)
    if n != trace.n:
        raise RankingFormatError(
            f"test file uses n={n} but the trace was fit with n={trace.n}")

    manifest_path = trace_path.parent / "manifest.json"
    stored = {}
    if manifest_path.exists():
        cfg = read_manifest(manifest_path).get("config", {})
        stored = cfg.get("prior", {})
    prior = PriorParams(
        nu=args.nu if args.nu is not None else stored.get("nu", 1.0),
        r=args.r if args.r is not None else stored.get("r", 1.0),
        alpha=args.alpha if args.alpha is not None else stored.get("alpha", 1.0))

    kept = [s for s in trace.snapshots if s.sweep > args.burn_in][:: args.stride]
    if not kept:
        raise RankingFormatError("no snapshots remain after burn-in/stride")
    sub = replace(trace, snapshots=kept)
    score = test_log_likelihood(sub, heldout, prior)
    print(f"n_samples={score.n_samples} n_points={score.n_points} "
          f"total={score.total!r} per_point={score.per_point!r}")
    return 0


def cmd_approx_error(args) -> int:
    n_values = _parse_ints(args.n_list)
    a_grid = [float(a) for a in range(1, args.a_max + 1)]
    b_grid = _parse_floats(args.b_list)
    if not n_values or not b_grid or args.a_max < 1:
        raise ValueError("grids must be nonempty")
    rows = approx_error_study(n_values, a_grid, b_grid)
    lines = ["n,a,b,error"]
    lines += [f"{int(n)},{a!r},{b!r},{err!r}" for n, a, b, err in rows]
    _emit(lines, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mallows-dpm",
        description="Nonparametric mixtures of generalized Mallows models "
                    "over top-t rankings.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a labeled synthetic dataset")
    gen.add_argument("--preset", choices=PRESET_NAMES)
    gen.add_argument("--k", type=int, help="number of planted clusters")
    gen.add_argument("--n", type=int, help="number of items")
    gen.add_argument("--t", type=int, help="ranking length")
    gen.add_argument("--theta", default="1.0",
                     help="dispersion: one value or one per cluster, comma-separated")
    gen.add_argument("--points-per-cluster", type=int)
    gen.add_argument("--center-gen", choices=("conditioned", "uniform"),
                     default="conditioned")
    gen.add_argument("--heldout", type=int, default=0,
                     help="keep this many points aside in heldout.txt")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True, help="output directory")
    gen.set_defaults(func=cmd_gen)

    fit = sub.add_parser("fit", help="run mixture chains on a rankings file")
    fit.add_argument("--data", required=True)
    fit.add_argument("--out-dir", required=True)
    fit.add_argument("--sampler", choices=("slice", "beta"), default="beta")
    fit.add_argument("--alpha", type=float, default=1.0)
    fit.add_argument("--nu", type=float, default=1.0)
    fit.add_argument("--r", type=float, default=1.0)
    fit.add_argument("--sweeps", type=int, default=100)
    fit.add_argument("--t-gibbs", type=int, default=10)
    fit.add_argument("--t-slices", type=int, default=3)
    fit.add_argument("--k-init", type=int, default=20)
    fit.add_argument("--burn-in", type=int)
    fit.add_argument("--stride", type=int)
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--chains", type=int, default=1)
    fit.add_argument("--randomize-scan", action="store_true")
    fit.add_argument("--items", help="items.json fixing the token dictionary")
    fit.set_defaults(func=cmd_fit)

    ev = sub.add_parser("eval", help="score a trace against labels or a second trace")
    ev.add_argument("--trace", required=True)
    ev.add_argument("--truth", help="ground-truth labels file")
    ev.add_argument("--trace2", help="second trace to compare against")
    ev.add_argument("--metric", choices=("vi",), default="vi")
    ev.add_argument("--out", help="CSV path (default: stdout)")
    ev.set_defaults(func=cmd_eval)

    ll = sub.add_parser("loglik", help="score held-out rankings under a trace")
    ll.add_argument("--trace", required=True)
    ll.add_argument("--test-file", required=True)
    ll.add_argument("--burn-in", type=int, default=0)
    ll.add_argument("--stride", type=int, default=1)
    ll.add_argument("--alpha", type=float)
    ll.add_argument("--nu", type=float)
    ll.add_argument("--r", type=float)
    ll.add_argument("--items", help="items.json fixing the token dictionary")
    ll.set_defaults(func=cmd_loglik)

    ae = sub.add_parser("approx-error",
                        help="tabulate the infinite-items shortcut error")
    ae.add_argument("--n-list", default="10,20,50")
    ae.add_argument("--a-max", type=int, default=15)
    ae.add_argument("--b-list", default="1,3,10")
    ae.add_argument("--out", help="CSV path (default: stdout)")
    ae.set_defaults(func=cmd_approx_error)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (RankingFormatError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
