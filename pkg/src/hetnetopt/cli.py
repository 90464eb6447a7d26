"""Command-line interface.

Subcommands: `run` one algorithm on one snapshot, `campaign` for paired
Monte-Carlo sweeps, `verify` for the built-in oracle suites, and `emit` to
regenerate plot CSVs from a stored campaign.  Exit codes: 0 ok, 2 config
error, 3 solver flagged non-convergence, 4 invariant violation.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
import time
from pathlib import Path

import numpy as np

from . import verify as verify_mod
from .errors import HetNetError, InvariantViolation, NonConvergence
from .loadpower import LdpcOptions
from .orchestrate import ALGORITHMS, IulpOptions, monte_carlo, run_algorithm
from .reports import (
    emit_campaign_csvs,
    load_campaign_dict,
    save_campaign,
    save_report,
)
from .scenario import generate_scenario, load_config, load_scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_FLAGGED = 3
EXIT_INVARIANT = 4


def _build_options(args) -> IulpOptions:
    opts = IulpOptions()
    if args.xi is not None:
        opts.xi = args.xi
    if args.tmax is not None:
        opts.t_max = args.tmax
    if args.kkt_tol is not None:
        opts.ldpc = dataclasses.replace(opts.ldpc, kkt_tol=args.kkt_tol)
        opts.icupa.tol = args.kkt_tol
    return opts


def _load_snapshot(args):
    if args.scenario:
        scenario, _ = load_scenario(args.scenario)
        return scenario
    config = load_config(args.config)
    if args.seed is not None:
        config = dataclasses.replace(config, rng_seed=args.seed)
    scenario, _ = generate_scenario(config)
    return scenario


def cmd_run(args) -> int:
    scenario = _load_snapshot(args)
    opts = _build_options(args)
    t0 = time.perf_counter()
    report = run_algorithm(scenario, args.algo, opts)
    elapsed = time.perf_counter() - t0
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"report_{args.algo.replace('+', '_')}.json"
    save_report(path, report)
    print(f"{args.algo}: utility={report.utility:.4f} "
          f"outer={report.outer_iterations} stopped_by={report.stopped_by}")
    print(f"wrote {path}", file=sys.stderr)
    print(f"elapsed {elapsed:.2f}s", file=sys.stderr)
    return EXIT_FLAGGED if report.flags else EXIT_OK


def cmd_campaign(args) -> int:
    config = load_config(args.config)
    algos = [a.strip() for a in args.algo.split(",") if a.strip()]
    opts = _build_options(args)
    t0 = time.perf_counter()
    summary = monte_carlo(config, algos, args.n, args.seed or 0, opts)
    elapsed = time.perf_counter() - t0
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "campaign.json"
    save_campaign(path, summary)
    emit_campaign_csvs(load_campaign_dict(path), out)
    for a in algos:
        print(f"{a}: mean={summary.mean_utility[a]:.4f} std={summary.std_utility[a]:.4f}")
    print(f"wrote {path} and CSVs; elapsed {elapsed:.1f}s", file=sys.stderr)
    flagged = any(summary.flags[a] for a in algos)
    return EXIT_FLAGGED if flagged else EXIT_OK


def cmd_emit(args) -> int:
    doc = load_campaign_dict(Path(args.out) / "campaign.json")
    paths = emit_campaign_csvs(doc, args.out)
    print(f"rewrote {len(paths)} CSV files in {args.out}")
    return EXIT_OK


def cmd_verify(args) -> int:
    ok = verify_mod.run_all(fast=args.fast)
    return EXIT_OK if ok else EXIT_INVARIANT


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hetnetopt",
        description="Utility-optimal association, load and power control for HetNets",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one algorithm on one snapshot")
    src = run_p.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="generator config JSON")
    src.add_argument("--scenario", help="explicit scenario JSON")
    run_p.add_argument("--algo", required=True, choices=ALGORITHMS)
    run_p.add_argument("--seed", type=int, help="override the config seed")
    run_p.add_argument("--out", default="out", help="output directory")
    run_p.add_argument("--xi", type=float, help="outer-loop tolerance")
    run_p.add_argument("--tmax", type=int, help="outer-loop iteration cap")
    run_p.add_argument("--kkt-tol", dest="kkt_tol", type=float)
    run_p.set_defaults(func=cmd_run)

    camp = sub.add_parser("campaign", help="paired Monte-Carlo campaign")
    camp.add_argument("--config", required=True)
    camp.add_argument("--algo", required=True, help="comma-separated list")
    camp.add_argument("--n", type=int, required=True)
    camp.add_argument("--seed", type=int, default=0)
    camp.add_argument("--out", default="out")
    camp.add_argument("--xi", type=float)
    camp.add_argument("--tmax", type=int)
    camp.add_argument("--kkt-tol", dest="kkt_tol", type=float)
    camp.set_defaults(func=cmd_campaign)

    emit = sub.add_parser("emit", help="regenerate CSVs from campaign.json")
    emit.add_argument("--out", required=True, help="directory holding campaign.json")
    emit.set_defaults(func=cmd_emit)

    ver = sub.add_parser("verify", help="run the oracle suites")
    ver.add_argument("--fast", action="store_true", help="reduced instance counts")
    ver.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except NonConvergence as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return EXIT_FLAGGED
    except HetNetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
