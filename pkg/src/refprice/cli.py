"""Command line entry point: ``refprice run|bound|selftest``.

``run`` executes a config file and writes ``regret.csv`` plus a
``manifest.json`` sidecar into the output directory.  The CSV contract
is fixed: header ``experiment,strategy,episode,mean_regret,stderr,
cum_regret``, floats at 17 significant digits, LF line endings, UTF-8.
Re-running the same config and seed reproduces the file byte for byte.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from . import __version__
from .config import ConfigError, parse_config
from .harness import evaluate_regret, regret_bound, run_async

CSV_HEADER = "experiment,strategy,episode,mean_regret,stderr,cum_regret"


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _write_csv(path: Path, blocks) -> int:
    """blocks: iterable of (experiment, strategy, RegretTrace)."""
    rows = 0
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(CSV_HEADER + "\n")
        for experiment, strategy, trace in blocks:
            cum = trace.cumulative_regret
            for k in range(trace.per_episode_regret.shape[0]):
                fh.write(",".join([
                    experiment, strategy, str(k + 1),
                    _fmt(trace.per_episode_regret[k]),
                    _fmt(trace.std_error[k]),
                    _fmt(cum[k]),
                ]) + "\n")
                rows += 1
    return rows


def cmd_run(args) -> int:
    if args.runs is not None and args.runs < 1:
        print("error: --runs must be >= 1", file=sys.stderr)
        return 2
    try:
        parsed = parse_config(args.config)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    started = time.time()
    blocks = []
    strategy_meta: dict[str, dict] = {}
    concave_fractions = []
    try:
        for label, exp in parsed.experiments():
            if args.seed is not None:
                exp.seed = args.seed
            if args.runs is not None:
                exp.runs = args.runs
            if exp.launch_schedule is not None:
                trace = run_async(exp, threads=args.threads)
                traces = {exp.strategies[0][0]: trace}
            else:
                traces = evaluate_regret(exp, threads=args.threads)
            for strategy, trace in traces.items():
                blocks.append((label, strategy, trace))
                key = f"{label}/{strategy}"
                strategy_meta[key] = {
                    "nsd_exhaustions": trace.metadata["nsd_exhaustions"],
                    "nsd_draws": trace.metadata["nsd_draws"],
                }
                concave_fractions.append(
                    trace.metadata["oracle_concave_fraction"])
    except Exception as exc:  # runtime failure, not config
        print(f"error: {exc}", file=sys.stderr)
        return 1
    csv_path = out_dir / "regret.csv"
    rows = _write_csv(csv_path, blocks)
    manifest = {
        "artifact_version": __version__,
        "config_path": str(args.config),
        "config_hash": parsed.config_hash,
        "master_seed": args.seed if args.seed is not None else parsed.seed,
        "runs": args.runs if args.runs is not None else parsed.runs,
        "episodes": parsed.K,
        "rows_written": rows,
        "started_at": time.strftime("%Y-%m-%dT%H:%M:%SZ",
                                    time.gmtime(started)),
        "finished_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "oracle_concave_fraction": (
            sum(concave_fractions) / len(concave_fractions)
            if concave_fractions else None),
        "strategies": strategy_meta,
    }
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {csv_path} ({rows} rows)")
    return 0


def cmd_bound(args) -> int:
    try:
        beta_k, bound = regret_bound(
            sigma2=args.sigma2, d_max=args.d_max, p_max=args.p_max,
            K=args.K, H=args.H, q=args.q, d_E=args.d_E, log_N=args.log_N)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"beta_K = {_fmt(beta_k)}")
    print(f"regret_bound = {_fmt(bound)}")
    return 0


def cmd_selftest(_args) -> int:
    from .selftest import run_selftest
    return run_selftest()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="refprice",
        description="Thompson pricing with reference effects: experiment "
                    "runner and bound calculator")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a config file")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", required=True)
    p_run.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
    p_run.add_argument("--runs", type=int, default=None,
                       help="override the Monte-Carlo repetition count")
    p_run.add_argument("--threads", type=int,
                       default=int(os.environ.get("REFPRICE_THREADS", "1")
                                   or "1"))
    p_run.set_defaults(func=cmd_run)

    p_bound = sub.add_parser("bound", help="evaluate the regret bound")
    p_bound.add_argument("--sigma2", type=float, required=True)
    p_bound.add_argument("--d-max", dest="d_max", type=float, required=True)
    p_bound.add_argument("--p-max", dest="p_max", type=float, required=True)
    p_bound.add_argument("--K", type=int, required=True)
    p_bound.add_argument("--H", type=int, required=True)
    p_bound.add_argument("--q", type=int, default=1)
    p_bound.add_argument("--d-E", dest="d_E", type=float, required=True)
    p_bound.add_argument("--log-N", dest="log_N", type=float, required=True)
    p_bound.set_defaults(func=cmd_bound)

    p_self = sub.add_parser("selftest", help="run the fast invariant suite")
    p_self.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
