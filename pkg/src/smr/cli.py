"""smr-bench command line: `run` executes workload trials, `rbf-probe`
measures per-free latency under ring-wise remote freeing.

Exit codes: 0 on success, 2 when the debug oracle detects a violation.
"""

from __future__ import annotations

import argparse
import os
import sys

from .bench import (BenchConfig, RbfProbeConfig, emit_rbf_csv, emit_results,
                    run_benchmark, run_rbf_probe)
from .core import (DoubleFreeError, GracePeriodViolation, UseAfterFreeError)

ORACLE_EXIT = 2


def _add_run_parser(sub):
    p = sub.add_parser("run", help="run workload trials")
    p.add_argument("--reclaimer", default="debra",
                   choices=["none", "debra", "qsbr", "token_naive",
                            "token_passfirst", "token_periodic", "token_af"])
    p.add_argument("--free-policy", default="batch",
                   choices=["batch", "amortized"])
    p.add_argument("--ds", default="bst", choices=["bst", "list"])
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--keyrange", type=int, default=20_000_000)
    p.add_argument("--duration", type=float, default=5.0)
    p.add_argument("--ops", type=int, default=None,
                   help="per-thread op quota (overrides --duration)")
    p.add_argument("--trials", type=int, default=3)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--node-size", type=int, default=240)
    p.add_argument("--allocator", default="pymalloc",
                   choices=["pymalloc", "model-tcache"])
    p.add_argument("--timeline", default=None, metavar="DIR")
    p.add_argument("--out", default="results", metavar="DIR")
    p.add_argument("--pin", default="none",
                   choices=["none", "compact", "scatter"])
    p.add_argument("--af-quota", type=int, default=1)
    p.add_argument("--af-highwater", type=int, default=10 * 32768)
    p.add_argument("--token-kfree", type=int, default=100)
    p.add_argument("--ebr-kcheck", type=int, default=1)
    p.add_argument("--prefill", default="stable",
                   help='"stable", "exact", "none", or an op count')
    p.add_argument("--debug-oracle", action="store_true",
                   help="enable the grace oracle (also SMR_DEBUG_ORACLE=1)")


def _add_probe_parser(sub):
    p = sub.add_parser("rbf-probe", help="measure remote batch free latency")
    p.add_argument("--threads", type=int, default=8)
    p.add_argument("--batch", type=int, default=32768)
    p.add_argument("--mode", default="batch", choices=["batch", "amortized"])
    p.add_argument("--size", type=int, default=240)
    p.add_argument("--rounds", type=int, default=2)
    p.add_argument("--allocator", default="model-tcache",
                   choices=["pymalloc", "model-tcache"])
    p.add_argument("--out", default="results", metavar="DIR")


def _parse_prefill(text: str):
    if text in ("stable", "exact", "none"):
        return text
    try:
        return int(text)
    except ValueError:
        raise SystemExit(f"invalid --prefill value: {text!r}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="smr-bench")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_run_parser(sub)
    _add_probe_parser(sub)
    args = parser.parse_args(argv)

    if args.command == "run":
        debug = args.debug_oracle or os.environ.get("SMR_DEBUG_ORACLE") == "1"
        config = BenchConfig(
            threads=args.threads, reclaimer=args.reclaimer,
            free_policy=args.free_policy, ds=args.ds, keyrange=args.keyrange,
            duration_s=args.duration, total_ops=args.ops, trials=args.trials,
            seed=args.seed, node_size=args.node_size,
            allocator=args.allocator, pin=args.pin,
            prefill=_parse_prefill(args.prefill), debug=debug,
            af_quota=args.af_quota, af_high_water=args.af_highwater,
            k_check=args.ebr_kcheck, k_free=args.token_kfree,
            timeline_dir=args.timeline)
        try:
            results = run_benchmark(config)
        except (GracePeriodViolation, UseAfterFreeError, DoubleFreeError) as exc:
            print(f"oracle violation: {exc}", file=sys.stderr)
            if isinstance(exc, GracePeriodViolation):
                print(f"  thread: {exc.thread_id}", file=sys.stderr)
                print(f"  retire stamp: {exc.retire_stamp}", file=sys.stderr)
                print(f"  retire snapshot: {exc.snapshot}", file=sys.stderr)
            return ORACLE_EXIT
        files = emit_results(results, args.out)
        for r in results:
            print(f"trial {r.trial}: {r.ops_per_sec:,.0f} ops/s, "
                  f"peak {r.peak_mib:.1f} MiB, retired {r.retired}, "
                  f"freed {r.freed}, epochs {r.epochs}")
        print(f"wrote {files['results']} and {files['summary']}")
        return 0

    config = RbfProbeConfig(threads=args.threads, object_size=args.size,
                            batch=args.batch, mode=args.mode,
                            rounds=args.rounds, allocator=args.allocator)
    result = run_rbf_probe(config)
    fp = emit_rbf_csv([result], args.out)
    print(f"{result.mode}: {result.total_frees} frees, p50 {result.p50_ns} ns, "
          f"p99 {result.p99_ns} ns, max {result.max_ns} ns, "
          f">100us {result.over_100us}")
    print(f"wrote {fp}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
