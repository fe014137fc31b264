"""Benchmark harness: the coin-flip workload, prefill, trials, the
remote-batch-free probe, RSS sampling, and machine-readable results.

A trial runs ``threads`` workers against one shared data structure. Each
worker registers with the reclaimer, prefills until the structure size
stabilizes, then repeatedly flips a coin to insert or delete a uniform
random key for the measured window. Workers keep all bookkeeping in
preallocated per-thread slots; files are written only after the pool has
quiesced.

Coin flips and key draws come from a per-thread generator seeded from
(global seed, thread index), so single-thread runs with a fixed seed replay
exactly.
"""

from __future__ import annotations

import bisect
import csv
import dataclasses
import gc
import math
import os
import random
import sys
import threading
import time
from array import array
from dataclasses import dataclass, field

try:
    import psutil
except ImportError:  # pragma: no cover - present in normal installs
    psutil = None

from .allocators import make_allocator
from .core import Reclaimer, SmrError
from .ebr import DebraReclaimer, LeakyReclaimer, QsbrReclaimer
from .freelist import DEFAULT_HIGH_WATER, DEFAULT_QUOTA
from .timeline import NullRecorder, TimelineRecorder, monotonic_ns
from .token_ring import (DEFAULT_K_FREE, TokenAmortizedReclaimer,
                         TokenNaiveReclaimer, TokenPassFirstReclaimer,
                         TokenPeriodicReclaimer)
from .workloads import DEFAULT_NODE_SIZE, make_data_structure


class HarnessError(SmrError):
    pass


RECLAIMERS = {
    "none": LeakyReclaimer,
    "debra": DebraReclaimer,
    "qsbr": QsbrReclaimer,
    "token_naive": TokenNaiveReclaimer,
    "token_passfirst": TokenPassFirstReclaimer,
    "token_periodic": TokenPeriodicReclaimer,
    "token_af": TokenAmortizedReclaimer,
}

PREFILL_TIMEOUT_S = 60.0
PREFILL_CHECK_S = 0.1

RESULT_COLUMNS = ["threads", "reclaimer", "policy", "ops_per_sec", "peak_mib",
                  "retired", "freed", "epochs", "ds", "allocator", "node_size",
                  "keyrange", "seed", "trial", "duration_s", "prefill_size",
                  "pct_time_freeing", "events_dropped", "rss_warn"]

SUMMARY_COLUMNS = ["threads", "reclaimer", "policy", "ds", "allocator",
                   "trials", "ops_mean", "ops_min", "ops_max", "peak_mib_mean"]


@dataclass
class BenchConfig:
    threads: int = 1
    reclaimer: str = "debra"
    free_policy: str = "batch"
    ds: str = "bst"
    keyrange: int = 20_000_000
    insert_pct: int = 50
    duration_s: float = 5.0
    total_ops: int | None = None     # per-thread op quota; overrides duration
    trials: int = 3
    seed: int = 1
    node_size: int = DEFAULT_NODE_SIZE
    allocator: str = "pymalloc"
    allocator_kwargs: dict = field(default_factory=dict)
    pin: str = "none"
    prefill: object = "stable"        # "stable" | "exact" | "none" | int
    debug: bool | None = None
    af_quota: int = DEFAULT_QUOTA
    af_high_water: int = DEFAULT_HIGH_WATER
    k_check: int = 1
    k_free: int = DEFAULT_K_FREE
    timeline_dir: str | None = None
    timeline_capacity: int = 100_000
    record_timeline: bool = True
    rss_interval_ms: int = 10
    tally: bool = False
    switch_interval_s: float | None = None  # interpreter preemption quantum
    free_event_granularity: str = "single"  # or "batch": intervals only

    def __post_init__(self):
        if self.threads < 1:
            raise ValueError("threads must be at least 1")
        if self.duration_s <= 0 and self.total_ops is None:
            raise ValueError("duration must be positive")
        if not (0 <= self.insert_pct <= 100):
            raise ValueError("update mix must sum to 100%")
        if self.keyrange < 2:
            raise ValueError("keyrange must be at least 2")
        if self.reclaimer not in RECLAIMERS:
            raise ValueError(f"unknown reclaimer: {self.reclaimer!r}")
        if self.reclaimer == "token_af":
            self.free_policy = "amortized"
        if self.pin not in ("none", "compact", "scatter"):
            raise ValueError(f"unknown pin policy: {self.pin!r}")
        if self.tally and self.keyrange > 1 << 20:
            raise ValueError("tally needs a small keyrange")


@dataclass
class TrialResult:
    threads: int
    reclaimer: str
    policy: str
    ds: str
    allocator: str
    node_size: int
    keyrange: int
    seed: int
    trial: int
    ops: int
    elapsed_s: float
    ops_per_sec: float
    cpu_s: float
    ops_per_cpu_s: float
    peak_mib: float
    rss_warn: bool
    retired: int
    freed: int
    leaked: int
    drained: int
    epochs: int
    garbage_series: list
    pct_time_freeing: float
    events_dropped: int
    prefill_size: int
    final_size: int | None = None
    set_mismatches: int | None = None
    token_audit: dict | None = None

    def row(self) -> dict:
        return {
            "threads": self.threads, "reclaimer": self.reclaimer,
            "policy": self.policy, "ops_per_sec": f"{self.ops_per_sec:.1f}",
            "peak_mib": f"{self.peak_mib:.1f}", "retired": self.retired,
            "freed": self.freed, "epochs": self.epochs, "ds": self.ds,
            "allocator": self.allocator, "node_size": self.node_size,
            "keyrange": self.keyrange, "seed": self.seed, "trial": self.trial,
            "duration_s": f"{self.elapsed_s:.3f}",
            "prefill_size": self.prefill_size,
            "pct_time_freeing": f"{self.pct_time_freeing:.4f}",
            "events_dropped": self.events_dropped,
            "rss_warn": int(self.rss_warn),
        }


def make_reclaimer(config: BenchConfig, recorder=None) -> Reclaimer:
    cls = RECLAIMERS[config.reclaimer]
    kwargs = dict(free_policy=config.free_policy, af_quota=config.af_quota,
                  af_high_water=config.af_high_water, recorder=recorder,
                  debug=config.debug,
                  record_single_frees=config.free_event_granularity == "single")
    if cls is DebraReclaimer:
        kwargs["k_check"] = config.k_check
    if cls in (TokenPeriodicReclaimer, TokenAmortizedReclaimer):
        kwargs["k_free"] = config.k_free
    if cls is TokenAmortizedReclaimer:
        kwargs.pop("free_policy")
    return cls(config.threads, **kwargs)


class RssSampler:
    """Samples the process resident set on a fixed cadence; keeps the peak."""

    def __init__(self, interval_ms: int = 10):
        self.interval_s = interval_ms / 1000.0
        self.peak_bytes = 0
        self.samples = 0
        self.unavailable = psutil is None
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None
        self._proc = psutil.Process() if psutil is not None else None

    def _loop(self):
        proc = self._proc
        while not self._stop.is_set():
            try:
                rss = proc.memory_info().rss
            except Exception:
                self.unavailable = True
                return
            if rss > self.peak_bytes:
                self.peak_bytes = rss
            self.samples += 1
            self._stop.wait(self.interval_s)

    def start(self):
        if self.unavailable:
            return
        self._thread = threading.Thread(target=self._loop, name="rss-sampler",
                                        daemon=True)
        self._thread.start()

    def stop(self) -> float:
        """Returns the peak in MiB (0.0 with the warning flag set when the
        platform interface is unavailable)."""
        self._stop.set()
        if self._thread is not None:
            self._thread.join()
        return self.peak_bytes / (1024.0 * 1024.0)


def _pin_cpus(policy: str, widx: int, nthreads: int):
    if policy == "none" or not hasattr(os, "sched_setaffinity"):
        return
    try:
        cpus = sorted(os.sched_getaffinity(0))
    except OSError:
        return
    n = len(cpus)
    if n == 0:
        return
    if policy == "compact":
        cpu = cpus[widx % n]
    else:  # scatter
        stride = max(1, n // max(1, nthreads))
        cpu = cpus[(widx * stride) % n]
    try:
        os.sched_setaffinity(0, {cpu})
    except OSError:
        pass


class _Pool:
    """Shared state for one trial's worker threads."""

    def __init__(self, config: BenchConfig, reclaimer, ds):
        self.config = config
        self.reclaimer = reclaimer
        self.ds = ds
        n = config.threads
        self.barrier = threading.Barrier(n + 1)
        self.prefill_stop = False
        self.measure_stop = False
        self.prefill_done = [False] * n
        self.handles: list = [None] * n
        self.size_deltas = [0] * n
        self.prefill_ops = [0] * n
        self.measured_ops = [0] * n
        self.failures: list[BaseException] = []
        self._failure_lock = threading.Lock()
        self.tallies = ([array("q", bytes(8 * config.keyrange)) for _ in range(n)]
                        if config.tally else None)
        self.threads: list[threading.Thread] = []

    def record_failure(self, exc: BaseException):
        with self._failure_lock:
            self.failures.append(exc)
        self.prefill_stop = True
        self.measure_stop = True
        self.barrier.abort()

    def check_failures(self):
        if self.failures:
            raise self.failures[0]


def _worker(pool: _Pool, widx: int):
    cfg = pool.config
    reclaimer = pool.reclaimer
    ds = pool.ds
    try:
        _pin_cpus(cfg.pin, widx, cfg.threads)
        handle = reclaimer.register_thread()
        pool.handles[widx] = handle
        tally = pool.tallies[widx] if pool.tallies is not None else None
        keyrange = cfg.keyrange
        ins_cut = cfg.insert_pct

        pool.barrier.wait()  # registered

        # -- prefill phase ------------------------------------------------
        mode = cfg.prefill
        if mode != "none":
            # a stream distinct from the measured one, so the measured phase
            # replays identically no matter how long prefill ran
            rng = random.Random(cfg.seed * 2_654_435_761 + widx + 1)
            target = keyrange // 2
            quota = mode if isinstance(mode, int) else None
            ops = 0
            delta = 0
            while not pool.prefill_stop:
                if quota is not None and ops >= quota:
                    break
                key = rng.randrange(keyrange)
                do_insert = rng.randrange(100) < ins_cut
                reclaimer.begin_op(handle)
                try:
                    if do_insert:
                        if not ds.insert(handle, key):
                            delta += 1
                            if tally is not None:
                                tally[key] += 1
                    else:
                        if ds.delete(handle, key):
                            delta -= 1
                            if tally is not None:
                                tally[key] -= 1
                finally:
                    reclaimer.end_op(handle)
                ops += 1
                if not ops % 64:
                    pool.size_deltas[widx] = delta
                if mode == "exact" and delta + _others(pool, widx) >= target:
                    break
            pool.size_deltas[widx] = delta
            pool.prefill_ops[widx] = ops

        # quiesce handshake: keep cycling empty operation brackets until
        # every worker has left its prefill loop, so epochs keep advancing
        # and no transition garbage strands in anyone's bags
        done = pool.prefill_done
        done[widx] = True
        while not all(done):
            reclaimer.begin_op(handle)
            reclaimer.end_op(handle)

        pool.barrier.wait()  # prefill done; main thread stamps t0

        # -- measured phase -------------------------------------------------
        rng = random.Random(cfg.seed * 1_000_003 + widx)
        quota = cfg.total_ops
        ops = 0
        while True:
            if quota is not None:
                if ops >= quota:
                    break
            elif pool.measure_stop:
                break
            key = rng.randrange(keyrange)
            do_insert = rng.randrange(100) < ins_cut
            reclaimer.begin_op(handle)
            try:
                if do_insert:
                    if not ds.insert(handle, key) and tally is not None:
                        tally[key] += 1
                else:
                    if ds.delete(handle, key) and tally is not None:
                        tally[key] -= 1
            finally:
                reclaimer.end_op(handle)
            ops += 1
        pool.measured_ops[widx] = ops

        pool.barrier.wait()  # measured phase over; main thread stamps t1
    except threading.BrokenBarrierError:
        pass
    except BaseException as exc:
        pool.record_failure(exc)


def _others(pool: _Pool, widx: int) -> int:
    return sum(d for i, d in enumerate(pool.size_deltas) if i != widx)


def _prefill_controller(pool: _Pool) -> None:
    """Implements the stabilization rule: the measured phase starts once the
    structure size stays within tolerance of half the key range for two
    consecutive 100 ms checks. Deterministic prefill modes (fixed op count,
    exact size) finish on their own and need no controller."""
    cfg = pool.config
    if cfg.prefill != "stable":
        return
    target = cfg.keyrange // 2
    tol = max(0.01 * target, 2.0 * math.sqrt(max(1, target)))
    deadline = time.monotonic() + PREFILL_TIMEOUT_S
    consecutive = 0
    while True:
        time.sleep(PREFILL_CHECK_S)
        if pool.failures:
            return
        size = sum(pool.size_deltas)
        if abs(size - target) <= tol:
            consecutive += 1
            if consecutive >= 2:
                pool.prefill_stop = True
                return
        else:
            consecutive = 0
        if time.monotonic() > deadline:
            pool.prefill_stop = True
            pool.barrier.abort()
            raise HarnessError("prefill timeout")


def run_trial(config: BenchConfig, trial: int = 0,
              seed_override: int | None = None) -> TrialResult:
    """One trial: prefill, measure, drain, and account."""
    cfg = config
    seed = cfg.seed if seed_override is None else seed_override
    if seed != cfg.seed:
        cfg = dataclasses.replace(cfg, seed=seed)
    recorder = (TimelineRecorder(cfg.timeline_capacity)
                if cfg.record_timeline else NullRecorder())
    allocator = make_allocator(cfg.allocator, **cfg.allocator_kwargs)
    reclaimer = make_reclaimer(cfg, recorder)
    ds = make_data_structure(cfg.ds, reclaimer, allocator, cfg.node_size)
    pool = _Pool(cfg, reclaimer, ds)
    pool.threads = [threading.Thread(target=_worker, args=(pool, i),
                                     name=f"worker-{i}", daemon=True)
                    for i in range(cfg.threads)]
    sampler = RssSampler(cfg.rss_interval_ms)
    is_token = cfg.reclaimer.startswith("token")
    audit = {"samples": 0, "bad": 0, "post_spread": 0} if is_token else None

    # cycle-collector pauses would land inside timed calls; keep the
    # measured window pure and collect before/after instead
    gc.collect()
    gc.disable()
    old_switch = sys.getswitchinterval()
    if cfg.switch_interval_s is not None:
        sys.setswitchinterval(cfg.switch_interval_s)
    prefill_size = 0
    epoch_mark = 0
    free_ns_0 = 0
    for t in pool.threads:
        t.start()
    try:
        pool.barrier.wait()          # all registered
        _prefill_controller(pool)
        sampler.start()              # before the measured window
        free_ns_0 = reclaimer.total_free_ns
        pool.barrier.wait()          # prefill loops finished
        prefill_size = sum(pool.size_deltas)
        epoch_mark = reclaimer.epoch_count()
        cpu0 = time.process_time_ns()
        t0 = monotonic_ns()
        if cfg.total_ops is None:
            deadline = time.monotonic() + cfg.duration_s
            while time.monotonic() < deadline:
                time.sleep(0.005)
                if pool.failures:
                    break
                if audit is not None:
                    counts = reclaimer.audit_token_counts()
                    held = sum(r - p for r, p in counts)
                    audit["samples"] += 1
                    if held not in (0, 1):
                        audit["bad"] += 1
            pool.measure_stop = True
        else:
            # workers stop at their op quota and park at the barrier
            while (pool.barrier.n_waiting < cfg.threads
                   and not pool.failures):
                if audit is not None:
                    counts = reclaimer.audit_token_counts()
                    held = sum(r - p for r, p in counts)
                    audit["samples"] += 1
                    if held not in (0, 1):
                        audit["bad"] += 1
                time.sleep(0.002)
        pool.barrier.wait()          # workers finished the measured loop
        t1 = monotonic_ns()
        cpu1 = time.process_time_ns()
    except threading.BrokenBarrierError:
        t1 = t0 = monotonic_ns()
        cpu1 = cpu0 = time.process_time_ns()
    finally:
        pool.prefill_stop = True
        pool.measure_stop = True
        for t in pool.threads:
            t.join()
        peak_mib = sampler.stop()
        gc.enable()
        sys.setswitchinterval(old_switch)
    pool.check_failures()

    free_ns_1 = reclaimer.total_free_ns
    if audit is not None:
        counts = reclaimer.audit_token_counts()
        if counts:
            received = [r for r, _ in counts]
            audit["post_spread"] = max(received) - min(received)

    final_size = None
    mismatches = None
    if cfg.tally:
        expected = [0] * cfg.keyrange
        for t_arr in pool.tallies:
            for k in range(cfg.keyrange):
                expected[k] += t_arr[k]
        contents = set(ds.snapshot())
        mismatches = sum(1 for k in range(cfg.keyrange)
                         if (expected[k] == 1) != (k in contents))
        final_size = len(contents)

    epochs = reclaimer.epoch_count()
    # only epochs entered during the measured window
    garbage = [(e, t, n) for e, t, n in reclaimer.garbage_series()
               if e > epoch_mark]
    retired = reclaimer.lifetime_retired
    for h in list(pool.handles):
        if h is not None and h.registered:
            reclaimer.unregister_thread(h)
    drained = reclaimer.drain()
    freed = reclaimer.lifetime_freed
    leaked = reclaimer.lifetime_leaked

    ops = sum(pool.measured_ops)
    elapsed = max(1e-9, (t1 - t0) / 1e9)
    cpu_s = max(1e-9, (cpu1 - cpu0) / 1e9)
    dropped = recorder.total_dropped()
    if cfg.timeline_dir:
        recorder.flush(os.path.join(cfg.timeline_dir, f"trial_{trial}"),
                       config={"threads": cfg.threads, "reclaimer": cfg.reclaimer,
                               "policy": cfg.free_policy, "ds": cfg.ds,
                               "seed": seed, "trial": trial,
                               "allocator": cfg.allocator})

    return TrialResult(
        threads=cfg.threads, reclaimer=cfg.reclaimer, policy=cfg.free_policy,
        ds=cfg.ds, allocator=cfg.allocator, node_size=cfg.node_size,
        keyrange=cfg.keyrange, seed=seed, trial=trial, ops=ops,
        elapsed_s=elapsed, ops_per_sec=ops / elapsed, cpu_s=cpu_s,
        ops_per_cpu_s=ops / cpu_s, peak_mib=peak_mib,
        rss_warn=sampler.unavailable, retired=retired, freed=freed,
        leaked=leaked, drained=drained, epochs=epochs, garbage_series=garbage,
        pct_time_freeing=(free_ns_1 - free_ns_0) / max(1, (t1 - t0) * cfg.threads),
        events_dropped=dropped, prefill_size=prefill_size,
        final_size=final_size, set_mismatches=mismatches, token_audit=audit)


def run_benchmark(config: BenchConfig) -> list[TrialResult]:
    """All trials for one config; trial seeds derive from the base seed."""
    results = []
    for trial in range(config.trials):
        seed = config.seed + trial * 7_919
        results.append(run_trial(config, trial=trial, seed_override=seed))
    return results


# -- remote-batch-free probe --------------------------------------------------

@dataclass
class RbfProbeConfig:
    threads: int = 8
    object_size: int = 240
    batch: int = 32768
    mode: str = "batch"            # or "amortized"
    rounds: int = 2
    allocator: str = "model-tcache"
    allocator_kwargs: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.batch < 1:
            raise ValueError("batch must be at least 1")
        if self.mode not in ("batch", "amortized"):
            raise ValueError(f"unknown probe mode: {self.mode!r}")
        if self.threads < 1:
            raise ValueError("threads must be at least 1")


@dataclass
class RbfProbeResult:
    mode: str
    threads: int
    batch: int
    total_frees: int
    total_allocs: int
    measured_frees: int
    teardown_frees: int
    p50_ns: int
    p99_ns: int
    max_ns: int
    over_100us: int
    buckets: dict
    allocator_stats: dict

    def row(self) -> dict:
        out = {"mode": self.mode, "threads": self.threads,
               "batch_size": self.batch, "total_frees": self.total_frees,
               "measured_frees": self.measured_frees,
               "p50_ns": self.p50_ns, "p99_ns": self.p99_ns,
               "max_ns": self.max_ns, "over_100us": self.over_100us}
        out.update({f"bucket_{k}": v for k, v in self.buckets.items()})
        return out


_BUCKET_EDGES = [(1_000, "1us"), (10_000, "10us"), (100_000, "100us"),
                 (1_000_000, "1ms"), (10_000_000, "10ms")]


def run_rbf_probe(config: RbfProbeConfig) -> RbfProbeResult:
    """Ring-wise remote-free exchange.

    Each round every thread hands its batch to its ring predecessor and
    frees the batch allocated by its successor: all at once (batch mode) or
    one per loop iteration interleaved with the allocation of its own next
    batch (amortized mode). Per-free latencies land in preallocated arrays.
    """
    cfg = config
    m = cfg.threads
    allocator = make_allocator(cfg.allocator, **cfg.allocator_kwargs)
    slots: list = [None] * m
    barrier = threading.Barrier(m)
    per_thread = cfg.rounds * cfg.batch
    latencies = [array("q", bytes(8 * per_thread)) for _ in range(m)]
    counts = [0] * m
    allocs = [0] * m
    teardown = [0] * m
    failures: list[BaseException] = []

    def worker(widx: int):
        try:
            lat = latencies[widx]
            n_lat = 0
            clock = monotonic_ns
            size = cfg.object_size
            batch_n = cfg.batch
            mine = [allocator.alloc(size) for _ in range(batch_n)]
            allocs[widx] += batch_n
            for _ in range(cfg.rounds):
                slots[widx] = mine
                barrier.wait()
                incoming = slots[(widx + 1) % m]
                barrier.wait()
                mine = []
                if cfg.mode == "batch":
                    for blk in incoming:
                        t0 = clock()
                        allocator.free(blk)
                        t1 = clock()
                        lat[n_lat] = t1 - t0
                        n_lat += 1
                    for _ in range(batch_n):
                        mine.append(allocator.alloc(size))
                else:
                    for blk in incoming:
                        t0 = clock()
                        allocator.free(blk)
                        t1 = clock()
                        lat[n_lat] = t1 - t0
                        n_lat += 1
                        mine.append(allocator.alloc(size))
                allocs[widx] += batch_n
                barrier.wait()
            counts[widx] = n_lat
            barrier.wait()
            # teardown: the last batches go back untimed; counted so frees
            # still reconcile with allocations
            for blk in mine:
                allocator.free(blk)
            teardown[widx] = batch_n
        except BaseException as exc:
            failures.append(exc)
            barrier.abort()

    threads = [threading.Thread(target=worker, args=(i,), daemon=True)
               for i in range(m)]
    gc.collect()
    gc.disable()
    try:
        for t in threads:
            t.start()
        for t in threads:
            t.join()
    finally:
        gc.enable()
    if failures:
        raise failures[0]

    merged = sorted(v for lat, n in zip(latencies, counts) for v in lat[:n])
    total = len(merged)
    buckets = {}
    lo = 0
    for edge, label in _BUCKET_EDGES:
        hi = _bisect(merged, edge)
        buckets[label] = hi - lo
        lo = hi
    buckets["inf"] = total - lo
    return RbfProbeResult(
        mode=cfg.mode, threads=m, batch=cfg.batch,
        total_frees=total + sum(teardown), total_allocs=sum(allocs),
        measured_frees=total, teardown_frees=sum(teardown),
        p50_ns=merged[total // 2] if merged else 0,
        p99_ns=merged[min(total - 1, (total * 99) // 100)] if merged else 0,
        max_ns=merged[-1] if merged else 0,
        over_100us=total - _bisect(merged, 100_000),
        buckets=buckets, allocator_stats=allocator.stats())


def _bisect(sorted_vals, edge):
    return bisect.bisect_left(sorted_vals, edge)


def emit_rbf_csv(results: list[RbfProbeResult], path: str) -> str:
    os.makedirs(path, exist_ok=True)
    fp = os.path.join(path, "rbf_histogram.csv")
    rows = [r.row() for r in results]
    cols = list(rows[0]) if rows else ["mode"]
    with open(fp, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols)
        w.writeheader()
        w.writerows(rows)
    return fp


# -- result files -------------------------------------------------------------

def emit_results(results: list[TrialResult], path: str) -> dict[str, str]:
    """Write ``results.csv`` (one row per trial) and ``summary.csv``
    (mean/min/max per config, the paper's error-bar convention)."""
    if not results:
        raise ValueError("no trials to emit")
    os.makedirs(path, exist_ok=True)
    results_fp = os.path.join(path, "results.csv")
    with open(results_fp, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=RESULT_COLUMNS)
        w.writeheader()
        for r in results:
            w.writerow(r.row())
    groups: dict[tuple, list[TrialResult]] = {}
    for r in results:
        groups.setdefault((r.threads, r.reclaimer, r.policy, r.ds,
                           r.allocator), []).append(r)
    summary_fp = os.path.join(path, "summary.csv")
    with open(summary_fp, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SUMMARY_COLUMNS)
        w.writeheader()
        for key in sorted(groups):
            rows = groups[key]
            tp = [r.ops_per_sec for r in rows]
            w.writerow({
                "threads": key[0], "reclaimer": key[1], "policy": key[2],
                "ds": key[3], "allocator": key[4], "trials": len(rows),
                "ops_mean": f"{sum(tp) / len(tp):.1f}",
                "ops_min": f"{min(tp):.1f}", "ops_max": f"{max(tp):.1f}",
                "peak_mib_mean": f"{sum(r.peak_mib for r in rows) / len(rows):.1f}",
            })
    return {"results": results_fp, "summary": summary_fp}
