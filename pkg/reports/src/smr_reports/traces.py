"""Readers for the benchmark's output files.

The timeline directory holds one ``thread_<id>.csv`` per worker with rows
``kind,start_ns,end_ns,value`` plus a ``manifest.txt`` of ``key=value``
lines (thread_count, clock_origin_ns, per-thread drop counters, config
echoes). ``summary.csv`` aggregates trials per configuration with
mean/min/max throughput columns.
"""

from __future__ import annotations

import csv
import os
import re
from dataclasses import dataclass

MANIFEST_NAME = "manifest.txt"
TIMELINE_HEADER = ["kind", "start_ns", "end_ns", "value"]

INTERVAL_KINDS = ("BATCH_FREE", "SINGLE_FREE")
EPOCH_ADVANCE = "EPOCH_ADVANCE"
TOKEN_PASS = "TOKEN_PASS"
GARBAGE_COUNT = "GARBAGE_COUNT"


@dataclass(frozen=True)
class Event:
    kind: str
    start_ns: int
    end_ns: int
    value: int

    @property
    def duration_ns(self) -> int:
        return self.end_ns - self.start_ns


@dataclass
class TimelineData:
    directory: str
    manifest: dict
    threads: dict  # thread id -> list[Event]

    @property
    def span_ns(self) -> tuple[int, int]:
        starts = [e.start_ns for evs in self.threads.values() for e in evs]
        ends = [e.end_ns for evs in self.threads.values() for e in evs]
        if not starts:
            origin = int(self.manifest.get("clock_origin_ns", 0))
            return origin, origin
        return min(starts), max(ends)


def read_manifest(path: str) -> dict:
    manifest = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line and "=" in line:
                key, value = line.split("=", 1)
                manifest[key] = value
    return manifest


def read_thread_csv(path: str) -> list[Event]:
    events = []
    with open(path) as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != TIMELINE_HEADER:
            raise ValueError(f"unexpected timeline header in {path}: {header}")
        for kind, start, end, value in reader:
            events.append(Event(kind, int(start), int(end), int(value)))
    return events


def read_timeline_dir(directory: str) -> TimelineData:
    manifest_path = os.path.join(directory, MANIFEST_NAME)
    if not os.path.exists(manifest_path):
        raise FileNotFoundError(f"missing manifest: {manifest_path}")
    manifest = read_manifest(manifest_path)
    threads = {}
    pattern = re.compile(r"thread_(\d+)\.csv$")
    for name in sorted(os.listdir(directory)):
        match = pattern.match(name)
        if match:
            threads[int(match.group(1))] = read_thread_csv(
                os.path.join(directory, name))
    return TimelineData(directory, manifest, threads)


def read_summary_csv(path: str) -> list[dict]:
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    for row in rows:
        row["threads"] = int(row["threads"])
        row["ops_mean"] = float(row["ops_mean"])
        row["ops_min"] = float(row["ops_min"])
        row["ops_max"] = float(row["ops_max"])
    return rows
