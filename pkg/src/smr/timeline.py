"""Low-overhead per-thread event recording with CSV export.

Each worker thread owns one fixed-capacity buffer. Recording an event is a
handful of array writes: no locks, no system calls, no buffer growth, so the
record call can sit on the hot path of a measured benchmark. Buffers are
flushed to one CSV per thread plus a key=value manifest once the run has
quiesced.
"""

from __future__ import annotations

import os
import time
from array import array
from enum import IntEnum
from typing import Iterable, NamedTuple

monotonic_ns = time.perf_counter_ns

DEFAULT_CAPACITY = 100_000  # events per thread

MANIFEST_NAME = "manifest.txt"
CSV_HEADER = "kind,start_ns,end_ns,value"


class EventKind(IntEnum):
    BATCH_FREE = 0
    SINGLE_FREE = 1
    EPOCH_ADVANCE = 2
    TOKEN_PASS = 3
    GARBAGE_COUNT = 4


_KIND_NAMES = {k: k.name for k in EventKind}
_KIND_BY_NAME = {k.name: k for k in EventKind}


class TimelineEvent(NamedTuple):
    kind: EventKind
    start_ns: int
    end_ns: int
    value: int

    @property
    def duration_ns(self) -> int:
        return self.end_ns - self.start_ns


class EventBuffer:
    """Fixed-capacity event store owned by exactly one thread.

    Overflow either drops the new event (``drop``, the default) or
    overwrites the oldest (``ring``); lost events are counted either way,
    so recorded + dropped always equals attempted.
    """

    __slots__ = ("thread_id", "capacity", "policy",
                 "_kinds", "_starts", "_ends", "_values",
                 "_attempts", "_dropped")

    def __init__(self, thread_id: int, capacity: int = DEFAULT_CAPACITY,
                 policy: str = "drop"):
        if capacity <= 0:
            raise ValueError("capacity must be positive")
        if policy not in ("drop", "ring"):
            raise ValueError(f"unknown overflow policy: {policy!r}")
        self.thread_id = thread_id
        self.capacity = capacity
        self.policy = policy
        zeros = bytes(8 * capacity)
        self._kinds = array("q", zeros)
        self._starts = array("q", zeros)
        self._ends = array("q", zeros)
        self._values = array("q", zeros)
        self._attempts = 0
        self._dropped = 0

    def record(self, kind: int, start_ns: int, end_ns: int, value: int) -> None:
        i = self._attempts
        self._attempts = i + 1
        if i >= self.capacity:
            self._dropped += 1
            if self.policy == "drop":
                return
            i %= self.capacity
        self._kinds[i] = kind
        self._starts[i] = start_ns
        self._ends[i] = end_ns
        self._values[i] = value

    def record_instant(self, kind: int, at_ns: int, value: int) -> None:
        self.record(kind, at_ns, at_ns, value)

    @property
    def attempted(self) -> int:
        return self._attempts

    @property
    def dropped(self) -> int:
        return self._dropped

    @property
    def recorded(self) -> int:
        return min(self._attempts, self.capacity)

    def events(self) -> list[TimelineEvent]:
        """Stored events, oldest first."""
        n = self.recorded
        ks, ss, es, vs = self._kinds, self._starts, self._ends, self._values
        if self.policy == "ring" and self._attempts > self.capacity:
            first = self._attempts % self.capacity
            order = list(range(first, self.capacity)) + list(range(first))
        else:
            order = range(n)
        return [TimelineEvent(EventKind(ks[i]), ss[i], es[i], vs[i]) for i in order]

    def clear(self) -> None:
        self._attempts = 0
        self._dropped = 0


def filter_threshold(events: Iterable[TimelineEvent],
                     min_duration_ns: int) -> list[TimelineEvent]:
    """Events lasting at least ``min_duration_ns``, in their original order."""
    return [e for e in events if e.end_ns - e.start_ns >= min_duration_ns]


class TimelineRecorder:
    """Hands out per-thread buffers and flushes them after quiescence."""

    active = True

    def __init__(self, capacity: int = DEFAULT_CAPACITY, policy: str = "drop"):
        self.capacity = capacity
        self.policy = policy
        self.origin_ns = monotonic_ns()
        self._buffers: dict[int, EventBuffer] = {}

    def buffer_for(self, thread_id: int) -> EventBuffer:
        buf = self._buffers.get(thread_id)
        if buf is None:
            buf = EventBuffer(thread_id, self.capacity, self.policy)
            self._buffers[thread_id] = buf
        return buf

    def buffers(self) -> dict[int, EventBuffer]:
        return dict(self._buffers)

    def total_dropped(self) -> int:
        return sum(b.dropped for b in self._buffers.values())

    def flush(self, path: str, config: dict | None = None) -> list[str]:
        """Write ``thread_<id>.csv`` per buffer plus ``manifest.txt``.

        The manifest is written last so an unwritable path fails before any
        partial manifest exists.
        """
        os.makedirs(path, exist_ok=True)
        written = []
        for tid in sorted(self._buffers):
            buf = self._buffers[tid]
            fp = os.path.join(path, f"thread_{tid}.csv")
            with open(fp, "w") as fh:
                fh.write(CSV_HEADER + "\n")
                for ev in buf.events():
                    fh.write(f"{_KIND_NAMES[ev.kind]},{ev.start_ns},{ev.end_ns},{ev.value}\n")
            written.append(fp)
        mf = os.path.join(path, MANIFEST_NAME)
        with open(mf, "w") as fh:
            fh.write(f"thread_count={len(self._buffers)}\n")
            fh.write(f"clock_origin_ns={self.origin_ns}\n")
            fh.write(f"created_unix_ns={time.time_ns()}\n")
            for tid in sorted(self._buffers):
                buf = self._buffers[tid]
                fh.write(f"dropped_thread_{tid}={buf.dropped}\n")
            for key in sorted(config or {}):
                fh.write(f"config_{key}={(config or {})[key]}\n")
        written.append(mf)
        return written


class NullRecorder:
    """Recorder stub: instrumentation sites see ``active == False`` and skip
    both the clock reads and the append."""

    active = False
    origin_ns = 0

    def buffer_for(self, thread_id: int) -> None:
        return None

    def buffers(self) -> dict:
        return {}

    def total_dropped(self) -> int:
        return 0

    def flush(self, path: str, config: dict | None = None) -> list[str]:
        return []


def parse_thread_csv(path: str) -> list[TimelineEvent]:
    events = []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise ValueError(f"unexpected header in {path}: {header!r}")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            kind, s, e, v = line.split(",")
            events.append(TimelineEvent(_KIND_BY_NAME[kind], int(s), int(e), int(v)))
    return events


def parse_manifest(path: str) -> dict[str, str]:
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line and "=" in line:
                key, val = line.split("=", 1)
                out[key] = val
    return out
