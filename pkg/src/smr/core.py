"""Reclaimer core: retired objects, thread registration, operation brackets,
draining, and the debug-mode grace oracle.

Every algorithm shares the same life cycle. A thread registers once, brackets
each data structure operation with ``begin_op``/``end_op``, hands unlinked
nodes to ``retire``, and the algorithm decides when a retired object's grace
period has elapsed and releases it to the free path (immediate batch free or
a thread-local freeable list). ``drain`` deallocates whatever is still
pending once the world is quiescent.

Visibility relies on the interpreter's global ordering of attribute and list
item writes; shared slots follow a per-slot single-writer discipline and the
rare multi-writer updates (epoch advance) go through a lock.

Debug mode (constructor flag or ``SMR_DEBUG_ORACLE=1``) snapshots every
thread's progress at retire time, re-checks it at free time, detects double
frees, and poisons + quarantines freed objects so use-after-free manifests
deterministically instead of silently.
"""

from __future__ import annotations

import os
import threading
from dataclasses import dataclass
from typing import Callable

from .freelist import FreeableList, DEFAULT_QUOTA, DEFAULT_HIGH_WATER
from .timeline import EventKind, monotonic_ns

PASS = "PASS"
FAIL = "FAIL"

CANARY_KEY = -0xDEADBEEF

GARBAGE_LOG_CAP = 1 << 17  # per-thread (epoch, count) records


class SmrError(Exception):
    pass


class RegistrationError(SmrError):
    pass


class OperationStateError(SmrError):
    pass


class DrainError(SmrError):
    pass


class TokenProtocolError(SmrError):
    pass


class DoubleFreeError(SmrError):
    pass


class UseAfterFreeError(SmrError):
    pass


class GracePeriodViolation(SmrError):
    """A deallocation that the boundary oracle (or an algorithm's own grace
    rule) rejected. Carries enough context to identify the guilty schedule."""

    def __init__(self, message: str, thread_id: int | None = None,
                 retire_stamp: int | None = None, snapshot=None, current=None):
        super().__init__(message)
        self.thread_id = thread_id
        self.retire_stamp = retire_stamp
        self.snapshot = snapshot
        self.current = current


@dataclass(slots=True)
class RetiredObject:
    """An unlinked node awaiting its grace period.

    ``retire_stamp`` is the retiring algorithm's logical time (epoch, token
    round, or quiescence counter) and is filled in by ``retire``.
    """

    object_ref: object
    size_bytes: int
    dealloc_tag: str
    retire_stamp: int = -1
    debug_snapshot: tuple | None = None


class Deallocator:
    """Tag-indexed deallocation dispatch.

    Each tag maps to a free routine and, optionally, a poison routine used
    by debug mode instead of really deallocating.
    """

    def __init__(self):
        self._free: dict[str, Callable] = {}
        self._poison: dict[str, Callable] = {}

    def register(self, tag: str, free: Callable, poison: Callable | None = None) -> None:
        self._free[tag] = free
        if poison is not None:
            self._poison[tag] = poison

    def free(self, obj: RetiredObject) -> None:
        self._free[obj.dealloc_tag](obj.object_ref, obj.size_bytes)

    def poison(self, obj: RetiredObject) -> None:
        fn = self._poison.get(obj.dealloc_tag)
        if fn is not None:
            fn(obj.object_ref, obj.size_bytes)


class ThreadHandle:
    """Per-thread registration state. Owned by its registering thread; the
    owner is the only writer of every field."""

    __slots__ = ("thread_id", "ident", "registered", "op_counter", "in_op",
                 "progress", "retired", "freed", "leaked", "free_ns",
                 "last_stamp", "events", "freeable", "_dealloc_cb",
                 "garbage_epochs", "garbage_counts", "garbage_n",
                 "garbage_dropped")

    def __init__(self, thread_id: int, ident: int):
        self.thread_id = thread_id
        self.ident = ident
        self.registered = True
        self.op_counter = 0
        self.in_op = False
        self.progress = (0, False)  # (op_counter, in_op), replaced atomically
        self.retired = 0
        self.freed = 0
        self.leaked = 0
        self.free_ns = 0
        self.last_stamp = -1
        self.events = None
        self.freeable: FreeableList | None = None
        self._dealloc_cb = None
        self.garbage_epochs: list[int] = []
        self.garbage_counts: list[int] = []
        self.garbage_n = 0
        self.garbage_dropped = 0

    def log_garbage(self, epoch: int, count: int) -> None:
        if self.garbage_n >= GARBAGE_LOG_CAP:
            self.garbage_dropped += 1
            return
        self.garbage_epochs.append(epoch)
        self.garbage_counts.append(count)
        self.garbage_n += 1


class GracePeriodOracle:
    """Operation-boundary ground truth for free safety.

    At retire time the oracle snapshots every registered thread's
    ``progress`` pair. A free is safe once every thread that was mid
    operation at retire time has since crossed an operation boundary: its
    counter grew (it began a new operation) or it is now quiescent (it
    finished the operation it was in). A thread still inside the same
    operation it was in at retire time fails the check.
    """

    def __init__(self, handles: list):
        self._handles = handles
        self.checks = 0
        self.failures = 0
        self.free_log: list[tuple] = []
        self.free_log_cap = 1024

    def snapshot(self) -> tuple:
        return tuple((h.thread_id, h.progress)
                     for h in self._handles if h is not None)

    def check_free(self, obj: RetiredObject) -> str:
        self.checks += 1
        snap = obj.debug_snapshot
        verdict = PASS
        violator = None
        current = None
        if snap:
            handles = self._handles
            for tid, (count, was_in_op) in snap:
                if not was_in_op:
                    continue
                h = handles[tid]
                if h is None or not h.registered:
                    continue  # leaving requires quiescence, boundary crossed
                now_count, now_in_op = h.progress
                if now_in_op and now_count == count:
                    verdict = FAIL
                    violator = tid
                    current = (now_count, now_in_op)
                    break
        if len(self.free_log) < self.free_log_cap:
            self.free_log.append((obj.object_ref, snap, verdict, violator, current))
        if verdict == FAIL:
            self.failures += 1
            raise GracePeriodViolation(
                f"grace period violated by thread {violator}: still inside the "
                f"operation it was in when stamp {obj.retire_stamp} was retired",
                thread_id=violator, retire_stamp=obj.retire_stamp,
                snapshot=snap, current=current)
        return verdict


class DebugState:
    """Freed-set, canary quarantine, and violation accounting."""

    def __init__(self, handles: list):
        self.oracle = GracePeriodOracle(handles)
        self.freed_ids: set[int] = set()
        self.quarantine: list = []
        self.canary_hits = 0
        self.canary_details: list = []

    def record_canary_hit(self, node) -> None:
        self.canary_hits += 1
        if len(self.canary_details) < 64:
            self.canary_details.append(node)
        raise UseAfterFreeError(
            f"dereferenced a freed node (canary hit #{self.canary_hits})")


def _debug_default() -> bool:
    return os.environ.get("SMR_DEBUG_ORACLE") == "1"


class Reclaimer:
    """Base class wiring registration, operation brackets, the free gate,
    and draining. Algorithms override the ``_on_*`` hooks."""

    name = "base"

    def __init__(self, max_threads: int, *, deallocator: Deallocator | None = None,
                 free_policy: str = "batch", af_quota: int = DEFAULT_QUOTA,
                 af_high_water: int = DEFAULT_HIGH_WATER,
                 recorder=None, debug: bool | None = None,
                 record_single_frees: bool = True):
        if max_threads < 1:
            raise ValueError("max_threads must be at least 1")
        if free_policy not in ("batch", "amortized"):
            raise ValueError(f"unknown free policy: {free_policy!r}")
        self.max_threads = max_threads
        self.free_policy = free_policy
        self.record_single_frees = record_single_frees
        self.af_quota = af_quota
        self.af_high_water = af_high_water
        self.deallocator = deallocator if deallocator is not None else Deallocator()
        self.recorder = recorder
        self._reg_lock = threading.Lock()
        self._advance_lock = threading.Lock()
        self._handles: list[ThreadHandle | None] = [None] * max_threads
        self._registered = 0
        self._orphans: list[RetiredObject] = []
        self._closed_retired = 0
        self._closed_freed = 0
        self._closed_leaked = 0
        self._closed_free_ns = 0
        if debug is None:
            debug = _debug_default()
        self.debug: DebugState | None = DebugState(self._handles) if debug else None

    # -- registration ------------------------------------------------------

    def register_thread(self, ident: int | None = None) -> ThreadHandle:
        if ident is None:
            ident = threading.get_ident()
        with self._reg_lock:
            for h in self._handles:
                if h is not None and h.ident == ident:
                    raise RegistrationError("already registered")
            tid = next((i for i, h in enumerate(self._handles) if h is None), None)
            if tid is None:
                raise RegistrationError("ring full")
            handle = self._new_handle(tid, ident)
            if self.free_policy == "amortized":
                handle.freeable = FreeableList(quota=self.af_quota,
                                               high_water=self.af_high_water)
            handle._dealloc_cb = lambda obj, _h=handle: self._dealloc(_h, obj)
            if self.recorder is not None and self.recorder.active:
                handle.events = self.recorder.buffer_for(tid)
            self._handles[tid] = handle
            self._registered += 1
            self._on_register(handle)
            return handle

    def unregister_thread(self, handle: ThreadHandle) -> None:
        with self._reg_lock:
            if not handle.registered or self._handles[handle.thread_id] is not handle:
                raise RegistrationError("not registered")
            if handle.in_op:
                raise OperationStateError("operation already open")
            self._on_unregister(handle)
            self._orphans.extend(self._take_bags(handle))
            fl = handle.freeable
            if fl is not None:
                self._orphans.extend(fl.take_all())
            self._closed_retired += handle.retired
            self._closed_freed += handle.freed
            self._closed_leaked += handle.leaked
            self._closed_free_ns += handle.free_ns
            handle.registered = False
            self._handles[handle.thread_id] = None
            self._registered -= 1

    # -- operation brackets ------------------------------------------------

    def begin_op(self, handle: ThreadHandle) -> None:
        if handle.in_op:
            raise OperationStateError("operation already open")
        # visibility first: scanners must see the thread as active no later
        # than the operation opens, or an epoch can slip past a thread that
        # is between the two writes
        self._publish_begin(handle)
        c = handle.op_counter + 1
        handle.op_counter = c
        handle.in_op = True
        handle.progress = (c, True)
        self._on_begin(handle)
        fl = handle.freeable
        if fl is not None and fl.fifo:
            self._af_free_quota(handle, fl)

    def end_op(self, handle: ThreadHandle) -> None:
        if not handle.in_op:
            raise OperationStateError("no open operation")
        handle.in_op = False
        handle.progress = (handle.op_counter, False)
        self._on_end(handle)

    def retire(self, handle: ThreadHandle, obj: RetiredObject) -> None:
        if not handle.in_op:
            raise OperationStateError("not in operation")
        handle.retired += 1
        dbg = self.debug
        if dbg is not None:
            obj.debug_snapshot = dbg.oracle.snapshot()
        self._on_retire(handle, obj)
        if dbg is not None:
            if obj.retire_stamp < handle.last_stamp:
                raise SmrError(
                    f"retire stamp went backwards on thread {handle.thread_id}: "
                    f"{handle.last_stamp} -> {obj.retire_stamp}")
            handle.last_stamp = obj.retire_stamp

    # -- free path ---------------------------------------------------------

    def _dealloc_one(self, handle: ThreadHandle | None, obj: RetiredObject,
                     via_drain: bool = False) -> None:
        """The single free gate, untimed; callers own interval accounting."""
        dbg = self.debug
        if dbg is not None:
            dbg.oracle.check_free(obj)
            if not via_drain and not self._grace_ok(handle, obj):
                raise GracePeriodViolation(
                    f"{self.name}: grace rule violated freeing stamp "
                    f"{obj.retire_stamp}", retire_stamp=obj.retire_stamp)
            key = id(obj.object_ref)
            if key in dbg.freed_ids:
                raise DoubleFreeError(
                    f"object retired with stamp {obj.retire_stamp} freed twice")
            dbg.freed_ids.add(key)
            self.deallocator.poison(obj)
            dbg.quarantine.append(obj.object_ref)
        else:
            self.deallocator.free(obj)
        if handle is not None:
            handle.freed += 1
        else:
            self._closed_freed += 1

    def _dealloc(self, handle: ThreadHandle | None, obj: RetiredObject,
                 via_drain: bool = False) -> None:
        t0 = monotonic_ns()
        self._dealloc_one(handle, obj, via_drain)
        t1 = monotonic_ns()
        if handle is not None:
            handle.free_ns += t1 - t0
            ev = handle.events
            if ev is not None:
                ev.record(EventKind.SINGLE_FREE, t0, t1, obj.size_bytes)
        else:
            self._closed_free_ns += t1 - t0

    def _af_free_quota(self, handle: ThreadHandle, fl: FreeableList) -> int:
        """Per-operation amortized freeing: the freeable list's quota (or
        twice it past the high-water mark), timed as one interval."""
        fifo = fl.fifo
        n = len(fifo)
        k = fl.quota
        if n > fl.high_water:
            k += k
        if k > n:
            k = n
        pop = fifo.popleft
        ev = handle.events
        t0 = monotonic_ns()
        if self.debug is not None:
            if ev is not None:
                s0 = t0  # free intervals share boundary reads
                for _ in range(k):
                    obj = pop()
                    self._dealloc_one(handle, obj)
                    s1 = monotonic_ns()
                    ev.record(EventKind.SINGLE_FREE, s0, s1, obj.size_bytes)
                    s0 = s1
            else:
                for _ in range(k):
                    self._dealloc_one(handle, pop())
        else:
            routines = self.deallocator._free
            if ev is not None:
                record = ev.record
                s0 = t0
                for _ in range(k):
                    obj = pop()
                    routines[obj.dealloc_tag](obj.object_ref, obj.size_bytes)
                    s1 = monotonic_ns()
                    record(EventKind.SINGLE_FREE, s0, s1, obj.size_bytes)
                    s0 = s1
            else:
                for _ in range(k):
                    obj = pop()
                    routines[obj.dealloc_tag](obj.object_ref, obj.size_bytes)
            handle.freed += k
        handle.free_ns += monotonic_ns() - t0
        fl.freed += k
        return k

    def _release_batch(self, handle: ThreadHandle, batch: list[RetiredObject]) -> None:
        """Hand a grace-elapsed batch to the configured free path."""
        if not batch:
            return
        fl = handle.freeable
        if fl is not None:
            fl.enqueue_batch(batch)
            return
        self._free_batch(handle, batch)

    def _free_batch(self, handle: ThreadHandle, batch: list[RetiredObject]) -> None:
        ev = handle.events
        t0 = monotonic_ns()
        if ev is not None and self.record_single_frees:
            s0 = t0  # free intervals share boundary reads
            for obj in batch:
                self._dealloc_one(handle, obj)
                s1 = monotonic_ns()
                ev.record(EventKind.SINGLE_FREE, s0, s1, obj.size_bytes)
                s0 = s1
        else:
            dealloc = self._dealloc_one
            for obj in batch:
                dealloc(handle, obj)
        t1 = monotonic_ns()
        handle.free_ns += t1 - t0
        if ev is not None:
            ev.record(EventKind.BATCH_FREE, t0, t1, len(batch))

    # -- draining ----------------------------------------------------------

    def drain(self) -> int:
        """Deallocate everything still pending. Requires a quiescent world."""
        with self._reg_lock:
            for h in self._handles:
                if h is not None and h.progress[1]:
                    raise DrainError("threads active")
            count = 0
            for h in self._handles:
                if h is None:
                    continue
                for obj in self._take_bags(h):
                    self._dealloc(h, obj, via_drain=True)
                    count += 1
                fl = h.freeable
                if fl is not None:
                    count += fl.drain(lambda obj, _h=h: self._dealloc(_h, obj, via_drain=True))
            for obj in self._orphans:
                self._dealloc(None, obj, via_drain=True)
                count += 1
            self._orphans.clear()
            return count

    # -- accounting --------------------------------------------------------

    def _live_handles(self):
        return [h for h in self._handles if h is not None]

    @property
    def lifetime_retired(self) -> int:
        return self._closed_retired + sum(h.retired for h in self._live_handles())

    @property
    def lifetime_freed(self) -> int:
        return self._closed_freed + sum(h.freed for h in self._live_handles())

    @property
    def lifetime_leaked(self) -> int:
        return self._closed_leaked + sum(h.leaked for h in self._live_handles())

    @property
    def total_free_ns(self) -> int:
        return self._closed_free_ns + sum(h.free_ns for h in self._live_handles())

    def pending_count(self) -> int:
        n = len(self._orphans)
        for h in self._live_handles():
            n += sum(1 for _ in self._iter_bags(h))
            if h.freeable is not None:
                n += len(h.freeable)
        return n

    def epoch_count(self) -> int:
        return 0

    def garbage_series(self) -> list[tuple[int, int, int]]:
        """Per-epoch garbage: (epoch, total, contributing threads), where
        each thread contributes the limbo-bag size it recorded when it
        entered that epoch. A contributor count below the thread count
        marks an epoch the run ended inside."""
        totals: dict[int, list[int]] = {}
        for h in self._live_handles():
            for e, c in zip(h.garbage_epochs, h.garbage_counts):
                cell = totals.get(e)
                if cell is None:
                    totals[e] = [c, 1]
                else:
                    cell[0] += c
                    cell[1] += 1
        return [(e, t, n) for e, (t, n) in sorted(totals.items())]

    def stats(self) -> dict:
        return {
            "retired": self.lifetime_retired,
            "freed": self.lifetime_freed,
            "leaked": self.lifetime_leaked,
            "pending": self.pending_count(),
            "epochs": self.epoch_count(),
            "free_ns": self.total_free_ns,
        }

    # -- algorithm hooks ----------------------------------------------------

    def _new_handle(self, tid: int, ident: int) -> ThreadHandle:
        return ThreadHandle(tid, ident)

    def _on_register(self, handle: ThreadHandle) -> None:
        pass

    def _publish_begin(self, handle: ThreadHandle) -> None:
        """Make the imminent operation visible to scanners; runs before the
        operation counter and progress flip."""
        pass

    def _on_unregister(self, handle: ThreadHandle) -> None:
        pass

    def _on_begin(self, handle: ThreadHandle) -> None:
        pass

    def _on_end(self, handle: ThreadHandle) -> None:
        pass

    def _on_retire(self, handle: ThreadHandle, obj: RetiredObject) -> None:
        raise NotImplementedError

    def _take_bags(self, handle: ThreadHandle) -> list[RetiredObject]:
        """Remove and return every object still in the handle's limbo bags."""
        return []

    def _iter_bags(self, handle: ThreadHandle):
        return iter(())

    def _grace_ok(self, handle: ThreadHandle | None, obj: RetiredObject) -> bool:
        """Algorithm-specific grace rule checked per deallocation in debug
        mode (the boundary oracle runs regardless)."""
        return True
