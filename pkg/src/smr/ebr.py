"""Epoch-based reclaimers: the leaky baseline, a DEBRA-style EBR, and QSBR.

The DEBRA-style reclaimer keeps a global epoch plus a single-writer
multi-reader announcement array. Each thread re-announces the global epoch
at the start of every operation and, once per ``k_check`` operations,
scans one other thread's slot in round-robin order; the first scanner to
complete a circuit with every announcement current conditionally bumps the
global epoch. Objects are stamped with the global epoch at retire time and
released once the epoch has advanced twice past the stamp: any operation
that could still hold the object announced at most stamp+1, and the two
advances since then each required it to start a new operation.

QSBR advances a quiescence counter once every thread has marked it at an
operation boundary; batches stamped two counters back are then safe.
"""

from __future__ import annotations

from .core import (DrainError, Reclaimer, RetiredObject, ThreadHandle,
                   TokenProtocolError)
from .timeline import EventKind, monotonic_ns

DEFAULT_K_CHECK = 1  # scan one slot every operation; the paper leaves k open


class LeakyReclaimer(Reclaimer):
    """Reclamation disabled: retired objects are counted and kept forever."""

    name = "none"

    def __init__(self, max_threads: int, **kwargs):
        super().__init__(max_threads, **kwargs)
        self._leaks: list[RetiredObject] = []

    def _on_retire(self, handle: ThreadHandle, obj: RetiredObject) -> None:
        obj.retire_stamp = 0
        handle.leaked += 1
        self._leaks.append(obj)  # hold the reference: the leak must be real

    def drain(self) -> int:
        with self._reg_lock:
            for h in self._handles:
                if h is not None and h.progress[1]:
                    raise DrainError("threads active")
            return 0


class _EbrHandle(ThreadHandle):
    __slots__ = ("announced", "entering", "bags", "bag_stamps", "scan_cursor",
                 "scan_epoch", "scan_ok", "ops_since_scan", "advances")

    def __init__(self, thread_id: int, ident: int):
        super().__init__(thread_id, ident)
        self.announced = 0
        self.entering = 0
        self.bags: list[list[RetiredObject]] = [[], [], []]
        self.bag_stamps = [-1, -1, -1]
        self.scan_cursor = 0
        self.scan_epoch = -1
        self.scan_ok = 0
        self.ops_since_scan = 0
        self.advances = 0


class DebraReclaimer(Reclaimer):
    """DEBRA-style EBR with three limbo bags per thread (epoch mod 3)."""

    name = "debra"

    def __init__(self, max_threads: int, *, k_check: int = DEFAULT_K_CHECK, **kwargs):
        super().__init__(max_threads, **kwargs)
        if k_check < 1:
            raise ValueError("k_check must be at least 1")
        self.k_check = k_check
        self.global_epoch = 0
        # slot i: (announced_epoch, quiescent) or None when unregistered
        self._announce: list[tuple[int, bool] | None] = [None] * max_threads
        self.advance_count = 0

    def _new_handle(self, tid: int, ident: int) -> _EbrHandle:
        return _EbrHandle(tid, ident)

    def _on_register(self, handle: _EbrHandle) -> None:
        handle.announced = self.global_epoch
        handle.scan_cursor = 0
        handle.scan_epoch = -1
        self._announce[handle.thread_id] = (handle.announced, True)

    def _on_unregister(self, handle: _EbrHandle) -> None:
        self._announce[handle.thread_id] = None

    def _publish_begin(self, handle: _EbrHandle) -> None:
        # announcing is the operation's start as far as scanners are
        # concerned, so it must land before the op opens
        g = self.global_epoch
        self._announce[handle.thread_id] = (g, False)
        handle.entering = g

    def _on_begin(self, handle: _EbrHandle) -> None:
        g = handle.entering
        if handle.announced != g:
            self._rotate(handle, g)
        n = handle.ops_since_scan + 1
        if n >= self.k_check:
            handle.ops_since_scan = 0
            self.scan_step(handle)
        else:
            handle.ops_since_scan = n

    def _on_end(self, handle: _EbrHandle) -> None:
        self._announce[handle.thread_id] = (handle.announced, True)

    def _on_retire(self, handle: _EbrHandle, obj: RetiredObject) -> None:
        s = self.global_epoch
        obj.retire_stamp = s
        i = s % 3
        bag = handle.bags[i]
        if self.debug is not None and bag and handle.bag_stamps[i] != s:
            raise TokenProtocolError(
                f"bag {i} holds stamp {handle.bag_stamps[i]} but got {s}")
        handle.bag_stamps[i] = s
        bag.append(obj)

    def _rotate(self, handle: _EbrHandle, new_epoch: int) -> None:
        """Entering ``new_epoch``: release every bag whose stamp has been
        passed twice, then log this epoch's starting garbage."""
        limit = new_epoch - 2
        pending = sum(len(b) for b in handle.bags)
        ev = handle.events
        if ev is not None:
            now = monotonic_ns()
            ev.record(EventKind.GARBAGE_COUNT, now, now, pending)
        handle.log_garbage(new_epoch, pending)
        for i in range(3):
            bag = handle.bags[i]
            if bag and handle.bag_stamps[i] <= limit:
                handle.bags[i] = []
                handle.bag_stamps[i] = -1
                self._release_batch(handle, bag)
        handle.announced = new_epoch

    def scan_step(self, handle: _EbrHandle) -> bool:
        """Read one announcement slot; advance the epoch after observing a
        full circuit of current announcements. Returns whether this call
        advanced the global epoch."""
        g = self.global_epoch
        if handle.scan_epoch != g:
            handle.scan_epoch = g
            handle.scan_cursor = 0
            handle.scan_ok = 0
        slots = self._announce
        n = len(slots)
        slot = slots[handle.scan_cursor]
        if slot is not None:  # unregistered slots hold no references
            epoch, quiescent = slot
            if not quiescent and epoch != g:
                return False  # stall on the laggard
        handle.scan_cursor = (handle.scan_cursor + 1) % n
        handle.scan_ok += 1
        if handle.scan_ok < n:
            return False
        # full circuit observed: attempt the conditional increment
        advanced = False
        with self._advance_lock:
            if self.global_epoch == g:
                if self.debug is not None:
                    for slot in slots:
                        if slot is not None and not slot[1] and slot[0] != g:
                            raise TokenProtocolError(
                                "epoch advance with a stale non-quiescent announcement")
                self.global_epoch = g + 1
                self.advance_count += 1
                advanced = True
        handle.scan_epoch = -1  # restart the circuit either way
        if advanced:
            handle.advances += 1
            ev = handle.events
            if ev is not None:
                now = monotonic_ns()
                ev.record(EventKind.EPOCH_ADVANCE, now, now, g + 1)
        return advanced

    def _take_bags(self, handle: _EbrHandle) -> list[RetiredObject]:
        out = []
        for i in range(3):
            out.extend(handle.bags[i])
            handle.bags[i] = []
            handle.bag_stamps[i] = -1
        return out

    def _iter_bags(self, handle: _EbrHandle):
        for bag in handle.bags:
            yield from bag

    def _grace_ok(self, handle, obj: RetiredObject) -> bool:
        return self.global_epoch >= obj.retire_stamp + 2

    def epoch_count(self) -> int:
        return self.global_epoch


class _QsbrHandle(ThreadHandle):
    __slots__ = ("batches", "last_mark")

    def __init__(self, thread_id: int, ident: int):
        super().__init__(thread_id, ident)
        self.batches: list[list] = []  # [stamp, objects], oldest first
        self.last_mark = -1


class QsbrReclaimer(Reclaimer):
    """Quiescent-state-based reclamation.

    ``end_op`` is the quiescent point: the thread marks the current global
    counter, and once every registered thread has marked it the counter
    advances. A batch stamped ``s`` is released once the counter reaches
    ``s + 2``: every thread passed a quiescent point after the counter
    became ``s + 1``, which was after the batch's retires.
    """

    name = "qsbr"

    def __init__(self, max_threads: int, **kwargs):
        super().__init__(max_threads, **kwargs)
        self.counter = 0
        self._marks: list[int | None] = [None] * max_threads

    def _new_handle(self, tid: int, ident: int) -> _QsbrHandle:
        return _QsbrHandle(tid, ident)

    def _on_register(self, handle: _QsbrHandle) -> None:
        # registration is a quiescent point: the thread holds nothing yet
        handle.last_mark = self.counter
        self._marks[handle.thread_id] = handle.last_mark

    def _on_unregister(self, handle: _QsbrHandle) -> None:
        self._marks[handle.thread_id] = None

    def _on_retire(self, handle: _QsbrHandle, obj: RetiredObject) -> None:
        s = self.counter
        obj.retire_stamp = s
        batches = handle.batches
        if batches and batches[-1][0] == s:
            batches[-1][1].append(obj)
        else:
            batches.append([s, [obj]])

    def _on_end(self, handle: _QsbrHandle) -> None:
        self.quiescent(handle)

    def quiescent(self, handle: _QsbrHandle) -> None:
        """Mark passage through a quiescent point; possibly advance the
        counter and release batches whose grace has elapsed."""
        c = self.counter
        if handle.last_mark != c:
            handle.last_mark = c
            self._marks[handle.thread_id] = c
            pending = sum(len(b[1]) for b in handle.batches)
            ev = handle.events
            if ev is not None:
                now = monotonic_ns()
                ev.record(EventKind.GARBAGE_COUNT, now, now, pending)
            handle.log_garbage(c, pending)
        marks = self._marks
        for m in marks:
            if m is not None and m != c:
                break
        else:
            with self._advance_lock:
                if self.counter == c:
                    self.counter = c + 1
                    ev = handle.events
                    if ev is not None:
                        now = monotonic_ns()
                        ev.record(EventKind.EPOCH_ADVANCE, now, now, c + 1)
        limit = self.counter - 2
        batches = handle.batches
        while batches and batches[0][0] <= limit:
            self._release_batch(handle, batches.pop(0)[1])

    def _take_bags(self, handle: _QsbrHandle) -> list[RetiredObject]:
        out = []
        for _, objs in handle.batches:
            out.extend(objs)
        handle.batches.clear()
        return out

    def _iter_bags(self, handle: _QsbrHandle):
        for _, objs in handle.batches:
            yield from objs

    def _grace_ok(self, handle, obj: RetiredObject) -> bool:
        return self.counter >= obj.retire_stamp + 2

    def epoch_count(self) -> int:
        return self.counter
