"""Token-ring epoch reclamation.

Registered threads form a ring and a single token circulates around it; a
thread enters a new local epoch each time it receives the token. Each
thread keeps two limbo bags (current and previous epoch). When the token
arrives, the previous bag's contents have survived a full circuit since
they were retired -- every thread has begun a new operation in between --
so they are safe to free; the bags then swap.

The token itself is an array of per-thread delivery counts: ``slots[i]`` is
written only by ``i``'s predecessor and consumed only by ``i``, so the hot
path has no shared mutable word at all. A receipt raises the owner's
``received_round`` by exactly one, which keeps rounds in order and makes
the single-token invariant auditable from the (received, passed) pairs.

Variants differ only in what a receipt does:

* naive       -- free the previous bag, swap, then pass the token;
* pass-first  -- swap, pass, then free;
* periodic    -- pass, then free, re-passing any newly arrived token every
                 ``k_free`` deallocations;
* amortized   -- pass, move the previous bag onto the freeable list, swap.
"""

from __future__ import annotations

from .core import (DrainError, Reclaimer, RetiredObject, ThreadHandle,
                   TokenProtocolError)
from .timeline import EventKind, monotonic_ns

DEFAULT_K_FREE = 100  # frees between token checks in the periodic variant


class _TokenHandle(ThreadHandle):
    __slots__ = ("received_round", "passed_round", "token_counts",
                 "cur_bag", "prev_bag")

    def __init__(self, thread_id: int, ident: int):
        super().__init__(thread_id, ident)
        self.received_round = 0
        self.passed_round = 0
        self.token_counts = (0, 0)  # (received, passed), replaced atomically
        self.cur_bag: list[RetiredObject] = []
        self.prev_bag: list[RetiredObject] = []


class TokenReclaimerBase(Reclaimer):
    name = "token"

    def __init__(self, max_threads: int, **kwargs):
        super().__init__(max_threads, **kwargs)
        self._slots = [0] * max_threads  # deliveries; written by predecessor only
        self._ring: list[int] = []       # thread ids in registration order
        self._next_of: dict[int, int] = {}
        self._round_watermark = 0

    # -- ring membership (serialized by the registration lock) --------------

    def _new_handle(self, tid: int, ident: int) -> _TokenHandle:
        return _TokenHandle(tid, ident)

    def _on_register(self, handle: _TokenHandle) -> None:
        self._ring.append(handle.thread_id)
        self._rebuild_ring()
        if len(self._ring) == 1:
            self._slots[handle.thread_id] = 1  # inject the token: round 1

    def _on_unregister(self, handle: _TokenHandle) -> None:
        # Leaving the ring needs a quiet world: no pass may be in flight.
        for h in self._handles:
            if h is not None and h is not handle and h.progress[1]:
                raise DrainError("threads active")
        tid = handle.thread_id
        undelivered = self._slots[tid] > handle.received_round
        successor = self._next_of.get(tid, tid)
        self._ring.remove(tid)
        self._rebuild_ring()
        if undelivered and self._ring:
            self._slots[successor] += 1
        if not self._ring:
            for i in range(len(self._slots)):
                self._slots[i] = 0

    def _rebuild_ring(self) -> None:
        ring = self._ring
        n = len(ring)
        self._next_of = {ring[i]: ring[(i + 1) % n] for i in range(n)}

    # -- protocol ------------------------------------------------------------

    def _publish_begin(self, handle: _TokenHandle) -> None:
        # receipt processing runs in the quiescent gap before the operation
        # opens: the reclamation phase holds no structure references, and a
        # pass (even one sent mid-free) certifies an operation boundary
        tid = handle.thread_id
        if self._slots[tid] > handle.received_round:
            self._receive(handle)

    def _receive(self, handle: _TokenHandle) -> None:
        r = handle.received_round + 1
        handle.received_round = r
        handle.token_counts = (r, handle.passed_round)
        if r > self._round_watermark:
            self._round_watermark = r
        prev = handle.prev_bag
        ev = handle.events
        if ev is not None:
            now = monotonic_ns()
            ev.record(EventKind.GARBAGE_COUNT, now, now, len(prev))
            ev.record(EventKind.EPOCH_ADVANCE, now, now, r)
        handle.log_garbage(r, len(prev))
        self._on_receive(handle, prev)

    def _on_receive(self, handle: _TokenHandle, prev: list[RetiredObject]) -> None:
        raise NotImplementedError

    def _pass(self, handle: _TokenHandle) -> None:
        received = handle.received_round
        if received != handle.passed_round + 1:
            raise TokenProtocolError("token not held")
        self._slots[self._next_of[handle.thread_id]] += 1
        handle.passed_round = received
        handle.token_counts = (received, received)
        ev = handle.events
        if ev is not None:
            now = monotonic_ns()
            ev.record(EventKind.TOKEN_PASS, now, now, received)

    def _on_retire(self, handle: _TokenHandle, obj: RetiredObject) -> None:
        obj.retire_stamp = handle.received_round
        handle.cur_bag.append(obj)

    def _take_bags(self, handle: _TokenHandle) -> list[RetiredObject]:
        out = handle.prev_bag + handle.cur_bag
        handle.prev_bag = []
        handle.cur_bag = []
        return out

    def _iter_bags(self, handle: _TokenHandle):
        yield from handle.prev_bag
        yield from handle.cur_bag

    def _grace_ok(self, handle, obj: RetiredObject) -> bool:
        # freed at the receipt two rounds after the retire-epoch, or later
        return (isinstance(handle, _TokenHandle)
                and handle.received_round >= obj.retire_stamp + 2)

    def epoch_count(self) -> int:
        return self._round_watermark

    def audit_token_counts(self) -> list[tuple[int, int]]:
        """(received, passed) snapshots for single-token audits."""
        return [h.token_counts for h in self._handles if h is not None]


class TokenNaiveReclaimer(TokenReclaimerBase):
    """Free the previous bag completely, swap bags, then pass the token."""

    name = "token_naive"

    def _on_receive(self, handle: _TokenHandle, prev: list[RetiredObject]) -> None:
        self._release_batch(handle, prev)  # blocking under the batch policy
        handle.prev_bag = handle.cur_bag
        handle.cur_bag = []
        self._pass(handle)


class TokenPassFirstReclaimer(TokenReclaimerBase):
    """Swap, pass the token, then free the old previous bag. A token that
    arrives while freeing sits undelivered until the next operation."""

    name = "token_passfirst"

    def _on_receive(self, handle: _TokenHandle, prev: list[RetiredObject]) -> None:
        handle.prev_bag = handle.cur_bag
        handle.cur_bag = []
        self._pass(handle)
        self._release_batch(handle, prev)


class TokenPeriodicReclaimer(TokenReclaimerBase):
    """Pass, then free, re-passing any newly received token every ``k_free``
    deallocations so a long free does not stall the ring a full bag's worth."""

    name = "token_periodic"

    def __init__(self, max_threads: int, *, k_free: int = DEFAULT_K_FREE, **kwargs):
        super().__init__(max_threads, **kwargs)
        if k_free < 1:
            raise ValueError("k_free must be at least 1")
        self.k_free = k_free

    def _on_receive(self, handle: _TokenHandle, prev: list[RetiredObject]) -> None:
        handle.prev_bag = handle.cur_bag
        handle.cur_bag = []
        self._pass(handle)
        self._release_batch(handle, prev)

    def _free_batch(self, handle: _TokenHandle, batch: list[RetiredObject]) -> None:
        k = self.k_free
        tid = handle.thread_id
        slots = self._slots
        dealloc = self._dealloc_one
        ev = handle.events
        singles = ev if self.record_single_frees else None
        t0 = monotonic_ns()
        s0 = t0
        count = 0
        for obj in batch:
            if singles is not None:
                dealloc(handle, obj)
                s1 = monotonic_ns()
                singles.record(EventKind.SINGLE_FREE, s0, s1, obj.size_bytes)
                s0 = s1
            else:
                dealloc(handle, obj)
            count += 1
            if count % k == 0 and slots[tid] > handle.received_round:
                # mid-free receipt: enter the round and send the token on;
                # the bag swap waits for the next operation
                r = handle.received_round + 1
                handle.received_round = r
                handle.token_counts = (r, handle.passed_round)
                if r > self._round_watermark:
                    self._round_watermark = r
                pending = (len(batch) - count) + len(handle.cur_bag)
                if ev is not None:
                    now = monotonic_ns()
                    ev.record(EventKind.GARBAGE_COUNT, now, now, pending)
                    ev.record(EventKind.EPOCH_ADVANCE, now, now, r)
                handle.log_garbage(r, pending)
                self._pass(handle)
        t1 = monotonic_ns()
        handle.free_ns += t1 - t0
        if ev is not None:
            ev.record(EventKind.BATCH_FREE, t0, t1, len(batch))


class TokenAmortizedReclaimer(TokenPeriodicReclaimer):
    """Periodic ring with the amortized free path: a receipt hands the
    previous bag to the freeable list in O(1) and the per-operation quota
    does the real deallocation."""

    name = "token_af"

    def __init__(self, max_threads: int, **kwargs):
        kwargs["free_policy"] = "amortized"
        super().__init__(max_threads, **kwargs)

    def _on_receive(self, handle: _TokenHandle, prev: list[RetiredObject]) -> None:
        self._pass(handle)
        handle.freeable.enqueue_batch(prev)
        handle.prev_bag = handle.cur_bag
        handle.cur_bag = []
