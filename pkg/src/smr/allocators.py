"""Pluggable node-payload allocators.

The harness never assumes a specific allocator; it records a label and lets
the caller substitute one. Two implementations are provided:

* ``SystemAllocator`` hands out fresh interpreter-managed buffers and has no
  thread caches (freeing is effectively dropping the last reference).
* ``ThreadCacheAllocator`` models the thread-caching design of popular
  C allocators: frees land in a bounded per-thread cache for local reuse,
  and overflowing the cache flushes roughly three quarters of it back to
  per-owner bins, each guarded by a lock. Freeing a large batch of
  remotely-owned blocks therefore triggers contended bulk returns, which is
  the remote-batch-free pathology the benchmark reproduces.
"""

from __future__ import annotations

import threading


class Block:
    """An allocated payload. ``owner`` is the bin of the allocating thread."""

    __slots__ = ("buf", "size", "owner")

    def __init__(self, size: int, owner: "Bin | None"):
        self.buf = bytearray(size)
        self.size = size
        self.owner = owner


class SystemAllocator:
    """Interpreter allocation; no caches, remote frees are free."""

    label = "pymalloc"
    has_thread_caches = False

    def alloc(self, size: int) -> Block:
        return Block(size, None)

    def free(self, block: Block) -> None:
        block.buf = b""

    def stats(self) -> dict:
        return {}


LOCK_SPIN = 150  # slow-path spin budget before parking, as allocator mutexes do


class Bin:
    """Per-owner free store. Returns are per-object bookkeeping done under
    the bin lock; the lock spins briefly before parking, so contention burns
    cycles the way an allocator mutex slow path does."""

    __slots__ = ("lock", "free_blocks", "returns", "contended_returns")

    def __init__(self):
        self.lock = threading.Lock()
        self.free_blocks: dict[int, list[Block]] = {}
        self.returns = 0
        self.contended_returns = 0

    def _acquire(self) -> bool:
        """Returns whether the acquisition was contended."""
        lock = self.lock
        if lock.acquire(blocking=False):
            return False
        spins = 0
        while spins < LOCK_SPIN:
            spins += 1
            if lock.acquire(blocking=False):
                return True
        lock.acquire()
        return True

    def take(self, size: int, count: int) -> list[Block]:
        self._acquire()
        try:
            avail = self.free_blocks.get(size)
            if not avail:
                return []
            k = min(count, len(avail))
            taken = avail[-k:]
            del avail[-k:]
            return taken
        finally:
            self.lock.release()

    def put_all(self, blocks: list[Block]) -> None:
        contended = self._acquire()
        try:
            store = self.free_blocks
            n = self.returns
            for b in blocks:
                lst = store.get(b.size)
                if lst is None:
                    lst = store[b.size] = []
                lst.append(b)
                n += 1
                # freelist linkage and span accounting live in the dead
                # object itself, as in slab-style allocators
                link = n.to_bytes(8, "little")
                buf = b.buf
                end = b.size & ~7
                for off in range(0, end, max(8, end >> 3)):
                    buf[off:off + 8] = link
            self.returns = n
            if contended:
                self.contended_returns += len(blocks)
        finally:
            self.lock.release()


class _Cache(threading.local):
    def __init__(self):
        self.bin: Bin | None = None
        self.by_size: dict[int, list[Block]] = {}


class ThreadCacheAllocator:
    """Model of a thread-caching allocator: bounded per-thread caches, flush
    on overflow, locked central bins.

    ``central_bins`` controls how coarsely remote returns synchronize. The
    default of one shared bin mirrors a central-free-list design; raising it
    spreads owners across more locks (arena-style).
    """

    label = "model-tcache"
    has_thread_caches = True

    def __init__(self, cache_capacity: int = 128, flush_fraction: float = 0.75,
                 refill_count: int = 32, central_bins: int = 1):
        if cache_capacity < 4:
            raise ValueError("cache_capacity too small")
        if central_bins < 1:
            raise ValueError("central_bins must be at least 1")
        self.cache_capacity = cache_capacity
        self.flush_count = max(1, int(cache_capacity * flush_fraction))
        self.refill_count = refill_count
        self._cache = _Cache()
        self._bins = [Bin() for _ in range(central_bins)]
        self._bins_lock = threading.Lock()
        self._next_group = 0
        self.flushes = 0
        self.fresh_allocs = 0
        self.cache_hits = 0

    def _my_bin(self) -> Bin:
        c = self._cache
        if c.bin is None:
            with self._bins_lock:
                group = self._next_group
                self._next_group += 1
            c.bin = self._bins[group % len(self._bins)]
        return c.bin

    def alloc(self, size: int) -> Block:
        cache = self._cache.by_size.get(size)
        if cache:
            self.cache_hits += 1
            return cache.pop()
        mine = self._my_bin()
        refill = mine.take(size, self.refill_count)
        if refill:
            block = refill.pop()
            if refill:
                bucket = self._cache.by_size.setdefault(size, [])
                bucket.extend(refill)
            return block
        self.fresh_allocs += 1
        return Block(size, mine)

    def free(self, block: Block) -> None:
        bucket = self._cache.by_size.setdefault(block.size, [])
        bucket.append(block)
        if len(bucket) > self.cache_capacity:
            self._flush(bucket)

    def _flush(self, bucket: list[Block]) -> None:
        # Oldest ~3/4 of the cache goes back to the owners' bins.
        self.flushes += 1
        take = self.flush_count
        outgoing = bucket[:take]
        del bucket[:take]
        mine = self._my_bin()
        by_owner: dict[int, tuple[Bin, list[Block]]] = {}
        for b in outgoing:
            owner = b.owner if b.owner is not None else mine
            entry = by_owner.get(id(owner))
            if entry is None:
                by_owner[id(owner)] = (owner, [b])
            else:
                entry[1].append(b)
        for owner, blocks in by_owner.values():
            owner.put_all(blocks)

    def flush_all(self) -> None:
        """Return every cached block to its owner (quiescent calls only)."""
        for bucket in self._cache.by_size.values():
            while bucket:
                self._flush(bucket)

    def stats(self) -> dict:
        returns = sum(b.returns for b in self._bins)
        contended = sum(b.contended_returns for b in self._bins)
        return {
            "flushes": self.flushes,
            "fresh_allocs": self.fresh_allocs,
            "cache_hits": self.cache_hits,
            "bin_returns": returns,
            "contended_returns": contended,
        }


ALLOCATORS = {
    "pymalloc": SystemAllocator,
    "model-tcache": ThreadCacheAllocator,
}


def make_allocator(label: str, **kwargs):
    try:
        cls = ALLOCATORS[label]
    except KeyError:
        raise ValueError(f"unknown allocator: {label!r}") from None
    return cls(**kwargs)
