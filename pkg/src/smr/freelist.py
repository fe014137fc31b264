"""Thread-local freeable list: spreads deallocation of a safe batch over
subsequent operations instead of blasting it at the allocator all at once.

Strictly FIFO and strictly thread-local; there is no stealing and no reuse.
Every enqueued object eventually reaches the deallocator exactly once, via
the per-operation quota or a final drain.
"""

from __future__ import annotations

from collections import deque
from typing import Callable

DEFAULT_QUOTA = 1
DEFAULT_HIGH_WATER = 10 * 32768  # ten nominal 32K-object batches


class FreeableList:
    __slots__ = ("fifo", "quota", "high_water", "enqueued", "freed")

    def __init__(self, quota: int = DEFAULT_QUOTA,
                 high_water: int = DEFAULT_HIGH_WATER):
        if quota < 1:
            raise ValueError("quota must be at least 1")
        if high_water < 1:
            raise ValueError("high_water must be at least 1")
        self.fifo: deque = deque()
        self.quota = quota
        self.high_water = high_water
        self.enqueued = 0
        self.freed = 0

    def __len__(self) -> int:
        return len(self.fifo)

    def enqueue_batch(self, batch) -> None:
        """Append a grace-elapsed batch in order; never deallocates."""
        if not batch:
            return
        self.fifo.extend(batch)
        self.enqueued += len(batch)

    def free_some(self, dealloc: Callable) -> int:
        """Deallocate up to one quota from the front (twice the quota while
        above the high-water mark). Called once per operation."""
        fifo = self.fifo
        n = len(fifo)
        if not n:
            return 0
        k = self.quota
        if n > self.high_water:
            k += k
        if k > n:
            k = n
        pop = fifo.popleft
        for _ in range(k):
            dealloc(pop())
        self.freed += k
        return k

    def drain(self, dealloc: Callable) -> int:
        """Deallocate everything; idempotent."""
        fifo = self.fifo
        count = len(fifo)
        pop = fifo.popleft
        while fifo:
            dealloc(pop())
        self.freed += count
        return count

    def take_all(self) -> list:
        """Remove and return all pending objects without deallocating
        (used when a leaving thread hands its backlog to drain)."""
        out = list(self.fifo)
        self.fifo.clear()
        return out
