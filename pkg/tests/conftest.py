"""Shared helpers: scripted (virtual-thread) reclaimer driving and small
instrumented reclaimers for exercising the free gate directly."""

from __future__ import annotations

import itertools

import pytest

from smr.core import Deallocator, Reclaimer, RetiredObject


class ManualReclaimer(Reclaimer):
    """Keeps every retired object until the test frees it explicitly;
    stamps are the retiring thread's op counter."""

    name = "manual"

    def __init__(self, max_threads, **kwargs):
        kwargs.setdefault("deallocator", raw_deallocator())
        super().__init__(max_threads, **kwargs)
        self.held = []

    def _on_retire(self, handle, obj):
        obj.retire_stamp = handle.op_counter
        self.held.append((handle, obj))

    def free_now(self, handle, obj):
        self._dealloc(handle, obj)

    def _take_bags(self, handle):
        mine = [obj for h, obj in self.held if h is handle]
        self.held = [(h, obj) for h, obj in self.held if h is not handle]
        return mine

    def _iter_bags(self, handle):
        return (obj for h, obj in self.held if h is handle)


class ImmediateFreeReclaimer(Reclaimer):
    """Deliberately broken: frees at retire time, before any grace period."""

    name = "broken"

    def __init__(self, max_threads, **kwargs):
        kwargs.setdefault("deallocator", raw_deallocator())
        super().__init__(max_threads, **kwargs)

    def _on_retire(self, handle, obj):
        obj.retire_stamp = handle.op_counter
        self._dealloc(handle, obj)


def raw_deallocator() -> Deallocator:
    d = Deallocator()
    d.register("raw", lambda ref, size: None, lambda ref, size: None)
    return d


def retired(ref=None, size=64, tag="raw") -> RetiredObject:
    return RetiredObject(ref if ref is not None else object(), size, tag)


def interleavings(*sequences):
    """Every merge of the given per-thread event sequences."""
    seqs = [list(s) for s in sequences if s]
    if not seqs:
        yield ()
        return
    for i, seq in enumerate(seqs):
        head, rest = seq[0], seq[1:]
        remaining = seqs[:i] + ([rest] if rest else []) + seqs[i + 1:]
        for tail in interleavings(*remaining):
            yield (head,) + tail


def count_interleavings(*lengths):
    import math
    total = math.factorial(sum(lengths))
    for n in lengths:
        total //= math.factorial(n)
    return total


@pytest.fixture
def manual():
    return ManualReclaimer(4, debug=True)
