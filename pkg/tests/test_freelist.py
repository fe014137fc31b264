from hypothesis import given, settings
from hypothesis import strategies as st

from smr.freelist import FreeableList


def collector():
    freed = []
    return freed, freed.append


def test_enqueue_empty_batch_is_noop():
    fl = FreeableList()
    fl.enqueue_batch([])
    assert len(fl) == 0
    assert fl.enqueued == 0


def test_fifo_order_across_batches():
    fl = FreeableList()
    fl.enqueue_batch(["a", "b"])
    fl.enqueue_batch(["c"])
    freed, sink = collector()
    fl.drain(sink)
    assert freed == ["a", "b", "c"]


def test_enqueue_32k_batch_performs_no_deallocations():
    fl = FreeableList()
    batch = list(range(32768))
    fl.enqueue_batch(batch)
    assert len(fl) == 32768
    assert fl.freed == 0


def test_free_some_on_empty_returns_zero():
    fl = FreeableList()
    freed, sink = collector()
    assert fl.free_some(sink) == 0
    assert freed == []


def test_free_some_takes_quota_from_front():
    fl = FreeableList(quota=1)
    fl.enqueue_batch(["a", "b", "c"])
    freed, sink = collector()
    assert fl.free_some(sink) == 1
    assert freed == ["a"]
    assert list(fl.fifo) == ["b", "c"]


def test_thousand_ops_drain_thousand_one_each():
    fl = FreeableList(quota=1, high_water=10_000)
    fl.enqueue_batch(list(range(1000)))
    freed, sink = collector()
    per_op = [fl.free_some(sink) for _ in range(1000)]
    assert per_op == [1] * 1000
    assert freed == list(range(1000))
    assert len(fl) == 0


def test_catch_up_doubles_quota_above_high_water():
    fl = FreeableList(quota=3, high_water=10)
    fl.enqueue_batch(list(range(20)))
    freed, sink = collector()
    assert fl.free_some(sink) == 6      # above high water: 2x quota
    assert fl.free_some(sink) == 6
    assert fl.free_some(sink) == 3      # back under: plain quota
    assert freed == list(range(15))


def test_drain_idempotent():
    fl = FreeableList()
    fl.enqueue_batch(list(range(7)))
    freed, sink = collector()
    assert fl.drain(sink) == 7
    assert fl.drain(sink) == 0


def test_take_all_hands_over_without_freeing():
    fl = FreeableList()
    fl.enqueue_batch([1, 2, 3])
    assert fl.take_all() == [1, 2, 3]
    assert len(fl) == 0
    assert fl.freed == 0


@given(st.lists(st.lists(st.integers(), max_size=20), max_size=20),
       st.integers(min_value=1, max_value=5),
       st.integers(min_value=1, max_value=30))
@settings(max_examples=200, deadline=None)
def test_conservation_and_order_properties(batches, quota, high_water):
    fl = FreeableList(quota=quota, high_water=high_water)
    freed, sink = collector()
    expected = []
    for batch in batches:
        fl.enqueue_batch(batch)
        expected.extend(batch)
        n = fl.free_some(sink)
        assert n <= 2 * quota            # per-op work bound
        assert fl.freed <= fl.enqueued
    fl.drain(sink)
    assert fl.freed == fl.enqueued
    assert freed == expected             # FIFO, every object exactly once
