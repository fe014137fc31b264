import random
import threading

import pytest

from smr.allocators import SystemAllocator, ThreadCacheAllocator
from smr.ebr import DebraReclaimer, QsbrReclaimer
from smr.token_ring import TokenAmortizedReclaimer
from smr.workloads import ExternalBst, LinkedListSet, make_data_structure


def fresh(ds_name="bst", n=1, debug=False, node_size=64, reclaimer_cls=DebraReclaimer):
    r = reclaimer_cls(n, debug=debug)
    ds = make_data_structure(ds_name, r, SystemAllocator(), node_size)
    return r, ds


@pytest.mark.parametrize("ds_name", ["bst", "list"])
class TestSetSemantics:
    def test_insert_into_empty(self, ds_name):
        r, ds = fresh(ds_name)
        h = r.register_thread(ident=1)
        r.begin_op(h)
        assert ds.insert(h, 5) is False
        r.end_op(h)
        assert ds.snapshot() == [5]

    def test_insert_twice_reports_present(self, ds_name):
        r, ds = fresh(ds_name)
        h = r.register_thread(ident=1)
        r.begin_op(h)
        ds.insert(h, 5)
        assert ds.insert(h, 5) is True
        r.end_op(h)
        assert ds.snapshot() == [5]

    def test_delete_from_empty(self, ds_name):
        r, ds = fresh(ds_name)
        h = r.register_thread(ident=1)
        r.begin_op(h)
        assert ds.delete(h, 9) is False
        r.end_op(h)
        assert h.retired == 0

    def test_contains(self, ds_name):
        r, ds = fresh(ds_name)
        h = r.register_thread(ident=1)
        r.begin_op(h)
        assert ds.contains(h, 3) is False
        ds.insert(h, 3)
        assert ds.contains(h, 3) is True
        r.end_op(h)

    def test_sequential_oracle(self, ds_name):
        r, ds = fresh(ds_name)
        h = r.register_thread(ident=1)
        rng = random.Random(42)
        reference: set[int] = set()
        keyrange = 200 if ds_name == "list" else 20_000
        ops = 2_000 if ds_name == "list" else 100_000
        for _ in range(ops):
            key = rng.randrange(keyrange)
            r.begin_op(h)
            if rng.getrandbits(1):
                present = ds.insert(h, key)
                assert present == (key in reference)
                reference.add(key)
            else:
                present = ds.delete(h, key)
                assert present == (key in reference)
                reference.discard(key)
            r.end_op(h)
        assert ds.snapshot() == sorted(reference)


def test_bst_insert_allocates_internal_plus_leaf():
    alloc = ThreadCacheAllocator()
    r = DebraReclaimer(1)
    ds = ExternalBst(r, alloc, node_size=64)
    base = alloc.fresh_allocs
    h = r.register_thread(ident=1)
    r.begin_op(h)
    ds.insert(h, 7)
    r.end_op(h)
    assert alloc.fresh_allocs - base == 2


def test_bst_delete_retires_exactly_two_nodes():
    r, ds = fresh("bst")
    h = r.register_thread(ident=1)
    r.begin_op(h)
    ds.insert(h, 9)
    assert h.retired == 0     # pure insert retires nothing
    ds.delete(h, 9)
    r.end_op(h)
    assert h.retired == 2     # leaf and its parent routing node


def test_list_delete_retires_one_node():
    r, ds = fresh("list")
    h = r.register_thread(ident=1)
    r.begin_op(h)
    ds.insert(h, 9)
    ds.delete(h, 9)
    r.end_op(h)
    assert h.retired == 1


def test_node_payload_matches_configured_size():
    r, ds = fresh("bst", node_size=240)
    h = r.register_thread(ident=1)
    r.begin_op(h)
    ds.insert(h, 1)
    r.end_op(h)
    node = ds.root.left
    assert len(node.payload.buf) == 240


@pytest.mark.parametrize("ds_name,keyrange,ops", [("bst", 512, 4000),
                                                  ("list", 64, 1500)])
def test_concurrent_net_count_oracle(ds_name, keyrange, ops):
    """Final contents equal the per-key net of successful operations."""
    nthreads = 4
    r, ds = fresh(ds_name, n=nthreads, debug=True,
                  reclaimer_cls=TokenAmortizedReclaimer)
    nets = [[0] * keyrange for _ in range(nthreads)]
    barrier = threading.Barrier(nthreads)
    errors = []

    def work(widx):
        try:
            h = r.register_thread()
            rng = random.Random(widx)
            net = nets[widx]
            barrier.wait()
            for _ in range(ops):
                key = rng.randrange(keyrange)
                r.begin_op(h)
                try:
                    if rng.getrandbits(1):
                        if not ds.insert(h, key):
                            net[key] += 1
                    else:
                        if ds.delete(h, key):
                            net[key] -= 1
                finally:
                    r.end_op(h)
        except BaseException as exc:  # pragma: no cover - diagnostic path
            errors.append(exc)
            barrier.abort()

    threads = [threading.Thread(target=work, args=(i,)) for i in range(nthreads)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert not errors
    expected = sorted(k for k in range(keyrange)
                      if sum(nets[w][k] for w in range(nthreads)) == 1)
    assert ds.snapshot() == expected
    assert r.debug.oracle.failures == 0
    assert r.debug.canary_hits == 0


def test_qsbr_bst_roundtrip_under_contention():
    nthreads = 3
    r, ds = fresh("bst", n=nthreads, debug=True, reclaimer_cls=QsbrReclaimer)
    barrier = threading.Barrier(nthreads)
    errors = []

    def work(widx):
        try:
            h = r.register_thread()
            rng = random.Random(100 + widx)
            barrier.wait()
            for _ in range(2000):
                key = rng.randrange(256)
                r.begin_op(h)
                try:
                    if rng.getrandbits(1):
                        ds.insert(h, key)
                    else:
                        ds.delete(h, key)
                finally:
                    r.end_op(h)
        except BaseException as exc:
            errors.append(exc)
            barrier.abort()

    threads = [threading.Thread(target=work, args=(i,)) for i in range(nthreads)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert not errors
    snap = ds.snapshot()
    assert snap == sorted(set(snap))  # no duplicate keys survive
    assert r.debug.oracle.failures == 0
