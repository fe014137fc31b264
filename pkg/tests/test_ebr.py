import pytest

from conftest import interleavings, raw_deallocator, retired
from smr.core import DrainError
from smr.ebr import DebraReclaimer, LeakyReclaimer, QsbrReclaimer
from smr.timeline import TimelineRecorder


def debra(n, **kw):
    kw.setdefault("deallocator", raw_deallocator())
    kw.setdefault("debug", True)
    return DebraReclaimer(n, **kw)


def qsbr(n, **kw):
    kw.setdefault("deallocator", raw_deallocator())
    kw.setdefault("debug", True)
    return QsbrReclaimer(n, **kw)


# -- announcements and bag rotation ------------------------------------------

def test_announce_unchanged_without_epoch_change():
    r = debra(2)
    h = r.register_thread(ident=1)
    r.begin_op(h)
    assert r._announce[0] == (0, False)
    before = h.announced
    r.end_op(h)
    r.begin_op(h)  # circuit incomplete (slot 1 unseen): epoch still 0
    assert h.announced == before == 0
    r.end_op(h)


def test_announce_tracks_advanced_epoch():
    r = debra(1)
    h = r.register_thread(ident=1)
    r.begin_op(h)  # scan completes the 1-slot circuit: epoch 0 -> 1
    r.end_op(h)
    assert r.global_epoch == 1
    r.begin_op(h)
    assert h.announced == 1
    assert r._announce[0] == (1, False)
    r.end_op(h)


def test_two_epochs_behind_releases_old_bags():
    r = debra(1)
    h = r.register_thread(ident=1)
    r.begin_op(h)                     # epoch -> 1
    obj = retired()
    r.retire(h, obj)                  # stamp 1
    r.end_op(h)
    assert h.bags[1] == [obj]
    r.begin_op(h)                     # epoch -> 2; limit 0: bag kept
    r.end_op(h)
    assert h.freed == 0
    r.begin_op(h)                     # epoch -> 3; rotation next op
    r.end_op(h)
    r.begin_op(h)                     # entering 3: limit 1 releases stamp 1
    r.end_op(h)
    assert h.freed == 1
    assert r.debug.oracle.failures == 0


def test_single_thread_everything_freed():
    k = 1
    r = debra(1, k_check=k)
    h = r.register_thread(ident=1)
    for i in range(3 * k + 1):
        r.begin_op(h)
        r.retire(h, retired())
        r.end_op(h)
    assert r.global_epoch >= 3
    assert r.lifetime_freed > 0
    r.unregister_thread(h)
    r.drain()
    assert r.lifetime_freed == r.lifetime_retired == 3 * k + 1


def test_retire_stamps_follow_epoch_at_retire():
    r = debra(1)
    h = r.register_thread(ident=1)
    stamps = []
    for _ in range(3):
        r.begin_op(h)
        obj = retired()
        r.retire(h, obj)
        stamps.append(obj.retire_stamp)
        r.end_op(h)
    # epoch advances once per op (1-slot circuit): stamps step with it
    assert stamps == [1, 2, 3]


def test_scan_stalls_on_lagging_thread():
    r = debra(3)
    h0 = r.register_thread(ident=1)
    h1 = r.register_thread(ident=2)
    h2 = r.register_thread(ident=3)
    r.begin_op(h1)                    # announces 0, stays non-quiescent
    # drive h0 and h2; the circuit keeps stalling on h1 once it lags
    for _ in range(10):
        r.begin_op(h0)
        r.end_op(h0)
        r.begin_op(h2)
        r.end_op(h2)
    first = r.global_epoch
    assert first <= 1                 # h1 blocks any further advance
    for _ in range(10):
        r.begin_op(h0)
        r.end_op(h0)
    assert r.global_epoch == first


def test_advance_rate_matches_estimate_and_replays():
    def run():
        k = 20
        r = DebraReclaimer(4, k_check=k, deallocator=raw_deallocator())
        hs = [r.register_thread(ident=i + 1) for i in range(4)]
        for _ in range(10_000):
            for h in hs:              # deterministic round-robin schedule
                r.begin_op(h)
                r.end_op(h)
        return r.advance_count

    advances = run()
    # One advance needs a single scanner to finish a full circuit: n scans,
    # k own-ops apart, so between total/(k*n*n) (circuits serialize) and
    # total/(k*n) (every scan counted toward one circuit).
    total, k, n = 10_000 * 4, 20, 4
    assert total / (k * n * n) <= advances <= total / (k * n)
    assert run() == advances          # replaying the schedule is exact


# -- exhaustive small-instance enumeration (advance rule) --------------------

class EbrModel:
    """Reference simulator of the announce/scan/advance rule at
    operation-boundary granularity (one scan step per begin)."""

    def __init__(self, n):
        self.n = n
        self.epoch = 0
        self.announced = [0] * n
        self.quiescent = [True] * n
        self.cursor = [0] * n
        self.ok = [0] * n
        self.scan_epoch = [-1] * n

    def begin(self, tid):
        g = self.epoch
        self.announced[tid] = g
        self.quiescent[tid] = False
        if self.scan_epoch[tid] != g:
            self.scan_epoch[tid] = g
            self.cursor[tid] = 0
            self.ok[tid] = 0
        j = self.cursor[tid]
        if not self.quiescent[j] and self.announced[j] != g:
            return
        self.cursor[tid] = (j + 1) % self.n
        self.ok[tid] += 1
        if self.ok[tid] >= self.n:
            if self.epoch == g:
                self.epoch = g + 1
            self.scan_epoch[tid] = -1

    def end(self, tid):
        self.quiescent[tid] = True


def _replay_real(n, schedule):
    r = DebraReclaimer(n, deallocator=raw_deallocator())
    hs = [r.register_thread(ident=i + 1) for i in range(n)]
    trace = []
    for tid, action in schedule:
        if action == "begin":
            r.begin_op(hs[tid])
        else:
            r.end_op(hs[tid])
        trace.append(r.global_epoch)
    return trace


def _replay_model(n, schedule):
    m = EbrModel(n)
    trace = []
    for tid, action in schedule:
        if action == "begin":
            m.begin(tid)
        else:
            m.end(tid)
        trace.append(m.epoch)
    return trace


@pytest.mark.parametrize("n,ops", [(1, 4), (2, 2), (3, 2)])
def test_epoch_advance_matches_model_exhaustively(n, ops):
    per_thread = [[(t, a) for _ in range(ops) for a in ("begin", "end")]
                  for t in range(n)]
    count = 0
    for schedule in interleavings(*per_thread):
        assert _replay_real(n, schedule) == _replay_model(n, schedule), schedule
        count += 1
    assert count >= 1


def test_single_thread_advances_every_eligible_step():
    trace = _replay_real(1, [(0, "begin"), (0, "end")] * 5)
    assert trace[::2] == [1, 2, 3, 4, 5]  # each begin advances


# -- QSBR ---------------------------------------------------------------------

def test_qsbr_single_thread_release_after_boundary():
    r = qsbr(1)
    h = r.register_thread(ident=1)
    r.begin_op(h)
    r.retire(h, retired())
    r.end_op(h)            # mark 0 -> counter 1
    assert h.freed == 0
    r.begin_op(h)
    r.end_op(h)            # mark 1 -> counter 2: stamp 0 released
    assert h.freed == 1
    assert r.debug.oracle.failures == 0


def test_qsbr_blocked_by_thread_that_never_quiesces():
    r = qsbr(2)
    h0 = r.register_thread(ident=1)
    h1 = r.register_thread(ident=2)
    r.begin_op(h1)         # never ends
    for _ in range(50):
        r.begin_op(h0)
        r.retire(h0, retired())
        r.end_op(h0)
    assert h0.freed == 0
    assert r.counter <= 1


def test_qsbr_conservation_after_drain():
    r = qsbr(4)
    hs = [r.register_thread(ident=i + 1) for i in range(4)]
    import random
    rng = random.Random(3)
    for _ in range(2_000):
        h = hs[rng.randrange(4)]
        r.begin_op(h)
        if rng.random() < 0.5:
            r.retire(h, retired())
        r.end_op(h)
    for h in hs:
        r.unregister_thread(h)
    r.drain()
    assert r.lifetime_freed == r.lifetime_retired


# -- leaky ----------------------------------------------------------------------

def test_leaky_never_deallocates():
    r = LeakyReclaimer(1, deallocator=raw_deallocator())
    h = r.register_thread(ident=1)
    for _ in range(100):
        r.begin_op(h)
        r.retire(h, retired())
        r.end_op(h)
    assert r.lifetime_freed == 0
    assert r.lifetime_leaked == 100
    r.unregister_thread(h)
    assert r.drain() == 0
    assert r.lifetime_freed == 0


def test_leaky_drain_requires_quiescence():
    r = LeakyReclaimer(1, deallocator=raw_deallocator())
    h = r.register_thread(ident=1)
    r.begin_op(h)
    with pytest.raises(DrainError, match="threads active"):
        r.drain()


# -- timeline integration -----------------------------------------------------

def test_epoch_advances_recorded():
    rec = TimelineRecorder(capacity=100)
    r = DebraReclaimer(1, deallocator=raw_deallocator(), recorder=rec)
    h = r.register_thread(ident=1)
    for _ in range(5):
        r.begin_op(h)
        r.end_op(h)
    from smr.timeline import EventKind
    kinds = [e.kind for e in rec.buffer_for(0).events()]
    assert kinds.count(EventKind.EPOCH_ADVANCE) == 5
