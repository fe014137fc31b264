"""Acceptance checks for the reporting package: structural fidelity of the
timeline renderer on synthetic traces, and ordering fidelity of the scaling
chart on a hand-built summary."""

import random

from test_reports import MS, write_summary, write_trace, _row

from smr_reports import TimelinePlotSpec, plot_scaling, plot_timeline


def test_c11_timeline_manifest_matches_event_counts(tmp_path):
    # trace 1: empty
    empty = write_trace(str(tmp_path / "empty"), {0: [], 1: []}, origin=0)
    manifest = plot_timeline(TimelinePlotSpec(empty,
                                              str(tmp_path / "empty.png"),
                                              threshold_ms=0.0))
    assert manifest["total_boxes"] == 0
    assert manifest["dots"] == manifest["projected_dots"] == 0
    print("[ACCEPTANCE] C11a empty trace manifest: PASS")

    # trace 2: two threads, a handful of events
    small = write_trace(str(tmp_path / "small"), {
        0: [("BATCH_FREE", 0, 2 * MS, 12),
            ("EPOCH_ADVANCE", 3 * MS, 3 * MS, 1),
            ("SINGLE_FREE", 4 * MS, 4 * MS + MS, 240)],
        1: [("BATCH_FREE", MS, 3 * MS, 6),
            ("EPOCH_ADVANCE", 5 * MS, 5 * MS, 2)],
    }, origin=0)
    manifest = plot_timeline(TimelinePlotSpec(small,
                                              str(tmp_path / "small.png"),
                                              threshold_ms=0.0))
    assert manifest["boxes"] == {"0": 2, "1": 1}
    assert manifest["total_boxes"] == 3
    assert manifest["dots"] == 2
    assert manifest["projected_dots"] == 2  # every advance dot is projected
    print("[ACCEPTANCE] C11b small trace manifest: PASS")

    # trace 3: ten thousand events with a threshold filter
    rng = random.Random(9)
    events = []
    advances = 0
    kept_boxes = 0
    t = 0
    threshold_ns = int(0.1 * MS)
    for i in range(10_000):
        t += 10_000
        if i % 100 == 0:
            events.append(("EPOCH_ADVANCE", t, t, i // 100))
            advances += 1
        else:
            duration = rng.randrange(1, 300_000)
            events.append(("SINGLE_FREE", t, t + duration, 240))
            if duration >= threshold_ns:
                kept_boxes += 1
    big = write_trace(str(tmp_path / "big"), {0: events}, origin=0)
    manifest = plot_timeline(TimelinePlotSpec(big, str(tmp_path / "big.png"),
                                              threshold_ms=0.1))
    assert manifest["total_boxes"] == kept_boxes
    assert manifest["dots"] == advances
    assert manifest["projected_dots"] == advances
    print(f"[ACCEPTANCE] C11c 10^4-event manifest "
          f"({kept_boxes} boxes, {advances} dots): PASS")


def test_c12_scaling_reproduces_token_variant_ordering(tmp_path):
    # the four published throughputs, millions of ops/s at 192 threads
    table = {"token_naive": 73.7e6, "token_passfirst": 52.4e6,
             "token_periodic": 54.4e6, "token_af": 123.7e6}
    csv_path = write_summary(tmp_path / "table.csv", [
        _row(192, name, mean) for name, mean in sorted(table.items())])
    manifest = plot_scaling(csv_path, str(tmp_path / "table.png"))
    assert manifest["chart"] == "bar"
    heights = {label.split("/")[0]: info["height"]
               for label, info in manifest["series"].items()}
    ranked = sorted(heights, key=heights.get, reverse=True)
    assert ranked == ["token_af", "token_naive", "token_periodic",
                      "token_passfirst"]
    print("[ACCEPTANCE] C12 scaling bar ordering "
          "(amortized > naive > periodic > pass-first): PASS")
