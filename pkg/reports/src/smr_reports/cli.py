"""smr-report command line: timeline, scaling, and garbage charts."""

from __future__ import annotations

import argparse
import sys

from .plots import (DEFAULT_THRESHOLD_MS, DEFAULT_THREADS_SHOWN,
                    TimelinePlotSpec, plot_garbage, plot_scaling,
                    plot_timeline)


def _parse_window(text: str) -> tuple[float, float]:
    try:
        a, b = text.split(":")
        return float(a), float(b)
    except ValueError:
        raise SystemExit(f"invalid --window (want a:b seconds): {text!r}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="smr-report")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("timeline", help="per-thread interval chart")
    p.add_argument("--in", dest="input", required=True, metavar="DIR")
    p.add_argument("--out", required=True, metavar="IMG")
    p.add_argument("--threads-shown", type=int, default=DEFAULT_THREADS_SHOWN)
    p.add_argument("--threshold-ms", type=float, default=DEFAULT_THRESHOLD_MS)
    p.add_argument("--window", default=None, metavar="A:B")

    p = sub.add_parser("scaling", help="throughput vs threads chart")
    p.add_argument("--in", dest="input", required=True, metavar="CSV")
    p.add_argument("--out", required=True, metavar="IMG")
    p.add_argument("--hw-line", type=int, default=None,
                   help="vertical marker at a hardware-thread count")

    p = sub.add_parser("garbage", help="garbage-per-epoch chart")
    p.add_argument("--in", dest="input", required=True,
                   metavar="DIR[,DIR...]")
    p.add_argument("--out", required=True, metavar="IMG")

    args = parser.parse_args(argv)
    if args.command == "timeline":
        window = _parse_window(args.window) if args.window else None
        manifest = plot_timeline(TimelinePlotSpec(
            input_dir=args.input, out_path=args.out,
            max_threads=args.threads_shown, window=window,
            threshold_ms=args.threshold_ms))
        print(f"wrote {args.out}: {manifest['total_boxes']} boxes, "
              f"{manifest['dots']} epoch dots")
    elif args.command == "scaling":
        manifest = plot_scaling(args.input, args.out, hw_line=args.hw_line)
        print(f"wrote {args.out}: {manifest['chart']} chart, "
              f"{len(manifest['series'])} series")
    else:
        manifest = plot_garbage(args.input.split(","), args.out)
        print(f"wrote {args.out}: {len(manifest['series'])} series")
    return 0


if __name__ == "__main__":
    sys.exit(main())
