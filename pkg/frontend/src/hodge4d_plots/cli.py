"""Tiny batch CLI: hodge4d-plots <loglog|slice> INPUT OUTPUT [--kind ...]."""

from __future__ import annotations

import argparse
import sys

from .plots import plot_convergence, plot_slice


def main(argv=None):
    ap = argparse.ArgumentParser(prog="hodge4d-plots")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("loglog", help="convergence study figure from a CSV")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--window", help="fit window rows, e.g. 1:4")

    p = sub.add_parser("slice", help="heatmap/quiver figure from a VTK slice")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--kind", default="both", choices=("heatmap", "quiver", "both"))

    args = ap.parse_args(argv)
    try:
        if args.command == "loglog":
            window = None
            if args.window:
                a, _, b = args.window.partition(":")
                window = (int(a), int(b))
            slope = plot_convergence(args.input, args.output, window=window)
            print(f"slope = {slope:.6f}")
        else:
            plot_slice(args.input, args.output, kind=args.kind)
            print(args.output)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
