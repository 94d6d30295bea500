"""`plot` command line tool.

  plot heatmap joint_pdf.csv [more.csv ...] -o out.png
  plot curve training_log.csv -o out.png
"""
from __future__ import annotations

import argparse
import sys

from .data import PlotDataError
from .render import render_heatmap, render_training_curve


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="plot")
    sub = parser.add_subparsers(dest="command", required=True)

    p_heat = sub.add_parser("heatmap", help="joint BLER/latency PDF heatmap")
    p_heat.add_argument("csvs", nargs="+", help="joint_pdf.csv files")
    p_heat.add_argument("-o", "--out", required=True, help="output image")
    p_heat.add_argument("--title", action="append", help="panel title (repeatable)")

    p_curve = sub.add_parser("curve", help="training revenue curve")
    p_curve.add_argument("csv", help="training_log.csv")
    p_curve.add_argument("-o", "--out", required=True, help="output image")
    p_curve.add_argument("--window", type=int, default=100,
                         help="moving-average window in cycles")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "heatmap":
            render_heatmap(args.csvs, args.out, titles=args.title)
        else:
            render_training_curve(args.csv, args.out, window=args.window)
    except (PlotDataError, OSError, ValueError) as exc:
        print(f"plot: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
