"""plotviz command line: render <figure-kind> <csv...> -o <image>."""
from __future__ import annotations

import argparse
import sys

from .render import FIGURE_KINDS, FigureSpec, RenderError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plotviz",
        description="Render qkicks CSV artifacts (with their .meta.json sidecars) to images.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render one figure from CSV inputs")
    p.add_argument("kind", choices=FIGURE_KINDS)
    p.add_argument("csv", nargs="+", help="input CSV files (sidecars found by basename)")
    p.add_argument("-o", "--output", required=True, help="output image path")
    p.add_argument("--dpi", type=int, default=150)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        path = render(FigureSpec(kind=args.kind, csv_paths=args.csv,
                                 output_path=args.output, dpi=args.dpi))
    except RenderError as exc:
        print(f"plotviz render: {exc}", file=sys.stderr)
        return 2
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
