"""Command-line entry point: ``plot --in <csv> --kind <k> --out <img>``."""

import argparse
import sys

from .reader import SchemaError
from .render import KINDS, PlotSpec, render

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_RUNTIME = 3


def build_parser():
    p = argparse.ArgumentParser(
        prog="plot",
        description="Render simulator result CSVs as static figures.")
    p.add_argument("--in", dest="source", required=True, help="input result CSV")
    p.add_argument("--kind", required=True, choices=KINDS)
    p.add_argument("--out", required=True, help="output image path (png/pdf/svg)")
    p.add_argument("--title", default="")
    p.add_argument("--xlabel", default="")
    p.add_argument("--ylabel", default="")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        spec = PlotSpec(source=args.source, kind=args.kind, out=args.out,
                        title=args.title, xlabel=args.xlabel, ylabel=args.ylabel)
    except ValueError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        render(spec)
    except (SchemaError, FileNotFoundError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"{args.kind}: {args.source} -> {args.out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
