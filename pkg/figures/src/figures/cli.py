"""`figures render <spec.json>` command-line entry point."""

from __future__ import annotations

import argparse
import sys

from .render import FigureSpec, RenderError, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="figures", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render one figure from a JSON spec")
    p.add_argument("spec", help="figure spec JSON file")
    args = parser.parse_args(argv)
    try:
        out = render(FigureSpec.from_json_file(args.spec))
    except RenderError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
