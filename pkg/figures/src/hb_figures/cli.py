"""Batch figure renderer: one image from one or more experiment CSVs."""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .figures import KINDS, FigureError, FigureSpec, render


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="hbfig", description="render result figures from experiment CSVs"
    )
    parser.add_argument(
        "--in", dest="inputs", nargs="+", required=True,
        help="input CSV path(s); each becomes one panel",
    )
    parser.add_argument("--kind", choices=KINDS, required=True)
    parser.add_argument("--out", required=True, help="output image path")
    args = parser.parse_args(argv)
    try:
        render(FigureSpec(tuple(args.inputs), args.kind, args.out))
    except (FigureError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
