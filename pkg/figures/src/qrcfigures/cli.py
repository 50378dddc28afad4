"""qrc-plot: render benchmark figures from CSV run directories."""

from __future__ import annotations

import argparse
import sys

from .loading import ManifestError, SchemaError
from .render import FIGURES, render


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(
        prog="qrc-plot",
        description="Render a benchmark figure from qrcbench run directories.",
    )
    parser.add_argument("figure_id", choices=sorted(FIGURES), metavar="figure-id",
                        help="which figure to render: " + ", ".join(sorted(FIGURES)))
    parser.add_argument("--in", dest="run_dirs", action="append", required=True,
                        metavar="DIR", help="run directory with manifest.json; repeatable")
    parser.add_argument("--out", dest="out_dir", required=True, metavar="DIR",
                        help="directory for the SVG/PNG outputs")
    args = parser.parse_args(argv)
    try:
        paths = render(args.figure_id, args.run_dirs, args.out_dir)
    except (ManifestError, SchemaError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        sys.exit(1)
    for path in paths:
        print(path)


if __name__ == "__main__":
    main()
