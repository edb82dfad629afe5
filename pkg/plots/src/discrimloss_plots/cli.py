"""Command line for rendering run-telemetry figures.

Exit code 0 on success; schema or range problems print a one-line JSON error
to stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import json
import sys

from .figures import KINDS, FigureSpec, render


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="discrimloss-plot",
        description="render figures from discrimloss metrics.csv / samples.csv telemetry",
    )
    parser.add_argument("--kind", required=True, choices=KINDS)
    parser.add_argument("--in", dest="input_dir", required=True,
                        help="run directory containing metrics.csv / samples.csv")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--epoch", type=int, help="epoch for the loss histogram (default: last)")
    parser.add_argument("--bins", type=int, default=30, help="histogram bin count")
    parser.add_argument("--ids", help="comma-separated sample ids for trajectories")
    parser.add_argument("--t-fluc", type=float, default=2.0,
                        help="fluctuation threshold on adjacent-epoch jumps")
    parser.add_argument("--column", choices=("weight", "delta"), default="weight",
                        help="importance column for trajectories and fluctuations")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        spec = FigureSpec(
            kind=args.kind,
            input_dir=args.input_dir,
            output=args.out,
            epoch=args.epoch,
            bins=args.bins,
            sample_ids=tuple(int(v) for v in args.ids.split(",")) if args.ids else None,
            t_fluc=args.t_fluc,
            column=args.column,
        )
        info = render(spec)
        print(json.dumps({"out": args.out, "kind": args.kind,
                          "detail": {k: str(v) for k, v in info.items()}}))
        return 0
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
