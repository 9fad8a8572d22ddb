"""Command-line entry point: render one figure from a result CSV."""

from __future__ import annotations

import argparse
import sys

from .figures import FIGURE_KINDS, PlotJob, render
from .schema import SchemaError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plot",
        description="Render a figure from a simulation result CSV.")
    parser.add_argument("--in", dest="input", required=True,
                        help="input CSV (schema of the simulate command)")
    parser.add_argument("--kind", required=True, choices=FIGURE_KINDS)
    parser.add_argument("--out", required=True,
                        help="output image path (.png or .svg)")
    parser.add_argument("--observable", default=None,
                        help="restrict to one observable column value")
    parser.add_argument("--cut", default="any",
                        help='bipartition cut filter: "any", "none", or an int')
    parser.add_argument("--z", type=float, default=1.0,
                        help="dynamical exponent for collapse kinds")
    parser.add_argument("--guide", type=float, default=None,
                        help="slope of a dotted guide line (nats per log unit; "
                             "decay rate per tau for collapse_semilog)")
    parser.add_argument("--s-inf", type=float, default=None,
                        help="override the plateau value for collapse kinds")
    parser.add_argument("--title", default=None)
    return parser


def _parse_cut(text: str):
    if text == "any":
        return "any"
    if text == "none":
        return None
    return int(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    params = {"z": args.z}
    if args.observable is not None:
        params["observable"] = args.observable
    if args.guide is not None:
        params["guide"] = args.guide
    if args.s_inf is not None:
        params["s_inf"] = args.s_inf
    if args.title is not None:
        params["title"] = args.title
    try:
        params["cut"] = _parse_cut(args.cut)
        job = PlotJob(input_csv=args.input, figure_kind=args.kind,
                      output=args.out, params=params)
        render(job)
    except (SchemaError, ValueError, OSError) as exc:
        print(f"plot: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
