"""Batch entry points: dagcast-plots figure|table."""

import argparse
import sys

from .figures import plot_delay_vs_lambda
from .sweep import PlotsError
from .tables import render_table


def main(argv=None):
    p = argparse.ArgumentParser(prog="dagcast-plots")
    sub = p.add_subparsers(dest="cmd", required=True)

    fig = sub.add_parser("figure", description="Delay vs rate, log-y, one curve per config")
    fig.add_argument("sweep_csv")
    fig.add_argument("out", help="output image (png/svg)")
    fig.add_argument(
        "--capacity",
        action="append",
        default=[],
        metavar="CONFIG=RATE",
        help="asymptote marker, repeatable (e.g. pitree:1=0.75)",
    )
    fig.add_argument("--title", default=None)

    tab = sub.add_parser("table", description="Markdown delay table, rates x configs")
    tab.add_argument("sweep_csv")
    tab.add_argument("out", help="output markdown file")

    args = p.parse_args(argv)
    try:
        if args.cmd == "figure":
            caps = {}
            for spec in args.capacity:
                config, _, rate = spec.partition("=")
                if not rate:
                    raise PlotsError(f"--capacity needs CONFIG=RATE, got {spec!r}")
                caps[config] = float(rate)
            plot_delay_vs_lambda(args.sweep_csv, args.out, capacities=caps, title=args.title)
        else:
            render_table(args.sweep_csv, args.out)
    except (PlotsError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
