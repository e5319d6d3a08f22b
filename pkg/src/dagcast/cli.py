"""Command line front end: capacity, trees, simulate, sweep.

Errors leave on stderr as a one-object JSON document with a nonzero exit
code; normal output is JSON on stdout or the requested files.  Relative
output paths resolve under DAGCAST_OUT_DIR when that variable is set.
"""

import argparse
import csv
import json
import os
import sys
from fractions import Fraction

from . import scenarios
from .capacity import best_tree_subsets, compute_capacity, frac_str
from .netmodel import Arborescence, CyclicGraph, _general_arborescences, enumerate_arborescences
from .policies import PistarPolicy, TreePolicy, pirand_build
from .simengine import ARRIVAL_KINDS, packets_to_csv, run, trace_to_csv

OUT_DIR_ENV = "DAGCAST_OUT_DIR"

SWEEP_COLUMNS = (
    "policy", "trees", "lambda", "seed",
    "min_rate", "avg_delay", "delivered", "deadlock",
)


def _emit_error(type_name, message, **extra):
    doc = {"error": {"type": type_name, "message": message}}
    doc["error"].update(extra)
    sys.stderr.write(json.dumps(doc) + "\n")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _emit_error("UsageError", message)
        raise SystemExit(2)


def _resolve_out(path):
    if path is None or path == "-" or os.path.isabs(path):
        return path
    base = os.environ.get(OUT_DIR_ENV)
    if not base:
        return path
    os.makedirs(base, exist_ok=True)
    return os.path.join(base, path)


def _parse_rate(text):
    if "/" in text:
        return Fraction(text)
    return float(text)


def _exact(x):
    return x if isinstance(x, Fraction) else Fraction(str(x))


def _load(ref):
    sc = scenarios.resolve(ref)
    return sc, sc.activation_set()


def _build_policy(args, sc, S, lam):
    if args.policy == "pistar":
        return PistarPolicy(sc.net, S)
    if args.policy == "pitree":
        trees = scenarios.resolve_trees(sc.net, S, sc.trees, args.trees)
        return TreePolicy(sc.net, S, trees)
    report = compute_capacity(sc.net, S, method=args.method)
    return pirand_build(sc.net, S, report, _exact(lam), _exact(args.eps))


def _write_json(doc, path):
    text = json.dumps(doc, indent=2)
    if path == "-" or path is None:
        print(text)
    else:
        with open(path, "w") as fh:
            fh.write(text + "\n")


def cmd_capacity(args):
    sc, S = _load(args.scenario)
    report = compute_capacity(sc.net, S, method=args.method)
    print(json.dumps(report.to_json_dict(sc.net), indent=2))
    return 0


def cmd_trees(args):
    sc, S = _load(args.scenario)
    try:
        trees, count = enumerate_arborescences(sc.net, limit=scenarios.TREE_ENUM_CAP)
    except CyclicGraph:
        packed = _general_arborescences(sc.net)
        trees = [Arborescence(edge_indexes=tuple(sorted(fs))) for fs in packed]
        trees.sort(key=lambda t: t.edge_indexes)
        count = len(trees)
    if args.count_only:
        print(count)
        return 0
    out = {"count": count}
    if args.subset_max:
        best = best_tree_subsets(sc.net, S, trees, args.subset_max)
        out["best_subsets"] = {
            str(k): {
                "lambda": frac_str(lam),
                "trees": [list(trees[i].edge_indexes) for i in combo],
            }
            for k, (lam, combo) in best.items()
        }
    print(json.dumps(out, indent=2))
    return 0


def cmd_simulate(args):
    sc, S = _load(args.scenario)
    lam = _parse_rate(args.lam)
    policy = _build_policy(args, sc, S, lam)
    want_trace = args.trace is not None
    metrics, trace = run(
        sc.net, S, policy, lam, args.slots, args.seed,
        arrival_kind=args.arrivals, trace=want_trace, backend=args.backend,
    )
    if want_trace:
        trace_to_csv(trace, _resolve_out(args.trace))
    _write_json(metrics.to_json_dict(), _resolve_out(args.out))
    packets_path = _resolve_out(args.packets)
    if packets_path == "-":
        packets_to_csv(metrics, sys.stdout)
    else:
        packets_to_csv(metrics, packets_path)
    return 0


def cmd_sweep(args):
    sc, S = _load(args.scenario)
    lambdas = [_parse_rate(part) for part in args.lambdas.split(",") if part.strip()]
    if not lambdas:
        raise ValueError("no lambda values given")
    if args.seeds < 1:
        raise ValueError("--seeds must be at least 1")
    path = _resolve_out(args.out)
    fresh = not (args.append and os.path.exists(path) and os.path.getsize(path) > 0)
    mode = "a" if args.append else "w"
    shared_policy = None
    if args.policy in ("pistar", "pitree"):
        shared_policy = _build_policy(args, sc, S, lambdas[0])
    with open(path, mode, newline="") as fh:
        writer = csv.writer(fh)
        if fresh:
            writer.writerow(SWEEP_COLUMNS)
        for lam in lambdas:
            policy = shared_policy or _build_policy(args, sc, S, lam)
            for i in range(args.seeds):
                seed = args.seed + i
                metrics, _ = run(
                    sc.net, S, policy, lam, args.slots, seed,
                    arrival_kind=args.arrivals, backend=args.backend,
                )
                writer.writerow([
                    metrics.policy,
                    metrics.n_trees if metrics.n_trees is not None else "",
                    repr(float(lam)),
                    seed,
                    repr(metrics.min_rate),
                    "" if metrics.avg_delay is None else repr(metrics.avg_delay),
                    metrics.delivered,
                    int(metrics.deadlock),
                ])
                fh.flush()
    return 0


def build_parser():
    p = _Parser(prog="dagcast", description="Broadcast scheduling on wireless DAGs")
    sub = p.add_subparsers(dest="command", required=True)

    cap = sub.add_parser("capacity", description="Broadcast capacity report")
    cap.add_argument("scenario")
    cap.add_argument("--method", choices=("node-cuts", "all-cuts"), default="node-cuts")
    cap.set_defaults(func=cmd_capacity)

    tr = sub.add_parser("trees", description="Spanning tree counts and best subsets")
    tr.add_argument("scenario")
    tr.add_argument("--count-only", action="store_true")
    tr.add_argument("--subset-max", type=int, default=0, metavar="K")
    tr.set_defaults(func=cmd_trees)

    def sim_common(q):
        q.add_argument("scenario")
        q.add_argument("--policy", choices=("pistar", "pitree", "pirand"), required=True)
        q.add_argument("--slots", type=int, default=100000)
        q.add_argument("--seed", type=int, required=True)
        q.add_argument("--trees", default="auto",
                       help="tree spec for pitree: auto, auto:K, or a JSON file")
        q.add_argument("--arrivals", choices=ARRIVAL_KINDS, default="poisson")
        q.add_argument("--eps", default="0.05", help="thinning slack for pirand")
        q.add_argument("--method", choices=("node-cuts", "all-cuts"),
                       default="node-cuts", help="cut family for pirand's mixture")
        q.add_argument("--backend", choices=("numba", "numpy"), default=None)

    sim = sub.add_parser("simulate", description="Single seeded run")
    sim_common(sim)
    sim.add_argument("--lambda", dest="lam", required=True, metavar="RATE")
    sim.add_argument("--trace", default=None, metavar="CSV")
    sim.add_argument("--out", required=True, metavar="JSON", help="metrics ('-' = stdout)")
    sim.add_argument("--packets", required=True, metavar="CSV", help="per-packet table ('-' = stdout)")
    sim.set_defaults(func=cmd_simulate)

    sw = sub.add_parser("sweep", description="Grid of runs, one CSV row each")
    sim_common(sw)
    sw.add_argument("--lambdas", required=True, help="comma-separated rates")
    sw.add_argument("--seeds", type=int, default=1, help="runs per rate, seeds seed..seed+n-1")
    sw.add_argument("--out", default="sweep.csv", metavar="CSV")
    sw.add_argument("--append", action="store_true")
    sw.set_defaults(func=cmd_sweep)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit:
        raise
    except scenarios.ValidationError as exc:
        _emit_error(type(exc).__name__, str(exc), problems=list(exc.problems))
        return 1
    except Exception as exc:  # noqa: BLE001 - contract: JSON on stderr, nonzero exit
        _emit_error(type(exc).__name__, str(exc))
        return 1


if __name__ == "__main__":
    sys.exit(main())
