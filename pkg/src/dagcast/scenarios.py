"""Scenario files: a network plus interference model and optional tree list.

Scenarios are JSON documents; a few built-in instances used across the
test-bench are constructible by name (``builtin:<name>`` in the CLI).
"""

from dataclasses import dataclass, replace
from fractions import Fraction
import itertools
import json

from .interference import MODELS, ActivationSet, build_activation_set
from .netmodel import (
    Arborescence,
    CyclicGraph,
    Network,
    SizeLimit,
    SourceHasInEdges,
    enumerate_arborescences,
    is_arborescence,
    network,
    validate_dag,
)


class UnknownScenario(Exception):
    pass


class ParseError(Exception):
    pass


class ValidationError(Exception):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


BUILTIN_NAMES = ("k4_unit", "fig5", "dag10", "cycle4")


@dataclass(frozen=True)
class Scenario:
    name: str
    net: Network
    model: str
    explicit_activations: tuple = None  # tuples of edge indexes
    trees: tuple = None  # Arborescence objects
    mode: str = "dag"

    def activation_set(self, cap=None):
        vectors = None
        if self.model == "explicit":
            E = len(self.net.edges)
            vectors = []
            for idxs in self.explicit_activations:
                bits = [0] * E
                for k in idxs:
                    bits[k] = 1
                vectors.append(tuple(bits))
        kwargs = {} if cap is None else {"cap": cap}
        return build_activation_set(self.net, self.model, vectors=vectors, **kwargs)


def builtin(name):
    """Construct a built-in scenario by name."""
    if name == "k4_unit":
        net = network(
            ("r", "a", "b", "c"),
            [(0, 1, 1), (0, 2, 1), (0, 3, 1), (1, 2, 1), (1, 3, 1), (2, 3, 1)],
        )
        return Scenario(name=name, net=net, model="primary")
    if name == "fig5":
        net = network(
            ("r", "a", "b", "c"),
            [(0, 1, 3), (0, 2, 1), (0, 3, 1), (1, 2, 2), (1, 3, 1), (2, 3, 1)],
        )
        # the three canonical trees: capacities 3/4 alone, 6/7 for the first
        # two, 1 with all three
        trees = (
            Arborescence(edge_indexes=(0, 1, 4)),
            Arborescence(edge_indexes=(0, 3, 5)),
            Arborescence(edge_indexes=(0, 2, 3)),
        )
        return Scenario(name=name, net=net, model="primary", trees=trees)
    if name == "dag10":
        names = tuple(str(i) for i in range(1, 11))
        edges = []
        for i in range(1, 11):
            for j in range(i + 1, 11):
                edges.append((i - 1, j - 1, 10 - i))
        return Scenario(name=name, net=network(names, edges), model="primary")
    if name == "cycle4":
        net = network(
            ("r", "a", "b", "c"),
            [(0, 1, 1), (0, 2, 1), (0, 3, 1), (1, 2, 1), (2, 3, 1), (3, 1, 1)],
        )
        return Scenario(name=name, net=net, model="none", mode="general")
    raise UnknownScenario("no built-in scenario named %r" % (name,))


def _parse_capacity(raw, where, problems):
    if isinstance(raw, bool):
        problems.append("%s: capacity must be an integer or 'num/den' string" % where)
        return Fraction(0)
    if isinstance(raw, int):
        cap = Fraction(raw)
    elif isinstance(raw, str):
        try:
            cap = Fraction(raw)
        except (ValueError, ZeroDivisionError):
            problems.append("%s: cannot parse capacity %r" % (where, raw))
            return Fraction(0)
    else:
        problems.append("%s: capacity must be an integer or 'num/den' string" % where)
        return Fraction(0)
    if cap < 0:
        problems.append("%s: negative capacity" % where)
        return Fraction(0)
    return cap


def scenario_from_dict(doc, name="scenario"):
    """Build and validate a Scenario from a parsed JSON document."""
    problems = []
    nodes = doc.get("nodes")
    if not isinstance(nodes, list) or not nodes or not all(isinstance(x, str) for x in nodes):
        raise ValidationError(["'nodes' must be a nonempty list of names"])
    if len(set(nodes)) != len(nodes):
        raise ValidationError(["duplicate node names"])
    source_name = doc.get("source")
    if source_name not in nodes:
        raise ValidationError(["'source' %r is not a listed node" % (source_name,)])
    idx = {nm: i for i, nm in enumerate(nodes)}

    raw_edges = doc.get("edges")
    if not isinstance(raw_edges, list):
        raise ValidationError(["'edges' must be a list"])
    triples = []
    for pos, e in enumerate(raw_edges):
        where = "edges[%d]" % pos
        if not isinstance(e, dict):
            problems.append("%s: not an object" % where)
            continue
        frm, to = e.get("from"), e.get("to")
        if frm not in idx:
            problems.append("%s: unknown node %r" % (where, frm))
            continue
        if to not in idx:
            problems.append("%s: unknown node %r" % (where, to))
            continue
        if frm == to:
            problems.append("%s: self-loop at %r" % (where, frm))
            continue
        cap = _parse_capacity(e.get("capacity"), where, problems)
        triples.append((idx[frm], idx[to], cap))
    if problems:
        raise ValidationError(problems)

    interference = doc.get("interference") or {}
    model = interference.get("model")
    if model not in MODELS:
        raise ValidationError(["interference.model must be one of %s" % (MODELS,)])
    explicit = None
    if model == "explicit":
        raw_acts = interference.get("activations")
        if not isinstance(raw_acts, list):
            raise ValidationError(["explicit interference needs an 'activations' list"])
        explicit = []
        for pos, act in enumerate(raw_acts):
            if not isinstance(act, list) or not all(
                isinstance(k, int) and 0 <= k < len(triples) for k in act
            ):
                problems.append(
                    "activations[%d]: must be a list of edge indexes below %d"
                    % (pos, len(triples))
                )
            else:
                explicit.append(tuple(sorted(set(act))))
        explicit = tuple(explicit)

    mode = doc.get("mode", "dag")
    if mode not in ("dag", "general"):
        raise ValidationError(["mode must be 'dag' or 'general'"])

    try:
        net = network(nodes, triples, source=idx[source_name])
    except ValueError as exc:
        raise ValidationError([str(exc)]) from exc

    if mode == "dag":
        try:
            validate_dag(net)
        except CyclicGraph as exc:
            problems.append(
                "graph has a directed cycle (%s); declare mode 'general' if intended"
                % "->".join(str(v) for v in exc.cycle)
            )
        except SourceHasInEdges:
            problems.append("source has incoming edges")

    trees = None
    raw_trees = doc.get("trees")
    if raw_trees is not None:
        if not isinstance(raw_trees, list):
            raise ValidationError(["'trees' must be a list of edge index lists"])
        trees = []
        for pos, t in enumerate(raw_trees):
            if not isinstance(t, list) or not all(
                isinstance(k, int) and 0 <= k < len(triples) for k in t
            ):
                problems.append("trees[%d]: must be a list of edge indexes" % pos)
                continue
            if not is_arborescence(net, t):
                problems.append("trees[%d]: not a spanning arborescence" % pos)
                continue
            trees.append(Arborescence(edge_indexes=tuple(sorted(t))))
        trees = tuple(trees)

    if problems:
        raise ValidationError(problems)
    return Scenario(
        name=name,
        net=net,
        model=model,
        explicit_activations=explicit,
        trees=trees,
        mode=mode,
    )


def load_scenario(path):
    with open(path) as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError("line %d column %d: %s" % (exc.lineno, exc.colno, exc.msg)) from exc
    if not isinstance(doc, dict):
        raise ParseError("top-level JSON value must be an object")
    return scenario_from_dict(doc, name=str(path))


def scenario_to_dict(sc):
    net = sc.net
    doc = {
        "nodes": list(net.names),
        "source": net.names[net.source],
        "edges": [
            {
                "from": net.names[e.tail],
                "to": net.names[e.head],
                "capacity": (
                    int(e.capacity)
                    if e.capacity.denominator == 1
                    else "%d/%d" % (e.capacity.numerator, e.capacity.denominator)
                ),
            }
            for e in net.edges
        ],
        "interference": {"model": sc.model},
    }
    if sc.model == "explicit":
        doc["interference"]["activations"] = [list(a) for a in sc.explicit_activations]
    if sc.trees is not None:
        doc["trees"] = [list(t.edge_indexes) for t in sc.trees]
    if sc.mode != "dag":
        doc["mode"] = sc.mode
    return doc


def save_scenario(sc, path):
    with open(path, "w") as fh:
        json.dump(scenario_to_dict(sc), fh, indent=2)
        fh.write("\n")


def resolve(ref):
    """Resolve a CLI scenario reference: 'builtin:<name>' or a file path."""
    if ref.startswith("builtin:"):
        return builtin(ref[len("builtin:"):])
    return load_scenario(ref)


# --- tree selection for the simulator -------------------------------------

TREE_ENUM_CAP = 10000
EXHAUSTIVE_TREE_LIMIT = 24


def _greedy_trees(net, k):
    # per tree, each non-source node takes the in-edge with most spare
    # capacity: fewest prior uses, then largest capacity, then lowest index
    use = [0] * len(net.edges)
    trees = []
    for _ in range(k):
        picks = []
        for v in range(net.n):
            if v == net.source:
                continue
            ins = net.in_edges(v)
            if not ins:
                raise ValueError("node %d has no in-edges" % v)
            best = min(ins, key=lambda e: (use[e], -net.edges[e].capacity, e))
            picks.append(best)
        for e in picks:
            use[e] += 1
        trees.append(Arborescence(edge_indexes=tuple(sorted(picks))))
    return trees


def resolve_trees(net, S, scenario_trees, spec):
    """Turn a --trees argument into a concrete tree list.

    'auto' / 'auto:all' takes the scenario's canonical trees when present,
    else enumerates them (bounded).  'auto:<k>' takes the first k canonical
    trees, else the best k-subset by restricted capacity when the tree set
    is small enough to search, else a greedy capacity-based selection.
    A plain path loads a JSON list of edge index lists.
    """
    from .capacity import best_tree_subsets

    if spec in ("auto", "auto:all"):
        if scenario_trees:
            return list(scenario_trees)
        trees, count = enumerate_arborescences(net, limit=TREE_ENUM_CAP)
        if count > TREE_ENUM_CAP:
            raise SizeLimit(
                "%d arborescences; pass an explicit tree file or auto:<k>" % count
            )
        return list(trees)
    if spec.startswith("auto:"):
        k = int(spec[len("auto:"):])
        if k < 1:
            raise ValueError("tree count must be positive")
        if scenario_trees and len(scenario_trees) >= k:
            return list(scenario_trees[:k])
        trees, count = enumerate_arborescences(net, limit=TREE_ENUM_CAP)
        if count <= EXHAUSTIVE_TREE_LIMIT:
            best = best_tree_subsets(net, S, trees, max_size=k)
            lam, combo = best[k]
            return [trees[i] for i in combo]
        return _greedy_trees(net, k)
    with open(spec) as fh:
        raw = json.load(fh)
    trees = []
    for t in raw:
        if not is_arborescence(net, t):
            raise ValidationError(["tree %r is not a spanning arborescence" % (t,)])
        trees.append(Arborescence(edge_indexes=tuple(sorted(t))))
    if not trees:
        raise ValidationError(["tree file lists no trees"])
    return trees
