"""Directed network model: nodes, capacitated links, cuts and spanning arborescences.

Nodes are dense integer ids 0..n-1 with display names kept alongside.  A
designated source node originates all traffic.  Capacities are exact
rationals (fractions.Fraction); simulation layers restrict to integers.
"""

from dataclasses import dataclass, field
from fractions import Fraction
import heapq
import itertools


class NetworkError(Exception):
    """Base class for structural errors in a network."""


class CyclicGraph(NetworkError):
    """Raised when a DAG is required but the graph has a directed cycle."""

    def __init__(self, cycle):
        self.cycle = list(cycle)  # node ids, first node repeated at the end
        super().__init__("directed cycle: " + "->".join(str(v) for v in self.cycle))


class SourceHasInEdges(NetworkError):
    pass


class NotConnected(NetworkError):
    """Some node has no in-edges, so no spanning arborescence exists."""


class TooManyNodes(NetworkError):
    pass


class SizeLimit(NetworkError):
    """Instance exceeds a configured enumeration or search limit."""


class NotUnitCapacity(NetworkError):
    pass


class NotDag(NetworkError):
    pass


def _as_capacity(value):
    cap = Fraction(value)
    if cap < 0:
        raise ValueError("capacity must be nonnegative, got %s" % (value,))
    return cap


@dataclass(frozen=True)
class Edge:
    """Directed capacitated link from node `tail` to node `head`."""

    tail: int
    head: int
    capacity: Fraction

    def __post_init__(self):
        object.__setattr__(self, "capacity", _as_capacity(self.capacity))


@dataclass(frozen=True)
class Network:
    """A directed multigraph with a designated source node.

    Parallel edges are allowed.  Self-loops are not.  Edge order is
    significant: edge index is the canonical identity used by activation
    vectors, trees and traces.
    """

    names: tuple
    edges: tuple
    source: int = 0

    def __post_init__(self):
        n = len(self.names)
        if n == 0:
            raise ValueError("network needs at least one node")
        if len(set(self.names)) != n:
            raise ValueError("duplicate node names")
        if not (0 <= self.source < n):
            raise ValueError("source id %d out of range" % self.source)
        for e in self.edges:
            if not (0 <= e.tail < n and 0 <= e.head < n):
                raise ValueError("edge endpoint out of range: %s" % (e,))
            if e.tail == e.head:
                raise ValueError("self-loop at node %d" % e.tail)
        if n > 1 and not self.edges:
            raise ValueError("multi-node network with no edges")

    @property
    def n(self):
        return len(self.names)

    def node_id(self, name):
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError("unknown node name %r" % (name,)) from None

    def in_edges(self, j):
        """Indexes of edges with head j, in increasing edge index order."""
        return [k for k, e in enumerate(self.edges) if e.head == j]

    def out_edges(self, i):
        return [k for k, e in enumerate(self.edges) if e.tail == i]

    def in_degree(self, j):
        return sum(1 for e in self.edges if e.head == j)

    def in_neighbors(self, j):
        return sorted({e.tail for e in self.edges if e.head == j})

    def capacities(self):
        return [e.capacity for e in self.edges]


def network(names, edge_triples, source=0):
    """Convenience constructor from (tail, head, capacity) triples."""
    edges = tuple(Edge(t, h, Fraction(c)) for t, h, c in edge_triples)
    return Network(names=tuple(names), edges=edges, source=source)


@dataclass(frozen=True)
class ProperCut:
    """A node set containing the source but not all nodes.

    `edge_indexes` are the crossing edges: tail inside, head outside.
    """

    members: frozenset
    edge_indexes: tuple

    def names(self, net):
        return [net.names[v] for v in sorted(self.members)]


def _crossing_edges(net, members):
    return tuple(
        k for k, e in enumerate(net.edges) if e.tail in members and e.head not in members
    )


def make_cut(net, members):
    members = frozenset(members)
    if net.source not in members:
        raise ValueError("cut must contain the source")
    if len(members) == net.n:
        raise ValueError("cut must exclude at least one node")
    return ProperCut(members=members, edge_indexes=_crossing_edges(net, members))


def validate_dag(net):
    """Topologically order the network, or raise.

    Returns a list of node ids such that every edge goes from an earlier to
    a later position.  Raises CyclicGraph (with a witness cycle, first node
    repeated at the end) or SourceHasInEdges.  Among valid orders the
    lexicographically smallest by node id is returned, so the result is
    deterministic and the source comes first.
    """
    if net.in_degree(net.source) > 0:
        raise SourceHasInEdges("source node %d has incoming edges" % net.source)
    indeg = [net.in_degree(v) for v in range(net.n)]
    heap = [v for v in range(net.n) if indeg[v] == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        v = heapq.heappop(heap)
        order.append(v)
        for k in net.out_edges(v):
            w = net.edges[k].head
            indeg[w] -= 1
            if indeg[w] == 0:
                heapq.heappush(heap, w)
    if len(order) < net.n:
        raise CyclicGraph(_find_cycle(net))
    return order


def _find_cycle(net):
    # DFS with a gray stack; neighbors visited in edge index order.
    color = [0] * net.n  # 0 white, 1 gray, 2 black
    stack = []

    def visit(v):
        color[v] = 1
        stack.append(v)
        for k in net.out_edges(v):
            w = net.edges[k].head
            if color[w] == 1:
                i = stack.index(w)
                return stack[i:] + [w]
            if color[w] == 0:
                found = visit(w)
                if found:
                    return found
        stack.pop()
        color[v] = 2
        return None

    for v in range(net.n):
        if color[v] == 0:
            found = visit(v)
            if found:
                return found
    raise AssertionError("no cycle found in graph reported cyclic")


def enumerate_proper_cuts(net, limit=20):
    """All node sets containing the source, except the full node set.

    There are 2^(n-1) - 1 of them; refuses networks with more than `limit`
    nodes.  Deterministic order: ascending bitmask over non-source nodes.
    """
    if net.n > limit:
        raise TooManyNodes("cut enumeration limited to %d nodes, got %d" % (limit, net.n))
    others = [v for v in range(net.n) if v != net.source]
    cuts = []
    for mask in range(2 ** len(others) - 1):
        members = frozenset([net.source] + [v for i, v in enumerate(others) if mask >> i & 1])
        cuts.append(ProperCut(members=members, edge_indexes=_crossing_edges(net, members)))
    return cuts


def receiver_cuts(net):
    """The per-receiver cuts V-minus-{v} for each non-source v, by node index.

    The crossing edges of V-minus-{v} are exactly the in-edges of v.
    """
    cuts = []
    for v in range(net.n):
        if v == net.source:
            continue
        members = frozenset(u for u in range(net.n) if u != v)
        cuts.append(ProperCut(members=members, edge_indexes=tuple(net.in_edges(v))))
    return cuts


@dataclass(frozen=True)
class Arborescence:
    """A spanning tree directed away from the source: one in-edge per non-source node."""

    edge_indexes: tuple


def is_arborescence(net, edge_indexes):
    """Check that the given edges form a spanning tree rooted at the source."""
    edge_indexes = list(edge_indexes)
    if len(set(edge_indexes)) != len(edge_indexes):
        return False
    if len(edge_indexes) != net.n - 1:
        return False
    parent = {}
    for k in edge_indexes:
        if not (0 <= k < len(net.edges)):
            return False
        e = net.edges[k]
        if e.head == net.source or e.head in parent:
            return False
        parent[e.head] = e.tail
    # walk each node up to the source; path lengths bounded by n
    for v in parent:
        u, steps = v, 0
        while u != net.source:
            if u not in parent or steps > net.n:
                return False
            u = parent[u]
            steps += 1
    return True


def enumerate_arborescences(net, limit=10000):
    """Enumerate spanning arborescences of a DAG and count them exactly.

    In a DAG whose source is the unique in-degree-0 node, every choice of
    one in-edge per non-source node is an arborescence, so the count is the
    product of in-degrees.  Returns (trees, count) with at most `limit`
    trees materialized, in lexicographic order of their edge index tuples.
    """
    validate_dag(net)
    choices = []
    for v in range(net.n):
        if v == net.source:
            continue
        ins = net.in_edges(v)
        if not ins:
            raise NotConnected("node %d has no in-edges" % v)
        choices.append(ins)
    count = 1
    for ins in choices:
        count *= len(ins)
    trees = []
    for combo in itertools.product(*choices):
        if len(trees) >= limit:
            break
        trees.append(Arborescence(edge_indexes=tuple(sorted(combo))))
    trees.sort(key=lambda t: t.edge_indexes)
    return trees, count


def _general_arborescences(net):
    # All arborescences of a general digraph: pick one in-edge per non-source
    # node, keep the acyclic selections.  Exponential; callers bound the size.
    choices = []
    for v in range(net.n):
        if v == net.source:
            continue
        ins = net.in_edges(v)
        if not ins:
            return []
        choices.append(ins)
    out = []
    for combo in itertools.product(*choices):
        if is_arborescence(net, combo):
            out.append(frozenset(combo))
    return out


def max_disjoint_trees_bruteforce(net, max_nodes=8, max_edges=14):
    """Maximum number of pairwise edge-disjoint spanning arborescences.

    Exhaustive search over arborescence packings; unit capacities required
    (parallel edges allowed).  Works on general directed graphs.  Refuses
    instances beyond max_nodes/max_edges.
    """
    if net.n > max_nodes or len(net.edges) > max_edges:
        raise SizeLimit(
            "brute-force packing limited to %d nodes / %d edges" % (max_nodes, max_edges)
        )
    for e in net.edges:
        if e.capacity != 1:
            raise NotUnitCapacity("brute-force packing needs unit capacities")
    trees = _general_arborescences(net)
    if not trees:
        return 0
    best = 0

    def extend(start, used, depth):
        nonlocal best
        best = max(best, depth)
        remaining = (len(net.edges) - len(used)) // max(net.n - 1, 1)
        if depth + remaining <= best:
            return
        for i in range(start, len(trees)):
            t = trees[i]
            if t & used:
                continue
            extend(i + 1, used | t, depth + 1)

    extend(0, frozenset(), 0)
    return best
