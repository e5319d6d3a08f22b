"""Per-slot scheduling policies over the shared-state broadcast model.

Every node j tracks R_j, the count of packets it holds (a prefix of the
packet sequence: in-order reception).  The deficit of link (i,j) is
Q_ij = R_i - R_j; X_j is the smallest in-link deficit of j.  The max-weight
policy activates the feasible set maximizing capacity-scaled link weights
derived from the deficits; the tree policy runs FIFO backlogs over fixed
arborescences; the randomized policy samples an activation mixture and
thins each node's in-links to hit per-node service-rate targets.

This module is the reference (single-slot, pure Python) implementation;
the simulation engine runs the same logic in compiled kernels.
"""

from dataclasses import dataclass, field
from fractions import Fraction
import warnings

from .interference import max_weight_activation
from .netmodel import CyclicGraph, is_arborescence, validate_dag


class RateTooHigh(Exception):
    pass


@dataclass(frozen=True)
class SystemState:
    R: tuple  # per-node received-packet counts
    t: int = 0


def initial_state(net):
    return SystemState(R=(0,) * net.n, t=0)


@dataclass(frozen=True)
class DeficitView:
    Q: tuple  # per-edge deficit R_tail - R_head
    X: tuple  # per-node minimum in-link deficit (0 for the source)
    istar: tuple  # per-node minimizing in-neighbor (-1 where undefined)
    K: tuple  # per-node tuple of nodes for which it is the minimizer
    W: tuple  # per-edge weight (X_head - sum of X over K_head)+


def _int_caps(net):
    caps = []
    for e in net.edges:
        if e.capacity.denominator != 1:
            raise ValueError("slot-level policies need integer capacities")
        caps.append(int(e.capacity))
    return caps


def compute_deficits(net, state):
    """Deficits, per-node minima with tie-broken minimizers, and link weights.

    Ties in the minimum are broken toward the in-neighbor with the smallest
    node index, then the smallest edge index among parallel edges.
    """
    R = state.R
    E = len(net.edges)
    Q = tuple(R[e.tail] - R[e.head] for e in net.edges)
    X = [0] * net.n
    istar = [-1] * net.n
    for j in range(net.n):
        if j == net.source:
            continue
        best = None
        for k in sorted(net.in_edges(j), key=lambda k: (net.edges[k].tail, k)):
            q = Q[k]
            if best is None or q < best:
                best = q
                istar[j] = net.edges[k].tail
        if best is not None:
            X[j] = best
    K = [[] for _ in range(net.n)]
    for j in range(net.n):
        if j != net.source and istar[j] >= 0:
            K[istar[j]].append(j)
    W = []
    for e in net.edges:
        j = e.head
        if j == net.source:
            W.append(0)
            continue
        w = X[j] - sum(X[k] for k in K[j])
        W.append(max(w, 0))
    return DeficitView(
        Q=Q,
        X=tuple(X),
        istar=tuple(istar),
        K=tuple(tuple(k) for k in K),
        W=tuple(W),
    )


@dataclass(frozen=True)
class PolicyDecision:
    activation: tuple  # bits per edge
    pulls: tuple  # per-node packets received this slot
    edge_flows: tuple  # per-edge packets carried this slot
    value: object = None  # activation score, when applicable


def _apply_activation(net, caps, R, X, bits):
    """Packets pulled per node and their split over activated in-edges.

    A node pulls min(X_j, activated in-capacity) packets, filled over its
    activated in-edges in increasing edge index order.
    """
    pulls = [0] * net.n
    flows = [0] * len(net.edges)
    for j in range(net.n):
        if j == net.source:
            continue
        insum = sum(caps[k] for k in net.in_edges(j) if bits[k])
        take = min(X[j], insum)
        if take < 0:
            take = 0
        pulls[j] = take
        rem = take
        for k in net.in_edges(j):
            if bits[k] and rem > 0:
                f = min(caps[k], rem)
                flows[k] = f
                rem -= f
    return pulls, flows


def pistar_decide(net, S, state):
    """One slot of the max-weight deficit policy."""
    caps = _int_caps(net)
    view = compute_deficits(net, state)
    weights = [caps[k] * view.W[k] for k in range(len(net.edges))]
    act, value = max_weight_activation(S, weights)
    bits = tuple(act.bits)
    pulls, flows = _apply_activation(net, caps, state.R, view.X, bits)
    return PolicyDecision(
        activation=bits, pulls=tuple(pulls), edge_flows=tuple(flows), value=value
    )


def pistar_update(net, state, decision, arrivals):
    """Apply a decision and the end-of-slot arrivals at the source."""
    R = list(state.R)
    for j in range(net.n):
        R[j] += decision.pulls[j]
    R[net.source] += int(arrivals)
    return SystemState(R=tuple(R), t=state.t + 1)


def decision_ranges(net, state, decision):
    """Per-node packet intervals pulled over each activated in-edge.

    Returns {node: [(edge_index, first_packet, last_packet)]} with 1-based
    inclusive packet ids; nodes that pull nothing are omitted.
    """
    out = {}
    for j in range(net.n):
        if decision.pulls[j] <= 0:
            continue
        start = state.R[j]
        spans = []
        for k in net.in_edges(j):
            f = decision.edge_flows[k]
            if f > 0:
                spans.append((k, start + 1, start + f))
                start += f
        out[j] = spans
    return out


class PistarPolicy:
    """Stateless decide/update wrapper for the max-weight deficit policy."""

    name = "pistar"

    def __init__(self, net, S):
        self.net = net
        self.S = S
        try:
            validate_dag(net)
        except CyclicGraph:
            warnings.warn(
                "max-weight deficit policy on a cyclic graph: deficits may "
                "deadlock at zero",
                stacklevel=2,
            )

    def decide(self, state):
        return pistar_decide(self.net, self.S, state)

    def update(self, state, decision, arrivals):
        return pistar_update(self.net, state, decision, arrivals)


# --- tree-restricted baseline ---------------------------------------------


@dataclass
class TreeState:
    """FIFO backlogs per (tree, edge) plus the packet-to-tree assignment."""

    queues: list  # queues[k][edge] -> list of packet ids, FIFO
    R: list  # per-node delivered counts (source counts arrivals)
    t: int = 0

    def total_backlog(self, k):
        return sum(len(q) for q in self.queues[k].values())


def tree_initial_state(net, trees):
    queues = [{e: [] for e in t.edge_indexes} for t in trees]
    return TreeState(queues=queues, R=[0] * net.n, t=0)


def _tree_children(net, tree, e):
    head = net.edges[e].head
    return [f for f in tree.edge_indexes if net.edges[f].tail == head]


def _tree_diffs(net, trees, tree_state):
    # per (tree, edge): queue length minus total child-queue length
    diffs = []
    for k, tree in enumerate(trees):
        d = {}
        for e in tree.edge_indexes:
            backlog = len(tree_state.queues[k][e])
            child = sum(len(tree_state.queues[k][f]) for f in _tree_children(net, tree, e))
            d[e] = backlog - child
        diffs.append(d)
    return diffs


def pitree_decide(net, S, trees, tree_state):
    """Max-weight activation over per-tree FIFO backlog differentials.

    An edge's weight is its capacity times the largest positive backlog
    differential (queue length minus child-queue lengths) among the trees
    through it; serving any other tree on the edge would shrink the
    backlog potential by less.
    """
    caps = _int_caps(net)
    diffs = _tree_diffs(net, trees, tree_state)
    weights = [0] * len(net.edges)
    for k in range(len(trees)):
        for e, d in diffs[k].items():
            if d > weights[e]:
                weights[e] = d
    weights = [caps[e] * w for e, w in enumerate(weights)]
    act, value = max_weight_activation(S, weights)
    return act.bits, value


def pitree_forward(net, trees, tree_state, bits):
    """Move packets over activated edges, largest-differential tree first.

    Only packets queued at the start of the slot move (store and forward:
    one hop per slot), and only trees whose slot-start differential on the
    edge is positive are served; ties go to the lower tree index.  Returns
    (pulls, flows, deliveries) where deliveries is a list of (node, packet)
    pairs.
    """
    caps = _int_caps(net)
    snapshot = [
        {e: len(q) for e, q in tree_state.queues[k].items()} for k in range(len(trees))
    ]
    diffs = [
        {
            e: snapshot[k][e] - sum(snapshot[k][f] for f in _tree_children(net, trees[k], e))
            for e in trees[k].edge_indexes
        }
        for k in range(len(trees))
    ]
    pulls = [0] * net.n
    flows = [0] * len(net.edges)
    deliveries = []
    for e in range(len(net.edges)):
        if not bits[e]:
            continue
        budget = caps[e]
        head = net.edges[e].head
        order = sorted(
            (k for k in range(len(trees)) if e in tree_state.queues[k] and diffs[k][e] > 0),
            key=lambda k: (-diffs[k][e], k),
        )
        for k in order:
            if budget <= 0:
                break
            take = min(snapshot[k][e], budget)
            for _ in range(take):
                pkt = tree_state.queues[k][e].pop(0)
                deliveries.append((head, pkt))
                for f in _tree_children(net, trees[k], e):
                    tree_state.queues[k][f].append(pkt)
            snapshot[k][e] -= take
            budget -= take
            flows[e] += take
            pulls[head] += take
    for j in range(net.n):
        tree_state.R[j] += pulls[j]
    return tuple(pulls), tuple(flows), deliveries


def pitree_admit(net, trees, tree_state, packet_ids):
    """Assign arriving packets to the tree with the least root-edge backlog.

    The root queues are the ones a new packet joins, so their total is the
    immediate congestion cost of the assignment; whole-tree totals would
    let a congested interior throttle admissions long after its root has
    drained.  Ties go to the lowest tree index, and each admission counts
    toward the next packet's comparison.
    """
    roots = [
        [e for e in t.edge_indexes if net.edges[e].tail == net.source] for t in trees
    ]
    for pkt in packet_ids:
        rq = [sum(len(tree_state.queues[k][e]) for e in roots[k]) for k in range(len(trees))]
        k = min(range(len(trees)), key=lambda i: (rq[i], i))
        for e in roots[k]:
            tree_state.queues[k][e].append(pkt)
    tree_state.R[net.source] += len(packet_ids)
    tree_state.t += 1


class TreePolicy:
    """Fixed-tree FIFO baseline with max-weight activation over backlogs."""

    name = "pitree"

    def __init__(self, net, S, trees):
        for t in trees:
            if not is_arborescence(net, t.edge_indexes):
                raise ValueError("invalid tree %r" % (t.edge_indexes,))
        self.net = net
        self.S = S
        self.trees = list(trees)


# --- randomized thinned policy --------------------------------------------


@dataclass(frozen=True)
class RandPolicy:
    """Sampled activation mixture with per-node in-link thinning.

    Node v_l in the topological labeling keeps each activated in-link
    independently with probability q_l, chosen so its expected activated
    in-capacity is lam + eps*l/n.
    """

    name = "pirand"
    mixture: tuple  # ((bits, Fraction prob), ...)
    q: tuple  # per-node keep probability, exact Fraction
    order: tuple  # topological node labels v_1..v_n
    targets: tuple  # per-node expected in-rate lam + eps*l/n (Fraction)


def pirand_build(net, S, report, lam, eps):
    """Construct the randomized policy from a capacity report.

    lam and eps are exact rationals (strings and ints accepted).  Raises
    RateTooHigh when some node's target rate exceeds its expected activated
    in-capacity under the report's mixture (thinning probability above 1).
    """
    lam = Fraction(lam)
    eps = Fraction(eps)
    if lam < 0 or eps <= 0:
        raise ValueError("need lam >= 0 and eps > 0")
    order = validate_dag(net)
    n = net.n
    q = [Fraction(1)] * n
    targets = [Fraction(0)] * n
    for pos, v in enumerate(order):
        l = pos + 1
        if v == net.source:
            continue
        target = lam + eps * Fraction(l, n)
        targets[v] = target
        incap = sum(
            (net.edges[k].capacity * report.beta[k] for k in net.in_edges(v)),
            Fraction(0),
        )
        if incap <= 0 or target > incap:
            raise RateTooHigh(
                "node %s needs rate %s but its expected activated in-capacity is %s"
                % (net.names[v], target, incap)
            )
        q[v] = target / incap
    return RandPolicy(
        mixture=tuple(report.mixture),
        q=tuple(q),
        order=tuple(order),
        targets=tuple(targets),
    )


def pirand_step(net, S, policy, state, choice, keep):
    """Reference single slot of the randomized policy.

    `choice` indexes the policy mixture; `keep` gives per-edge uniforms for
    the thinning.  Returns a PolicyDecision.
    """
    caps = _int_caps(net)
    bits = list(policy.mixture[choice][0])
    for k in range(len(bits)):
        if bits[k]:
            head = net.edges[k].head
            if head != net.source and not (keep[k] < policy.q[head]):
                bits[k] = 0
    view = compute_deficits(net, state)
    pulls, flows = _apply_activation(net, caps, state.R, view.X, bits)
    return PolicyDecision(activation=tuple(bits), pulls=tuple(pulls), edge_flows=tuple(flows))
