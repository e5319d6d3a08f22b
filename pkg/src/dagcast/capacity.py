"""Broadcast capacity via exact rational LPs over activation mixtures.

The capacity of a network under an activation set S is the best, over
probability mixtures of activations, of the worst proper-cut capacity:

    max_{p in simplex(S)}  min_{cuts U}  sum_{e crossing U} c_e * beta_e,
    beta = sum_l p_l s_l.

`node-cuts` restricts the minimum to the per-receiver cuts V-{v}; on DAGs
this equals the minimum over all proper cuts.  Everything is computed in
exact Fractions; reported values carry no rounding.
"""

from dataclasses import dataclass
from fractions import Fraction
import itertools

from . import exactlp
from .interference import EmptyActivationSet
from .netmodel import (
    CyclicGraph,
    NotDag,
    NotUnitCapacity,
    SizeLimit,
    enumerate_proper_cuts,
    is_arborescence,
    receiver_cuts,
    validate_dag,
)


class InvalidTree(Exception):
    pass


def frac_str(x):
    x = Fraction(x)
    return "%d/%d" % (x.numerator, x.denominator)


def cut_value(net, beta, cut):
    """Capacity crossing a cut under edge activation fractions beta."""
    if len(beta) != len(net.edges):
        raise ValueError("beta length mismatch")
    return sum(
        (net.edges[k].capacity * Fraction(beta[k]) for k in cut.edge_indexes),
        Fraction(0),
    )


@dataclass(frozen=True)
class CapacityReport:
    """Result of a capacity computation: rate, mixture and certificates."""

    lam: Fraction
    mixture: tuple  # ((bits, probability), ...) with probabilities summing to 1
    beta: tuple  # per-edge activation fraction
    binding_cuts: tuple
    method: str
    tree_rates: tuple = None  # per-tree rates for method 'tree-restricted'

    def to_json_dict(self, net):
        return {
            "lambda": frac_str(self.lam),
            "beta": [frac_str(b) for b in self.beta],
            "binding_cuts": [c.names(net) for c in self.binding_cuts],
            "method": self.method,
        }


def _maximal_columns(S):
    """Indexes of activation vectors not strictly contained in another vector.

    Dropping dominated columns never changes the LP optimum: shifting mass
    from a vector to a superset vector only raises every cut value.  For the
    primary model maximality is checked directly against the conflict
    structure; explicit lists fall back to pairwise subset tests when small.
    """
    vecs = S.vectors
    if S.model == "primary":
        endpoints = [(e.tail, e.head) for e in S.net.edges]
        keep = []
        for i, v in enumerate(vecs):
            covered = set()
            for k, b in enumerate(v):
                if b:
                    covered.add(endpoints[k][0])
                    covered.add(endpoints[k][1])
            maximal = True
            for k, (a, bnode) in enumerate(endpoints):
                if not v[k] and a not in covered and bnode not in covered:
                    maximal = False
                    break
            if maximal:
                keep.append(i)
        return keep
    if len(vecs) <= 2000:
        keep = []
        for i, v in enumerate(vecs):
            vset = {k for k, b in enumerate(v) if b}
            dominated = False
            for j, w in enumerate(vecs):
                if i == j:
                    continue
                wset = {k for k, b in enumerate(w) if b}
                if vset < wset:
                    dominated = True
                    break
            if not dominated:
                keep.append(i)
        return keep
    return list(range(len(vecs)))


def _mixture_from_lp(S, cols, p_vals):
    """Assemble the reported mixture, dumping slack mass on the zero vector."""
    E = S.n_edges
    zero = (0,) * E
    probs = {}
    total = Fraction(0)
    for idx, p in zip(cols, p_vals):
        if p:
            probs[S.vectors[idx]] = probs.get(S.vectors[idx], Fraction(0)) + p
            total += p
    if total > 1:
        raise AssertionError("mixture mass exceeds 1")
    if total < 1:
        probs[zero] = probs.get(zero, Fraction(0)) + (1 - total)
    mixture = tuple(sorted(probs.items(), key=lambda kv: kv[0]))
    beta = [Fraction(0)] * E
    for bits, p in mixture:
        for k, b in enumerate(bits):
            if b:
                beta[k] += p
    return mixture, tuple(beta)


def compute_capacity(net, S, method="node-cuts", cut_limit=20):
    """Broadcast capacity of `net` under activation set `S`.

    method 'node-cuts' uses the per-receiver cut family; 'all-cuts' uses
    every proper cut (node count bounded by cut_limit).  The returned
    report's lambda is exact and certified: no cut in the family has value
    below it under the reported beta, and at least one cut is binding.
    """
    if net.n < 2:
        raise ValueError("capacity needs at least one receiver node")
    if method == "node-cuts":
        family = receiver_cuts(net)
    elif method == "all-cuts":
        family = enumerate_proper_cuts(net, limit=cut_limit)
    else:
        raise ValueError("unknown method %r" % (method,))

    caps = net.capacities()

    if S.model == "none":
        # every edge can be on in every slot; no LP needed
        beta = tuple(Fraction(1) for _ in caps)
        values = [cut_value(net, beta, c) for c in family]
        lam = min(values)
        mixture = (((1,) * len(caps), Fraction(1)),)
        binding = tuple(c for c, v in zip(family, values) if v == lam)
        return CapacityReport(
            lam=lam, mixture=mixture, beta=beta, binding_cuts=binding, method=method
        )

    if not S.vectors:
        raise EmptyActivationSet("activation set has no vectors")

    cols = _maximal_columns(S)
    # per-column cut coefficients are filled lazily per active row
    def row_coeffs(cut):
        coeff = []
        for idx in cols:
            v = S.vectors[idx]
            coeff.append(sum((caps[k] for k in cut.edge_indexes if v[k]), Fraction(0)))
        return coeff

    # lazily grown row set, seeded with the per-receiver cuts present in the
    # family; a final exhaustive scan certifies the result against every cut
    receiver_members = {frozenset(u for u in range(net.n) if u != v) for v in range(net.n) if v != net.source}
    active = [i for i, c in enumerate(family) if c.members in receiver_members]
    if not active:
        active = list(range(len(family)))
    active_set = set(active)

    nvars = 1 + len(cols)  # lambda then mixture weights
    obj = [Fraction(1)] + [Fraction(0)] * len(cols)
    while True:
        A = []
        b = []
        for i in active:
            A.append([Fraction(1)] + [-v for v in row_coeffs(family[i])])
            b.append(Fraction(0))
        A.append([Fraction(0)] + [Fraction(1)] * len(cols))
        b.append(Fraction(1))
        value, x = exactlp.solve_max(obj, A, b)
        lam = x[0]
        mixture, beta = _mixture_from_lp(S, cols, x[1:])
        values = [cut_value(net, beta, c) for c in family]
        violated = [i for i, v in enumerate(values) if v < lam and i not in active_set]
        if not violated:
            break
        active.append(violated[0])
        active_set.add(violated[0])

    binding = tuple(c for c, v in zip(family, values) if v == lam)
    if any(v < lam for v in values):
        raise AssertionError("optimality certificate failed")
    if not binding:
        raise AssertionError("no binding cut at reported optimum")
    return CapacityReport(
        lam=lam, mixture=mixture, beta=beta, binding_cuts=binding, method=method
    )


def compute_tree_capacity(net, S, trees):
    """Best total rate over the given arborescences sharing edge capacity.

    Solves max sum_k rate_k with, for every edge, the rates of the trees
    through it bounded by c_e * beta_e, beta a mixture over S.
    """
    if not trees:
        raise InvalidTree("need at least one tree")
    tsets = []
    for t in trees:
        idxs = tuple(t.edge_indexes) if hasattr(t, "edge_indexes") else tuple(t)
        if not is_arborescence(net, idxs):
            raise InvalidTree("edge set %r is not a spanning arborescence" % (idxs,))
        tsets.append(frozenset(idxs))
    caps = net.capacities()
    E = len(caps)
    K = len(tsets)

    if S.model == "none":
        beta_cols = None
        cols = []
    else:
        if not S.vectors:
            raise EmptyActivationSet("activation set has no vectors")
        cols = _maximal_columns(S)

    # variables: rate_1..rate_K then mixture weights
    nmix = len(cols)
    obj = [Fraction(1)] * K + [Fraction(0)] * nmix
    A = []
    b = []
    for e in range(E):
        if not any(e in ts for ts in tsets):
            continue
        row = [Fraction(1) if e in ts else Fraction(0) for ts in tsets]
        if S.model == "none":
            A.append(row + [])
            b.append(caps[e])
        else:
            row += [
                -(caps[e] if S.vectors[idx][e] else Fraction(0)) for idx in cols
            ]
            A.append(row)
            b.append(Fraction(0))
    if S.model != "none":
        A.append([Fraction(0)] * K + [Fraction(1)] * nmix)
        b.append(Fraction(1))
    value, x = exactlp.solve_max(obj, A, b)
    rates = tuple(x[:K])
    if S.model == "none":
        mixture = (((1,) * E, Fraction(1)),)
        beta = tuple(Fraction(1) for _ in range(E))
    else:
        mixture, beta = _mixture_from_lp(S, cols, x[K:])
    return CapacityReport(
        lam=sum(rates, Fraction(0)),
        mixture=mixture,
        beta=beta,
        binding_cuts=(),
        method="tree-restricted",
        tree_rates=rates,
    )


def disjoint_tree_count(net):
    """Maximum edge-disjoint arborescence count for unit-capacity DAGs.

    Equals the minimum in-degree over non-source nodes, which also equals
    the minimum proper-cut capacity.
    """
    for e in net.edges:
        if e.capacity != 1:
            raise NotUnitCapacity("disjoint tree count needs unit capacities")
    try:
        validate_dag(net)
    except CyclicGraph as exc:
        raise NotDag("disjoint tree count requires a DAG") from exc
    degs = [net.in_degree(v) for v in range(net.n) if v != net.source]
    return min(degs) if degs else 0


def best_tree_subsets(net, S, trees, max_size, lp_budget=20000):
    """Exhaustive best tree-restricted capacity per subset size 1..max_size.

    Returns {size: (lambda, subset_indexes)}.  Refuses searches whose LP
    count would exceed lp_budget.
    """
    total = sum(
        _ncr(len(trees), k) for k in range(1, max_size + 1)
    )
    if total > lp_budget:
        raise SizeLimit("subset search needs %d LPs, budget is %d" % (total, lp_budget))
    best = {}
    for size in range(1, max_size + 1):
        top = None
        for combo in itertools.combinations(range(len(trees)), size):
            rep = compute_tree_capacity(net, S, [trees[i] for i in combo])
            if top is None or rep.lam > top[0]:
                top = (rep.lam, combo)
        best[size] = top
    return best


def _ncr(n, r):
    out = 1
    for i in range(r):
        out = out * (n - i) // (i + 1)
    return out
