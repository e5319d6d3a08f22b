"""Simulation driver: arrivals, backend dispatch, metrics, and trace checks.

All randomness is pre-generated from a seeded generator before the slot
loop runs, so the compiled and fallback backends replay the exact same
sample path.  Capacities must be integers here; the capacity module keeps
exact rationals, the simulator trades packets.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import kernels
from .netmodel import Network, NetworkError
from .interference import ActivationSet
from .policies import _int_caps

ARRIVAL_KINDS = ("poisson", "bernoulli", "deterministic")


class Unreachable(NetworkError):
    """No in-path from the source under the current reception state."""


def resolve_backend(name: str | None = None) -> str:
    if name is None:
        return "numba" if kernels.HAVE_NUMBA else "numpy"
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not kernels.HAVE_NUMBA:
        raise ValueError("numba backend unavailable (not installed or disabled)")
    return name


def draw_arrivals(kind: str, lam, slots: int, rng: np.random.Generator) -> np.ndarray:
    """Arrival counts per slot; packets enter the source at slot end."""
    if kind not in ARRIVAL_KINDS:
        raise ValueError(f"unknown arrival kind {kind!r}")
    rate = float(lam)
    if rate < 0:
        raise ValueError("arrival rate must be nonnegative")
    if kind == "poisson":
        return rng.poisson(rate, slots).astype(np.int64)
    if kind == "bernoulli":
        if rate > 1:
            raise ValueError("bernoulli arrival rate must be at most 1")
        return (rng.random(slots) < rate).astype(np.int64)
    frac = lam if isinstance(lam, Fraction) else Fraction(str(rate))
    out = np.zeros(slots, dtype=np.int64)
    for t in range(slots):
        out[t] = int((t + 1) * frac) - int(t * frac)
    return out


def _csr(lists, length=None):
    off = np.zeros(len(lists) + 1, dtype=np.int64)
    for i, xs in enumerate(lists):
        off[i + 1] = off[i] + len(xs)
    flat = np.zeros(int(off[-1]), dtype=np.int64)
    pos = 0
    for xs in lists:
        for x in xs:
            flat[pos] = x
            pos += 1
    return flat, off


@dataclass
class _NetArrays:
    tail: np.ndarray
    head: np.ndarray
    cap: np.ndarray
    ie_flat: np.ndarray
    ie_off: np.ndarray
    it_flat: np.ndarray
    it_off: np.ndarray


def _net_arrays(net: Network) -> _NetArrays:
    caps = _int_caps(net)
    tail = np.array([e.tail for e in net.edges], dtype=np.int64)
    head = np.array([e.head for e in net.edges], dtype=np.int64)
    cap = np.array(caps, dtype=np.int64)
    ie = [[] for _ in range(net.n)]
    for k, e in enumerate(net.edges):
        ie[e.head].append(k)
    it = [sorted(xs, key=lambda k: (net.edges[k].tail, k)) for xs in ie]
    ie_flat, ie_off = _csr(ie)
    it_flat, it_off = _csr(it)
    return _NetArrays(tail, head, cap, ie_flat, ie_off, it_flat, it_off)


def _activation_arrays(S: ActivationSet):
    if S.model == "none":
        E = S.n_edges
        return np.zeros(0, dtype=np.int64), np.zeros(1, dtype=np.int64), 0, None, 1
    flat, off = S.edge_lists()
    mat = S.matrix().astype(np.int64)
    return flat, off, len(S), mat, 0


def _mixture_arrays(mixture, E: int):
    lists = []
    probs = []
    for bits, p in mixture:
        lists.append([k for k, b in enumerate(bits) if b])
        probs.append(float(p))
    flat, off = _csr(lists)
    mat = np.zeros((len(lists), E), dtype=np.int64)
    for i, xs in enumerate(lists):
        for k in xs:
            mat[i, k] = 1
    cum = np.cumsum(np.array(probs, dtype=np.float64))
    cum[-1] = 1.0
    return flat, off, mat, cum


def _tree_arrays(net: Network, trees):
    source = net.source
    locs = []
    tr_lists = []
    for k, tr in enumerate(trees):
        edges = sorted(tr.edge_indexes)
        tr_lists.append(list(range(len(locs), len(locs) + len(edges))))
        for e in edges:
            locs.append((k, e))
    L = len(locs)
    tr_edge = np.array([e for _, e in locs], dtype=np.int64)
    tree_of = np.array([k for k, _ in locs], dtype=np.int64)
    _, tr_off = _csr(tr_lists)
    by_tree_tail = {}
    for li, (k, e) in enumerate(locs):
        by_tree_tail.setdefault((k, net.edges[e].tail), []).append(li)
    ch_lists = []
    for li, (k, e) in enumerate(locs):
        ch_lists.append(by_tree_tail.get((k, net.edges[e].head), []))
    ch_flat, ch_off = _csr(ch_lists)
    n_child = np.array([len(xs) for xs in ch_lists], dtype=np.int64)
    rt_lists = [by_tree_tail.get((k, source), []) for k in range(len(trees))]
    rt_flat, rt_off = _csr(rt_lists)
    e2l_lists = [[] for _ in range(len(net.edges))]
    for li, (k, e) in enumerate(locs):
        e2l_lists[e].append(li)
    e2l_flat, e2l_off = _csr(e2l_lists)
    return (tr_edge, tr_off, tree_of, ch_flat, ch_off, n_child,
            rt_flat, rt_off, e2l_flat, e2l_off)


@dataclass
class TraceData:
    """Per-slot history.  R has one extra row holding the final state."""

    names: tuple[str, ...]
    source: int
    R: np.ndarray
    X: np.ndarray
    activation: np.ndarray
    pulls: np.ndarray
    edge_flows: np.ndarray
    arrivals: np.ndarray

    @property
    def n_slots(self) -> int:
        return self.X.shape[0]


@dataclass
class RunMetrics:
    policy: str
    backend: str
    arrival_kind: str
    lam: float
    slots: int
    seed: int
    final_R: tuple[int, ...]
    rates: tuple[float, ...]
    min_rate: float
    arrivals_total: int
    delivered: int
    undelivered: int
    avg_delay: float | None
    max_delay: int | None
    max_sum_deficit: int
    sum_deficit_last: int
    deadlock: bool
    deadlock_slot: int | None
    avg_in_rate: tuple[float, ...]
    n_trees: int | None = None
    sum_deficit: np.ndarray = field(repr=False, default=None)
    packet_arrival: np.ndarray = field(repr=False, default=None)
    packet_full: np.ndarray = field(repr=False, default=None)

    def to_json_dict(self) -> dict:
        out = {
            "policy": self.policy,
            "backend": self.backend,
            "arrival_kind": self.arrival_kind,
            "lambda": self.lam,
            "slots": self.slots,
            "seed": self.seed,
            "final_R": list(self.final_R),
            "rates": list(self.rates),
            "min_rate": self.min_rate,
            "arrivals_total": self.arrivals_total,
            "delivered": self.delivered,
            "undelivered": self.undelivered,
            "avg_delay": self.avg_delay,
            "max_delay": self.max_delay,
            "max_sum_deficit": self.max_sum_deficit,
            "sum_deficit_last": self.sum_deficit_last,
            "deadlock": self.deadlock,
            "deadlock_slot": self.deadlock_slot,
            "avg_in_rate": list(self.avg_in_rate),
        }
        if self.n_trees is not None:
            out["n_trees"] = self.n_trees
        return out


def run(
    net: Network,
    S: ActivationSet,
    policy,
    lam,
    slots: int,
    seed: int,
    *,
    arrival_kind: str = "poisson",
    trace: bool = False,
    deadlock_window: int | None = None,
    backend: str | None = None,
):
    """Simulate `slots` slots; returns (RunMetrics, TraceData or None)."""
    if net.n < 2:
        raise ValueError("need at least one non-source node to simulate")
    if slots <= 0:
        raise ValueError("slots must be positive")
    backend = resolve_backend(backend)
    arr = _net_arrays(net)
    n, E = net.n, len(net.edges)
    if deadlock_window is None:
        deadlock_window = 10 * n * int(arr.cap.max())

    ss = np.random.SeedSequence(seed)
    arr_ss, pol_ss = ss.spawn(2)
    arrivals = draw_arrivals(arrival_kind, lam, slots, np.random.default_rng(arr_ss))
    pol_rng = np.random.default_rng(pol_ss)

    P = int(arrivals.sum())
    deliv = np.full((n, max(P, 1)), -1, dtype=np.int64)
    sumX = np.zeros(slots, dtype=np.int64)
    incap = np.zeros(n, dtype=np.int64)
    R_out = np.zeros(n, dtype=np.int64)
    last_prog = np.zeros(n, dtype=np.int64)
    if trace:
        R_tr = np.zeros((slots + 1, n), dtype=np.int64)
        X_tr = np.zeros((slots, n), dtype=np.int64)
        act_tr = np.zeros((slots, E), dtype=np.int64)
        pulls_tr = np.zeros((slots, n), dtype=np.int64)
        flow_tr = np.zeros((slots, E), dtype=np.int64)
    else:
        R_tr = X_tr = act_tr = pulls_tr = flow_tr = np.zeros((1, 1), dtype=np.int64)
    trace_on = 1 if trace else 0

    name = policy.name
    n_trees = None
    if name == "pistar":
        act_flat, act_off, n_act, act_mat, model_none = _activation_arrays(S)
        if backend == "numba":
            res = kernels.pistar_loop_numba(
                slots, n, net.source, arr.tail, arr.head, arr.cap,
                arr.ie_flat, arr.ie_off, arr.it_flat, arr.it_off,
                act_flat, act_off, n_act, model_none, arrivals, deadlock_window,
                deliv, sumX, incap, R_out, last_prog, trace_on,
                R_tr, X_tr, act_tr, pulls_tr, flow_tr,
            )
        else:
            res = kernels.pistar_loop_numpy(
                slots, n, net.source, arr.tail, arr.head, arr.cap,
                arr.ie_flat, arr.ie_off, arr.it_flat, arr.it_off,
                act_mat, model_none, arrivals, deadlock_window,
                deliv, sumX, incap, R_out, last_prog, trace_on,
                R_tr, X_tr, act_tr, pulls_tr, flow_tr,
            )
    elif name == "pirand":
        mix_flat, mix_off, mix_mat, cum = _mixture_arrays(policy.mixture, E)
        u_choice = pol_rng.random(slots)
        keep_u = pol_rng.random((slots, E))
        choice = np.minimum(
            np.searchsorted(cum, u_choice, side="right"), len(cum) - 1
        ).astype(np.int64)
        q_keep = np.array([float(q) for q in policy.q], dtype=np.float64)
        if backend == "numba":
            res = kernels.pirand_loop_numba(
                slots, n, net.source, arr.tail, arr.head, arr.cap,
                arr.ie_flat, arr.ie_off, arr.it_flat, arr.it_off,
                mix_flat, mix_off, choice, keep_u, q_keep,
                arrivals, deadlock_window,
                deliv, sumX, incap, R_out, last_prog, trace_on,
                R_tr, X_tr, act_tr, pulls_tr, flow_tr,
            )
        else:
            res = kernels.pirand_loop_numpy(
                slots, n, net.source, arr.tail, arr.head, arr.cap,
                arr.ie_flat, arr.ie_off, arr.it_flat, arr.it_off,
                mix_mat, choice, keep_u, q_keep, arrivals, deadlock_window,
                deliv, sumX, incap, R_out, last_prog, trace_on,
                R_tr, X_tr, act_tr, pulls_tr, flow_tr,
            )
    elif name == "pitree":
        if not policy.trees:
            raise ValueError("tree policy needs at least one tree")
        n_trees = len(policy.trees)
        act_flat, act_off, n_act, act_mat, model_none = _activation_arrays(S)
        tree_arrs = _tree_arrays(net, policy.trees)
        asg = np.zeros((n_trees, max(P, 1)), dtype=np.int64)
        if backend == "numba":
            res = kernels.pitree_loop_numba(
                slots, n, net.source, arr.tail, arr.head, arr.cap,
                arr.it_flat, arr.it_off,
                act_flat, act_off, n_act, model_none, *tree_arrs,
                arrivals, deadlock_window,
                asg, deliv, sumX, incap, R_out, last_prog, trace_on,
                R_tr, X_tr, act_tr, pulls_tr, flow_tr,
            )
        else:
            res = kernels.pitree_loop_numpy(
                slots, n, net.source, arr.tail, arr.head, arr.cap,
                arr.it_flat, arr.it_off,
                act_mat, model_none, *tree_arrs, arrivals, deadlock_window,
                asg, deliv, sumX, incap, R_out, last_prog, trace_on,
                R_tr, X_tr, act_tr, pulls_tr, flow_tr,
            )
    else:
        raise ValueError(f"unknown policy {name!r}")

    deadlock, deadlock_slot, max_sumX = int(res[0]), int(res[1]), int(res[2])

    nonsource = [j for j in range(n) if j != net.source]
    rates = tuple(float(R_out[j]) / slots for j in range(n))
    min_rate = min(rates[j] for j in nonsource)

    packet_arrival = np.repeat(np.arange(slots, dtype=np.int64), arrivals)
    if P > 0:
        recv = deliv[nonsource, :P]
        delivered_mask = (recv >= 0).all(axis=0)
        packet_full = np.where(delivered_mask, recv.max(axis=0), -1)
        delivered = int(delivered_mask.sum())
        delays = packet_full[delivered_mask] - packet_arrival[delivered_mask]
        avg_delay = float(delays.mean()) if delivered else None
        max_delay = int(delays.max()) if delivered else None
    else:
        packet_full = np.zeros(0, dtype=np.int64)
        delivered = 0
        avg_delay = None
        max_delay = None

    metrics = RunMetrics(
        policy=name,
        backend=backend,
        arrival_kind=arrival_kind,
        lam=float(lam),
        slots=slots,
        seed=seed,
        final_R=tuple(int(x) for x in R_out),
        rates=rates,
        min_rate=float(min_rate),
        arrivals_total=P,
        delivered=delivered,
        undelivered=P - delivered,
        avg_delay=avg_delay,
        max_delay=max_delay,
        max_sum_deficit=max_sumX,
        sum_deficit_last=int(sumX[-1]),
        deadlock=bool(deadlock),
        deadlock_slot=deadlock_slot if deadlock else None,
        avg_in_rate=tuple(float(x) / slots for x in incap),
        n_trees=n_trees,
        sum_deficit=sumX,
        packet_arrival=packet_arrival,
        packet_full=packet_full,
    )
    trace_data = None
    if trace:
        trace_data = TraceData(
            names=net.names, source=net.source, R=R_tr, X=X_tr,
            activation=act_tr, pulls=pulls_tr, edge_flows=flow_tr,
            arrivals=arrivals,
        )
    return metrics, trace_data


# --- trace serialization ----------------------------------------------------


def trace_to_csv(trace: TraceData, path) -> None:
    names = trace.names
    non = [j for j in range(len(names)) if j != trace.source]
    header = (
        ["slot", "activation"]
        + [f"R_{names[j]}" for j in range(len(names))]
        + [f"X_{names[j]}" for j in non]
        + [f"pulls_{names[j]}" for j in non]
    )
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for t in range(trace.n_slots):
            bitstr = "".join(str(int(b)) for b in trace.activation[t])
            row = [t, bitstr]
            row += [int(x) for x in trace.R[t]]
            row += [int(trace.X[t, j]) for j in non]
            row += [int(trace.pulls[t, j]) for j in non]
            w.writerow(row)


def trace_from_csv(net: Network, path) -> TraceData:
    """Rebuild a trace from CSV.

    Edge flows are reconstructed by refilling activated in-edges in edge
    index order, which matches how the deficit policies route pulls.  The
    final reception state is not stored, so one fewer transition is
    checkable than for an in-memory trace.
    """
    caps = _int_caps(net)
    names = net.names
    non = [j for j in range(net.n) if j != net.source]
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    T = len(rows)
    E = len(net.edges)
    R = np.zeros((T, net.n), dtype=np.int64)
    X = np.zeros((T, net.n), dtype=np.int64)
    act = np.zeros((T, E), dtype=np.int64)
    pulls = np.zeros((T, net.n), dtype=np.int64)
    flows = np.zeros((T, E), dtype=np.int64)
    in_edges = [[k for k in range(E) if net.edges[k].head == j] for j in range(net.n)]
    for t, row in enumerate(rows):
        bits = row["activation"].strip()
        if len(bits) != E or any(c not in "01" for c in bits):
            raise ValueError(f"bad activation bitstring on row {t}")
        for k, c in enumerate(bits):
            act[t, k] = int(c)
        for j in range(net.n):
            R[t, j] = int(row[f"R_{names[j]}"])
        for j in non:
            X[t, j] = int(row[f"X_{names[j]}"])
            pulls[t, j] = int(row[f"pulls_{names[j]}"])
        for j in non:
            rem = int(pulls[t, j])
            for k in in_edges[j]:
                if act[t, k] and rem > 0:
                    f = min(caps[k], rem)
                    flows[t, k] = f
                    rem -= f
    arrivals = np.zeros(max(T - 1, 0), dtype=np.int64)
    for t in range(T - 1):
        arrivals[t] = R[t + 1, net.source] - R[t, net.source]
    return TraceData(
        names=names, source=net.source, R=R, X=X, activation=act,
        pulls=pulls, edge_flows=flows, arrivals=arrivals,
    )


def packets_to_csv(metrics: RunMetrics, path) -> None:
    def write(fh):
        w = csv.writer(fh)
        w.writerow(["packet_id", "arrival_slot", "full_delivery_slot", "delay"])
        for p in range(metrics.arrivals_total):
            full = int(metrics.packet_full[p])
            arr = int(metrics.packet_arrival[p])
            delay = full - arr if full >= 0 else -1
            w.writerow([p + 1, arr, full, delay])

    if hasattr(path, "write"):
        write(path)
    else:
        with open(path, "w", newline="") as fh:
            write(fh)


# --- state accounting checks ------------------------------------------------


def construct_path(net: Network, state, target: int) -> list[int]:
    """Walk min-deficit in-links from `target` back to the source.

    Returns the node sequence source..target.  Ties pick the smallest
    tail, matching the policy tie break.
    """
    R = np.asarray(getattr(state, "R", state), dtype=np.int64)
    path = [target]
    seen = {target}
    v = target
    while v != net.source:
        best = None
        for k in sorted(net.in_edges(v), key=lambda k: (net.edges[k].tail, k)):
            q = R[net.edges[k].tail] - R[v]
            if best is None or q < best[0]:
                best = (q, net.edges[k].tail)
        if best is None:
            raise Unreachable(f"node {net.names[v]} has no in-edges")
        v = best[1]
        if v in seen:
            raise Unreachable(f"min-deficit walk from {net.names[target]} cycles")
        seen.add(v)
        path.append(v)
    path.reverse()
    return path


def telescoping_check(net: Network, state, target: int) -> int:
    """Residual of R_source - R_target against summed path deficits (0 iff tight)."""
    R = np.asarray(getattr(state, "R", state), dtype=np.int64)
    path = construct_path(net, state, target)
    total = 0
    for v in path[1:]:
        seg = min(R[net.edges[k].tail] - R[v] for k in net.in_edges(v))
        total += seg
    return int(R[net.source] - R[target] - total)


def check_idle_link(trace: TraceData, cycle_edges) -> int:
    """Slots where every edge of a directed cycle carried traffic.

    In-order reception makes that impossible, so any hit is a violation.
    """
    idx = list(cycle_edges)
    if not idx:
        raise ValueError("cycle_edges must be nonempty")
    flows = trace.edge_flows[:, idx]
    return int(((flows >= 1).all(axis=1)).sum())


def deficit_series(net: Network, R: np.ndarray):
    """Per-slot deficits X and minimizing in-neighbors from reception rows.

    R is (m, n); returns (X, istar) both (m, n), istar = -1 where a node
    has no in-edges.  Ties go to the smallest tail, then smallest edge.
    """
    arr = _net_arrays(net)
    R = np.asarray(R, dtype=np.int64)
    m = R.shape[0]
    X = np.zeros((m, net.n), dtype=np.int64)
    istar = np.full((m, net.n), -1, dtype=np.int64)
    for j in range(net.n):
        if j == net.source:
            continue
        seg = arr.it_flat[arr.it_off[j]: arr.it_off[j + 1]]
        if seg.size == 0:
            continue
        Q = R[:, arr.tail[seg]] - R[:, j:j + 1]
        k = np.argmin(Q, axis=1)  # first minimum: (tail, edge) tie break
        X[:, j] = Q[np.arange(m), k]
        istar[:, j] = arr.tail[seg][k]
    return X, istar


def check_trace(net: Network, trace: TraceData, telescope_samples: int = 20) -> dict:
    """Count invariant violations over a trace; all-zero means clean.

    Checks: reception counters evolve as prefix counts (conservation),
    pulls never exceed the eligible window, recorded deficits match the
    state, the per-slot deficit recursion holds, and sampled telescoping
    residuals vanish.  The last four assume in-order prefix reception, so
    they apply to the deficit policies, not the tree baseline.
    """
    arr = _net_arrays(net)
    n = net.n
    n_trans = min(trace.R.shape[0] - 1, len(trace.arrivals), trace.n_slots)
    non = [j for j in range(n) if j != net.source]
    viol = {}

    X_all, istar_all = deficit_series(net, trace.R)
    X_t = X_all[:n_trans]
    X_next = X_all[1: n_trans + 1]
    istar_t = istar_all[:n_trans]
    pulls = trace.pulls[:n_trans]
    arrivals = np.asarray(trace.arrivals[:n_trans], dtype=np.int64)

    expect = trace.R[:n_trans] + pulls
    expect[:, net.source] += arrivals
    viol["conservation"] = int((trace.R[1: n_trans + 1] != expect).sum())

    elig = (pulls[:, non] < 0) | (pulls[:, non] > np.clip(X_t[:, non], 0, None))
    viol["eligibility"] = int(elig.sum())

    viol["deficit_consistency"] = int(
        (trace.X[:n_trans][:, non] != X_t[:, non]).sum()
    )

    # offered service into each node under the recorded activations
    act = trace.activation[:n_trans]
    mu_in = np.zeros((n_trans, n), dtype=np.int64)
    for j in range(n):
        ins = [k for k in range(len(net.edges)) if net.edges[k].head == j]
        if ins:
            mu_in[:, j] = act[:, ins] @ arr.cap[ins]
    gain = np.take_along_axis(mu_in, np.clip(istar_t, 0, None), axis=1)
    gain[istar_t == net.source] = np.broadcast_to(
        arrivals[:, None], gain.shape
    )[istar_t == net.source]
    bound = np.clip(X_t - mu_in, 0, None) + gain
    bad = (X_next > bound) & (istar_t >= 0)
    viol["deficit_dynamics"] = int(bad[:, non].sum())

    count = 0
    stride = max(1, (trace.R.shape[0] - 1) // max(telescope_samples, 1))
    for t in range(0, trace.R.shape[0], stride):
        for j in non:
            try:
                if telescoping_check(net, trace.R[t], j) != 0:
                    count += 1
            except Unreachable:
                continue
    viol["telescoping"] = count
    viol["slots_checked"] = n_trans
    return viol


def stability_slope_test(series, n_blocks: int = 50, alpha: float = 0.01):
    """Trend test on the tail of a backlog series.

    The raw series is heavily autocorrelated, so the regression runs on
    block means of the last half.  Returns (slope, p_value, stable);
    stable is False only for a significantly positive slope.
    """
    from scipy import stats

    y = np.asarray(series, dtype=np.float64)
    tail = y[len(y) // 2:]
    n_blocks = max(2, min(n_blocks, len(tail)))
    usable = (len(tail) // n_blocks) * n_blocks
    blocks = tail[:usable].reshape(n_blocks, -1).mean(axis=1)
    if np.ptp(blocks) == 0:
        return 0.0, 1.0, True
    x = np.arange(n_blocks, dtype=np.float64)
    fit = stats.linregress(x, blocks)
    slope = float(fit.slope)
    p = float(fit.pvalue)
    stable = not (slope > 0 and p < alpha)
    return slope, p, stable
