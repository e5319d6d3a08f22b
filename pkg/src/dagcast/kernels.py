"""Slot-loop kernels for the simulator, in two interchangeable backends.

The compiled backend wraps the plain-Python loops below with numba's njit;
the fallback backend is a vectorized numpy implementation of the same
integer recurrences.  Both consume identical pre-generated randomness and
produce bit-identical results; set DAGCAST_NO_NUMBA=1 to force the
fallback.  Activation lists are CSR arrays sorted lexicographically, so a
first-strict-improvement argmax scan realizes the smallest-vector tie
break in both backends.
"""

import os

import numpy as np

HAVE_NUMBA = False
if not os.environ.get("DAGCAST_NO_NUMBA"):
    try:
        from numba import njit

        HAVE_NUMBA = True
    except ImportError:
        pass


def _pistar_loop(
    T,
    n,
    source,
    tail,
    head,
    cap,
    ie_flat,
    ie_off,
    it_flat,
    it_off,
    act_flat,
    act_off,
    n_act,
    model_none,
    arrivals,
    window,
    deliv,
    sumX,
    incap,
    R_out,
    last_prog,
    trace_on,
    R_tr,
    X_tr,
    act_tr,
    pulls_tr,
    flow_tr,
):
    E = tail.shape[0]
    R = np.zeros(n, dtype=np.int64)
    X = np.zeros(n, dtype=np.int64)
    istar = np.zeros(n, dtype=np.int64)
    SK = np.zeros(n, dtype=np.int64)
    Wn = np.zeros(n, dtype=np.int64)
    bits = np.zeros(E, dtype=np.int64)
    deadlock = 0
    deadlock_slot = -1
    max_sumX = 0
    for t in range(T):
        if trace_on:
            for j in range(n):
                R_tr[t, j] = R[j]
        # per-node minimum in-link deficit; in-edges pre-sorted by
        # (tail, edge index) so the first strict minimum is the tie break
        for j in range(n):
            X[j] = 0
            istar[j] = -1
            SK[j] = 0
        for j in range(n):
            if j == source:
                continue
            lo = it_off[j]
            hi = it_off[j + 1]
            if lo == hi:
                continue
            best = R[tail[it_flat[lo]]] - R[j]
            istar[j] = tail[it_flat[lo]]
            for p in range(lo + 1, hi):
                q = R[tail[it_flat[p]]] - R[j]
                if q < best:
                    best = q
                    istar[j] = tail[it_flat[p]]
            X[j] = best
        s = 0
        for j in range(n):
            if j != source:
                s += X[j]
                if istar[j] >= 0:
                    SK[istar[j]] += X[j]
        sumX[t] = s
        if s > max_sumX:
            max_sumX = s
        for j in range(n):
            w = X[j] - SK[j]
            if j == source or w < 0:
                w = 0
            Wn[j] = w
        if trace_on:
            for j in range(n):
                X_tr[t, j] = X[j]
        if model_none:
            for k in range(E):
                bits[k] = 1 if cap[k] * Wn[head[k]] > 0 else 0
        else:
            best_val = np.int64(-1)
            best_a = 0
            for a in range(n_act):
                val = np.int64(0)
                for p in range(act_off[a], act_off[a + 1]):
                    k = act_flat[p]
                    val += cap[k] * Wn[head[k]]
                if val > best_val:
                    best_val = val
                    best_a = a
            for k in range(E):
                bits[k] = 0
            for p in range(act_off[best_a], act_off[best_a + 1]):
                bits[act_flat[p]] = 1
        if trace_on:
            for k in range(E):
                act_tr[t, k] = bits[k]
        for j in range(n):
            if j == source:
                continue
            insum = np.int64(0)
            for p in range(ie_off[j], ie_off[j + 1]):
                k = ie_flat[p]
                if bits[k]:
                    insum += cap[k]
            incap[j] += insum
            take = X[j] if X[j] < insum else insum
            if take < 0:
                take = 0
            if take > 0:
                base = R[j]
                for pk in range(base, base + take):
                    deliv[j, pk] = t
                rem = take
                for p in range(ie_off[j], ie_off[j + 1]):
                    k = ie_flat[p]
                    if bits[k] and rem > 0:
                        f = cap[k] if cap[k] < rem else rem
                        if trace_on:
                            flow_tr[t, k] = f
                        rem -= f
                last_prog[j] = t
                R[j] += take
            if trace_on:
                pulls_tr[t, j] = take
        R[source] += arrivals[t]
        if deadlock == 0:
            for j in range(n):
                if j != source and R[j] < R[source] and t - last_prog[j] >= window:
                    deadlock = 1
                    deadlock_slot = t
                    break
    if trace_on:
        for j in range(n):
            R_tr[T, j] = R[j]
    for j in range(n):
        R_out[j] = R[j]
    return deadlock, deadlock_slot, max_sumX


def _pirand_loop(
    T,
    n,
    source,
    tail,
    head,
    cap,
    ie_flat,
    ie_off,
    it_flat,
    it_off,
    act_flat,
    act_off,
    choice,
    keep_u,
    q_keep,
    arrivals,
    window,
    deliv,
    sumX,
    incap,
    R_out,
    last_prog,
    trace_on,
    R_tr,
    X_tr,
    act_tr,
    pulls_tr,
    flow_tr,
):
    E = tail.shape[0]
    R = np.zeros(n, dtype=np.int64)
    X = np.zeros(n, dtype=np.int64)
    bits = np.zeros(E, dtype=np.int64)
    deadlock = 0
    deadlock_slot = -1
    max_sumX = 0
    for t in range(T):
        if trace_on:
            for j in range(n):
                R_tr[t, j] = R[j]
        for j in range(n):
            X[j] = 0
        for j in range(n):
            if j == source:
                continue
            lo = it_off[j]
            hi = it_off[j + 1]
            if lo == hi:
                continue
            best = R[tail[it_flat[lo]]] - R[j]
            for p in range(lo + 1, hi):
                q = R[tail[it_flat[p]]] - R[j]
                if q < best:
                    best = q
            X[j] = best
        s = 0
        for j in range(n):
            if j != source:
                s += X[j]
        sumX[t] = s
        if s > max_sumX:
            max_sumX = s
        if trace_on:
            for j in range(n):
                X_tr[t, j] = X[j]
        # sampled activation, then per-node independent thinning of in-links
        for k in range(E):
            bits[k] = 0
        a = choice[t]
        for p in range(act_off[a], act_off[a + 1]):
            k = act_flat[p]
            hd = head[k]
            if hd == source or keep_u[t, k] < q_keep[hd]:
                bits[k] = 1
        if trace_on:
            for k in range(E):
                act_tr[t, k] = bits[k]
        for j in range(n):
            if j == source:
                continue
            insum = np.int64(0)
            for p in range(ie_off[j], ie_off[j + 1]):
                k = ie_flat[p]
                if bits[k]:
                    insum += cap[k]
            incap[j] += insum
            take = X[j] if X[j] < insum else insum
            if take < 0:
                take = 0
            if take > 0:
                base = R[j]
                for pk in range(base, base + take):
                    deliv[j, pk] = t
                rem = take
                for p in range(ie_off[j], ie_off[j + 1]):
                    k = ie_flat[p]
                    if bits[k] and rem > 0:
                        f = cap[k] if cap[k] < rem else rem
                        if trace_on:
                            flow_tr[t, k] = f
                        rem -= f
                last_prog[j] = t
                R[j] += take
            if trace_on:
                pulls_tr[t, j] = take
        R[source] += arrivals[t]
        if deadlock == 0:
            for j in range(n):
                if j != source and R[j] < R[source] and t - last_prog[j] >= window:
                    deadlock = 1
                    deadlock_slot = t
                    break
    if trace_on:
        for j in range(n):
            R_tr[T, j] = R[j]
    for j in range(n):
        R_out[j] = R[j]
    return deadlock, deadlock_slot, max_sumX


def _pitree_loop(
    T,
    n,
    source,
    tail,
    head,
    cap,
    it_flat,
    it_off,
    act_flat,
    act_off,
    n_act,
    model_none,
    tr_edge,
    tr_off,
    tree_of,
    ch_flat,
    ch_off,
    n_child,
    rt_flat,
    rt_off,
    e2l_flat,
    e2l_off,
    arrivals,
    window,
    asg,
    deliv,
    sumX,
    incap,
    R_out,
    last_prog,
    trace_on,
    R_tr,
    X_tr,
    act_tr,
    pulls_tr,
    flow_tr,
):
    E = tail.shape[0]
    K = tr_off.shape[0] - 1
    L = tr_edge.shape[0]
    R = np.zeros(n, dtype=np.int64)
    X = np.zeros(n, dtype=np.int64)
    qlo = np.zeros(L, dtype=np.int64)
    qhi = np.zeros(L, dtype=np.int64)
    his = np.zeros(L, dtype=np.int64)
    dcur = np.zeros(L, dtype=np.int64)
    asg_len = np.zeros(K, dtype=np.int64)
    wacc = np.zeros(E, dtype=np.int64)
    bits = np.zeros(E, dtype=np.int64)
    next_pkt = 0
    deadlock = 0
    deadlock_slot = -1
    max_sumX = 0
    for t in range(T):
        if trace_on:
            for j in range(n):
                R_tr[t, j] = R[j]
        # diagnostics only for this policy: deficits derived from R
        for j in range(n):
            X[j] = 0
        for j in range(n):
            if j == source:
                continue
            lo = it_off[j]
            hi = it_off[j + 1]
            if lo == hi:
                continue
            best = R[tail[it_flat[lo]]] - R[j]
            for p in range(lo + 1, hi):
                q = R[tail[it_flat[p]]] - R[j]
                if q < best:
                    best = q
            X[j] = best
        s = 0
        for j in range(n):
            if j != source:
                s += X[j]
        sumX[t] = s
        if s > max_sumX:
            max_sumX = s
        if trace_on:
            for j in range(n):
                X_tr[t, j] = X[j]
        # edge weight: capacity times the largest positive backlog
        # differential among the trees through it (slot-start values,
        # reused below to order intra-edge service)
        for k in range(E):
            wacc[k] = 0
        for li in range(L):
            d = qhi[li] - qlo[li]
            for p in range(ch_off[li], ch_off[li + 1]):
                ci = ch_flat[p]
                d -= qhi[ci] - qlo[ci]
            if d < 0:
                d = 0
            dcur[li] = d
            if d > wacc[tr_edge[li]]:
                wacc[tr_edge[li]] = d
        for k in range(E):
            wacc[k] *= cap[k]
        if model_none:
            for k in range(E):
                bits[k] = 1 if wacc[k] > 0 else 0
        else:
            best_val = np.int64(-1)
            best_a = 0
            for a in range(n_act):
                val = np.int64(0)
                for p in range(act_off[a], act_off[a + 1]):
                    val += wacc[act_flat[p]]
                if val > best_val:
                    best_val = val
                    best_a = a
            for k in range(E):
                bits[k] = 0
            for p in range(act_off[best_a], act_off[best_a + 1]):
                bits[act_flat[p]] = 1
        if trace_on:
            for k in range(E):
                act_tr[t, k] = bits[k]
        # store and forward: only packets queued at slot start may move,
        # trees served in decreasing slot-start differential order
        # (positive differentials only; each local edge belongs to one
        # global edge, so consuming dcur marks it served)
        for li in range(L):
            his[li] = qhi[li]
        for e in range(E):
            if not bits[e]:
                continue
            budget = cap[e]
            hd = head[e]
            moved = np.int64(0)
            while budget > 0:
                best_li = -1
                best_d = np.int64(0)
                for p in range(e2l_off[e], e2l_off[e + 1]):
                    li = e2l_flat[p]
                    if dcur[li] > best_d:
                        best_d = dcur[li]
                        best_li = li
                if best_li < 0:
                    break
                li = best_li
                dcur[li] = 0
                k = tree_of[li]
                avail = his[li] - qlo[li]
                take = avail if avail < budget else budget
                if take <= 0:
                    continue
                for i in range(take):
                    pkt = asg[k, qlo[li] + i]
                    deliv[hd, pkt] = t
                for cc in range(ch_off[li], ch_off[li + 1]):
                    qhi[ch_flat[cc]] += take
                qlo[li] += take
                budget -= take
                moved += take
            if moved > 0:
                if trace_on:
                    flow_tr[t, e] = moved
                R[hd] += moved
                last_prog[hd] = t
                if trace_on:
                    pulls_tr[t, hd] += moved
        # admissions: each packet joins the tree whose root queues are
        # shortest, counting packets admitted earlier in the same slot
        for _ in range(arrivals[t]):
            bk = 0
            best_rq = np.int64(0)
            for p in range(rt_off[0], rt_off[1]):
                li = rt_flat[p]
                best_rq += qhi[li] - qlo[li]
            for k in range(1, K):
                rq = np.int64(0)
                for p in range(rt_off[k], rt_off[k + 1]):
                    li = rt_flat[p]
                    rq += qhi[li] - qlo[li]
                if rq < best_rq:
                    best_rq = rq
                    bk = k
            asg[bk, asg_len[bk]] = next_pkt
            asg_len[bk] += 1
            for p in range(rt_off[bk], rt_off[bk + 1]):
                qhi[rt_flat[p]] += 1
            next_pkt += 1
            R[source] += 1
        if deadlock == 0:
            for j in range(n):
                if j != source and R[j] < R[source] and t - last_prog[j] >= window:
                    deadlock = 1
                    deadlock_slot = t
                    break
    if trace_on:
        for j in range(n):
            R_tr[T, j] = R[j]
    for j in range(n):
        R_out[j] = R[j]
    return deadlock, deadlock_slot, max_sumX


if HAVE_NUMBA:
    pistar_loop_numba = njit(cache=True)(_pistar_loop)
    pirand_loop_numba = njit(cache=True)(_pirand_loop)
    pitree_loop_numba = njit(cache=True)(_pitree_loop)


# --- vectorized numpy fallback ---------------------------------------------


def _deficits_numpy(R, source, tail, it_flat, it_off, n):
    X = np.zeros(n, dtype=np.int64)
    istar = np.full(n, -1, dtype=np.int64)
    for j in range(n):
        if j == source:
            continue
        seg = it_flat[it_off[j]: it_off[j + 1]]
        if seg.size == 0:
            continue
        q = R[tail[seg]] - R[j]
        i = int(np.argmin(q))  # first minimum: (tail, edge) tie break
        X[j] = q[i]
        istar[j] = tail[seg[i]]
    return X, istar


def _serve_numpy(
    R, X, bits, source, tail, head, cap, ie_flat, ie_off, n, deliv, t, last_prog,
    trace_on, pulls_row, flow_row,
):
    E = cap.shape[0]
    active_cap = cap * bits
    insum = np.bincount(head, weights=active_cap, minlength=n).astype(np.int64)
    insum[source] = 0
    take = np.minimum(X, insum)
    np.clip(take, 0, None, out=take)
    take[source] = 0
    incap_add = insum
    for j in range(n):
        tk = int(take[j])
        if tk <= 0:
            continue
        deliv[j, R[j]: R[j] + tk] = t
        rem = tk
        for p in range(ie_off[j], ie_off[j + 1]):
            k = ie_flat[p]
            if bits[k] and rem > 0:
                f = min(int(cap[k]), rem)
                if trace_on:
                    flow_row[k] = f
                rem -= f
        last_prog[j] = t
    if trace_on:
        pulls_row[:] = take
    R += take
    return incap_add


def pistar_loop_numpy(
    T, n, source, tail, head, cap, ie_flat, ie_off, it_flat, it_off,
    act_mat, model_none, arrivals, window, deliv, sumX, incap, R_out, last_prog,
    trace_on, R_tr, X_tr, act_tr, pulls_tr, flow_tr,
):
    E = cap.shape[0]
    R = np.zeros(n, dtype=np.int64)
    nonsource = np.array([j for j in range(n) if j != source], dtype=np.int64)
    deadlock = 0
    deadlock_slot = -1
    max_sumX = 0
    for t in range(T):
        if trace_on:
            R_tr[t] = R
        X, istar = _deficits_numpy(R, source, tail, it_flat, it_off, n)
        s = int(X[nonsource].sum())
        sumX[t] = s
        max_sumX = max(max_sumX, s)
        if trace_on:
            X_tr[t] = X
        SK = np.zeros(n, dtype=np.int64)
        valid = nonsource[istar[nonsource] >= 0]
        np.add.at(SK, istar[valid], X[valid])
        Wn = np.clip(X - SK, 0, None)
        Wn[source] = 0
        scores = cap * Wn[head]
        if model_none:
            bits = (scores > 0).astype(np.int64)
        else:
            vals = act_mat @ scores
            bits = act_mat[int(np.argmax(vals))].astype(np.int64)
        if trace_on:
            act_tr[t] = bits
        add = _serve_numpy(
            R, X, bits, source, tail, head, cap, ie_flat, ie_off, n, deliv, t,
            last_prog, trace_on,
            pulls_tr[t] if trace_on else None, flow_tr[t] if trace_on else None,
        )
        incap += add
        R[source] += arrivals[t]
        if deadlock == 0:
            starved = (R[nonsource] < R[source]) & (t - last_prog[nonsource] >= window)
            if starved.any():
                deadlock = 1
                deadlock_slot = t
    if trace_on:
        R_tr[T] = R
    R_out[:] = R
    return deadlock, deadlock_slot, max_sumX


def pirand_loop_numpy(
    T, n, source, tail, head, cap, ie_flat, ie_off, it_flat, it_off,
    act_mat, choice, keep_u, q_keep, arrivals, window,
    deliv, sumX, incap, R_out, last_prog,
    trace_on, R_tr, X_tr, act_tr, pulls_tr, flow_tr,
):
    R = np.zeros(n, dtype=np.int64)
    nonsource = np.array([j for j in range(n) if j != source], dtype=np.int64)
    head_is_source = head == source
    deadlock = 0
    deadlock_slot = -1
    max_sumX = 0
    for t in range(T):
        if trace_on:
            R_tr[t] = R
        X, _ = _deficits_numpy(R, source, tail, it_flat, it_off, n)
        s = int(X[nonsource].sum())
        sumX[t] = s
        max_sumX = max(max_sumX, s)
        if trace_on:
            X_tr[t] = X
        chosen = act_mat[int(choice[t])]
        kept = head_is_source | (keep_u[t] < q_keep[head])
        bits = (chosen.astype(bool) & kept).astype(np.int64)
        if trace_on:
            act_tr[t] = bits
        add = _serve_numpy(
            R, X, bits, source, tail, head, cap, ie_flat, ie_off, n, deliv, t,
            last_prog, trace_on,
            pulls_tr[t] if trace_on else None, flow_tr[t] if trace_on else None,
        )
        incap += add
        R[source] += arrivals[t]
        if deadlock == 0:
            starved = (R[nonsource] < R[source]) & (t - last_prog[nonsource] >= window)
            if starved.any():
                deadlock = 1
                deadlock_slot = t
    if trace_on:
        R_tr[T] = R
    R_out[:] = R
    return deadlock, deadlock_slot, max_sumX


def pitree_loop_numpy(
    T, n, source, tail, head, cap, it_flat, it_off,
    act_mat, model_none,
    tr_edge, tr_off, tree_of, ch_flat, ch_off, n_child, rt_flat, rt_off,
    e2l_flat, e2l_off, arrivals, window,
    asg, deliv, sumX, incap, R_out, last_prog,
    trace_on, R_tr, X_tr, act_tr, pulls_tr, flow_tr,
):
    E = cap.shape[0]
    K = tr_off.shape[0] - 1
    L = tr_edge.shape[0]
    R = np.zeros(n, dtype=np.int64)
    nonsource = np.array([j for j in range(n) if j != source], dtype=np.int64)
    qlo = np.zeros(L, dtype=np.int64)
    qhi = np.zeros(L, dtype=np.int64)
    asg_len = np.zeros(K, dtype=np.int64)
    next_pkt = 0
    deadlock = 0
    deadlock_slot = -1
    max_sumX = 0
    for t in range(T):
        if trace_on:
            R_tr[t] = R
        X, _ = _deficits_numpy(R, source, tail, it_flat, it_off, n)
        s = int(X[nonsource].sum())
        sumX[t] = s
        max_sumX = max(max_sumX, s)
        if trace_on:
            X_tr[t] = X
        depth = qhi - qlo
        diff = depth.copy()
        for li in range(L):
            for p in range(ch_off[li], ch_off[li + 1]):
                diff[li] -= depth[ch_flat[p]]
        dcur = np.clip(diff, 0, None)
        wacc = np.zeros(E, dtype=np.int64)
        np.maximum.at(wacc, tr_edge, dcur)
        wacc *= cap
        if model_none:
            bits = (wacc > 0).astype(np.int64)
        else:
            vals = act_mat @ wacc
            bits = act_mat[int(np.argmax(vals))].astype(np.int64)
        if trace_on:
            act_tr[t] = bits
        his = qhi.copy()
        for e in range(E):
            if not bits[e]:
                continue
            budget = int(cap[e])
            hd = int(head[e])
            moved = 0
            # decreasing slot-start differential, positive only; ties to
            # the lower tree index (e2l segments are tree-ordered)
            seg = e2l_flat[e2l_off[e]: e2l_off[e + 1]]
            order = seg[np.argsort(-dcur[seg], kind="stable")]
            for li in order:
                if budget <= 0 or dcur[li] <= 0:
                    break
                li = int(li)
                k = int(tree_of[li])
                avail = int(his[li] - qlo[li])
                take = min(avail, budget)
                if take <= 0:
                    continue
                pkts = asg[k, qlo[li]: qlo[li] + take]
                deliv[hd, pkts] = t
                for cc in range(ch_off[li], ch_off[li + 1]):
                    qhi[ch_flat[cc]] += take
                qlo[li] += take
                budget -= take
                moved += take
            if moved > 0:
                if trace_on:
                    flow_tr[t, e] = moved
                    pulls_tr[t, hd] += moved
                R[hd] += moved
                last_prog[hd] = t
        for _ in range(int(arrivals[t])):
            root_depth = qhi - qlo
            bk = 0
            best_rq = int(root_depth[rt_flat[rt_off[0]: rt_off[1]]].sum())
            for k in range(1, K):
                rq = int(root_depth[rt_flat[rt_off[k]: rt_off[k + 1]]].sum())
                if rq < best_rq:
                    best_rq = rq
                    bk = k
            asg[bk, asg_len[bk]] = next_pkt
            asg_len[bk] += 1
            qhi[rt_flat[rt_off[bk]: rt_off[bk + 1]]] += 1
            next_pkt += 1
            R[source] += 1
        if deadlock == 0:
            starved = (R[nonsource] < R[source]) & (t - last_prog[nonsource] >= window)
            if starved.any():
                deadlock = 1
                deadlock_slot = t
    if trace_on:
        R_tr[T] = R
    R_out[:] = R
    return deadlock, deadlock_slot, max_sumX
