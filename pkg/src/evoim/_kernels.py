"""Compiled inner loops: reverse-reachable set sampling and greedy max-coverage."""
from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _grow(a, need):
    cap = a.shape[0]
    while cap < need:
        cap *= 2
    out = np.empty(cap, dtype=a.dtype)
    out[: a.shape[0]] = a
    return out


@njit(cache=True)
def sample_rr_batch(in_ptr, in_src, in_eid, prob, roots, seed):
    """Reverse BFS from each root over independently live in-edges.

    Returns (members, offsets); set ``i`` is ``members[offsets[i]:offsets[i+1]]``
    with its root first. numba's generator is reseeded so a batch is a pure
    function of its inputs.
    """
    np.random.seed(seed)
    n = in_ptr.shape[0] - 1
    stamp = np.zeros(n, dtype=np.int64)
    members = np.empty(max(16, 2 * roots.shape[0]), dtype=np.int32)
    offsets = np.empty(roots.shape[0] + 1, dtype=np.int64)
    queue = np.empty(n, dtype=np.int32)
    pos = 0
    for i in range(roots.shape[0]):
        offsets[i] = pos
        r = roots[i]
        mark = i + 1
        stamp[r] = mark
        head = 0
        tail = 1
        queue[0] = r
        while head < tail:
            v = queue[head]
            head += 1
            for j in range(in_ptr[v], in_ptr[v + 1]):
                u = in_src[j]
                if stamp[u] == mark:
                    continue
                if np.random.random() < prob[in_eid[j]]:
                    stamp[u] = mark
                    queue[tail] = u
                    tail += 1
        if pos + tail > members.shape[0]:
            members = _grow(members, pos + tail)
        for j in range(tail):
            members[pos + j] = queue[j]
        pos += tail
    offsets[roots.shape[0]] = pos
    return members[:pos].copy(), offsets


@njit(cache=True)
def greedy_cover(members, offsets, weights, n, K, pad_weight, allowed):
    """Greedy weighted max-coverage with exact incremental marginal gains.

    Only ``allowed`` nodes may be picked. Ties go to the lowest node id
    (within a relative tolerance). Once no node adds coverage, remaining
    picks are the highest ``pad_weight`` nodes.
    Returns (seeds, covered weight).
    """
    nsets = offsets.shape[0] - 1
    gain = np.zeros(n)
    count = np.zeros(n + 1, dtype=np.int64)
    for s in range(nsets):
        for j in range(offsets[s], offsets[s + 1]):
            v = members[j]
            gain[v] += weights[s]
            count[v + 1] += 1
    ptr = np.cumsum(count)
    fill = ptr[:-1].copy()
    sets_of = np.empty(ptr[n], dtype=np.int64)
    for s in range(nsets):
        for j in range(offsets[s], offsets[s + 1]):
            v = members[j]
            sets_of[fill[v]] = s
            fill[v] += 1

    covered = np.zeros(nsets, dtype=np.bool_)
    chosen = ~allowed
    seeds = np.empty(K, dtype=np.int64)
    total = 0.0
    k = 0
    while k < K:
        mx = -1.0
        for v in range(n):
            if not chosen[v] and gain[v] > mx:
                mx = gain[v]
        tol = 1e-9 * max(1.0, mx)
        if mx <= tol:
            break
        best = -1
        for v in range(n):
            if not chosen[v] and gain[v] >= mx - tol:
                best = v
                break
        chosen[best] = True
        seeds[k] = best
        k += 1
        total += gain[best]
        for j in range(ptr[best], ptr[best + 1]):
            s = sets_of[j]
            if covered[s]:
                continue
            covered[s] = True
            w = weights[s]
            for t in range(offsets[s], offsets[s + 1]):
                gain[members[t]] -= w
    while k < K:
        best = -1
        bw = -np.inf
        for v in range(n):
            if not chosen[v] and pad_weight[v] > bw:
                bw = pad_weight[v]
                best = v
        if best < 0:
            break
        chosen[best] = True
        seeds[k] = best
        k += 1
    return seeds[:k], total


@njit(cache=True)
def covered_weight(members, offsets, weights, in_seed):
    total = 0.0
    for s in range(offsets.shape[0] - 1):
        for j in range(offsets[s], offsets[s + 1]):
            if in_seed[members[j]]:
                total += weights[s]
                break
    return total
