"""Compiled bitset kernels for the partite clique search.

Candidate sets live in uint64 words, bit i of word j = node 64*j + i.  The
same search core serves both the compact (reduced) graph and the full-width
(unreduced) graph; only the node-id space and neighborhood rows differ.

The search walks an explicit stack but reproduces the recursive procedure
call for call: entering a level counts one call, a completed assignment
counts one call, the deeper-empty prune fires per entered level, and the
first-hit exit unwinds without further counting.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_M1 = np.uint64(0x5555555555555555)
_M2 = np.uint64(0x3333333333333333)
_M4 = np.uint64(0x0F0F0F0F0F0F0F0F)
_H01 = np.uint64(0x0101010101010101)
_ONE = np.uint64(1)
_S1 = np.uint64(1)
_S2 = np.uint64(2)
_S4 = np.uint64(4)
_S56 = np.uint64(56)
_S6 = np.uint64(6)
_MASK6 = np.uint64(63)


@njit(cache=True)
def popcount64(x):
    x = x - ((x >> _S1) & _M1)
    x = (x & _M2) + ((x >> _S2) & _M2)
    x = (x + (x >> _S4)) & _M4
    return np.int64((x * _H01) >> _S56)


@njit(cache=True)
def _test_bit(words, row, bit):
    return (words[row, bit >> 6] >> np.uint64(bit & 63)) & _ONE != 0


@njit(cache=True)
def _extract_sorted(mask_row, degrees, sort_nodes, cand_row):
    """Write the set bits of mask_row into cand_row, ordered for expansion.

    Base order is ascending node id; with sorting on, a stable insertion
    sort by degree keeps ascending id as the tie-break.
    Returns the number of candidates.
    """
    count = 0
    for w in range(mask_row.shape[0]):
        x = mask_row[w]
        base = w << 6
        while x != 0:
            lsb = x & (~x + _ONE)
            cand_row[count] = base + popcount64(lsb - _ONE)
            count += 1
            x ^= lsb
    if sort_nodes != 0:
        for i in range(1, count):
            node = cand_row[i]
            key = degrees[node]
            j = i - 1
            if sort_nodes > 0:
                while j >= 0 and degrees[cand_row[j]] > key:
                    cand_row[j + 1] = cand_row[j]
                    j -= 1
            else:
                while j >= 0 and degrees[cand_row[j]] < key:
                    cand_row[j + 1] = cand_row[j]
                    j -= 1
            cand_row[j + 1] = node
    return count


@njit(cache=True)
def _sort_levels(frame, start, n_levels, n_words, mode):
    """Stable insertion sort of candidate-set rows start..n_levels-1 by
    popcount (ascending for mode>0, descending for mode<0)."""
    keys = np.empty(n_levels, dtype=np.int64)
    for i in range(start, n_levels):
        k = np.int64(0)
        for w in range(n_words):
            k += popcount64(frame[i, w])
        keys[i] = k
    tmp = np.empty(n_words, dtype=np.uint64)
    for i in range(start + 1, n_levels):
        ki = keys[i]
        j = i - 1
        while j >= start and ((mode > 0 and keys[j] > ki) or (mode < 0 and keys[j] < ki)):
            j -= 1
        if j + 1 != i:
            for w in range(n_words):
                tmp[w] = frame[i, w]
            for r in range(i, j + 1, -1):
                keys[r] = keys[r - 1]
                for w in range(n_words):
                    frame[r, w] = frame[r - 1, w]
            keys[j + 1] = ki
            for w in range(n_words):
                frame[j + 1, w] = tmp[w]


@njit(cache=True)
def _search_core_buf(masks0, nbr, degrees, sort_nodes, sort_clusters, find_all, out,
                     stack, cand, cand_n, cand_pos, deeper_ok, q_path):
    """search_core body over caller-owned scratch buffers (first-dimension
    sizes may exceed n_levels; only the leading n_levels rows are used)."""
    n_levels, n_words = masks0.shape
    if n_levels == 0:
        return 1, 1, 0  # the empty assignment is complete on entry

    for i in range(n_levels):
        for w in range(n_words):
            stack[0, i, w] = masks0[i, w]
    calls = 1
    found = 0
    cand_n[0] = _extract_sorted(stack[0, 0], degrees, sort_nodes, cand[0])
    cand_pos[0] = 0
    ok = np.uint8(1)
    for i in range(1, n_levels):
        empty = True
        for w in range(n_words):
            if stack[0, i, w] != 0:
                empty = False
                break
        if empty:
            ok = np.uint8(0)
            break
    deeper_ok[0] = ok

    depth = 0
    while depth >= 0:
        if deeper_ok[depth] == 0 or cand_pos[depth] >= cand_n[depth]:
            depth -= 1
            continue
        v = cand[depth, cand_pos[depth]]
        cand_pos[depth] += 1
        q_path[depth] = v
        child = depth + 1
        calls += 1
        if child == n_levels:
            if found >= out.shape[0]:
                return found, calls, 1
            for i in range(n_levels):
                out[found, i] = q_path[i]
            found += 1
            if not find_all:
                return found, calls, 0
            continue
        for i in range(child, n_levels):
            for w in range(n_words):
                stack[child, i, w] = stack[depth, i, w] & nbr[v, w]
        if sort_clusters != 0:
            _sort_levels(stack[child], child, n_levels, n_words, sort_clusters)
        cand_n[child] = _extract_sorted(stack[child, child], degrees, sort_nodes, cand[child])
        cand_pos[child] = 0
        ok = np.uint8(1)
        for i in range(child + 1, n_levels):
            empty = True
            for w in range(n_words):
                if stack[child, i, w] != 0:
                    empty = False
                    break
            if empty:
                ok = np.uint8(0)
                break
        deeper_ok[child] = ok
        depth = child
    return found, calls, 0


@njit(cache=True)
def search_core(masks0, nbr, degrees, sort_nodes, sort_clusters, find_all, cand_width, out):
    """Branch-and-prune search for one-node-per-level cliques.

    masks0: (n_levels, n_words) initial candidate sets, already in the
        caller's intended initial level order.
    nbr: neighborhood bitset rows indexed by node id.
    out: (max_cliques, n_levels) buffer receiving found cliques (node ids).

    Returns (found, calls, overflow).  With find_all false the search stops
    at the first complete assignment; overflow means out filled up first.
    """
    n_levels, n_words = masks0.shape
    if n_levels == 0:
        return 1, 1, 0
    stack = np.empty((n_levels + 1, n_levels, n_words), dtype=np.uint64)
    cand = np.empty((n_levels, cand_width), dtype=np.int64)
    cand_n = np.empty(n_levels, dtype=np.int64)
    cand_pos = np.empty(n_levels, dtype=np.int64)
    deeper_ok = np.empty(n_levels, dtype=np.uint8)
    q_path = np.empty(n_levels, dtype=np.int64)
    return _search_core_buf(
        masks0, nbr, degrees, sort_nodes, sort_clusters, find_all, out,
        stack, cand, cand_n, cand_pos, deeper_ok, q_path,
    )


@njit(cache=True)
def reduce_state(v, known, C, L, w_packed):
    """Classify clusters of a converged state and pick the surviving nodes.

    known[c] is the probe's flat neuron id, or -1 for erased clusters.
    Determined clusters (known, or erased with one active neuron) supply
    fixed ids; the rest keep their active neurons, minus any not adjacent
    to every fixed id.

    Returns (node_ids, offsets, cluster_ids, fixed_ids, fixed_ok, err):
      node_ids in canonical order (clusters by index, nodes ascending),
      offsets (len C~+1) partitioning node_ids, cluster_ids the original
      cluster index per retained cluster, err=1 when an erased cluster has
      zero active neurons.
    """
    counts = np.zeros(C, dtype=np.int64)
    for c in range(C):
        if known[c] >= 0:
            continue
        base = c * L
        cnt = np.int64(0)
        for l in range(L):
            if v[base + l] != 0:
                cnt += 1
        counts[c] = cnt

    fixed_ids = np.empty(C, dtype=np.int64)
    n_fixed = 0
    n_retained = 0
    err = 0
    for c in range(C):
        if known[c] >= 0:
            fixed_ids[n_fixed] = known[c]
            n_fixed += 1
        elif counts[c] == 0:
            err = 1
        elif counts[c] == 1:
            base = c * L
            for l in range(L):
                if v[base + l] != 0:
                    fixed_ids[n_fixed] = base + l
                    break
            n_fixed += 1
        else:
            n_retained += 1
    fixed_ids = fixed_ids[:n_fixed]
    if err != 0:
        return (
            np.empty(0, dtype=np.int64),
            np.zeros(1, dtype=np.int64),
            np.empty(0, dtype=np.int64),
            fixed_ids,
            np.uint8(0),
            np.uint8(1),
        )

    fixed_ok = np.uint8(1)
    for i in range(n_fixed):
        for j in range(i + 1, n_fixed):
            if not _test_bit(w_packed, fixed_ids[i], fixed_ids[j]):
                fixed_ok = np.uint8(0)

    node_ids = np.empty(C * L, dtype=np.int64)
    offsets = np.empty(n_retained + 1, dtype=np.int64)
    cluster_ids = np.empty(n_retained, dtype=np.int64)
    m = 0
    k = 0
    offsets[0] = 0
    for c in range(C):
        if known[c] >= 0 or counts[c] <= 1:
            continue
        base = c * L
        for l in range(L):
            i = base + l
            if v[i] == 0:
                continue
            keep = True
            for f in range(n_fixed):
                if not _test_bit(w_packed, i, fixed_ids[f]):
                    keep = False
                    break
            if keep:
                node_ids[m] = i
                m += 1
        cluster_ids[k] = c
        k += 1
        offsets[k] = m
    return node_ids[:m], offsets, cluster_ids, fixed_ids, fixed_ok, np.uint8(0)


@njit(cache=True)
def _initial_level_order(level_counts, mode):
    """Stable order of levels by size (ascending mode>0, descending mode<0),
    original order when mode is 0."""
    k = level_counts.shape[0]
    order = np.empty(k, dtype=np.int64)
    for i in range(k):
        order[i] = i
    if mode != 0:
        for i in range(1, k):
            li = order[i]
            key = level_counts[li]
            j = i - 1
            if mode > 0:
                while j >= 0 and level_counts[order[j]] > key:
                    order[j + 1] = order[j]
                    j -= 1
            else:
                while j >= 0 and level_counts[order[j]] < key:
                    order[j + 1] = order[j]
                    j -= 1
            order[j + 1] = li
    return order


@njit(cache=True)
def search_compact(node_ids, offsets, w_packed, sort_nodes, sort_clusters, find_all, out):
    """Search the compact graph described by node_ids/offsets.

    Builds the compact adjacency (gathering bits from the full matrix),
    per-node degrees, and the initial level order, then runs search_core.
    out receives cliques as compact indices into node_ids.
    """
    m = node_ids.shape[0]
    n_levels = offsets.shape[0] - 1
    mw = (m + 63) // 64 if m > 0 else 1
    adj = np.zeros((m, mw), dtype=np.uint64)
    degrees = np.zeros(m, dtype=np.int64)
    for i in range(m):
        a = node_ids[i]
        for j in range(i + 1, m):
            if _test_bit(w_packed, a, node_ids[j]):
                adj[i, j >> 6] |= _ONE << np.uint64(j & 63)
                adj[j, i >> 6] |= _ONE << np.uint64(i & 63)
                degrees[i] += 1
                degrees[j] += 1

    counts = np.empty(n_levels, dtype=np.int64)
    for k in range(n_levels):
        counts[k] = offsets[k + 1] - offsets[k]
    order = _initial_level_order(counts, sort_clusters)
    masks0 = np.zeros((n_levels, mw), dtype=np.uint64)
    max_level = 0
    for pos in range(n_levels):
        k = order[pos]
        for i in range(offsets[k], offsets[k + 1]):
            masks0[pos, i >> 6] |= _ONE << np.uint64(i & 63)
        if counts[k] > max_level:
            max_level = counts[k]
    if max_level == 0:
        max_level = 1
    return search_core(masks0, adj, degrees, sort_nodes, sort_clusters, find_all, max_level, out)


@njit(cache=True)
def search_words(masks_rows, level_counts, adj_words, degrees, sort_nodes, sort_clusters, find_all, out):
    """Search prepacked level masks/adjacency (graphs not backed by a full
    weight matrix).  Applies the initial level ordering, then search_core."""
    n_levels, n_words = masks_rows.shape
    order = _initial_level_order(level_counts, sort_clusters)
    masks0 = np.empty((n_levels, n_words), dtype=np.uint64)
    max_level = 1
    for pos in range(n_levels):
        k = order[pos]
        for w in range(n_words):
            masks0[pos, w] = masks_rows[k, w]
        if level_counts[k] > max_level:
            max_level = level_counts[k]
    return search_core(masks0, adj_words, degrees, sort_nodes, sort_clusters, find_all, max_level, out)


@njit(cache=True)
def batch_reduced_search(states, known, C, L, w_packed, sort_nodes, sort_clusters, messages, calls):
    """Reduce + search each converged state in one compiled pass.

    states: (P, n) uint8; known: (P, C) probe flat ids or -1.
    messages[p] receives the winning flat id per cluster (-1 everywhere when
    no clique completes the state); calls[p] the search's procedure entries
    (0 when the fixed assignment already fails and no search runs).
    """
    P = states.shape[0]
    for p in range(P):
        for c in range(C):
            messages[p, c] = -1
        calls[p] = 0
        node_ids, offsets, cluster_ids, fixed_ids, fixed_ok, err = reduce_state(
            states[p], known[p], C, L, w_packed
        )
        if err == 1 or fixed_ok == 0:
            continue
        k = offsets.shape[0] - 1
        out = np.empty((1, k), dtype=np.int64)
        found, ncalls, _ = search_compact(
            node_ids, offsets, w_packed, sort_nodes, sort_clusters, False, out
        )
        calls[p] = ncalls
        if found == 0:
            continue
        for i in range(fixed_ids.shape[0]):
            f = fixed_ids[i]
            messages[p, f // L] = f
        for i in range(k):
            flat = node_ids[out[0, i]]
            messages[p, flat // L] = flat


@njit(cache=True)
def batch_full_search(states, known, C, L, w_packed, sort_nodes, sort_clusters, messages, calls):
    """Search each converged state without reduction (same batch protocol
    as batch_reduced_search)."""
    P = states.shape[0]
    for p in range(P):
        for c in range(C):
            messages[p, c] = -1
        out = np.empty((1, C), dtype=np.int64)
        found, ncalls, _ = search_full(
            states[p], known[p], C, L, w_packed, sort_nodes, sort_clusters, False, out
        )
        calls[p] = ncalls
        if found != 0:
            for i in range(C):
                flat = out[0, i]
                messages[p, flat // L] = flat


@njit(cache=True)
def _extract_dense(mask_row, degrees, sort_nodes, cand_row):
    """_extract_sorted over a byte mask: candidates ascending, then the
    same stable insertion sort by degree."""
    count = 0
    for j in range(mask_row.shape[0]):
        if mask_row[j] != 0:
            cand_row[count] = j
            count += 1
    if sort_nodes != 0:
        for i in range(1, count):
            node = cand_row[i]
            key = degrees[node]
            j = i - 1
            if sort_nodes > 0:
                while j >= 0 and degrees[cand_row[j]] > key:
                    cand_row[j + 1] = cand_row[j]
                    j -= 1
            else:
                while j >= 0 and degrees[cand_row[j]] < key:
                    cand_row[j + 1] = cand_row[j]
                    j -= 1
            cand_row[j + 1] = node
    return count


@njit(cache=True)
def _sort_levels_dense(frame, start, n_levels, width, mode):
    """_sort_levels over byte-mask rows (keys are row sums)."""
    keys = np.empty(n_levels, dtype=np.int64)
    for i in range(start, n_levels):
        k = np.int64(0)
        for j in range(width):
            k += frame[i, j]
        keys[i] = k
    tmp = np.empty(width, dtype=np.uint8)
    for i in range(start + 1, n_levels):
        ki = keys[i]
        j = i - 1
        while j >= start and ((mode > 0 and keys[j] > ki) or (mode < 0 and keys[j] < ki)):
            j -= 1
        if j + 1 != i:
            for w in range(width):
                tmp[w] = frame[i, w]
            for r in range(i, j + 1, -1):
                keys[r] = keys[r - 1]
                for w in range(width):
                    frame[r, w] = frame[r - 1, w]
            keys[j + 1] = ki
            for w in range(width):
                frame[j + 1, w] = tmp[w]


@njit(cache=True)
def _search_dense_buf(masks0, nbr, degrees, sort_nodes, sort_clusters, out,
                      stack, cand, cand_n, cand_pos, deeper_ok, q_path):
    """search_core over dense byte masks and adjacency rows: the same
    procedure call for call, with set membership one byte per node, so
    per-level cost tracks the graph's width.  Find-first only."""
    n_levels, width = masks0.shape
    if n_levels == 0:
        return 1, 1
    for i in range(n_levels):
        for j in range(width):
            stack[0, i, j] = masks0[i, j]
    calls = 1
    cand_n[0] = _extract_dense(stack[0, 0], degrees, sort_nodes, cand[0])
    cand_pos[0] = 0
    ok = np.uint8(1)
    for i in range(1, n_levels):
        empty = True
        for j in range(width):
            if stack[0, i, j] != 0:
                empty = False
                break
        if empty:
            ok = np.uint8(0)
            break
    deeper_ok[0] = ok

    depth = 0
    while depth >= 0:
        if deeper_ok[depth] == 0 or cand_pos[depth] >= cand_n[depth]:
            depth -= 1
            continue
        v = cand[depth, cand_pos[depth]]
        cand_pos[depth] += 1
        q_path[depth] = v
        child = depth + 1
        calls += 1
        if child == n_levels:
            for i in range(n_levels):
                out[0, i] = q_path[i]
            return 1, calls
        for i in range(child, n_levels):
            for j in range(width):
                stack[child, i, j] = stack[depth, i, j] & nbr[v, j]
        if sort_clusters != 0:
            _sort_levels_dense(stack[child], child, n_levels, width, sort_clusters)
        cand_n[child] = _extract_dense(stack[child, child], degrees, sort_nodes, cand[child])
        cand_pos[child] = 0
        ok = np.uint8(1)
        for i in range(child + 1, n_levels):
            empty = True
            for j in range(width):
                if stack[child, i, j] != 0:
                    empty = False
                    break
            if empty:
                ok = np.uint8(0)
                break
        deeper_ok[child] = ok
        depth = child
    return 0, calls


@njit(cache=True)
def dense_prep_full(states, known, C, L, w, masks, counts, degrees):
    """Per-probe byte-mask levels, level sizes and active-subgraph degrees
    over the unreduced network, hoisted out of the timed solver pass."""
    P = states.shape[0]
    n = C * L
    for p in range(P):
        for c in range(C):
            base = c * L
            for l in range(L):
                masks[p, c, base + l] = 0
            if known[p, c] >= 0:
                masks[p, c, known[p, c]] = 1
                counts[p, c] = 1
            else:
                cnt = np.int64(0)
                for l in range(L):
                    i = base + l
                    if states[p, i] != 0:
                        masks[p, c, i] = 1
                        cnt += 1
                counts[p, c] = cnt
        for i in range(n):
            degrees[p, i] = 0
        for c in range(C):
            base = c * L
            for l in range(L):
                i = base + l
                if masks[p, c, i] == 0:
                    continue
                d = np.int64(0)
                for cc in range(C):
                    bb = cc * L
                    for ll in range(L):
                        jj = bb + ll
                        if masks[p, cc, jj] != 0 and w[i, jj] != 0:
                            d += 1
                degrees[p, i] = d


@njit(cache=True)
def dense_solver_full(masks, counts, degrees, w, C, L, sort_nodes, sort_clusters,
                      messages, calls):
    """Timed tree walk over the prepared unreduced graphs (scratch shared
    across probes; graph width is the whole network)."""
    P = masks.shape[0]
    n = masks.shape[2]
    cmax = 1
    for p in range(P):
        for c in range(C):
            if counts[p, c] > cmax:
                cmax = counts[p, c]
    stack = np.empty((C + 1, C, n), dtype=np.uint8)
    cand = np.empty((C, cmax), dtype=np.int64)
    cand_n = np.empty(C, dtype=np.int64)
    cand_pos = np.empty(C, dtype=np.int64)
    deeper_ok = np.empty(C, dtype=np.uint8)
    q_path = np.empty(C, dtype=np.int64)
    masks0 = np.empty((C, n), dtype=np.uint8)
    out = np.empty((1, C), dtype=np.int64)
    for p in range(P):
        for c in range(C):
            messages[p, c] = -1
        order = _initial_level_order(counts[p], sort_clusters)
        for pos in range(C):
            k = order[pos]
            for j in range(n):
                masks0[pos, j] = masks[p, k, j]
        found, ncalls = _search_dense_buf(
            masks0, w, degrees[p], sort_nodes, sort_clusters, out,
            stack, cand, cand_n, cand_pos, deeper_ok, q_path,
        )
        calls[p] = ncalls
        if found != 0:
            for i in range(C):
                flat = out[0, i]
                messages[p, flat // L] = flat


@njit(cache=True)
def dense_solver_reduced(n_levels, lvl_counts, lvl_masks, adj, degrees,
                         node_pad, fixed_pad, skip, L,
                         sort_nodes, sort_clusters, messages, calls):
    """Timed tree walk over the prepared reduced graphs.

    Padded per-probe inputs; every mask row keeps the batch's padded width
    (padding bytes are zero, so they cost byte ops but never candidates)
    to preserve contiguity.  skip marks probes whose fixed assignment
    already failed: they keep -1 messages and 0 calls, matching the
    unbatched path.
    """
    P = n_levels.shape[0]
    C = messages.shape[1]
    kmax = adj.shape[1]
    lmax = 1
    cmax = 1
    for p in range(P):
        if n_levels[p] > lmax:
            lmax = n_levels[p]
        for k in range(n_levels[p]):
            if lvl_counts[p, k] > cmax:
                cmax = lvl_counts[p, k]
    stack = np.empty((lmax + 1, lmax, kmax), dtype=np.uint8)
    cand = np.empty((lmax, cmax), dtype=np.int64)
    cand_n = np.empty(lmax, dtype=np.int64)
    cand_pos = np.empty(lmax, dtype=np.int64)
    deeper_ok = np.empty(lmax, dtype=np.uint8)
    q_path = np.empty(lmax, dtype=np.int64)
    masks0 = np.empty((lmax, kmax), dtype=np.uint8)
    out = np.empty((1, lmax), dtype=np.int64)
    for p in range(P):
        for c in range(C):
            messages[p, c] = -1
        calls[p] = 0
        if skip[p] != 0:
            continue
        nl = n_levels[p]
        order = _initial_level_order(lvl_counts[p, :nl], sort_clusters)
        for pos in range(nl):
            k = order[pos]
            for j in range(kmax):
                masks0[pos, j] = lvl_masks[p, k, j]
        found, ncalls = _search_dense_buf(
            masks0[:nl], adj[p], degrees[p], sort_nodes, sort_clusters,
            out[:, :nl], stack, cand, cand_n, cand_pos, deeper_ok, q_path,
        )
        calls[p] = ncalls
        if found == 0:
            continue
        for i in range(fixed_pad.shape[1]):
            f = fixed_pad[p, i]
            if f < 0:
                break
            messages[p, f // L] = f
        for i in range(nl):
            flat = node_pad[p, out[0, i]]
            messages[p, flat // L] = flat


@njit(cache=True)
def search_full(v, known, C, L, w_packed, sort_nodes, sort_clusters, find_all, out):
    """Search the converged state without reduction.

    Every cluster becomes a level over full-width masks: known clusters a
    single clamped bit, erased clusters their active bits.  Degrees count
    active neighbors.  out receives cliques as flat neuron ids.
    """
    n = C * L
    n_words = w_packed.shape[1]
    level_masks = np.zeros((C, n_words), dtype=np.uint64)
    level_counts = np.zeros(C, dtype=np.int64)
    act = np.zeros(n_words, dtype=np.uint64)
    for c in range(C):
        if known[c] >= 0:
            b = known[c]
            level_masks[c, b >> 6] |= _ONE << np.uint64(b & 63)
            level_counts[c] = 1
        else:
            base = c * L
            cnt = np.int64(0)
            for l in range(L):
                i = base + l
                if v[i] != 0:
                    level_masks[c, i >> 6] |= _ONE << np.uint64(i & 63)
                    cnt += 1
            level_counts[c] = cnt
    for c in range(C):
        for w in range(n_words):
            act[w] |= level_masks[c, w]

    degrees = np.zeros(n, dtype=np.int64)
    for w in range(n_words):
        x = act[w]
        base = w << 6
        while x != 0:
            lsb = x & (~x + _ONE)
            i = base + popcount64(lsb - _ONE)
            d = np.int64(0)
            for ww in range(n_words):
                d += popcount64(w_packed[i, ww] & act[ww])
            degrees[i] = d
            x ^= lsb

    order = _initial_level_order(level_counts, sort_clusters)
    masks0 = np.empty((C, n_words), dtype=np.uint64)
    max_level = 1
    for pos in range(C):
        k = order[pos]
        for w in range(n_words):
            masks0[pos, w] = level_masks[k, w]
        if level_counts[k] > max_level:
            max_level = level_counts[k]
    return search_core(masks0, w_packed, degrees, sort_nodes, sort_clusters, find_all, max_level, out)
