"""Kernel correctness against plain-Python references.

The compiled search is an explicit-stack rewrite of a recursive procedure;
reference_search below IS that recursion, written with sets and lists.
Agreement is required on both the cliques found and the exact number of
procedure entries, across every sorting mode.
"""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gbnn import _kernels as K

MODES = [-1, 0, 1]


def stable_order(keys, mode):
    idx = list(range(len(keys)))
    if mode > 0:
        idx.sort(key=lambda i: keys[i])
    elif mode < 0:
        idx.sort(key=lambda i: -keys[i])
    return idx


def reference_search(level_sets, adjacency, degrees, node_sort, cluster_sort, find_all):
    """Recursive one-node-per-level clique search.

    Entering the procedure counts one call; a complete assignment is a
    call that records and returns; any empty deeper level aborts the
    current call; candidates expand in ascending id, optionally stably
    reordered by degree; after intersecting, deeper levels are stably
    reordered by size.
    """
    k = len(level_sets)
    calls = 0
    found = []
    stop = False

    def order_nodes(nodes):
        nodes = sorted(nodes)
        if node_sort > 0:
            nodes.sort(key=lambda x: degrees[x])
        elif node_sort < 0:
            nodes.sort(key=lambda x: -degrees[x])
        return nodes

    def rec(levels, depth, q):
        nonlocal calls, stop
        calls += 1
        if depth == k:
            found.append(tuple(sorted(q)))
            if not find_all:
                stop = True
            return
        remaining = order_nodes(levels[depth])
        while remaining:
            if any(not levels[i] for i in range(depth + 1, k)):
                return
            v = remaining.pop(0)
            child = [
                {u for u in levels[i] if adjacency[v][u]} if i > depth else set()
                for i in range(k)
            ]
            if cluster_sort != 0:
                deeper = child[depth + 1 :]
                order = stable_order([len(s) for s in deeper], cluster_sort)
                child[depth + 1 :] = [deeper[i] for i in order]
            rec(child, depth + 1, q + [v])
            if stop:
                return

    order = stable_order([len(s) for s in level_sets], cluster_sort)
    rec([set(level_sets[i]) for i in order], 0, [])
    return found, calls


def random_instance(rng, max_clusters=4, max_size=5):
    k = int(rng.integers(1, max_clusters + 1))
    sizes = rng.integers(1, max_size + 1, size=k)
    offsets = np.concatenate(([0], np.cumsum(sizes)))
    m = int(offsets[-1])
    owner = np.empty(m, dtype=np.int64)
    for c in range(k):
        owner[offsets[c] : offsets[c + 1]] = c
    p = rng.choice([0.2, 0.5, 0.8])
    adjacency = np.zeros((m, m), dtype=bool)
    for a in range(m):
        for b in range(a + 1, m):
            if owner[a] != owner[b] and rng.random() < p:
                adjacency[a, b] = adjacency[b, a] = True
    level_sets = [set(range(offsets[c], offsets[c + 1])) for c in range(k)]
    return level_sets, adjacency


def pack_rows(rows_bool):
    rows_bool = np.ascontiguousarray(rows_bool, dtype=np.uint8)
    n, m = rows_bool.shape
    words = max(1, -(-m // 64))
    packed = np.packbits(rows_bool, axis=1, bitorder="little")
    padded = np.zeros((n, words * 8), dtype=np.uint8)
    padded[:, : packed.shape[1]] = packed
    return padded.view(np.uint64)


def kernel_search(level_sets, adjacency, node_sort, cluster_sort, find_all, capacity=512):
    m = adjacency.shape[0]
    k = len(level_sets)
    rows = np.zeros((k, m), dtype=bool)
    for i, s in enumerate(level_sets):
        rows[i, sorted(s)] = True
    counts = np.asarray([len(s) for s in level_sets], dtype=np.int64)
    degrees = adjacency.sum(axis=1).astype(np.int64)
    out = np.empty((capacity if find_all else 1, k), dtype=np.int64)
    found, calls, overflow = K.search_words(
        pack_rows(rows), counts, pack_rows(adjacency), degrees,
        node_sort, cluster_sort, find_all, out,
    )
    assert overflow == 0
    return [tuple(sorted(out[i])) for i in range(found)], int(calls)


def test_popcount_matches_python():
    rng = np.random.default_rng(7)
    values = rng.integers(0, 2**63, size=200, dtype=np.int64).astype(np.uint64)
    for x in [np.uint64(0), np.uint64(1), np.uint64(2**64 - 1), *values]:
        assert K.popcount64(x) == int(x).bit_count()


@given(st.integers(min_value=0, max_value=2**64 - 1))
def test_popcount_property(value):
    assert K.popcount64(np.uint64(value)) == value.bit_count()


@pytest.mark.parametrize("node_sort", MODES)
@pytest.mark.parametrize("cluster_sort", MODES)
def test_search_matches_reference(node_sort, cluster_sort):
    rng = np.random.default_rng(42 + node_sort * 3 + cluster_sort)
    for trial in range(40):
        level_sets, adjacency = random_instance(rng)
        degrees = adjacency.sum(axis=1).astype(np.int64)
        for find_all in (False, True):
            expected, expected_calls = reference_search(
                [set(s) for s in level_sets], adjacency.tolist(), degrees,
                node_sort, cluster_sort, find_all,
            )
            got, got_calls = kernel_search(
                level_sets, adjacency, node_sort, cluster_sort, find_all
            )
            assert got_calls == expected_calls, (trial, find_all)
            if find_all:
                assert sorted(got) == sorted(expected), (trial,)
            else:
                assert got == expected, (trial,)


def test_search_zero_levels_is_single_call():
    out = np.empty((1, 0), dtype=np.int64)
    found, calls, overflow = K.search_words(
        np.zeros((0, 1), dtype=np.uint64), np.zeros(0, dtype=np.int64),
        np.zeros((1, 1), dtype=np.uint64), np.zeros(1, dtype=np.int64),
        1, 1, False, out,
    )
    assert (found, calls, overflow) == (1, 1, 0)


def test_search_overflow_reports_and_refills():
    # complete 2x2x2 partite graph has 8 assignments
    m = 6
    adjacency = np.zeros((m, m), dtype=bool)
    for a in range(m):
        for b in range(m):
            if a // 2 != b // 2:
                adjacency[a, b] = True
    level_sets = [{0, 1}, {2, 3}, {4, 5}]
    small = np.empty((3, 3), dtype=np.int64)
    rows = np.zeros((3, m), dtype=bool)
    for i, s in enumerate(level_sets):
        rows[i, sorted(s)] = True
    counts = np.full(3, 2, dtype=np.int64)
    degrees = adjacency.sum(axis=1).astype(np.int64)
    found, calls, overflow = K.search_words(
        pack_rows(rows), counts, pack_rows(adjacency), degrees, 0, 0, True, small
    )
    assert overflow == 1 and found == 3
    full, _ = kernel_search(level_sets, adjacency, 0, 0, True)
    assert len(full) == 8


def reference_reduce(v, known, C, L, w):
    counts = [
        0 if known[c] >= 0 else int(v[c * L : (c + 1) * L].sum()) for c in range(C)
    ]
    fixed = []
    err = any(known[c] < 0 and counts[c] == 0 for c in range(C))
    for c in range(C):
        if known[c] >= 0:
            fixed.append(int(known[c]))
        elif counts[c] == 1:
            fixed.append(c * L + int(np.flatnonzero(v[c * L : (c + 1) * L])[0]))
    fixed_ok = all(w[a, b] for i, a in enumerate(fixed) for b in fixed[i + 1 :])
    node_ids, offsets, cluster_ids = [], [0], []
    if not err:
        for c in range(C):
            if known[c] >= 0 or counts[c] <= 1:
                continue
            for l in range(L):
                i = c * L + l
                if v[i] and all(w[i, f] for f in fixed):
                    node_ids.append(i)
            cluster_ids.append(c)
            offsets.append(len(node_ids))
    return node_ids, offsets, cluster_ids, fixed, fixed_ok, err


def test_reduce_state_matches_reference():
    rng = np.random.default_rng(11)
    for _ in range(150):
        C = int(rng.integers(2, 6))
        L = int(rng.integers(1, 6))
        n = C * L
        w = np.zeros((n, n), dtype=np.uint8)
        for a in range(n):
            for b in range(a + 1, n):
                if a // L != b // L and rng.random() < 0.5:
                    w[a, b] = w[b, a] = 1
        v = (rng.random(n) < 0.5).astype(np.uint8)
        known = np.full(C, -1, dtype=np.int64)
        for c in range(C):
            if rng.random() < 0.3:
                known[c] = c * L + int(rng.integers(L))
        node_ids, offsets, cluster_ids, fixed, fixed_ok, err = K.reduce_state(
            v, known, C, L, pack_rows(w)
        )
        r_nodes, r_off, r_cids, r_fixed, r_ok, r_err = reference_reduce(
            v, known, C, L, w
        )
        assert bool(err) == r_err
        assert list(fixed) == r_fixed
        if not r_err:
            assert list(node_ids) == r_nodes
            assert list(offsets) == r_off
            assert list(cluster_ids) == r_cids
            assert bool(fixed_ok) == r_ok


def test_search_full_matches_reference_on_states():
    rng = np.random.default_rng(23)
    for _ in range(60):
        C = int(rng.integers(2, 5))
        L = int(rng.integers(2, 5))
        n = C * L
        w = np.zeros((n, n), dtype=np.uint8)
        for a in range(n):
            for b in range(a + 1, n):
                if a // L != b // L and rng.random() < 0.6:
                    w[a, b] = w[b, a] = 1
        v = (rng.random(n) < 0.6).astype(np.uint8)
        known = np.full(C, -1, dtype=np.int64)
        for c in range(C):
            if rng.random() < 0.25:
                k = c * L + int(rng.integers(L))
                known[c] = k
        # the full search sees: known -> {that neuron}, else active neurons
        level_sets = []
        for c in range(C):
            if known[c] >= 0:
                level_sets.append({int(known[c])})
            else:
                level_sets.append(set(np.flatnonzero(v[c * L : (c + 1) * L]) + c * L))
        if any(not s for s in level_sets):
            continue
        act = sorted(set().union(*level_sets))
        degrees = np.zeros(n, dtype=np.int64)
        for i in act:
            degrees[i] = int(sum(w[i, j] for j in act))
        adjacency = w.astype(bool).tolist()
        for node_sort, cluster_sort in ((1, 1), (-1, -1), (0, 1), (1, 0)):
            expected, expected_calls = reference_search(
                level_sets, adjacency, degrees, node_sort, cluster_sort, False
            )
            out = np.empty((1, C), dtype=np.int64)
            found, calls, _ = K.search_full(
                v, known, C, L, pack_rows(w), node_sort, cluster_sort, False, out
            )
            assert int(calls) == expected_calls
            got = [tuple(sorted(out[0]))] if found else []
            assert got == expected


def test_search_compact_agrees_with_search_words():
    rng = np.random.default_rng(31)
    for _ in range(60):
        C = int(rng.integers(2, 5))
        L = int(rng.integers(2, 5))
        n = C * L
        w = np.zeros((n, n), dtype=np.uint8)
        for a in range(n):
            for b in range(a + 1, n):
                if a // L != b // L and rng.random() < 0.6:
                    w[a, b] = w[b, a] = 1
        v = (rng.random(n) < 0.7).astype(np.uint8)
        known = np.full(C, -1, dtype=np.int64)
        node_ids, offsets, _, _, _, err = K.reduce_state(v, known, C, L, pack_rows(w))
        if err:
            continue
        k = len(offsets) - 1
        out_a = np.empty((1, k), dtype=np.int64)
        found_a, calls_a, _ = K.search_compact(
            node_ids, offsets, pack_rows(w), 1, 1, False, out_a
        )
        # same graph, expressed as prepacked compact rows
        m = len(node_ids)
        sub = w[np.ix_(node_ids, node_ids)].astype(bool)
        rows = np.zeros((k, m), dtype=bool)
        for i in range(k):
            rows[i, offsets[i] : offsets[i + 1]] = True
        counts = np.diff(offsets)
        out_b = np.empty((1, k), dtype=np.int64)
        found_b, calls_b, _ = K.search_words(
            pack_rows(rows), counts.astype(np.int64), pack_rows(sub),
            sub.sum(axis=1).astype(np.int64), 1, 1, False, out_b,
        )
        assert found_a == found_b
        assert calls_a == calls_b
        if found_a:
            assert sorted(node_ids[out_a[0]]) == sorted(node_ids[out_b[0]])
