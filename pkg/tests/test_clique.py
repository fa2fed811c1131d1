"""Clique extraction: reduction, partite search, references, formats."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gbnn.clique import (
    CliqueSearchStats,
    ReducedGraph,
    active_subgraph,
    brute_force_partite,
    find_all_cliques_partite,
    find_clique_partite,
    find_clique_unreduced,
    find_max_clique_cp,
    is_clique,
    make_partite_graph,
    reduce_graph,
    to_dimacs,
)
from gbnn.dynamics import Rule, run
from gbnn.network import Network, NetworkConfig, erase, generate_messages

from conftest import build_net, state_from_active


def as_tuples(cliques):
    return sorted(tuple(int(x) for x in c) for c in cliques)


# ---------------------------------------------------------------- reduction

def test_reduce_all_single_active_keeps_nothing():
    net = build_net(3, 2, [(0, 2), (0, 4), (2, 4)])
    state = state_from_active(net, [0, 2, 4])
    reduced = reduce_graph(net, state, (None, None, None))
    assert reduced.retained_count == 0
    assert reduced.node_count == 0
    assert reduced.fixed_assignment == {0: 0, 1: 2, 2: 4}
    assert reduced.fixed_is_clique


def test_reduce_trap_keeps_all_clusters(triangle_trap):
    net, state, probe = triangle_trap
    reduced = reduce_graph(net, state, probe)
    assert reduced.retained_count == 3
    assert list(reduced.node_ids) == [0, 1, 3, 4, 6, 7]
    assert [list(c) for c in reduced.clusters] == [[0, 1], [3, 4], [6, 7]]
    assert list(reduced.cluster_ids) == [0, 1, 2]
    assert reduced.fixed_assignment == {}
    assert reduced.fixed_is_clique
    assert reduced.adjacency.shape == (6, 6)
    # degrees count within the kept subgraph
    assert list(reduced.degrees) == [int(net.w[i][reduced.node_ids].sum()) for i in reduced.node_ids]


def test_reduce_mixed_known_single_and_multi():
    # cluster 0 known, cluster 1 single-active, clusters 2-3 multi-active;
    # the kept nodes must also touch every fixed neuron
    net = build_net(4, 3, [
        (0, 3), (0, 6), (0, 7), (0, 9), (0, 10),
        (3, 6), (3, 7), (3, 9), (3, 10),
        (6, 9), (7, 10),
        (3, 8),  # 8 is active but not adjacent to fixed neuron 0
    ])
    state = state_from_active(net, [0, 3, 6, 7, 8, 9, 10])
    reduced = reduce_graph(net, state, (0, None, None, None))
    assert reduced.fixed_assignment == {0: 0, 1: 3}
    assert reduced.fixed_is_clique
    assert list(reduced.cluster_ids) == [2, 3]
    assert [list(c) for c in reduced.clusters] == [[6, 7], [9, 10]]


def test_reduce_rejects_emptied_cluster():
    net = build_net(2, 2, [(0, 2)])
    state = state_from_active(net, [0])
    with pytest.raises(ValueError, match="no active"):
        reduce_graph(net, state, (None, None))


def test_reduce_flags_incompatible_fixed_pair():
    net = build_net(2, 2, [])
    state = state_from_active(net, [0, 2])
    reduced = reduce_graph(net, state, (None, None))
    assert reduced.retained_count == 0
    assert not reduced.fixed_is_clique


# ---------------------------------------------------------------- search paths

def test_find_one_on_trap(triangle_trap):
    net, state, probe = triangle_trap
    reduced = reduce_graph(net, state, probe)
    clique, stats = find_clique_partite(reduced)
    assert list(clique) == [0, 3, 6]
    assert stats.recursive_calls >= 1
    assert stats.elapsed >= 0.0


def test_find_all_on_trap(triangle_trap):
    net, state, probe = triangle_trap
    reduced = reduce_graph(net, state, probe)
    cliques, stats = find_all_cliques_partite(reduced)
    assert as_tuples(cliques) == [(0, 3, 6)]
    first, first_stats = find_clique_partite(reduced)
    assert stats.recursive_calls >= first_stats.recursive_calls


def test_find_all_on_cascade_trap(cascade_trap):
    net, state, probe = cascade_trap
    reduced = reduce_graph(net, state, probe)
    assert as_tuples(find_all_cliques_partite(reduced)[0]) == [(0, 3, 6)]


def test_complete_partite_counts():
    graph = make_partite_graph(
        [2, 2, 2],
        [(a, b) for a in range(6) for b in range(6) if a < b and a // 2 != b // 2],
    )
    cliques, stats = find_all_cliques_partite(graph, node_sort=0, cluster_sort=0)
    assert len(cliques) == 8
    # full expansion: 1 root + 2 + 4 + 8 leaf entries
    assert stats.recursive_calls == 15
    assert as_tuples(cliques) == as_tuples(brute_force_partite(graph))


def test_empty_cluster_means_no_cliques():
    graph = make_partite_graph([2, 0, 2], [(0, 2), (1, 3)])
    cliques, _ = find_all_cliques_partite(graph)
    assert cliques == []
    assert brute_force_partite(graph) == []
    clique, _ = find_clique_partite(graph)
    assert clique is None


def test_zero_retained_graph_yields_empty_assignment():
    graph = make_partite_graph([], [])
    cliques, stats = find_all_cliques_partite(graph)
    assert len(cliques) == 1 and cliques[0].size == 0
    assert brute_force_partite(graph) == [()]
    assert stats.recursive_calls == 1


def test_find_returns_none_without_clique():
    graph = make_partite_graph([1, 1], [])
    clique, stats = find_clique_partite(graph)
    assert clique is None
    cliques, _ = find_all_cliques_partite(graph)
    assert cliques == []


def test_sorting_modes_change_cost_not_results():
    rng = np.random.default_rng(5)
    for _ in range(25):
        sizes = rng.integers(1, 5, size=int(rng.integers(2, 5)))
        offsets = np.concatenate(([0], np.cumsum(sizes)))
        owner = np.concatenate([np.full(s, i) for i, s in enumerate(sizes)])
        edges = [
            (a, b)
            for a in range(int(offsets[-1]))
            for b in range(a + 1, int(offsets[-1]))
            if owner[a] != owner[b] and rng.random() < 0.6
        ]
        graph = make_partite_graph(sizes, edges)
        reference = as_tuples(find_all_cliques_partite(graph, node_sort=0, cluster_sort=0)[0])
        for node_sort in (-1, 0, 1):
            for cluster_sort in (-1, 0, 1):
                got = find_all_cliques_partite(
                    graph, node_sort=node_sort, cluster_sort=cluster_sort
                )[0]
                assert as_tuples(got) == reference


def test_enumeration_matches_brute_force_on_random_graphs():
    rng = np.random.default_rng(97)
    for _ in range(200):
        sizes = rng.integers(0, 5, size=int(rng.integers(1, 5)))
        offsets = np.concatenate(([0], np.cumsum(sizes)))
        owner = np.concatenate([np.full(s, i) for i, s in enumerate(sizes)]) if offsets[-1] else np.empty(0)
        edges = [
            (a, b)
            for a in range(int(offsets[-1]))
            for b in range(a + 1, int(offsets[-1]))
            if owner[a] != owner[b] and rng.random() < rng.choice([0.3, 0.6, 0.9])
        ]
        graph = make_partite_graph(sizes, edges)
        assert as_tuples(find_all_cliques_partite(graph)[0]) == brute_force_partite(graph)


@settings(deadline=None, max_examples=60)
@given(st.data())
def test_enumeration_matches_brute_force_property(data):
    sizes = data.draw(st.lists(st.integers(0, 3), min_size=1, max_size=4))
    m = sum(sizes)
    owner = np.concatenate([np.full(s, i) for i, s in enumerate(sizes)]) if m else np.empty(0)
    pairs = [(a, b) for a in range(m) for b in range(a + 1, m) if owner[a] != owner[b]]
    edges = [p for p in pairs if data.draw(st.booleans())]
    graph = make_partite_graph(sizes, edges)
    assert as_tuples(find_all_cliques_partite(graph)[0]) == brute_force_partite(graph)


def test_overflow_regrowth_recovers_every_clique():
    # complete 3x3x3: 27 assignments, more than one initial buffer fill
    edges = [
        (a, b) for a in range(9) for b in range(a + 1, 9) if a // 3 != b // 3
    ]
    graph = make_partite_graph([3, 3, 3], edges)
    cliques, _ = find_all_cliques_partite(graph)
    assert len(cliques) == 27


def test_brute_force_cap():
    graph = make_partite_graph([2, 2], [(0, 2)])
    with pytest.raises(ValueError, match="cap"):
        brute_force_partite(graph, cap=3)


def test_make_partite_graph_validation():
    with pytest.raises(ValueError, match="one cluster"):
        make_partite_graph([2, 1], [(0, 1)])
    with pytest.raises(ValueError, match="out of range"):
        make_partite_graph([1, 1], [(0, 5)])
    with pytest.raises(ValueError, match="non-negative"):
        make_partite_graph([-1, 2], [])


# ---------------------------------------------------------------- references

def test_maximum_clique_on_five_vertices():
    # vertices 1..5; triangles {1,2,5} and the 4-clique {2,3,4,5}
    edges = [(1, 2), (1, 5), (2, 5), (2, 3), (2, 4), (3, 4), (3, 5), (4, 5)]
    adjacency = np.zeros((6, 6), dtype=bool)
    for a, b in edges:
        adjacency[a, b] = adjacency[b, a] = True
    best, stats = find_max_clique_cp(adjacency[1:, 1:])
    assert [b + 1 for b in best] == [2, 3, 4, 5]
    assert stats.recursive_calls >= 1


def test_maximum_clique_edge_cases():
    assert find_max_clique_cp(np.zeros((0, 0), dtype=bool))[0] == []
    assert find_max_clique_cp(np.zeros((4, 4), dtype=bool))[0] == [0]
    full = np.ones((5, 5), dtype=bool)
    assert find_max_clique_cp(full)[0] == [0, 1, 2, 3, 4]
    with pytest.raises(ValueError, match="square"):
        find_max_clique_cp(np.zeros((2, 3), dtype=bool))
    bad = np.zeros((2, 2), dtype=bool)
    bad[0, 1] = True
    with pytest.raises(ValueError, match="symmetric"):
        find_max_clique_cp(bad)


def test_partite_and_general_methods_agree():
    rng = np.random.default_rng(13)
    for _ in range(40):
        sizes = rng.integers(1, 4, size=int(rng.integers(2, 4)))
        offsets = np.concatenate(([0], np.cumsum(sizes)))
        owner = np.concatenate([np.full(s, i) for i, s in enumerate(sizes)])
        edges = [
            (a, b)
            for a in range(int(offsets[-1]))
            for b in range(a + 1, int(offsets[-1]))
            if owner[a] != owner[b] and rng.random() < 0.6
        ]
        graph = make_partite_graph(sizes, edges)
        clique, _ = find_clique_partite(graph)
        best, _ = find_max_clique_cp(graph.adjacency)
        if clique is not None:
            # a full assignment exists, so the maximum clique has that size
            assert len(best) == len(sizes)
            assert brute_force_partite(graph)
        else:
            assert len(best) < len(sizes)


def test_is_clique():
    net = build_net(3, 3, [(0, 3), (0, 6), (3, 6), (1, 4)])
    assert is_clique(net, [0, 3, 6])
    assert not is_clique(net, [1, 4, 7])
    assert is_clique(net, [0])
    assert is_clique(net, [])
    with pytest.raises(ValueError, match="share a cluster"):
        is_clique(net, [0, 1])


def test_active_subgraph_narrows_known_clusters():
    net = build_net(2, 2, [(0, 2), (1, 3)])
    state = state_from_active(net, [0, 1, 2, 3])
    node_ids, adjacency = active_subgraph(net, state, (0, None))
    assert list(node_ids) == [0, 2, 3]
    assert adjacency.shape == (3, 3)
    assert adjacency[0, 1] and not adjacency[0, 2]


# -------------------------------------------------- reduced vs direct search

def converged_cases(seed, count=25):
    rng = np.random.default_rng(seed)
    cases = []
    while len(cases) < count:
        C = int(rng.integers(3, 6))
        L = int(rng.integers(3, 9))
        cfg = NetworkConfig(C, L, 1.0)
        net = Network(cfg)
        messages = generate_messages(cfg, int(rng.integers(2, 15)), seed=int(rng.integers(1 << 30)))
        net.store_many(messages)
        message = messages[int(rng.integers(len(messages)))]
        erased = int(rng.integers(1, C))
        probe = erase(message, list(range(C - erased, C)))
        state, status = run(net, probe, rule=Rule.SUM_OF_MAX)
        cases.append((net, state, probe, C))
    return cases


def test_unreduced_search_matches_reduced_outcomes():
    for net, state, probe, C in converged_cases(3):
        reduced = reduce_graph(net, state, probe)
        for node_sort, cluster_sort in ((1, 1), (-1, -1), (1, 0), (0, 1)):
            got, _ = find_clique_unreduced(
                net, state, probe, node_sort=node_sort, cluster_sort=cluster_sort
            )
            part, _ = find_clique_partite(
                reduced, node_sort=node_sort, cluster_sort=cluster_sort
            )
            if part is None or not reduced.fixed_is_clique:
                assert got is None
            else:
                merged = sorted(set(reduced.fixed_assignment.values()) | set(int(x) for x in part))
                assert list(got) == merged


def test_reduction_saves_exactly_the_decided_levels():
    # on converged states the direct search walks the decided clusters as
    # forced single choices, one extra procedure entry per decided cluster
    checked = 0
    for net, state, probe, C in converged_cases(17, count=30):
        reduced = reduce_graph(net, state, probe)
        if not reduced.fixed_is_clique:
            continue
        _, direct = find_clique_unreduced(net, state, probe)
        _, part = find_clique_partite(reduced)
        assert direct.recursive_calls == part.recursive_calls + (C - reduced.retained_count)
        checked += 1
    assert checked >= 20


# ---------------------------------------------------------------- formats

def test_dimacs_output(triangle_trap):
    net, state, probe = triangle_trap
    reduced = reduce_graph(net, state, probe)
    text = to_dimacs(reduced)
    lines = text.strip().split("\n")
    assert lines[0] == "c cluster 0: 0 1"
    assert lines[1] == "c cluster 1: 3 4"
    assert lines[2] == "c cluster 2: 6 7"
    assert lines[3] == "p edge 6 7"
    assert lines[4:] == sorted(lines[4:])
    # edge lines are 1-based compact indices
    assert "e 1 3" in lines  # nodes 0 and 3 = compact 0 and 2 -> "e 1 3"


def test_stats_are_plain_data():
    stats = CliqueSearchStats(recursive_calls=4, elapsed=0.25)
    assert stats.recursive_calls == 4
    assert stats.elapsed == 0.25
