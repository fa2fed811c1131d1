"""Clique extraction over clustered graphs.

A converged activation state is only trustworthy when its active neurons
form (a union of) full-size cliques: one neuron per cluster, all pairs
connected.  This module turns states into searchable partite graphs,
finds one or all such cliques with a branch-and-prune search specialised
to the one-per-cluster structure, and provides a general maximum-clique
routine plus a brute-force enumerator as independent references.
"""

from __future__ import annotations

import itertools
import sys
from dataclasses import dataclass, field
from time import perf_counter
from typing import Iterable, Sequence

import numpy as np

from gbnn import _kernels
from gbnn.network import Network


@dataclass(frozen=True)
class CliqueSearchStats:
    """Cost of one search: procedure entries and wall time."""

    recursive_calls: int
    elapsed: float


def _pack_bool_rows(rows: np.ndarray) -> np.ndarray:
    """Pack (k, m) boolean rows into (k, words) uint64 bitsets,
    bit i of word j = column 64*j + i."""
    rows = np.ascontiguousarray(rows, dtype=np.uint8)
    k, m = rows.shape
    words = max(1, -(-m // 64))
    packed = np.packbits(rows, axis=1, bitorder="little")
    padded = np.zeros((k, words * 8), dtype=np.uint8)
    padded[:, : packed.shape[1]] = packed
    return padded.view(np.uint64)


@dataclass(eq=False)
class ReducedGraph:
    """Search-ready view of a converged state.

    Clusters that are already decided (known from the probe, or erased but
    holding exactly one active neuron) contribute ``fixed_assignment``
    entries; the remaining multi-active clusters are retained, keeping only
    active neurons adjacent to every fixed neuron.  Retained clusters stay
    in ascending cluster-index order with node ids ascending inside each.
    """

    node_ids: np.ndarray
    clusters: list[np.ndarray]
    cluster_ids: np.ndarray
    adjacency: np.ndarray
    degrees: np.ndarray
    fixed_assignment: dict[int, int] = field(default_factory=dict)
    fixed_is_clique: bool = True

    @property
    def node_count(self) -> int:
        return int(self.node_ids.shape[0])

    @property
    def retained_count(self) -> int:
        return len(self.clusters)

    def offsets(self) -> np.ndarray:
        sizes = [len(c) for c in self.clusters]
        return np.concatenate(([0], np.cumsum(sizes, dtype=np.int64)))

    def level_masks(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-cluster candidate bitsets over compact indices, in the
        canonical cluster order, plus their sizes."""
        if not hasattr(self, "_level_masks"):
            k = self.retained_count
            m = self.node_count
            rows = np.zeros((k, m), dtype=bool)
            off = self.offsets()
            for i in range(k):
                rows[i, off[i] : off[i + 1]] = True
            counts = np.asarray([len(c) for c in self.clusters], dtype=np.int64)
            self._level_masks = (_pack_bool_rows(rows), counts)
        return self._level_masks

    def packed_adjacency(self) -> np.ndarray:
        if not hasattr(self, "_packed_adjacency"):
            self._packed_adjacency = _pack_bool_rows(self.adjacency)
        return self._packed_adjacency


def make_partite_graph(
    sizes: Sequence[int],
    edges: Iterable[tuple[int, int]],
    cluster_ids: Sequence[int] | None = None,
) -> ReducedGraph:
    """Build a standalone partite graph for direct search use.

    Nodes are 0..sum(sizes)-1, assigned to clusters consecutively; edges
    must join distinct clusters.
    """
    sizes = [int(s) for s in sizes]
    if any(s < 0 for s in sizes):
        raise ValueError("cluster sizes must be non-negative")
    m = sum(sizes)
    offsets = np.concatenate(([0], np.cumsum(sizes, dtype=np.int64)))
    owner = np.empty(m, dtype=np.int64)
    for k, s in enumerate(sizes):
        owner[offsets[k] : offsets[k + 1]] = k
    adjacency = np.zeros((m, m), dtype=bool)
    for u, v in edges:
        u, v = int(u), int(v)
        if not (0 <= u < m and 0 <= v < m):
            raise ValueError(f"edge ({u}, {v}) out of range")
        if owner[u] == owner[v]:
            raise ValueError(f"edge ({u}, {v}) joins nodes of one cluster")
        adjacency[u, v] = adjacency[v, u] = True
    if cluster_ids is None:
        cluster_ids = range(len(sizes))
    node_ids = np.arange(m, dtype=np.int64)
    return ReducedGraph(
        node_ids=node_ids,
        clusters=[node_ids[offsets[k] : offsets[k + 1]] for k in range(len(sizes))],
        cluster_ids=np.asarray(list(cluster_ids), dtype=np.int64),
        adjacency=adjacency,
        degrees=adjacency.sum(axis=1).astype(np.int64),
    )


def _known_vector(network: Network, probe) -> np.ndarray:
    cfg = network.config
    known = np.full(cfg.cluster_count, -1, dtype=np.int64)
    if probe is not None:
        cfg.validate_probe(probe)
        for c, value in enumerate(probe):
            if value is not None:
                known[c] = cfg.flat_index(c, int(value))
    return known


def reduce_graph(network: Network, state, probe=None) -> ReducedGraph:
    """Reduce a converged state to the subgraph the search has to solve.

    Raises ValueError when an erased cluster holds no active neuron (the
    state carries no candidate there, so no assignment can exist).
    """
    cfg = network.config
    known = _known_vector(network, probe)
    node_ids, offsets, cluster_ids, fixed_ids, fixed_ok, err = _kernels.reduce_state(
        state.v, known, cfg.cluster_count, cfg.neurons_per_cluster, network.packed_rows()
    )
    if err:
        raise ValueError("state has an erased cluster with no active neurons")
    sub = network.w[np.ix_(node_ids, node_ids)].astype(bool)
    clusters = [
        node_ids[offsets[k] : offsets[k + 1]] for k in range(len(cluster_ids))
    ]
    fixed = {
        int(f) // cfg.neurons_per_cluster: int(f) for f in fixed_ids
    }
    return ReducedGraph(
        node_ids=node_ids,
        clusters=clusters,
        cluster_ids=cluster_ids,
        adjacency=sub,
        degrees=sub.sum(axis=1).astype(np.int64),
        fixed_assignment=fixed,
        fixed_is_clique=bool(fixed_ok),
    )


def find_clique_partite(
    reduced: ReducedGraph, *, node_sort: int = 1, cluster_sort: int = 1
) -> tuple[np.ndarray | None, CliqueSearchStats]:
    """Find one node-per-cluster clique in a reduced graph.

    node_sort / cluster_sort take +1 (ascending, the intended setting),
    0 (off) or -1 (descending): node_sort orders each cluster's candidates
    by degree before expansion, cluster_sort orders clusters by surviving
    candidate count (including the initial level order).

    Returns (sorted flat node ids, stats) or (None, stats).
    """
    start = perf_counter()
    k = reduced.retained_count
    masks_rows, counts = reduced.level_masks()
    out = np.empty((1, k), dtype=np.int64)
    found, calls, _ = _kernels.search_words(
        masks_rows,
        counts,
        reduced.packed_adjacency(),
        reduced.degrees,
        node_sort,
        cluster_sort,
        False,
        out,
    )
    stats = CliqueSearchStats(int(calls), perf_counter() - start)
    if not found:
        return None, stats
    return np.sort(reduced.node_ids[out[0]]), stats


def find_all_cliques_partite(
    reduced: ReducedGraph, *, node_sort: int = 1, cluster_sort: int = 1
) -> tuple[list[np.ndarray], CliqueSearchStats]:
    """Enumerate every node-per-cluster clique (sorted ids, canonical list
    order).  Stats reflect the full enumeration."""
    start = perf_counter()
    k = reduced.retained_count
    masks_rows, counts = reduced.level_masks()
    capacity = 64
    while True:
        out = np.empty((capacity, k), dtype=np.int64)
        found, calls, overflow = _kernels.search_words(
            masks_rows,
            counts,
            reduced.packed_adjacency(),
            reduced.degrees,
            node_sort,
            cluster_sort,
            True,
            out,
        )
        if not overflow:
            break
        capacity *= 4
    cliques = [np.sort(reduced.node_ids[out[i]]) for i in range(found)]
    cliques.sort(key=tuple)
    return cliques, CliqueSearchStats(int(calls), perf_counter() - start)


def find_clique_unreduced(
    network: Network,
    state,
    probe=None,
    *,
    node_sort: int = 1,
    cluster_sort: int = 1,
) -> tuple[np.ndarray | None, CliqueSearchStats]:
    """Find one full-size clique directly in the active state, skipping
    reduction: every cluster is one search level (known clusters a single
    clamped candidate).  Returns flat neuron ids like find_clique_partite.
    """
    cfg = network.config
    known = _known_vector(network, probe)
    start = perf_counter()
    out = np.empty((1, cfg.cluster_count), dtype=np.int64)
    found, calls, _ = _kernels.search_full(
        state.v,
        known,
        cfg.cluster_count,
        cfg.neurons_per_cluster,
        network.packed_rows(),
        node_sort,
        cluster_sort,
        False,
        out,
    )
    stats = CliqueSearchStats(int(calls), perf_counter() - start)
    if not found:
        return None, stats
    return np.sort(out[0].copy()), stats


def brute_force_partite(
    reduced: ReducedGraph, cap: int = 10**6
) -> list[tuple[int, ...]]:
    """Reference enumerator: try every one-node-per-cluster assignment.

    Independent of the search kernels (plain pairwise checks against the
    boolean adjacency).  Refuses graphs whose assignment count exceeds cap.
    Returns sorted flat-id tuples in canonical list order.
    """
    total = 1
    for cluster in reduced.clusters:
        total *= len(cluster)
        if total > cap:
            raise ValueError(
                f"assignment count exceeds cap ({cap}); refusing brute force"
            )
    offsets = reduced.offsets()
    ranges = [
        range(int(offsets[k]), int(offsets[k + 1]))
        for k in range(reduced.retained_count)
    ]
    adjacency = reduced.adjacency
    cliques = []
    for combo in itertools.product(*ranges):
        ok = True
        for i in range(len(combo)):
            for j in range(i + 1, len(combo)):
                if not adjacency[combo[i], combo[j]]:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            cliques.append(tuple(sorted(int(reduced.node_ids[i]) for i in combo)))
    cliques.sort()
    return cliques


def is_clique(network: Network, neurons: Iterable[int]) -> bool:
    """True when the given flat neuron ids lie in distinct clusters and are
    pairwise connected.  Raises ValueError on a duplicated cluster."""
    ids = [int(i) for i in neurons]
    cfg = network.config
    owners = [cfg.cluster_of(i) for i in ids]
    if len(set(owners)) != len(owners):
        raise ValueError("neurons share a cluster; not a valid assignment")
    for a, b in itertools.combinations(ids, 2):
        if not network.w[a, b]:
            return False
    return True


def find_max_clique_cp(
    adjacency: np.ndarray,
) -> tuple[list[int], CliqueSearchStats]:
    """Maximum clique in an arbitrary undirected graph.

    Depth-first growth of a current clique Q over a candidate set U,
    pruning a branch as soon as |U| + |Q| cannot beat the best size found;
    a new best is only recorded when U runs empty.  Candidates are taken
    in ascending index order.  Returns (sorted vertex ids, stats); the
    empty graph yields an empty clique.
    """
    A = np.asarray(adjacency)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("adjacency must be a square matrix")
    A = A != 0
    if not np.array_equal(A, A.T):
        raise ValueError("adjacency must be symmetric")
    n = A.shape[0]
    nbr = []
    for i in range(n):
        mask = 0
        for j in np.flatnonzero(A[i]):
            if j != i:
                mask |= 1 << int(j)
        nbr.append(mask)

    best: list[int] = []
    q: list[int] = []
    calls = 0
    start = perf_counter()

    def visit(u: int) -> None:
        nonlocal best, calls
        calls += 1
        if u == 0 and len(q) > len(best):
            best = q.copy()
            return
        while u:
            if u.bit_count() + len(q) < len(best):
                return
            v = (u & -u).bit_length() - 1
            u &= u - 1
            q.append(v)
            visit(u & nbr[v])
            q.pop()

    limit = sys.getrecursionlimit()
    if n + 64 > limit:
        sys.setrecursionlimit(n + 64)
    try:
        visit((1 << n) - 1)
    finally:
        sys.setrecursionlimit(limit)
    return sorted(best), CliqueSearchStats(calls, perf_counter() - start)


def active_subgraph(network: Network, state, probe=None) -> tuple[np.ndarray, np.ndarray]:
    """Adjacency over the active neurons of a state (known clusters narrowed
    to their clamped neuron), for use with general-graph routines.

    Returns (node_ids, adjacency) with adjacency over compact indices.
    """
    cfg = network.config
    known = _known_vector(network, probe)
    keep = state.v.astype(bool).copy()
    for c in range(cfg.cluster_count):
        if known[c] >= 0:
            sl = cfg.cluster_slice(c)
            keep[sl] = False
            keep[known[c]] = True
    node_ids = np.flatnonzero(keep).astype(np.int64)
    adjacency = network.w[np.ix_(node_ids, node_ids)].astype(bool)
    return node_ids, adjacency


def to_dimacs(reduced: ReducedGraph) -> str:
    """DIMACS text for a reduced graph: one comment line per cluster with
    its flat node ids, then "p edge", then 1-based "e u v" lines over
    compact indices."""
    lines = []
    for k, cluster in enumerate(reduced.clusters):
        ids = " ".join(str(int(i)) for i in cluster)
        lines.append(f"c cluster {int(reduced.cluster_ids[k])}: {ids}")
    upper = np.triu(reduced.adjacency, k=1)
    us, vs = np.nonzero(upper)
    lines.append(f"p edge {reduced.node_count} {len(us)}")
    for u, v in zip(us, vs):
        lines.append(f"e {u + 1} {v + 1}")
    return "\n".join(lines) + "\n"
