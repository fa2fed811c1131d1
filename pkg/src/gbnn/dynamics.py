"""Iterative retrieval dynamics over a clustered binary network.

Two update rules drive retrieval.  The additive rule scores a neuron by
every incoming signal individually and keeps, per cluster, the neurons
achieving the cluster maximum; it can oscillate.  The capped rule lets each
foreign cluster contribute at most one signal and keeps a neuron only at
full support (score gamma + C - 1); starting from all-active erased
clusters it can only shed neurons, so it always converges.

Clusters whose symbol the probe supplies are clamped: exactly the probe's
neuron stays active there throughout, under either rule.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from enum import Enum

import numpy as np

from gbnn.network import Network, NetworkConfig

__all__ = [
    "Rule",
    "StopReason",
    "ActivationState",
    "RunStatus",
    "init_state",
    "sos_step",
    "som_step",
    "run",
    "signal_field",
    "individual_signal_count",
    "individual_signal_counts",
    "detect_bogus",
    "active_counts",
    "state_text",
]


class Rule(str, Enum):
    SUM_OF_SUM = "sum-of-sum"
    SUM_OF_MAX = "sum-of-max"


class StopReason(str, Enum):
    CONVERGED = "converged"
    OSCILLATING = "oscillating"
    MAX_ITERS = "max-iters"
    ALL_DEACTIVATED = "all-deactivated"


@dataclass
class ActivationState:
    """Binary activation vector plus the iteration that produced it."""

    v: np.ndarray  # uint8, length n
    t: int = 0

    def copy(self) -> "ActivationState":
        return ActivationState(self.v.copy(), self.t)

    def active_count(self) -> int:
        return int(self.v.sum())


@dataclass(frozen=True)
class RunStatus:
    reason: StopReason
    iterations: int
    period: int | None = None


def init_state(config: NetworkConfig, probe, rule: Rule) -> ActivationState:
    """Known clusters get the probe neuron; erased clusters start all-active
    under SUM_OF_MAX and all-inactive under SUM_OF_SUM."""
    probe = config.validate_probe(probe)
    v = np.zeros(config.neuron_count, dtype=np.uint8)
    for c, entry in enumerate(probe):
        if entry is None:
            if rule is Rule.SUM_OF_MAX:
                v[config.cluster_slice(c)] = 1
        else:
            v[config.flat_index(c, entry)] = 1
    return ActivationState(v, t=0)


def _clamp(v: np.ndarray, config: NetworkConfig, probe) -> None:
    for c, entry in enumerate(probe):
        if entry is not None:
            v[config.cluster_slice(c)] = 0
            v[config.flat_index(c, entry)] = 1


def _cluster_support(network: Network, v: np.ndarray) -> np.ndarray:
    """Number of foreign clusters with at least one active neighbor, per neuron."""
    active = np.flatnonzero(v)
    n = network.config.neuron_count
    if active.size == 0:
        return np.zeros(n, dtype=np.int64)
    rows = network.w[active]
    src = active // network.config.neurons_per_cluster
    starts = np.flatnonzero(np.r_[1, np.diff(src)])
    # OR together rows from the same source cluster, then count clusters;
    # intra-cluster entries are zero so a neuron never supports its own cluster
    merged = np.bitwise_or.reduceat(rows, starts, axis=0)
    return merged.sum(axis=0, dtype=np.int64)


def sos_step(
    network: Network, state: ActivationState, gamma: float | None = None, probe=None
) -> ActivationState:
    """One additive-rule update: per cluster, activate the neurons achieving
    the cluster's maximum score gamma*v + (active-neighbor count)."""
    cfg = network.config
    if gamma is None:
        gamma = cfg.gamma
    v = state.v
    counts = network.w @ v.astype(np.int64)
    if gamma == 0:
        s = counts
    else:
        # keep integer scores for integer gamma; comparisons stay exact
        g = int(gamma) if float(gamma).is_integer() else gamma
        s = g * v.astype(np.int64) + counts
    per_cluster = s.reshape(cfg.cluster_count, cfg.neurons_per_cluster)
    peak = per_cluster.max(axis=1, keepdims=True)
    new = (per_cluster == peak).astype(np.uint8).reshape(-1)
    if probe is not None:
        _clamp(new, cfg, probe)
    return ActivationState(new, state.t + 1)


def som_step(
    network: Network, state: ActivationState, gamma: float | None = None, probe=None
) -> ActivationState:
    """One capped-rule update: keep a neuron iff its score reaches
    gamma + C - 1, i.e. every foreign cluster supports it."""
    cfg = network.config
    if gamma is None:
        gamma = cfg.gamma
    support = _cluster_support(network, state.v)
    full = support == cfg.cluster_count - 1
    # the threshold gamma + C - 1 is reachable by an inactive neuron only
    # when gamma == 0, so the test stays in integer arithmetic
    if gamma == 0:
        new = full.astype(np.uint8)
    else:
        new = (full & (state.v == 1)).astype(np.uint8)
    if probe is not None:
        _clamp(new, cfg, probe)
    return ActivationState(new, state.t + 1)


def signal_field(
    network: Network, state: ActivationState, rule: Rule, gamma: float | None = None
) -> np.ndarray:
    """The per-neuron scores one step would use (diagnostics and tests)."""
    cfg = network.config
    if gamma is None:
        gamma = cfg.gamma
    if rule is Rule.SUM_OF_SUM:
        base = network.w @ state.v.astype(np.int64)
    else:
        base = _cluster_support(network, state.v)
    return gamma * state.v + base


def _has_empty_cluster(v: np.ndarray, config: NetworkConfig) -> bool:
    per = v.reshape(config.cluster_count, config.neurons_per_cluster)
    return bool((per.max(axis=1) == 0).any())


def run(
    network: Network,
    probe,
    rule: Rule = Rule.SUM_OF_MAX,
    gamma: float | None = None,
    max_iters: int = 100,
    state: ActivationState | None = None,
) -> tuple[ActivationState, RunStatus]:
    """Iterate a rule from the probe's initial state (or a supplied state)
    until it converges, oscillates (additive rule only), empties a cluster,
    or hits the iteration cap.  Returns the final state and why it stopped.
    """
    if max_iters < 1:
        raise ValueError(f"max_iters must be >= 1, got {max_iters}")
    cfg = network.config
    probe = cfg.validate_probe(probe)
    if state is None:
        state = init_state(cfg, probe, rule)
    step = sos_step if rule is Rule.SUM_OF_SUM else som_step
    seen: dict[bytes, int] = {state.v.tobytes(): 0}
    current = state
    for i in range(1, max_iters + 1):
        nxt = step(network, current, gamma, probe)
        if _has_empty_cluster(nxt.v, cfg):
            return nxt, RunStatus(StopReason.ALL_DEACTIVATED, i)
        if np.array_equal(nxt.v, current.v):
            return nxt, RunStatus(StopReason.CONVERGED, i)
        if rule is Rule.SUM_OF_SUM:
            key = nxt.v.tobytes()
            if key in seen:
                return nxt, RunStatus(StopReason.OSCILLATING, i, period=i - seen[key])
            seen[key] = i
        current = nxt
    return current, RunStatus(StopReason.MAX_ITERS, max_iters)


def individual_signal_counts(network: Network, state: ActivationState) -> np.ndarray:
    """Active-neighbor count for every neuron, each edge counted individually."""
    return network.w @ state.v.astype(np.int64)


def individual_signal_count(network: Network, state: ActivationState, neuron: int) -> int:
    return int(network.w[neuron] @ state.v.astype(np.int64))


def active_counts(state: ActivationState, config: NetworkConfig) -> np.ndarray:
    """Active neurons per cluster."""
    return state.v.reshape(config.cluster_count, config.neurons_per_cluster).sum(
        axis=1, dtype=np.int64
    )


def detect_bogus(
    network: Network, state: ActivationState, probe
) -> tuple[bool, np.ndarray]:
    """Compare a converged state against the union of all full-size cliques
    inside it.

    Returns (is_bogus, union vector).  A state is bogus when it strictly
    exceeds that union, i.e. naive per-cluster selection could pick neurons
    belonging to no complete clique.  When no full-size clique exists at
    all the union is empty and the state is trivially bogus.
    """
    from gbnn.clique import find_all_cliques_partite, reduce_graph

    cfg = network.config
    union = np.zeros(cfg.neuron_count, dtype=np.uint8)
    reduced = reduce_graph(network, state, probe)
    if reduced.fixed_is_clique:
        cliques, _ = find_all_cliques_partite(reduced)
        if cliques:
            for flat in reduced.fixed_assignment.values():
                union[flat] = 1
            for clique in cliques:
                union[np.asarray(clique, dtype=np.int64)] = 1
    return not np.array_equal(union, state.v), union


def state_text(state: ActivationState, config: NetworkConfig) -> str:
    """Render activations as 0/1 rows, one cluster per line."""
    rows = state.v.reshape(config.cluster_count, config.neurons_per_cluster)
    return "\n".join("".join(str(int(x)) for x in row) for row in rows)
