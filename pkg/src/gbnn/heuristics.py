"""Escape heuristics and the outer retrieval loop.

A converged state with several active neurons in an erased cluster cannot
be read out directly.  The rules here commit or discard one neuron at a
time, resuming the dynamics in between, until every cluster holds exactly
one active neuron that the network connects into a full-size clique --
or until the state collapses, in which case retrieval rewinds to the last
fixed point and takes one random guess over it.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from time import perf_counter

import numpy as np

from gbnn.clique import is_clique
from gbnn.dynamics import (
    ActivationState,
    Rule,
    StopReason,
    active_counts,
    individual_signal_counts,
    run,
)
from gbnn.network import Network


class HeuristicKind(str, Enum):
    """Tie-breaking strategies, named by (neuron pick, cluster pick).

    The first four act inside one chosen cluster: mm/mf commit the neuron
    with the Most individual signals (in the Most/Fewest-active cluster),
    fm/ff discard the neuron with the Fewest signals.  fe/fs discard
    globally: the active neuron with the fewest edges / fewest active
    neighbors.  random is the single-shot baseline: no stepwise escapes,
    one uniform pick per erased cluster at the first fixed point.
    """

    RANDOM = "random"
    MM = "mm"
    MF = "mf"
    FM = "fm"
    FF = "ff"
    FE = "fe"
    FS = "fs"


class ClusterChoice(Enum):
    MOST_ACTIVE = "most"
    FEWEST_ACTIVE = "fewest"


class FailureReason(str, Enum):
    ALL_DEACTIVATED = "all-deactivated"
    NOT_A_CLIQUE = "not-a-clique"
    MAX_ITERATIONS = "max-iterations"


@dataclass(frozen=True)
class RetrievalResult:
    """Outcome of one retrieval.

    message is None on failure (reason says why).  A success from the
    stepwise heuristics always names a message whose neurons form a
    full-size clique matching the probe's known entries; the random
    baseline reports what it picked and flags whether that happened to be
    a clique.  post_time covers everything after the initial convergence.
    """

    message: np.ndarray | None
    reason: FailureReason | None
    is_clique: bool
    iterations: int
    heuristic_applications: int
    post_time: float

    @property
    def success(self) -> bool:
        return self.message is not None


def _eligible_clusters(state: ActivationState, probe, config) -> list[int]:
    """Erased clusters still holding two or more active neurons."""
    counts = active_counts(state, config)
    return [
        c
        for c in range(config.cluster_count)
        if probe[c] is None and counts[c] >= 2
    ]


def select_cluster(
    state: ActivationState, probe, mode: ClusterChoice, config=None
) -> int:
    """Pick the erased >=2-active cluster with the most (or fewest) active
    neurons; ties go to the lowest cluster index."""
    if config is None:
        config = _config_from(state, probe)
    eligible = _eligible_clusters(state, probe, config)
    if not eligible:
        raise ValueError("no erased cluster has two or more active neurons")
    counts = active_counts(state, config)
    if mode is ClusterChoice.MOST_ACTIVE:
        target = max(counts[c] for c in eligible)
    else:
        target = min(counts[c] for c in eligible)
    return next(c for c in eligible if counts[c] == target)


@dataclass(frozen=True)
class _ShapeConfig:
    cluster_count: int
    neurons_per_cluster: int


def _config_from(state: ActivationState, probe) -> _ShapeConfig:
    C = len(probe)
    return _ShapeConfig(C, state.v.size // C)


def apply_heuristic(
    network: Network, state: ActivationState, probe, kind: HeuristicKind
) -> ActivationState:
    """One escape step on a fixed point; returns the modified state.

    mm/mf: the selected cluster keeps only its highest-signal active neuron.
    fm/ff: the selected cluster drops its lowest-signal active neuron.
    fe/fs: over all eligible active neurons, drop the one with the fewest
    network edges (fe) or fewest active neighbors (fs).
    All ties break toward the lowest index.
    """
    kind = HeuristicKind(kind)
    cfg = network.config
    v = state.v.copy()

    if kind in (HeuristicKind.MM, HeuristicKind.MF):
        mode = (
            ClusterChoice.MOST_ACTIVE
            if kind is HeuristicKind.MM
            else ClusterChoice.FEWEST_ACTIVE
        )
        cluster = select_cluster(state, probe, mode, cfg)
        signals = individual_signal_counts(network, state)
        sl = cfg.cluster_slice(cluster)
        local = signals[sl].astype(np.int64)
        local[v[sl] == 0] = -1  # only active neurons are candidates
        winner = int(np.argmax(local))  # argmax takes the first = lowest index
        v[sl] = 0
        v[sl.start + winner] = 1
        return ActivationState(v, state.t)

    if kind in (HeuristicKind.FM, HeuristicKind.FF):
        mode = (
            ClusterChoice.MOST_ACTIVE
            if kind is HeuristicKind.FM
            else ClusterChoice.FEWEST_ACTIVE
        )
        cluster = select_cluster(state, probe, mode, cfg)
        signals = individual_signal_counts(network, state)
        sl = cfg.cluster_slice(cluster)
        local = signals[sl].astype(np.int64)
        local[v[sl] == 0] = np.iinfo(np.int64).max
        loser = int(np.argmin(local))
        v[sl.start + loser] = 0
        return ActivationState(v, state.t)

    if kind in (HeuristicKind.FE, HeuristicKind.FS):
        eligible = _eligible_clusters(state, probe, cfg)
        if not eligible:
            raise ValueError("no erased cluster has two or more active neurons")
        keys = (
            network.degrees()
            if kind is HeuristicKind.FE
            else individual_signal_counts(network, state)
        ).astype(np.int64)
        candidates = np.concatenate(
            [
                np.flatnonzero(v[cfg.cluster_slice(c)]) + c * cfg.neurons_per_cluster
                for c in eligible
            ]
        )
        loser = int(candidates[np.argmin(keys[candidates])])  # first min = lowest id
        v[loser] = 0
        return ActivationState(v, state.t)

    raise ValueError(f"{kind.value} is not a stepwise heuristic")


def _random_selection(
    network: Network, state: ActivationState, probe, rng: np.random.Generator
) -> tuple[np.ndarray, bool]:
    """One uniform pick among the active neurons of each erased cluster;
    known clusters keep their probe value.  Returns (message, is_clique)."""
    cfg = network.config
    message = np.empty(cfg.cluster_count, dtype=np.int64)
    flat = []
    for c in range(cfg.cluster_count):
        if probe[c] is not None:
            message[c] = int(probe[c])
        else:
            actives = np.flatnonzero(state.v[cfg.cluster_slice(c)])
            message[c] = int(actives[rng.integers(len(actives))])
        flat.append(cfg.flat_index(c, int(message[c])))
    return message, is_clique(network, flat)


def _single_assignment(network: Network, state: ActivationState, probe):
    cfg = network.config
    message = np.empty(cfg.cluster_count, dtype=np.int64)
    flat = []
    for c in range(cfg.cluster_count):
        if probe[c] is not None:
            message[c] = int(probe[c])
        else:
            message[c] = int(np.flatnonzero(state.v[cfg.cluster_slice(c)])[0])
        flat.append(cfg.flat_index(c, int(message[c])))
    return message, flat


def finish_retrieval(
    network: Network,
    probe,
    state: ActivationState,
    status,
    kind: HeuristicKind,
    *,
    gamma: float | None = None,
    max_iters: int | None = None,
    rng: np.random.Generator | None = None,
) -> RetrievalResult:
    """Post-process an already-converged run (see retrieve for semantics).

    Exposed separately so a benchmark can share one convergence across
    several post-processing methods.
    """
    kind = HeuristicKind(kind)
    cfg = network.config
    if max_iters is None:
        max_iters = max(100, cfg.neuron_count + 2)
    if rng is None:
        rng = np.random.default_rng()
    post_start = perf_counter()
    iterations = status.iterations
    applications = 0

    def done(message, reason, clique_flag):
        return RetrievalResult(
            message,
            reason,
            clique_flag,
            iterations,
            applications,
            perf_counter() - post_start,
        )

    if status.reason is StopReason.ALL_DEACTIVATED:
        return done(None, FailureReason.ALL_DEACTIVATED, False)
    if status.reason is not StopReason.CONVERGED:
        return done(None, FailureReason.MAX_ITERATIONS, False)

    if kind is HeuristicKind.RANDOM:
        message, clique_flag = _random_selection(network, state, probe, rng)
        return done(message, None, clique_flag)

    while True:
        if not _eligible_clusters(state, probe, cfg):
            message, flat = _single_assignment(network, state, probe)
            if is_clique(network, flat):
                return done(message, None, True)
            return done(None, FailureReason.NOT_A_CLIQUE, False)
        recorded = state
        state = apply_heuristic(network, state, probe, kind)
        applications += 1
        state, status = run(
            network,
            probe,
            rule=Rule.SUM_OF_MAX,
            gamma=gamma,
            max_iters=max_iters,
            state=state,
        )
        iterations += status.iterations
        if status.reason is StopReason.ALL_DEACTIVATED:
            # rewind to the recorded fixed point and take one guess over it
            message, clique_flag = _random_selection(network, recorded, probe, rng)
            if clique_flag:
                return done(message, None, True)
            return done(None, FailureReason.NOT_A_CLIQUE, False)
        if status.reason is not StopReason.CONVERGED:
            return done(None, FailureReason.MAX_ITERATIONS, False)


def retrieve(
    network: Network,
    probe,
    kind: HeuristicKind,
    *,
    gamma: float | None = None,
    seed: int | None = None,
    max_iters: int | None = None,
) -> RetrievalResult:
    """Retrieve the message matching a partial probe.

    Runs the single-winner dynamics to a fixed point, then loops: while
    some erased cluster still holds several active neurons, record the
    state, apply one heuristic step, and resume the dynamics.  Ends in
    Success when the surviving assignment is a full-size clique; if the
    dynamics empty a cluster, rewinds to the last recorded fixed point and
    falls back to one random selection over it (for the stepwise kinds
    that fallback still must produce a clique to count as success).

    The random kind skips the loop entirely: one seeded uniform pick per
    erased cluster at the first fixed point, reported as-is with an
    is_clique flag.
    """
    cfg = network.config
    probe = cfg.validate_probe(probe)
    if max_iters is None:
        max_iters = max(100, cfg.neuron_count + 2)
    state, status = run(
        network, probe, rule=Rule.SUM_OF_MAX, gamma=gamma, max_iters=max_iters
    )
    return finish_retrieval(
        network,
        probe,
        state,
        status,
        kind,
        gamma=gamma,
        max_iters=max_iters,
        rng=np.random.default_rng(seed),
    )
