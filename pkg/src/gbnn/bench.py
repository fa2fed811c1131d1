"""Benchmark harness: scenarios, metric collection, CSV reporting.

One scenario stores a message set once, derives a deterministic probe
stream from the seed, runs the single-winner dynamics once per probe, and
feeds the identical converged states to every requested post-processing
method.  Rate differences between methods are therefore attributable to
post-processing alone, and every non-timing number is reproducible
bit-exactly from (scenario, seed).
"""

from __future__ import annotations

import csv
import io
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from time import perf_counter
from typing import Sequence

import numpy as np

from gbnn import _kernels
from gbnn.clique import active_subgraph, find_max_clique_cp
from gbnn.dynamics import Rule, StopReason, detect_bogus, run
from gbnn.heuristics import HeuristicKind, finish_retrieval
from gbnn.network import Network, NetworkConfig, generate_messages

HEURISTIC_METHODS = tuple(k.value for k in HeuristicKind)
CLIQUE_METHODS = ("partite", "maxclique")
ALL_METHODS = HEURISTIC_METHODS + CLIQUE_METHODS

CSV_COLUMNS = (
    "scenario",
    "method",
    "stored",
    "erased",
    "probes",
    "seed",
    "retrieval_rate",
    "mean_convergence_ms",
    "mean_post_ms",
    "bogus_rate",
    "median_recursive_calls",
)


@dataclass(frozen=True)
class Scenario:
    """One benchmark setting: a network shape, a message load, a probe
    stream, and the methods to compare on it."""

    config: NetworkConfig
    stored_messages: int
    erased_clusters: int
    probes: int
    seed: int = 0
    methods: tuple[str, ...] = ("random", "partite")
    name: str = ""
    randomize_erasure: bool = False
    max_iters: int | None = None
    threads: int = 1

    def __post_init__(self):
        if self.stored_messages < 1:
            raise ValueError("stored_messages must be >= 1")
        if self.probes < 0:
            raise ValueError("probes must be >= 0")
        if not 0 <= self.erased_clusters < self.config.cluster_count:
            raise ValueError(
                "erased_clusters must satisfy 0 <= erased < cluster_count"
            )
        unknown = [m for m in self.methods if m not in ALL_METHODS]
        if unknown:
            raise ValueError(f"unknown methods: {unknown}; choose from {ALL_METHODS}")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")

    @property
    def label(self) -> str:
        return self.name or f"c{self.config.cluster_count}xl{self.config.neurons_per_cluster}"

    def effective_max_iters(self) -> int:
        if self.max_iters is not None:
            return self.max_iters
        return max(100, self.config.neuron_count + 2)


@dataclass(frozen=True)
class MethodReport:
    """Aggregated metrics for one method on one scenario.

    median_recursive_calls is None for methods that do not search
    (the stepwise heuristics and the random baseline); optional fields
    render as empty CSV cells.
    """

    scenario: str
    method: str
    stored: int
    erased: int
    probes: int
    seed: int
    retrieval_rate: float | None
    mean_convergence_ms: float | None
    mean_post_ms: float | None
    bogus_rate: float | None
    median_recursive_calls: float | None


def warm_kernels(network: Network) -> None:
    """Compile the compiled search paths ahead of any timed section.

    A zero-probe call triggers compilation of the whole call graph without
    doing work, so first-probe timings do not absorb JIT latency.
    """
    cfg = network.config
    empty_states = np.empty((0, cfg.neuron_count), dtype=np.uint8)
    empty_known = np.empty((0, cfg.cluster_count), dtype=np.int64)
    messages = np.empty((0, cfg.cluster_count), dtype=np.int64)
    calls = np.empty(0, dtype=np.int64)
    packed = network.packed_rows()
    C, L = cfg.cluster_count, cfg.neurons_per_cluster
    _kernels.batch_reduced_search(
        empty_states, empty_known, C, L, packed, 1, 1, messages, calls
    )
    _kernels.batch_full_search(
        empty_states, empty_known, C, L, packed, 1, 1, messages, calls
    )


def _probe_plan(scenario: Scenario, messages: np.ndarray):
    """Deterministic probe stream: (message index, erased cluster tuple)
    per probe, drawn with replacement ahead of any threading."""
    C = scenario.config.cluster_count
    rng = np.random.default_rng(scenario.seed)
    picks = rng.integers(0, len(messages), size=scenario.probes)
    plans = []
    fixed = tuple(range(C - scenario.erased_clusters, C))
    for index in picks:
        if scenario.randomize_erasure:
            positions = tuple(
                sorted(
                    int(x)
                    for x in rng.choice(C, size=scenario.erased_clusters, replace=False)
                )
            )
        else:
            positions = fixed
        plans.append((int(index), positions))
    return plans


def _make_probe(message: np.ndarray, positions) -> tuple:
    return tuple(
        None if c in positions else int(message[c]) for c in range(len(message))
    )


def _known_row(config: NetworkConfig, probe) -> np.ndarray:
    known = np.full(config.cluster_count, -1, dtype=np.int64)
    for c, value in enumerate(probe):
        if value is not None:
            known[c] = config.flat_index(c, int(value))
    return known


def _decode_flat(config: NetworkConfig, flats: np.ndarray) -> np.ndarray | None:
    """Flat neuron id per cluster -> message values, or None on any -1."""
    if np.any(flats < 0):
        return None
    return flats % config.neurons_per_cluster


def _run_partite(network, state, known) -> tuple[np.ndarray | None, int | None, float]:
    cfg = network.config
    start = perf_counter()
    messages = np.empty((1, cfg.cluster_count), dtype=np.int64)
    calls = np.empty(1, dtype=np.int64)
    _kernels.batch_reduced_search(
        state.v[np.newaxis, :],
        known[np.newaxis, :],
        cfg.cluster_count,
        cfg.neurons_per_cluster,
        network.packed_rows(),
        1,
        1,
        messages,
        calls,
    )
    elapsed = perf_counter() - start
    decoded = _decode_flat(cfg, messages[0])
    n_calls = int(calls[0]) if calls[0] > 0 else None
    return decoded, n_calls, elapsed


def _run_maxclique(network, state, probe) -> tuple[np.ndarray | None, int | None, float]:
    cfg = network.config
    start = perf_counter()
    node_ids, adjacency = active_subgraph(network, state, probe)
    best, stats = find_max_clique_cp(adjacency)
    elapsed = perf_counter() - start
    if len(best) != cfg.cluster_count:
        return None, stats.recursive_calls, elapsed
    flats = node_ids[np.asarray(best, dtype=np.int64)]
    message = np.full(cfg.cluster_count, -1, dtype=np.int64)
    for flat in flats:
        message[int(flat) // cfg.neurons_per_cluster] = int(flat) % cfg.neurons_per_cluster
    if np.any(message < 0):
        return None, stats.recursive_calls, elapsed
    return message, stats.recursive_calls, elapsed


def _probe_record(network, scenario, messages, probe_index, plan):
    """Everything measured for one probe: shared convergence, bogus flag,
    then each method's verdict over the same converged state."""
    cfg = network.config
    message_index, positions = plan
    original = messages[message_index]
    probe = _make_probe(original, positions)
    max_iters = scenario.effective_max_iters()

    start = perf_counter()
    state, status = run(
        network, probe, rule=Rule.SUM_OF_MAX, max_iters=max_iters
    )
    convergence = perf_counter() - start

    converged = status.reason is StopReason.CONVERGED
    bogus = False
    if converged:
        bogus, _ = detect_bogus(network, state, probe)

    known = _known_row(cfg, probe)
    record = {"convergence": convergence, "bogus": bogus, "methods": {}}
    for method in scenario.methods:
        if method in HEURISTIC_METHODS:
            rng = np.random.default_rng(
                (scenario.seed, probe_index, ALL_METHODS.index(method))
            )
            result = finish_retrieval(
                network,
                probe,
                state,
                status,
                HeuristicKind(method),
                max_iters=max_iters,
                rng=rng,
            )
            success = result.success and np.array_equal(result.message, original)
            record["methods"][method] = (success, result.post_time, None)
        elif method == "partite":
            if converged:
                decoded, calls, elapsed = _run_partite(network, state, known)
            else:
                decoded, calls, elapsed = None, None, 0.0
            success = decoded is not None and np.array_equal(decoded, original)
            record["methods"][method] = (success, elapsed, calls)
        else:  # maxclique
            if converged:
                decoded, calls, elapsed = _run_maxclique(network, state, probe)
            else:
                decoded, calls, elapsed = None, None, 0.0
            success = decoded is not None and np.array_equal(decoded, original)
            record["methods"][method] = (success, elapsed, calls)
    return record


def run_scenario(scenario: Scenario, network: Network | None = None) -> list[MethodReport]:
    """Store once, probe deterministically, compare methods on identical
    converged states.  Returns one report per requested method."""
    cfg = scenario.config
    messages = generate_messages(cfg, scenario.stored_messages, seed=scenario.seed)
    if network is None:
        network = Network(cfg)
        network.store_many(messages)
    if "partite" in scenario.methods:
        warm_kernels(network)
    plans = _probe_plan(scenario, messages)

    if scenario.threads > 1 and plans:
        with ThreadPoolExecutor(max_workers=scenario.threads) as pool:
            records = list(
                pool.map(
                    lambda item: _probe_record(network, scenario, messages, *item),
                    enumerate(plans),
                )
            )
    else:
        records = [
            _probe_record(network, scenario, messages, i, plan)
            for i, plan in enumerate(plans)
        ]

    n = len(records)
    mean_convergence = (
        1000.0 * sum(r["convergence"] for r in records) / n if n else None
    )
    bogus_rate = sum(1 for r in records if r["bogus"]) / n if n else None
    reports = []
    for method in scenario.methods:
        outcomes = [r["methods"][method] for r in records]
        rate = sum(1 for s, _, _ in outcomes if s) / n if n else None
        mean_post = 1000.0 * sum(t for _, t, _ in outcomes) / n if n else None
        calls = [c for _, _, c in outcomes if c is not None]
        median_calls = float(statistics.median(calls)) if calls else None
        reports.append(
            MethodReport(
                scenario=scenario.label,
                method=method,
                stored=scenario.stored_messages,
                erased=scenario.erased_clusters,
                probes=scenario.probes,
                seed=scenario.seed,
                retrieval_rate=rate,
                mean_convergence_ms=mean_convergence,
                mean_post_ms=mean_post,
                bogus_rate=bogus_rate,
                median_recursive_calls=median_calls,
            )
        )
    return reports


def bogus_sweep(
    config: NetworkConfig,
    erased_range: Sequence[int],
    message_counts: Sequence[int],
    probes: int,
    seed: int = 0,
) -> list[MethodReport]:
    """Fraction of probes converging to a bogus fixed point, per
    (erased clusters, stored count) pair.

    The network grows incrementally through the ascending message counts;
    probes are redrawn per pair from the currently stored prefix.  Rows
    reuse the report shape with only the bogus escalation filled in.
    """
    counts = sorted(set(int(c) for c in message_counts))
    if counts and counts[0] < 1:
        raise ValueError("message counts must be >= 1")
    erased_values = [int(e) for e in erased_range]
    for e in erased_values:
        if not 0 <= e < config.cluster_count:
            raise ValueError("erased values must satisfy 0 <= erased < cluster_count")
    network = Network(config)
    all_messages = generate_messages(config, counts[-1] if counts else 0, seed=seed)
    stored = 0
    rows = []
    max_iters = max(100, config.neuron_count + 2)
    for count in counts:
        network.store_many(all_messages[stored:count])
        stored = count
        for erased in erased_values:
            rng = np.random.default_rng((seed, count, erased))
            picks = rng.integers(0, count, size=probes)
            positions = tuple(range(config.cluster_count - erased, config.cluster_count))
            hits = 0
            for index in picks:
                probe = _make_probe(all_messages[int(index)], positions)
                state, status = run(
                    network, probe, rule=Rule.SUM_OF_MAX, max_iters=max_iters
                )
                if status.reason is StopReason.CONVERGED:
                    is_bogus, _ = detect_bogus(network, state, probe)
                    if is_bogus:
                        hits += 1
            rows.append(
                MethodReport(
                    scenario="bogus-sweep",
                    method="sum-of-max",
                    stored=count,
                    erased=erased,
                    probes=probes,
                    seed=seed,
                    retrieval_rate=None,
                    mean_convergence_ms=None,
                    mean_post_ms=None,
                    bogus_rate=hits / probes if probes else None,
                    median_recursive_calls=None,
                )
            )
    return rows


# sort-flag settings per ablation variant: (node degree sort, cluster size sort)
SORT_VARIANTS = (
    ("partite-flat", 1, 1),
    ("partite-deep", -1, -1),
    ("partite-node-sort-only", 1, 0),
    ("partite-cluster-sort-only", 0, 1),
)


@dataclass(frozen=True)
class AblationOutcome:
    """Per-variant detail behind the CSV rows: per-probe calls, the decoded
    messages, and the timed totals, for paired comparisons.

    total_seconds holds each variant's timed search total; prep_seconds the
    untimed graph preparation spent on its behalf."""

    reports: list[MethodReport]
    calls: dict[str, np.ndarray] = field(default_factory=dict)
    total_seconds: dict[str, float] = field(default_factory=dict)
    prep_seconds: dict[str, float] = field(default_factory=dict)
    outcomes_identical: bool | None = None


def _converged_states(scenario: Scenario, network: Network, messages: np.ndarray):
    """Shared preparation for the ablations: converged states and the
    matching known rows / originals for every probe that converged."""
    cfg = scenario.config
    plans = _probe_plan(scenario, messages)
    states, knowns, originals = [], [], []
    convergence = 0.0
    max_iters = scenario.effective_max_iters()
    for index, positions in plans:
        original = messages[index]
        probe = _make_probe(original, positions)
        start = perf_counter()
        state, status = run(network, probe, rule=Rule.SUM_OF_MAX, max_iters=max_iters)
        convergence += perf_counter() - start
        if status.reason is not StopReason.CONVERGED:
            continue
        states.append(state.v)
        knowns.append(_known_row(cfg, probe))
        originals.append(original)
    if states:
        return (
            np.ascontiguousarray(np.stack(states)),
            np.ascontiguousarray(np.stack(knowns)),
            np.stack(originals),
            convergence,
        )
    n = cfg.neuron_count
    return (
        np.empty((0, n), dtype=np.uint8),
        np.empty((0, cfg.cluster_count), dtype=np.int64),
        np.empty((0, cfg.cluster_count), dtype=np.int64),
        convergence,
    )


def _batch_report(scenario, method, rate, mean_post, median_calls, convergence):
    return MethodReport(
        scenario=scenario.label,
        method=method,
        stored=scenario.stored_messages,
        erased=scenario.erased_clusters,
        probes=scenario.probes,
        seed=scenario.seed,
        retrieval_rate=rate,
        mean_convergence_ms=1000.0 * convergence / scenario.probes if scenario.probes else None,
        mean_post_ms=mean_post,
        bogus_rate=None,
        median_recursive_calls=median_calls,
    )


def ablation_sorting(scenario: Scenario) -> AblationOutcome:
    """Run the partite search under the four sorting settings on identical
    converged states: both sorts ascending (flat tree), both descending
    (deep tree), and each sort alone."""
    if "partite" not in scenario.methods:
        raise ValueError("sorting ablation requires the partite method")
    cfg = scenario.config
    messages = generate_messages(cfg, scenario.stored_messages, seed=scenario.seed)
    network = Network(cfg)
    network.store_many(messages)
    warm_kernels(network)
    states, knowns, originals, convergence = _converged_states(
        scenario, network, messages
    )
    packed = network.packed_rows()
    reports, all_calls, totals = [], {}, {}
    for method, node_sort, cluster_sort in SORT_VARIANTS:
        decoded = np.empty((len(states), cfg.cluster_count), dtype=np.int64)
        calls = np.empty(len(states), dtype=np.int64)
        start = perf_counter()
        _kernels.batch_reduced_search(
            states,
            knowns,
            cfg.cluster_count,
            cfg.neurons_per_cluster,
            packed,
            node_sort,
            cluster_sort,
            decoded,
            calls,
        )
        elapsed = perf_counter() - start
        found = np.all(decoded >= 0, axis=1)
        values = decoded % cfg.neurons_per_cluster
        successes = int(np.sum(found & np.all(values == originals, axis=1)))
        rate = successes / scenario.probes if scenario.probes else None
        searched = calls[calls > 0]
        median_calls = float(np.median(searched)) if searched.size else None
        mean_post = 1000.0 * elapsed / scenario.probes if scenario.probes else None
        reports.append(
            _batch_report(scenario, method, rate, mean_post, median_calls, convergence)
        )
        all_calls[method] = calls.copy()
        totals[method] = elapsed
    return AblationOutcome(reports=reports, calls=all_calls, total_seconds=totals)


def _prepare_reduced(network, states, knowns):
    """Apply the reduction to every converged state and lay the resulting
    graphs out in padded byte-mask arrays for the timed solver pass."""
    cfg = network.config
    C, L = cfg.cluster_count, cfg.neurons_per_cluster
    packed = network.packed_rows()
    P = len(states)
    per_probe = [
        _kernels.reduce_state(states[p], knowns[p], C, L, packed) for p in range(P)
    ]
    kmax = max([r[0].shape[0] for r in per_probe] + [1])
    lmax = max([r[1].shape[0] - 1 for r in per_probe] + [1])
    node_pad = np.zeros((P, kmax), dtype=np.int64)
    adj = np.zeros((P, kmax, kmax), dtype=np.uint8)
    deg = np.zeros((P, kmax), dtype=np.int64)
    lvl_masks = np.zeros((P, lmax, kmax), dtype=np.uint8)
    lvl_counts = np.zeros((P, lmax), dtype=np.int64)
    n_levels = np.zeros(P, dtype=np.int64)
    fixed_pad = np.full((P, C), -1, dtype=np.int64)
    skip = np.zeros(P, dtype=np.uint8)
    w = network.w
    for p, (node_ids, offsets, _, fixed_ids, fixed_ok, err) in enumerate(per_probe):
        if err == 1 or fixed_ok == 0:
            skip[p] = 1
            continue
        k = node_ids.shape[0]
        nl = offsets.shape[0] - 1
        n_levels[p] = nl
        if k:
            sub = w[np.ix_(node_ids, node_ids)]
            adj[p, :k, :k] = sub
            deg[p, :k] = sub.sum(axis=1, dtype=np.int64)
        for lev in range(nl):
            lvl_masks[p, lev, offsets[lev] : offsets[lev + 1]] = 1
            lvl_counts[p, lev] = offsets[lev + 1] - offsets[lev]
        node_pad[p, :k] = node_ids
        fixed_pad[p, : fixed_ids.shape[0]] = fixed_ids
    return n_levels, lvl_counts, lvl_masks, adj, deg, node_pad, fixed_pad, skip


def ablation_reduction(scenario: Scenario) -> AblationOutcome:
    """Time the flat partite tree walk with and without reduction on
    identical converged states; outcomes must agree probe by probe.

    Both arms run the identical search procedure over the dense adjacency
    relation; the only difference is whether the graph was reduced first.
    Each arm's graph preparation (the reduction itself, level masks,
    degrees) happens before the clock starts, so total_seconds compares the
    searches on their prepared inputs; preparation cost is reported
    separately in prep_seconds.
    """
    cfg = scenario.config
    C, L = cfg.cluster_count, cfg.neurons_per_cluster
    messages = generate_messages(cfg, scenario.stored_messages, seed=scenario.seed)
    network = Network(cfg)
    network.store_many(messages)
    states, knowns, originals, convergence = _converged_states(
        scenario, network, messages
    )
    P = len(states)

    prep_start = perf_counter()
    reduced_inputs = _prepare_reduced(network, states, knowns)
    prep_reduced = perf_counter() - prep_start

    prep_start = perf_counter()
    full_masks = np.zeros((P, C, cfg.neuron_count), dtype=np.uint8)
    full_counts = np.zeros((P, C), dtype=np.int64)
    full_degrees = np.zeros((P, cfg.neuron_count), dtype=np.int64)
    _kernels.dense_prep_full(
        states, knowns, C, L, network.w, full_masks, full_counts, full_degrees
    )
    prep_full = perf_counter() - prep_start

    reports, all_calls, totals, decoded_by_arm = [], {}, {}, {}
    preps = {"partite-reduced": prep_reduced, "partite-unreduced": prep_full}

    def run_reduced(decoded, calls):
        _kernels.dense_solver_reduced(*reduced_inputs, L, 1, 1, decoded, calls)

    def run_full(decoded, calls):
        _kernels.dense_solver_full(
            full_masks, full_counts, full_degrees, network.w, C, L, 1, 1,
            decoded, calls,
        )

    for method, runner in (("partite-reduced", run_reduced), ("partite-unreduced", run_full)):
        decoded = np.empty((P, C), dtype=np.int64)
        calls = np.empty(P, dtype=np.int64)
        runner(decoded, calls)  # warm pass: compile before the clock starts
        start = perf_counter()
        runner(decoded, calls)
        elapsed = perf_counter() - start
        found = np.all(decoded >= 0, axis=1)
        values = decoded % L
        successes = int(np.sum(found & np.all(values == originals, axis=1)))
        rate = successes / scenario.probes if scenario.probes else None
        searched = calls[calls > 0]
        median_calls = float(np.median(searched)) if searched.size else None
        mean_post = 1000.0 * elapsed / scenario.probes if scenario.probes else None
        reports.append(
            _batch_report(scenario, method, rate, mean_post, median_calls, convergence)
        )
        all_calls[method] = calls.copy()
        totals[method] = elapsed
        decoded_by_arm[method] = decoded
    identical = bool(
        np.array_equal(
            decoded_by_arm["partite-reduced"], decoded_by_arm["partite-unreduced"]
        )
    )
    return AblationOutcome(
        reports=reports,
        calls=all_calls,
        total_seconds=totals,
        prep_seconds=preps,
        outcomes_identical=identical,
    )


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return str(value)
    return str(value)


def emit_report(reports: Sequence[MethodReport], fmt: str = "csv", out=None) -> str:
    """Render reports as CSV (exact column set, one row per report) or as a
    readable text table; writes to `out` (path or stream) when given and
    always returns the rendered string."""
    if fmt == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for report in reports:
            writer.writerow(
                [_format_cell(getattr(report, column)) for column in CSV_COLUMNS]
            )
        text = buffer.getvalue()
    elif fmt == "text":
        rows = [CSV_COLUMNS] + [
            tuple(_format_cell(getattr(report, column)) for column in CSV_COLUMNS)
            for report in reports
        ]
        widths = [max(len(row[i]) for row in rows) for i in range(len(CSV_COLUMNS))]
        lines = [
            "  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip()
            for row in rows
        ]
        text = "\n".join(lines) + "\n"
    else:
        raise ValueError(f"unknown format: {fmt!r}")
    if out is not None:
        if hasattr(out, "write"):
            out.write(text)
        else:
            with open(out, "w", encoding="utf-8") as handle:
                handle.write(text)
    return text


def parse_report_csv(text: str) -> list[MethodReport]:
    """Inverse of emit_report(csv): recover typed reports."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if tuple(header) != CSV_COLUMNS:
        raise ValueError("unexpected CSV header")
    reports = []
    for row in reader:
        values = dict(zip(CSV_COLUMNS, row))
        reports.append(
            MethodReport(
                scenario=values["scenario"],
                method=values["method"],
                stored=int(values["stored"]),
                erased=int(values["erased"]),
                probes=int(values["probes"]),
                seed=int(values["seed"]),
                retrieval_rate=float(values["retrieval_rate"]) if values["retrieval_rate"] else None,
                mean_convergence_ms=float(values["mean_convergence_ms"]) if values["mean_convergence_ms"] else None,
                mean_post_ms=float(values["mean_post_ms"]) if values["mean_post_ms"] else None,
                bogus_rate=float(values["bogus_rate"]) if values["bogus_rate"] else None,
                median_recursive_calls=float(values["median_recursive_calls"]) if values["median_recursive_calls"] else None,
            )
        )
    return reports
