"""Clustered binary associative memory with clique-based retrieval."""

from gbnn.bench import (
    ALL_METHODS,
    HEURISTIC_METHODS,
    MethodReport,
    Scenario,
    ablation_reduction,
    ablation_sorting,
    bogus_sweep,
    emit_report,
    parse_report_csv,
    run_scenario,
)
from gbnn.clique import (
    ReducedGraph,
    brute_force_partite,
    find_all_cliques_partite,
    find_clique_partite,
    find_clique_unreduced,
    find_max_clique_cp,
    is_clique,
    make_partite_graph,
    reduce_graph,
)
from gbnn.dynamics import (
    ActivationState,
    Rule,
    StopReason,
    detect_bogus,
    init_state,
    run,
    som_step,
)
from gbnn.estimator import CliqueMemory, complete_probe
from gbnn.heuristics import HeuristicKind, finish_retrieval
from gbnn.network import (
    Network,
    NetworkConfig,
    NetworkFormatError,
    deserialize,
    erase,
    generate_messages,
    load_messages,
    load_network,
    save_messages,
    save_network,
    serialize,
)

__version__ = "0.1.0"

__all__ = [
    "ALL_METHODS",
    "ActivationState",
    "CliqueMemory",
    "HEURISTIC_METHODS",
    "HeuristicKind",
    "MethodReport",
    "Network",
    "NetworkConfig",
    "NetworkFormatError",
    "ReducedGraph",
    "Rule",
    "Scenario",
    "StopReason",
    "ablation_reduction",
    "ablation_sorting",
    "bogus_sweep",
    "brute_force_partite",
    "complete_probe",
    "deserialize",
    "detect_bogus",
    "emit_report",
    "erase",
    "find_all_cliques_partite",
    "find_clique_partite",
    "find_clique_unreduced",
    "find_max_clique_cp",
    "finish_retrieval",
    "generate_messages",
    "init_state",
    "is_clique",
    "load_messages",
    "load_network",
    "make_partite_graph",
    "parse_report_csv",
    "reduce_graph",
    "run",
    "run_scenario",
    "save_messages",
    "save_network",
    "serialize",
    "som_step",
    "__version__",
]
