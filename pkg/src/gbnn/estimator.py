"""Scikit-learn estimator facade over the clustered associative memory.

fit stores complete codewords; predict completes partial ones (cells set
to -1 are treated as erased).  The facade keeps sklearn conventions:
parameters mirror __init__ arguments, fitted state lives in trailing
underscore attributes, and get_params/set_params/clone all work.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from gbnn.clique import (
    active_subgraph,
    find_clique_partite,
    find_max_clique_cp,
    reduce_graph,
)
from gbnn.dynamics import Rule, StopReason, run
from gbnn.heuristics import HeuristicKind, finish_retrieval
from gbnn.network import Network, NetworkConfig

_HEURISTICS = tuple(k.value for k in HeuristicKind)
_METHODS = _HEURISTICS + ("partite", "maxclique")


def complete_probe(network, probe, method, max_iters=None, rng=None):
    """Run the dynamics on one probe, then decode with the chosen method.

    Returns the per-position values, or None when the method produced no
    complete decodable assignment."""
    if method not in _METHODS:
        raise ValueError(f"method must be one of {_METHODS}, got {method!r}")
    cfg = network.config
    cap = max_iters if max_iters is not None else max(100, cfg.neuron_count + 2)
    if rng is None:
        rng = np.random.default_rng()
    state, status = run(network, probe, rule=Rule.SUM_OF_MAX, max_iters=cap)
    if method in _HEURISTICS:
        result = finish_retrieval(
            network, probe, state, status, HeuristicKind(method),
            max_iters=cap, rng=rng,
        )
        if result.success:
            return np.asarray(result.message, dtype=np.int64)
        return None
    if status.reason is not StopReason.CONVERGED:
        return None
    if method == "partite":
        graph = reduce_graph(network, state, probe)
        if not graph.fixed_is_clique:
            return None
        clique, _ = find_clique_partite(graph)
        if clique is None:
            return None
        flats = list(graph.fixed_assignment.values()) + [int(x) for x in clique]
    else:
        node_ids, adjacency = active_subgraph(network, state, probe)
        best, _ = find_max_clique_cp(adjacency)
        if len(best) != cfg.cluster_count:
            return None
        flats = [int(node_ids[b]) for b in best]
    values = np.full(cfg.cluster_count, -1, dtype=np.int64)
    for flat in flats:
        values[flat // cfg.neurons_per_cluster] = flat % cfg.neurons_per_cluster
    if np.any(values < 0):
        return None
    return values


class CliqueMemory(BaseEstimator):
    """Associative completion memory: rows in, completed rows out.

    Parameters
    ----------
    clusters : int
        Number of symbol positions per codeword.
    neurons : int
        Alphabet size per position.
    gamma : float
        Memory-effect weight of the retrieval dynamics.
    method : str
        Post-processing applied after the dynamics settle: one of the
        stepwise heuristics ('mm', 'mf', 'fm', 'ff', 'fe', 'fs'), the
        'random' baseline, 'partite' (reduction plus exact one-per-cluster
        search), or 'maxclique' (general branch-and-bound on the active
        subgraph).
    max_iters : int or None
        Iteration cap for the dynamics; None derives a cap from the
        network size.
    random_state : int or None
        Seed for the randomized heuristics.  None draws fresh entropy.
    """

    def __init__(
        self,
        clusters: int = 8,
        neurons: int = 64,
        gamma: float = 1.0,
        method: str = "partite",
        max_iters: int | None = None,
        random_state: int | None = None,
    ):
        self.clusters = clusters
        self.neurons = neurons
        self.gamma = gamma
        self.method = method
        self.max_iters = max_iters
        self.random_state = random_state

    def _validate_rows(self, X, allow_erased: bool):
        X = check_array(X, dtype=np.int64, ensure_2d=True)
        if X.shape[1] != self.clusters:
            raise ValueError(
                f"X has {X.shape[1]} columns, expected clusters={self.clusters}"
            )
        low = -1 if allow_erased else 0
        if X.size and (X.min() < low or X.max() >= self.neurons):
            raise ValueError(
                f"values must lie in [{low}, {self.neurons}); -1 marks an erased cell"
                if allow_erased
                else f"values must lie in [0, {self.neurons})"
            )
        return X

    def fit(self, X, y=None):
        """Store every row of X as a codeword in a fresh network."""
        if self.method not in _METHODS:
            raise ValueError(f"method must be one of {_METHODS}, got {self.method!r}")
        X = self._validate_rows(X, allow_erased=False)
        self.network_ = Network(NetworkConfig(self.clusters, self.neurons, self.gamma))
        self.network_.store_many(X)
        self.n_features_in_ = X.shape[1]
        self.n_stored_ = X.shape[0]
        return self

    def partial_fit(self, X, y=None):
        """Store additional rows without forgetting earlier ones."""
        if not hasattr(self, "network_"):
            return self.fit(X, y)
        X = self._validate_rows(X, allow_erased=False)
        self.network_.store_many(X)
        self.n_stored_ += X.shape[0]
        return self

    def _effective_max_iters(self) -> int:
        if self.max_iters is not None:
            return self.max_iters
        return max(100, self.network_.config.neuron_count + 2)

    def predict(self, X) -> np.ndarray:
        """Complete each row of X; -1 cells are erased inputs.

        Returns an array of the same shape.  Rows the memory cannot
        complete come back all -1."""
        check_is_fitted(self, "network_")
        X = self._validate_rows(X, allow_erased=True)
        out = np.full(X.shape, -1, dtype=np.int64)
        for i, row in enumerate(X):
            probe = tuple(None if v < 0 else int(v) for v in row)
            if self.random_state is None:
                rng = np.random.default_rng()
            else:
                rng = np.random.default_rng((self.random_state, i))
            values = complete_probe(
                self.network_, probe, self.method, self._effective_max_iters(), rng
            )
            if values is not None:
                out[i] = values
        return out

    def transform(self, X) -> np.ndarray:
        """Alias of predict, for transformer-style composition."""
        return self.predict(X)

    def score(self, X, y) -> float:
        """Fraction of rows of X completed exactly to the rows of y."""
        y = self._validate_rows(y, allow_erased=False)
        predicted = self.predict(X)
        if len(predicted) != len(y):
            raise ValueError("X and y must have the same number of rows")
        if not len(y):
            return 0.0
        return float(np.mean(np.all(predicted == y, axis=1)))
