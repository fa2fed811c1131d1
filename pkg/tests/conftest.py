"""Hand-built instances shared across test modules.

Both trap fixtures are states the capped rule cannot improve (every active
neuron has support in every foreign cluster) yet whose active sets contain
more than the cliques inside them, so post-processing decisions matter.
"""

import numpy as np
import pytest

from gbnn.dynamics import ActivationState
from gbnn.network import Network, NetworkConfig


def build_net(cluster_count, neurons_per_cluster, edges, gamma=1.0):
    net = Network(NetworkConfig(cluster_count, neurons_per_cluster, gamma))
    for a, b in edges:
        if a // neurons_per_cluster == b // neurons_per_cluster:
            raise ValueError(f"intra-cluster test edge {(a, b)}")
        net.w[a, b] = 1
        net.w[b, a] = 1
    return net


def state_from_active(net, active):
    v = np.zeros(net.config.neuron_count, dtype=np.uint8)
    v[list(active)] = 1
    return ActivationState(v)


@pytest.fixture
def triangle_trap():
    """3 clusters x 3 neurons, two actives per cluster, exactly one clique.

    Active neurons: 0,1 | 3,4 | 6,7.  The sole one-per-cluster triangle is
    (0, 3, 6).  Neuron 0 sees 3 active neighbors, neuron 1 sees 2, and the
    three clusters tie on active count, so cluster 0 is every selector's
    tie-break winner.
    """
    net = build_net(3, 3, [(0, 3), (1, 4), (0, 6), (0, 7), (1, 6), (3, 6), (4, 7)])
    state = state_from_active(net, [0, 1, 3, 4, 6, 7])
    probe = (None, None, None)
    return net, state, probe


@pytest.fixture
def cascade_trap():
    """3 clusters x 3 neurons where removing the sole clique's cluster-0
    member collapses the whole state.

    Active: 0,1 | 3,4,5 | 6,7,8.  Unique triangle (0, 3, 6).  Neuron 0 has 3
    active neighbors, its sibling 1 has 4, so signal-based elimination in
    cluster 0 removes neuron 0 - after which iteration deactivates every
    cluster.
    """
    net = build_net(
        3,
        3,
        [
            (0, 3), (0, 6), (3, 6),          # the only triangle
            (1, 4), (1, 5), (1, 7), (1, 6),  # sibling's support
            (4, 8), (5, 8), (3, 7), (0, 8),  # cross links keeping all alive
        ],
    )
    state = state_from_active(net, [0, 1, 3, 4, 5, 6, 7, 8])
    probe = (None, None, None)
    return net, state, probe
