"""Random weak graphs and designs for property tests and experiments."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import CombinationMatrix, NetworkTopology


@dataclass(frozen=True)
class GraphSpec:
    max_sending: int = 3
    max_receiving: int = 2
    max_size: int = 3
    p_edge: float = 0.4
    p_cross: float = 0.4


def _strong_block(rng: np.random.Generator, n: int, p: float) -> np.ndarray:
    """Random strongly connected pattern with a self-loop: a directed ring plus extras."""
    adj = rng.random((n, n)) < p
    perm = rng.permutation(n)
    for i in range(n):
        adj[perm[i], perm[(i + 1) % n]] = True
    adj[perm[0], perm[0]] = True
    return adj


def random_topology(rng: np.random.Generator, spec: GraphSpec = GraphSpec(), S: int | None = None,
                    R: int | None = None) -> NetworkTopology:
    """Valid weak graph whose receiving agents all have a directed path from some sending agent."""
    S = S or int(rng.integers(1, spec.max_sending + 1))
    R = R or int(rng.integers(1, spec.max_receiving + 1))
    ssizes = [int(rng.integers(1, spec.max_size + 1)) for _ in range(S)]
    rsizes = [int(rng.integers(1, spec.max_size + 1)) for _ in range(R)]
    top = NetworkTopology(tuple(ssizes), tuple(rsizes), np.zeros((sum(ssizes) + sum(rsizes),) * 2, bool))
    adj = np.zeros((top.N, top.N), dtype=bool)
    for sub in range(1, S + R + 1):
        idx = np.array(top.members(sub)) - 1
        adj[np.ix_(idx, idx)] = _strong_block(rng, idx.size, spec.p_edge)
    ns = top.n_sending
    cross = rng.random((ns, top.n_receiving)) < spec.p_cross
    adj[:ns, ns:] = cross
    for sub in range(S + 1, S + R + 1):
        idx = np.array(top.members(sub)) - 1
        if not adj[:ns, idx].any():
            adj[int(rng.integers(ns)), int(rng.choice(idx))] = True
    states = tuple(int(s) for s in rng.permutation(S))
    return NetworkTopology(tuple(ssizes), tuple(rsizes), adj, sending_states=states)


def random_weights(rng: np.random.Generator, topology: NetworkTopology, alpha: float = 1.0) -> CombinationMatrix:
    """Dirichlet weights over each agent's in-neighbours."""
    a = np.zeros((topology.N, topology.N))
    for k in range(topology.N):
        nbrs = np.flatnonzero(topology.adjacency[:, k])
        a[nbrs, k] = rng.dirichlet(np.full(nbrs.size, alpha))
    return CombinationMatrix(a, topology.n_sending)


def random_desired(rng: np.random.Generator, S: int, n: int, alpha: float = 1.0) -> np.ndarray:
    """``S x n`` column-stochastic matrix with Dirichlet columns."""
    return rng.dirichlet(np.full(S, alpha), size=n).T


def full_cross_topology(rng: np.random.Generator, spec: GraphSpec = GraphSpec(), S: int | None = None,
                        R: int | None = None) -> NetworkTopology:
    """Like :func:`random_topology` but every receiving agent hears every sending sub-network."""
    top = random_topology(rng, spec, S, R)
    adj = np.array(top.adjacency)
    ns = top.n_sending
    for s in range(1, top.S + 1):
        idx = np.array(top.members(s)) - 1
        for k in range(ns, top.N):
            if not adj[idx, k].any():
                adj[int(rng.choice(idx)), k] = True
    return NetworkTopology(top.sending_sizes, top.receiving_sizes, adj, sending_states=top.sending_states)
