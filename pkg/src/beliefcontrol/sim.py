"""Diffusion social learning: local Bayes update, then neighbourhood averaging.

Randomness: each agent draws from its own PCG64 stream seeded by
``SeedSequence(entropy=seed, spawn_key=(agent_index,))``. Observations are
produced in fixed-size chunks by inverting the agent's signal CDF at uniform
draws, so the sequence an agent sees depends only on ``(seed, agent)`` and
not on trace settings, chunk size or the other agents.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .limits import StateSpace, compute_W, limiting_beliefs
from .network import CombinationMatrix, NetworkTopology

FLUSH = 1e-300
ROW_TOL = 1e-12
CHUNK = 4096


class BeliefInvariantError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class LikelihoodModel:
    """Per-agent likelihood tables ``L_k[xi, theta]`` over a finite alphabet.

    ``tables`` is ``N x Z x |Theta|``; agents with smaller alphabets are not
    supported in one model (pad by splitting signals instead).
    ``true_states`` gives the state generating each agent's signals.
    """

    tables: np.ndarray
    true_states: tuple[int, ...]

    def __post_init__(self):
        L = np.array(self.tables, dtype=float)
        if L.ndim != 3:
            raise ValueError("likelihood tables must be N x Z x |Theta|")
        if np.any(L <= 0) or np.any(L >= 1):
            raise ValueError("likelihood entries must lie strictly between 0 and 1")
        sums = L.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > 1e-12):
            raise ValueError("likelihoods must sum to one over the signal alphabet")
        if len(self.true_states) != L.shape[0]:
            raise ValueError("one generating state per agent required")
        if any(not 0 <= s < L.shape[2] for s in self.true_states):
            raise ValueError("generating state outside the state space")
        L.setflags(write=False)
        object.__setattr__(self, "tables", L)
        object.__setattr__(self, "true_states", tuple(int(s) for s in self.true_states))

    @classmethod
    def binary(cls, p_head, true_states) -> "LikelihoodModel":
        """From an ``N x |Theta|`` table of head probabilities."""
        p = np.asarray(p_head, dtype=float)
        return cls(np.stack([p, 1.0 - p], axis=1), tuple(true_states))

    @property
    def n_agents(self) -> int:
        return self.tables.shape[0]

    @property
    def n_states(self) -> int:
        return self.tables.shape[2]

    def signal_cdf(self) -> np.ndarray:
        """``N x Z`` cumulative distribution of each agent's signals under its true state."""
        gen = self.tables[np.arange(self.n_agents), :, list(self.true_states)]
        cdf = np.cumsum(gen, axis=1)
        cdf[:, -1] = 1.0
        return cdf


@dataclass(frozen=True)
class SimConfig:
    iterations: int = 7000
    seed: int = 42
    initial_belief: str | np.ndarray = "uniform"
    trace_stride: int = 10
    averaging_window: int = 1
    check_rows: bool = False

    def __post_init__(self):
        if int(self.iterations) < 1:
            raise ValueError("iterations must be at least 1")
        if int(self.trace_stride) < 1:
            raise ValueError("trace stride must be at least 1")
        if int(self.averaging_window) < 1:
            raise ValueError("averaging window must be at least 1")
        if self.averaging_window > self.iterations:
            raise ValueError("averaging window exceeds the number of iterations")


@dataclass(frozen=True, eq=False)
class Trace:
    iterations: np.ndarray
    beliefs: np.ndarray
    labels: tuple[str, ...] = ()

    @property
    def final(self) -> np.ndarray:
        return self.beliefs[-1]

    def rows(self):
        """``(iteration, agent, state, belief)`` rows with 1-based agents."""
        for it, table in zip(self.iterations, self.beliefs):
            for k, row in enumerate(table):
                for s, b in enumerate(row):
                    yield int(it), k + 1, self.labels[s] if self.labels else s + 1, float(b)


def _normalise(rows: np.ndarray) -> np.ndarray:
    rows = np.where(rows < FLUSH, 0.0, rows)
    total = rows.sum(axis=-1, keepdims=True)
    if np.any(total <= 0):
        raise BeliefInvariantError("belief row vanished; likelihoods must be strictly positive")
    return rows / total


def bayesian_update(mu, likelihood) -> np.ndarray:
    """``psi(theta) ~ mu(theta) L(xi | theta)`` for one row or a stack of rows."""
    mu = np.asarray(mu, dtype=float)
    return _normalise(mu * np.asarray(likelihood, dtype=float))


def combine_step(psi, A) -> np.ndarray:
    """``mu_next[k] = sum_l a[l, k] psi[l]``."""
    a = A.entries if isinstance(A, CombinationMatrix) else np.asarray(A, dtype=float)
    return a.T @ np.asarray(psi, dtype=float)


def agent_streams(seed: int, n_agents: int) -> list[np.random.Generator]:
    return [np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy=int(seed), spawn_key=(k,))))
            for k in range(n_agents)]


class _ObservationSource:
    def __init__(self, model: LikelihoodModel, seed: int, chunk: int = CHUNK):
        self.cdf = model.signal_cdf()
        self.rngs = agent_streams(seed, model.n_agents)
        self.chunk = chunk
        self.buffer = np.zeros((model.n_agents, 0), dtype=np.int64)
        self.pos = 0

    def _refill(self):
        draws = np.empty((len(self.rngs), self.chunk), dtype=np.int64)
        for k, rng in enumerate(self.rngs):
            u = rng.random(self.chunk)
            draws[k] = np.minimum(np.searchsorted(self.cdf[k], u, side="right"), self.cdf.shape[1] - 1)
        self.buffer, self.pos = draws, 0

    def next(self) -> np.ndarray:
        if self.pos >= self.buffer.shape[1]:
            self._refill()
        xi = self.buffer[:, self.pos]
        self.pos += 1
        return xi


def initial_beliefs(config: SimConfig, n_agents: int, n_states: int) -> np.ndarray:
    if isinstance(config.initial_belief, str):
        if config.initial_belief != "uniform":
            raise ValueError(f"unknown initial belief {config.initial_belief!r}")
        return np.full((n_agents, n_states), 1.0 / n_states)
    mu = np.array(config.initial_belief, dtype=float)
    if mu.shape != (n_agents, n_states):
        raise ValueError(f"initial beliefs must be {n_agents}x{n_states}")
    if np.any(mu < 0) or np.any(np.abs(mu.sum(axis=1) - 1) > ROW_TOL):
        raise ValueError("initial beliefs must be distributions")
    return mu


def _check(mu: np.ndarray, it: int):
    if np.any(mu < 0) or np.any(np.abs(mu.sum(axis=1) - 1.0) > ROW_TOL):
        raise BeliefInvariantError(f"belief rows not stochastic at iteration {it}")


def run_simulation(A, likelihoods: LikelihoodModel, states: StateSpace | None = None,
                   config: SimConfig | None = None) -> Trace:
    """Iterate the diffusion rule and record a strided trace.

    The trace keeps the initial beliefs (iteration 0), every
    ``trace_stride``-th iteration and the final one.
    """
    config = config or SimConfig()
    a = A.entries if isinstance(A, CombinationMatrix) else np.asarray(A, dtype=float)
    n, n_states = likelihoods.n_agents, likelihoods.n_states
    if a.shape != (n, n):
        raise ValueError(f"A is {a.shape} but the likelihood model has {n} agents")
    if states is not None and states.size != n_states:
        raise ValueError("state space and likelihood tables disagree")
    L = likelihoods.tables
    rows = np.arange(n)
    source = _ObservationSource(likelihoods, config.seed)
    mu = initial_beliefs(config, n, n_states)
    at, stored = [0], [mu.copy()]
    aT = np.ascontiguousarray(a.T)
    for it in range(1, config.iterations + 1):
        xi = source.next()
        psi = _normalise(mu * L[rows, xi])
        mu = _normalise(aT @ psi)
        if config.check_rows:
            _check(mu, it)
        if it % config.trace_stride == 0 or it == config.iterations:
            at.append(it)
            stored.append(mu.copy())
    labels = states.labels if states is not None else ()
    return Trace(np.array(at), np.array(stored), labels)


def empirical_limit(trace: Trace, averaging_window: int = 1) -> np.ndarray:
    """Mean of the last ``averaging_window`` stored snapshots."""
    if not 1 <= averaging_window <= len(trace.iterations):
        raise ValueError(f"window {averaging_window} outside 1..{len(trace.iterations)} stored snapshots")
    table = trace.beliefs[-averaging_window:].mean(axis=0)
    return table / table.sum(axis=1, keepdims=True)


def run_seeds(A, likelihoods: LikelihoodModel, states, config: SimConfig, seeds: Sequence[int]) -> list[Trace]:
    """Independent runs, one per seed."""
    return [run_simulation(A, likelihoods, states, replace(config, seed=int(s))) for s in seeds]


@dataclass
class VerificationReport:
    analytic: np.ndarray
    target: np.ndarray
    empirical: np.ndarray | None = None
    sending_labels: tuple[str, ...] = ()
    seeds: list[int] = field(default_factory=list)

    @property
    def analytic_vs_target(self) -> float:
        return float(np.max(np.abs(self.analytic - self.target)))

    @property
    def empirical_vs_analytic(self) -> float | None:
        if self.empirical is None:
            return None
        return float(np.max(np.abs(self.empirical - self.analytic)))

    def per_agent_deviation(self) -> np.ndarray:
        return np.max(np.abs(self.analytic - self.target), axis=0)

    def to_dict(self, agent_ids=None) -> dict:
        ids = list(agent_ids) if agent_ids is not None else list(range(1, self.analytic.shape[1] + 1))
        dev = self.per_agent_deviation()
        out = {
            "analytic_vs_target": self.analytic_vs_target,
            "empirical_vs_analytic": self.empirical_vs_analytic,
            "states": list(self.sending_labels),
            "per_agent": [
                {"id": k, "target": self.target[:, j].tolist(), "analytic": self.analytic[:, j].tolist(),
                 "empirical": None if self.empirical is None else self.empirical[:, j].tolist(),
                 "deviation": float(dev[j])}
                for j, k in enumerate(ids)
            ],
        }
        if self.seeds:
            out["seeds"] = self.seeds
        return out


def verify_design(T_SR, T_RR, Q, topology: NetworkTopology, likelihoods: LikelihoodModel | None = None,
                  config: SimConfig | None = None, T_SS=None, states: StateSpace | None = None,
                  seeds: Sequence[int] | None = None) -> VerificationReport:
    """Compare target, analytic and (optionally) simulated receiving beliefs.

    Beliefs are reported on the sending true states as ``S x N_gR`` tables.
    Simulation needs ``T_SS`` and a likelihood model; with several ``seeds``
    the empirical limits are averaged over runs.
    """
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    states = states or StateSpace.for_topology(topology)
    W = compute_W(T_SR, T_RR, topology.sending_sizes)
    table = limiting_beliefs(W, states, topology)
    analytic = table[:, list(states.sending_states)].T
    report = VerificationReport(analytic, Q, None, states.sending_labels)
    if likelihoods is None or T_SS is None:
        return report
    config = config or SimConfig()
    A = CombinationMatrix.from_blocks(T_SS, T_SR, T_RR)
    seeds = list(seeds) if seeds else [config.seed]
    traces = run_seeds(A, likelihoods, states, config, seeds)
    emp = np.mean([empirical_limit(t, config.averaging_window) for t in traces], axis=0)
    report.empirical = emp[topology.n_sending:, list(states.sending_states)].T
    report.seeds = seeds
    return report
