"""Steady-state beliefs of receiving agents.

The receiving beliefs converge to ``W^T`` applied to the sending limits, with
``W = T_SR (I - T_RR)^{-1}``. Since every sending agent learns its own true
state, each receiving belief ends up supported on the sending true states.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .network import CombinationMatrix, DimensionError, NetworkTopology, build_E

COND_LIMIT = 1e12
CLAMP_TOL = 1e-12
COLUMN_TOL = 1e-9


class InvalidWeakStructure(ValueError):
    """``I - T_RR`` is (numerically) singular: some receiving agents get no external inflow."""


@dataclass(frozen=True)
class StateSpace:
    """Ordered state labels plus the true state of each sending sub-network."""

    labels: tuple[str, ...]
    sending_states: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(str(x) for x in self.labels))
        object.__setattr__(self, "sending_states", tuple(int(s) for s in self.sending_states))
        if len(set(self.sending_states)) != len(self.sending_states):
            raise ValueError("sending sub-networks must have pairwise distinct true states")
        if any(not 0 <= s < len(self.labels) for s in self.sending_states):
            raise ValueError("sending true state outside the state space")

    @classmethod
    def for_topology(cls, topology: NetworkTopology, labels=None) -> "StateSpace":
        used = [s for s in topology.sending_states + topology.receiving_states if s is not None]
        size = max(used, default=-1) + 1
        if labels is None:
            labels = [f"theta{i + 1}" for i in range(size)]
        elif len(labels) < size:
            raise ValueError("fewer state labels than referenced states")
        return cls(tuple(labels), topology.sending_states)

    @property
    def size(self) -> int:
        return len(self.labels)

    @property
    def sending_labels(self) -> tuple[str, ...]:
        return tuple(self.labels[s] for s in self.sending_states)


@dataclass(frozen=True, eq=False)
class LimitMatrix:
    """``N_gS x N_gR`` limit map with its row partition by sending sub-network."""

    W: np.ndarray
    block_sizes: tuple[int, ...]

    def block(self, column: int, subnet: int) -> np.ndarray:
        """Weights ``w_{k,N_s}`` of 0-based receiving column on 1-based sub-network."""
        start = sum(self.block_sizes[: subnet - 1])
        return self.W[start : start + self.block_sizes[subnet - 1], column]

    def block_sums(self) -> np.ndarray:
        """``S x N_gR`` matrix collecting the per-sub-network sums of each column."""
        E = np.zeros((len(self.block_sizes), self.W.shape[0]))
        start = 0
        for s, size in enumerate(self.block_sizes):
            E[s, start : start + size] = 1.0
            start += size
        return E @ self.W


def _blocks(T_SR, T_RR):
    T_SR = np.atleast_2d(np.asarray(T_SR, dtype=float))
    T_RR = np.atleast_2d(np.asarray(T_RR, dtype=float))
    if T_RR.shape[0] != T_RR.shape[1] or T_SR.shape[1] != T_RR.shape[0]:
        raise DimensionError(f"T_SR {T_SR.shape} and T_RR {T_RR.shape} do not match")
    return T_SR, T_RR


def compute_W(T_SR, T_RR, block_sizes=None) -> LimitMatrix:
    """Solve ``W (I - T_RR) = T_SR`` by LU factorisation of ``(I - T_RR)^T``.

    Raises :class:`InvalidWeakStructure` when ``I - T_RR`` is singular to
    working precision or ``T_RR`` has spectral radius >= 1, and ``ValueError``
    when the result has negative entries beyond round-off or columns that do
    not sum to one (both signal inputs that are not a valid weak graph).
    """
    T_SR, T_RR = _blocks(T_SR, T_RR)
    n_r = T_RR.shape[0]
    if block_sizes is None:
        block_sizes = (T_SR.shape[0],)
    if sum(block_sizes) != T_SR.shape[0]:
        raise DimensionError("block sizes do not cover the rows of T_SR")
    M = np.eye(n_r) - T_RR
    if n_r:
        radius = np.max(np.abs(np.linalg.eigvals(T_RR)))
        cond = np.linalg.cond(M, 1)
        if not np.isfinite(cond) or cond > COND_LIMIT or radius >= 1.0:
            raise InvalidWeakStructure(
                f"I - T_RR is singular (cond={cond:.3g}, spectral radius={radius:.6g}); "
                "some receiving agents have no external inflow")
        lu = sla.lu_factor(M.T)
        W = sla.lu_solve(lu, T_SR.T).T
    else:
        W = T_SR.copy()
    if np.any(W < -CLAMP_TOL):
        raise ValueError(f"limit matrix has negative entries (min {W.min():.3g}); inputs are invalid")
    W[W < 0] = 0.0
    sums = W.sum(axis=0)
    if np.any(np.abs(sums - 1.0) > COLUMN_TOL):
        raise ValueError(f"limit matrix columns do not sum to one (max deviation {np.max(np.abs(sums - 1)):.3g})")
    return LimitMatrix(W, tuple(int(b) for b in block_sizes))


def compute_W_for(topology: NetworkTopology, A: CombinationMatrix) -> LimitMatrix:
    return compute_W(A.T_SR, A.T_RR, topology.sending_sizes)


def sending_limit(state: int, states: StateSpace, topology: NetworkTopology) -> np.ndarray:
    """Stacked limiting beliefs of all sending agents at one state (0-based index)."""
    if not 0 <= state < states.size:
        raise ValueError(f"state {state} outside the state space")
    out = np.zeros(topology.n_sending)
    start = 0
    for size, truth in zip(topology.sending_sizes, states.sending_states):
        if truth == state:
            out[start : start + size] = 1.0
        start += size
    return out


def limiting_beliefs(W: LimitMatrix, states: StateSpace, topology: NetworkTopology) -> np.ndarray:
    """``N_gR x |Theta|`` table of limiting receiving beliefs.

    Column ``theta`` is ``W^T`` applied to the sending limit at ``theta``; the
    columns of states outside the sending truths are therefore zero.
    """
    table = np.zeros((W.W.shape[1], states.size))
    for theta in range(states.size):
        table[:, theta] = W.W.T @ sending_limit(theta, states, topology)
    return table


def beliefs_on_sending_states(W: LimitMatrix) -> np.ndarray:
    """Limiting beliefs arranged like a desired-belief matrix (``S x N_gR``)."""
    return W.block_sums()


def full_desired_beliefs(Q, topology: NetworkTopology) -> np.ndarray:
    """Extend an ``S x N_gR`` target with the sending agents' point masses (``S x N``)."""
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    if Q.shape != (topology.S, topology.n_receiving):
        raise DimensionError(f"Q must be {topology.S}x{topology.n_receiving}, got {Q.shape}")
    return np.hstack([build_E(topology), Q])


def fixed_point_residual(A, Q_full, n_sending: int | None = None) -> float:
    """Largest ``|q_k - sum_l a_lk q_l|`` over receiving agents and sending states.

    ``n_sending`` is taken from ``A`` when it is a :class:`CombinationMatrix`.
    """
    if isinstance(A, CombinationMatrix):
        a, n_sending = A.entries, A.n_sending if n_sending is None else n_sending
    else:
        a = np.asarray(A, dtype=float)
    if n_sending is None:
        raise ValueError("n_sending is required for a plain array")
    Q_full = np.atleast_2d(np.asarray(Q_full, dtype=float))
    if Q_full.shape[1] != a.shape[0]:
        raise DimensionError("Q_full must have one column per agent")
    if a.shape[0] == n_sending:
        return 0.0
    gap = Q_full - Q_full @ a
    return float(np.max(np.abs(gap[:, n_sending:])))
