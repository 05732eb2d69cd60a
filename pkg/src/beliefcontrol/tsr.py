"""Designing the sending-to-receiving weights ``T_SR`` for a fixed ``T_RR``.

A target ``Q`` (``S x N_gR``, column-stochastic over the sending truths) is
reached iff ``E T_SR = Q (I - T_RR)`` has a non-negative solution that
respects the sparsity of the graph. Column ``k`` only constrains the
per-sub-network sums of ``t_SR,k``, which must equal ``v_k = q_k - Q t_RR,k``;
hence the attainability test compares the sign pattern of ``V`` with the
connectivity indicator ``C``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .network import DimensionError, NetworkTopology, build_C, build_E, reduce_for_agent

TOL_ZERO = 1e-9
TOL_POS = 1e-9
EQ_TOL = 1e-10


class InfeasibleDesign(ValueError):
    """The desired beliefs cannot be reached; ``violations`` lists every failing pair."""

    def __init__(self, message: str, violations: Sequence["Violation"] = ()):
        super().__init__(message)
        self.violations = list(violations)


def check_desired_beliefs(Q, S: int | None = None, n_receiving: int | None = None, tol: float = 1e-12) -> np.ndarray:
    """Return ``Q`` as an array after checking it is column-stochastic."""
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    if S is not None and n_receiving is not None and Q.shape != (S, n_receiving):
        raise DimensionError(f"Q must be {S}x{n_receiving}, got {Q.shape}")
    if np.any(Q < -tol):
        raise ValueError("desired beliefs must be non-negative")
    sums = Q.sum(axis=0)
    bad = np.flatnonzero(np.abs(sums - 1.0) > tol)
    if bad.size:
        raise ValueError(f"columns {[int(c) + 1 for c in bad]} of Q do not sum to one")
    return Q


def compute_V(Q, T_RR) -> np.ndarray:
    """Difference matrix ``V = Q (I - T_RR)``."""
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    T_RR = np.atleast_2d(np.asarray(T_RR, dtype=float))
    if T_RR.shape != (Q.shape[1], Q.shape[1]):
        raise DimensionError(f"T_RR must be {Q.shape[1]}x{Q.shape[1]}, got {T_RR.shape}")
    return Q - Q @ T_RR


@dataclass(frozen=True)
class Violation:
    agent: int
    subnet: int
    kind: str
    value: float

    def to_dict(self) -> dict:
        return {"agent": self.agent, "subnet": self.subnet, "kind": self.kind, "value": self.value}


@dataclass
class AttainabilityReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def attainable(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {"attainable": self.attainable, "violations": [v.to_dict() for v in self.violations]}


def check_attainable(V, C, tol_zero: float = TOL_ZERO, tol_pos: float = TOL_POS, agent_ids=None) -> AttainabilityReport:
    """Compare the sign pattern of ``V`` against the connectivity indicator.

    Every offending ``(agent, subnet)`` pair is reported: negative entries as
    ``negative``; entries of disconnected pairs that are not zero as
    ``positive-required-zero``; entries of connected pairs below ``tol_pos``
    as ``zero-required-positive``.
    """
    V = np.atleast_2d(np.asarray(V, dtype=float))
    C = np.atleast_2d(np.asarray(C))
    if V.shape != C.shape:
        raise DimensionError(f"V {V.shape} and C {C.shape} differ in shape")
    if agent_ids is None:
        agent_ids = range(1, V.shape[1] + 1)
    agent_ids = list(agent_ids)
    report = AttainabilityReport()
    for col, agent in enumerate(agent_ids):
        for s in range(V.shape[0]):
            v = float(V[s, col])
            if C[s, col]:
                if v < -tol_zero:
                    kind = "negative"
                elif v < tol_pos:
                    kind = "zero-required-positive"
                else:
                    continue
            else:
                if abs(v) <= tol_zero:
                    continue
                kind = "negative" if v < 0 else "positive-required-zero"
            report.violations.append(Violation(int(agent), s + 1, kind, v))
    return report


def right_inverse(E_k: np.ndarray) -> np.ndarray:
    """``E_k^T (E_k E_k^T)^{-1}`` for a full-row-rank block matrix."""
    if E_k.size == 0:
        return E_k.T.copy()
    return E_k.T @ np.linalg.inv(E_k @ E_k.T)


@dataclass(frozen=True, eq=False)
class ColumnSolutionFamily:
    """All non-negative ``t'_SR,k`` solving ``E_k t = v'_k``.

    Members are ``base + projector @ y``; ``base`` splits each sub-network's
    total equally over the agent's connected senders, and ``projector`` is the
    block-diagonal centring projector so ``y`` only reshuffles weight inside a
    sub-network.
    """

    agent: int
    base: np.ndarray
    projector: np.ndarray
    sending_ids: tuple[int, ...]
    sending_subnet: tuple[int, ...]
    subnets: tuple[int, ...]
    totals: np.ndarray

    @property
    def free_dimension(self) -> int:
        return int(round(np.trace(self.projector))) if self.projector.size else 0

    def instantiate(self, y=None, tol: float = 1e-12) -> np.ndarray:
        """Reduced column for one choice of ``y``; rejects choices with negative weights."""
        if y is None:
            return self.base.copy()
        y = np.asarray(y, dtype=float)
        if y.shape != self.base.shape:
            raise DimensionError(f"y must have length {self.base.size}, got {y.shape}")
        t = self.base + self.projector @ y
        if np.any(t < -tol):
            j = int(np.argmin(t))
            raise ValueError(f"y drives the weight of sending agent {self.sending_ids[j]} to {t[j]:.3g} < 0")
        return np.clip(t, 0.0, None)

    def from_weights(self, weights: Mapping[int, float], tol: float = 1e-10) -> np.ndarray:
        """Reduced column from explicit per-sending-agent weights.

        Agents not listed share what is left of their sub-network's total
        equally. Raises if a sub-network's total cannot be matched.
        """
        t = np.full(self.base.shape, np.nan)
        for agent, w in weights.items():
            if agent not in self.sending_ids:
                raise ValueError(f"agent {self.agent} does not hear sending agent {agent}")
            t[self.sending_ids.index(agent)] = float(w)
        sub = np.array(self.sending_subnet)
        for s, total in zip(self.subnets, self.totals):
            idx = np.flatnonzero(sub == s)
            fixed = idx[~np.isnan(t[idx])]
            free = idx[np.isnan(t[idx])]
            rest = total - t[fixed].sum()
            if free.size:
                t[free] = rest / free.size
            elif abs(rest) > tol:
                raise ValueError(f"weights for sub-network {s} sum to {t[fixed].sum():.12g}, need {total:.12g}")
        if np.any(t < -tol):
            raise ValueError("explicit weights leave a negative remainder")
        return np.clip(t, 0.0, None)


def solution_family(k: int, V, topology: NetworkTopology, tol_zero: float = TOL_ZERO) -> ColumnSolutionFamily:
    """Parametrised solution set for receiving agent ``k`` (global 1-based ID)."""
    V = np.atleast_2d(np.asarray(V, dtype=float))
    E, C = build_E(topology), build_C(topology)
    red = reduce_for_agent(E, C, topology, k)
    col = k - topology.n_sending - 1
    v = V[:, col]
    for s in range(topology.S):
        if C[s, col] == 0 and abs(v[s]) > tol_zero:
            raise InfeasibleDesign(
                f"agent {k} does not hear sub-network {s + 1} but needs weight {v[s]:.6g} from it",
                [Violation(k, s + 1, "negative" if v[s] < 0 else "positive-required-zero", float(v[s]))])
    v_red = v[[s - 1 for s in red.subnets]]
    for s, val in zip(red.subnets, v_red):
        if val < -tol_zero:
            raise InfeasibleDesign(
                f"agent {k} needs negative total weight {val:.6g} from sub-network {s}",
                [Violation(k, s, "negative", float(val))])
    v_red = np.clip(v_red, 0.0, None)
    E_k = red.E_k
    base = right_inverse(E_k) @ v_red if E_k.size else np.zeros(0)
    projector = np.eye(E_k.shape[1]) - right_inverse(E_k) @ E_k if E_k.size else np.zeros((0, 0))
    return ColumnSolutionFamily(
        agent=k,
        base=base,
        projector=projector,
        sending_ids=red.sending_ids,
        sending_subnet=red.sending_subnet,
        subnets=red.subnets,
        totals=v_red,
    )


def design_TSR(Q, T_RR, topology: NetworkTopology, y_policy=None,
               tol_zero: float = TOL_ZERO, tol_pos: float = TOL_POS) -> np.ndarray:
    """``T_SR`` reaching ``Q`` for the given ``T_RR``.

    ``y_policy`` selects one member of each column's solution family:

    * ``None`` or ``"zero"``: equal split over a sub-network's connected senders;
    * a mapping ``agent -> sequence`` giving the free vector ``y`` of that column;
    * a mapping ``agent -> {sending_agent: weight}`` giving explicit weights
      (unlisted senders share the remainder of their sub-network's total).

    Raises :class:`InfeasibleDesign` listing every violating pair when ``Q``
    is not attainable.
    """
    Q = check_desired_beliefs(Q, topology.S, topology.n_receiving)
    T_RR = np.atleast_2d(np.asarray(T_RR, dtype=float))
    V = compute_V(Q, T_RR)
    report = check_attainable(V, build_C(topology), tol_zero, tol_pos, topology.receiving_ids)
    if not report.attainable:
        raise InfeasibleDesign(f"{len(report.violations)} attainability violation(s)", report.violations)
    if y_policy in (None, "zero"):
        y_policy = {}
    if not isinstance(y_policy, Mapping):
        raise ValueError(f"unknown y policy {y_policy!r}")
    T_SR = np.zeros((topology.n_sending, topology.n_receiving))
    for col, k in enumerate(topology.receiving_ids):
        family = solution_family(k, V, topology, tol_zero)
        choice = y_policy.get(k, y_policy.get(str(k)))
        if choice is None:
            t = family.instantiate()
        elif isinstance(choice, Mapping):
            t = family.from_weights({int(a): w for a, w in choice.items()})
        else:
            t = family.instantiate(choice)
        T_SR[np.array(family.sending_ids, dtype=int) - 1, col] = t
    return T_SR


def uniform_precheck(topology: NetworkTopology) -> dict[int, str]:
    """Per receiving agent: does it hear ``all``, ``none`` or only ``partial`` senders.

    A common target belief for every receiving agent is only reachable when
    no agent is ``partial``.
    """
    C = build_C(topology)
    out = {}
    for col, k in enumerate(topology.receiving_ids):
        heard = int(C[:, col].sum())
        out[k] = "all" if heard == topology.S else "none" if heard == 0 else "partial"
    return out
