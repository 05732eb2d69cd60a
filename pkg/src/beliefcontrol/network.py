"""Weakly-connected network topologies and their combination matrices.

Agents are numbered sending-first: global IDs ``1..N_gS`` belong to the
sending sub-networks, ``N_gS+1..N`` to the receiving ones. Public functions
take and return 1-based agent and sub-network IDs; arrays are 0-based.

The combination matrix ``A`` is left-stochastic (columns sum to one) with
entry ``A[l, k]`` the weight agent ``k`` gives to data from agent ``l``.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np


class DimensionError(ValueError):
    """Array shapes disagree with the topology."""


@dataclass(frozen=True, eq=False)
class NetworkTopology:
    """Sub-network partition and directed adjacency of a weak graph.

    ``adjacency[l, k]`` is true iff agent ``l`` feeds agent ``k`` (self-loops
    on the diagonal). ``sending_states`` holds the 0-based index in the state
    space of each sending sub-network's true state; ``receiving_states`` may
    hold ``None`` when a receiving sub-network's truth is irrelevant.

    Structural invariants (one-way flow, strong connectivity, ...) are *not*
    enforced here so that invalid graphs can still be loaded and reported on
    by :func:`validate_network`.
    """

    sending_sizes: tuple[int, ...]
    receiving_sizes: tuple[int, ...]
    adjacency: np.ndarray
    sending_states: tuple[int, ...] = ()
    receiving_states: tuple[int | None, ...] = ()

    def __post_init__(self):
        sizes = tuple(int(n) for n in self.sending_sizes)
        rsizes = tuple(int(n) for n in self.receiving_sizes)
        if any(n < 1 for n in sizes + rsizes):
            raise ValueError("sub-network sizes must be positive")
        object.__setattr__(self, "sending_sizes", sizes)
        object.__setattr__(self, "receiving_sizes", rsizes)
        adj = np.asarray(self.adjacency, dtype=bool)
        n = sum(sizes) + sum(rsizes)
        if adj.shape != (n, n):
            raise DimensionError(f"adjacency must be {n}x{n}, got {adj.shape}")
        adj = adj.copy()
        adj.setflags(write=False)
        object.__setattr__(self, "adjacency", adj)
        if not self.sending_states:
            object.__setattr__(self, "sending_states", tuple(range(len(sizes))))
        if len(self.sending_states) != len(sizes):
            raise ValueError("one true state per sending sub-network required")
        if not self.receiving_states:
            object.__setattr__(self, "receiving_states", (None,) * len(rsizes))
        if len(self.receiving_states) != len(rsizes):
            raise ValueError("one true state entry per receiving sub-network required")

    @classmethod
    def from_edges(cls, sending_sizes, receiving_sizes, edges, **kwargs) -> "NetworkTopology":
        """Build from 1-based ``(from, to)`` edge pairs."""
        n = sum(sending_sizes) + sum(receiving_sizes)
        adj = np.zeros((n, n), dtype=bool)
        for src, dst in edges:
            if not (1 <= src <= n and 1 <= dst <= n):
                raise DimensionError(f"edge ({src}, {dst}) outside agents 1..{n}")
            adj[src - 1, dst - 1] = True
        return cls(tuple(sending_sizes), tuple(receiving_sizes), adj, **kwargs)

    @classmethod
    def from_matrix(cls, sending_sizes, receiving_sizes, A, **kwargs) -> "NetworkTopology":
        """Topology whose edges are the strictly positive entries of ``A``."""
        return cls(tuple(sending_sizes), tuple(receiving_sizes), np.asarray(A) > 0, **kwargs)

    @property
    def S(self) -> int:
        return len(self.sending_sizes)

    @property
    def R(self) -> int:
        return len(self.receiving_sizes)

    @property
    def n_sending(self) -> int:
        return sum(self.sending_sizes)

    @property
    def n_receiving(self) -> int:
        return sum(self.receiving_sizes)

    @property
    def N(self) -> int:
        return self.n_sending + self.n_receiving

    @property
    def subnet_sizes(self) -> tuple[int, ...]:
        return self.sending_sizes + self.receiving_sizes

    @property
    def sending_ids(self) -> list[int]:
        return list(range(1, self.n_sending + 1))

    @property
    def receiving_ids(self) -> list[int]:
        return list(range(self.n_sending + 1, self.N + 1))

    def members(self, subnet: int) -> list[int]:
        """Global 1-based IDs of the agents of a 1-based sub-network."""
        if not 1 <= subnet <= self.S + self.R:
            raise ValueError(f"sub-network {subnet} outside 1..{self.S + self.R}")
        start = sum(self.subnet_sizes[: subnet - 1])
        return list(range(start + 1, start + self.subnet_sizes[subnet - 1] + 1))

    def subnet_of(self, agent: int) -> int:
        """1-based sub-network containing a 1-based agent."""
        if not 1 <= agent <= self.N:
            raise ValueError(f"agent {agent} outside 1..{self.N}")
        bounds = np.cumsum(self.subnet_sizes)
        return int(np.searchsorted(bounds, agent)) + 1

    def is_receiving(self, agent: int) -> bool:
        return self.n_sending < agent <= self.N

    def agent_true_states(self) -> list[int | None]:
        """True-state index of every agent, inherited from its sub-network."""
        out: list[int | None] = []
        for size, state in zip(self.subnet_sizes, self.sending_states + self.receiving_states):
            out.extend([state] * size)
        return out


@dataclass(frozen=True, eq=False)
class CombinationMatrix:
    """``N x N`` combination matrix with block views ``[[T_SS, T_SR], [0, T_RR]]``."""

    entries: np.ndarray
    n_sending: int

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionError(f"combination matrix must be square, got {a.shape}")
        if not 0 <= self.n_sending <= a.shape[0]:
            raise DimensionError("n_sending outside matrix dimension")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @classmethod
    def from_blocks(cls, T_SS, T_SR, T_RR) -> "CombinationMatrix":
        T_SS, T_SR, T_RR = (np.atleast_2d(np.asarray(x, dtype=float)) for x in (T_SS, T_SR, T_RR))
        ns, nr = T_SS.shape[0], T_RR.shape[0]
        if T_SS.shape != (ns, ns) or T_RR.shape != (nr, nr) or T_SR.shape != (ns, nr):
            raise DimensionError("inconsistent block shapes")
        a = np.block([[T_SS, T_SR], [np.zeros((nr, ns)), T_RR]])
        return cls(a, ns)

    @property
    def T_SS(self) -> np.ndarray:
        return self.entries[: self.n_sending, : self.n_sending]

    @property
    def T_SR(self) -> np.ndarray:
        return self.entries[: self.n_sending, self.n_sending :]

    @property
    def T_RR(self) -> np.ndarray:
        return self.entries[self.n_sending :, self.n_sending :]

    @property
    def lower_left(self) -> np.ndarray:
        return self.entries[self.n_sending :, : self.n_sending]

    def with_blocks(self, T_SR=None, T_RR=None) -> "CombinationMatrix":
        """Copy with the receiving-side blocks replaced."""
        T_SR = self.T_SR if T_SR is None else T_SR
        T_RR = self.T_RR if T_RR is None else T_RR
        out = CombinationMatrix.from_blocks(self.T_SS, T_SR, T_RR)
        a = np.array(out.entries)
        a[self.n_sending :, : self.n_sending] = self.lower_left
        return CombinationMatrix(a, self.n_sending)


@dataclass(frozen=True)
class ValidationConfig:
    tol_stochastic: float = 1e-12


@dataclass(frozen=True)
class Issue:
    kind: str
    message: str
    location: tuple = ()

    def to_dict(self) -> dict:
        return {"kind": self.kind, "message": self.message, "location": list(self.location)}


@dataclass
class ValidationReport:
    violations: list[Issue] = field(default_factory=list)
    warnings: list[Issue] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.violations

    @property
    def status(self) -> str:
        if self.violations:
            return "invalid"
        return "valid-with-warnings" if self.warnings else "valid"

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "valid": self.valid,
            "violations": [v.to_dict() for v in self.violations],
            "warnings": [w.to_dict() for w in self.warnings],
        }


def _reachable(adj: np.ndarray, start: int) -> np.ndarray:
    seen = np.zeros(adj.shape[0], dtype=bool)
    seen[start] = True
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v in np.flatnonzero(adj[u] & ~seen):
            seen[v] = True
            queue.append(v)
    return seen


def is_strongly_connected(adj: np.ndarray) -> bool:
    """Reachability closure from node 0 in the graph and its reverse."""
    adj = np.asarray(adj, dtype=bool)
    if adj.shape[0] == 0:
        return True
    return bool(_reachable(adj, 0).all() and _reachable(adj.T, 0).all())


def is_primitive(adj: np.ndarray) -> bool:
    """Exact primitivity test on a 0/1 pattern via Wielandt's bound."""
    adj = np.asarray(adj, dtype=bool)
    n = adj.shape[0]
    if n == 0 or not is_strongly_connected(adj):
        return False
    power = adj.copy()
    reach = adj.astype(np.int64)
    for _ in range((n - 1) ** 2):
        power = (power.astype(np.int64) @ reach) > 0
    return bool(power.all())


def _check_structure(top: NetworkTopology, report: ValidationReport) -> None:
    adj = top.adjacency
    ns = top.n_sending
    back = np.argwhere(adj[ns:, :ns])
    for r, s in back:
        report.violations.append(Issue(
            "lower-left", f"receiving agent {ns + r + 1} feeds sending agent {s + 1}",
            (int(ns + r + 1), int(s + 1))))
    for s in range(1, top.S + 1):
        idx = np.array(top.members(s)) - 1
        others = np.setdiff1d(np.arange(ns), idx)
        cross = np.argwhere(adj[np.ix_(idx, others)])
        for i, j in cross:
            report.violations.append(Issue(
                "sending-cross-edge",
                f"sending agent {idx[i] + 1} feeds agent {others[j] + 1} of another sending sub-network",
                (int(idx[i] + 1), int(others[j] + 1))))
        block = adj[np.ix_(idx, idx)]
        if not is_strongly_connected(block):
            report.violations.append(Issue(
                "reducible-sending-block", f"sending sub-network {s} is not strongly connected", (s,)))
        elif not block.diagonal().any():
            if is_primitive(block):
                report.warnings.append(Issue(
                    "primitive-without-self-loop",
                    f"sending sub-network {s} has no self-loop but its pattern is primitive", (s,)))
            else:
                report.violations.append(Issue(
                    "missing-self-loop",
                    f"sending sub-network {s} has no self-loop and is periodic", (s,)))
    fed = np.zeros(top.N, dtype=bool)
    if ns:
        for s0 in range(ns):
            fed |= _reachable(adj, s0)
    for r in range(top.S + 1, top.S + top.R + 1):
        idx = np.array(top.members(r)) - 1
        block = adj[np.ix_(idx, idx)]
        if not _reachable(block | block.T, 0).all():
            report.violations.append(Issue(
                "disconnected-receiving-subnet", f"receiving sub-network {r} is not connected", (r,)))
        if not fed[idx].any():
            report.violations.append(Issue(
                "no-external-inflow", f"no sending agent reaches receiving sub-network {r}", (r,)))


def validate_network(topology: NetworkTopology, A=None, config: ValidationConfig | None = None) -> ValidationReport:
    """Collect every structural and weight violation of a weak graph.

    Structural checks run on the topology; weight checks (stochastic columns,
    sparsity, block-triangular form) run on ``A`` when it is given. Edges that
    carry zero weight are reported as warnings only.
    """
    config = config or ValidationConfig()
    report = ValidationReport()
    _check_structure(topology, report)
    if A is None:
        return report
    a = A.entries if isinstance(A, CombinationMatrix) else np.asarray(A, dtype=float)
    if a.shape != (topology.N, topology.N):
        raise DimensionError(f"A must be {topology.N}x{topology.N}, got {a.shape}")
    tol = config.tol_stochastic
    for l, k in np.argwhere(a < 0):
        report.violations.append(Issue(
            "negative-weight", f"a[{l + 1},{k + 1}] = {a[l, k]!r} is negative", (int(l + 1), int(k + 1))))
    sums = a.sum(axis=0)
    for k in np.flatnonzero(np.abs(sums - 1.0) > tol):
        report.violations.append(Issue(
            "column-sum", f"column {k + 1} sums to {sums[k]!r}", (int(k + 1),)))
    adj = topology.adjacency
    for l, k in np.argwhere((a != 0) & ~adj):
        report.violations.append(Issue(
            "sparsity", f"a[{l + 1},{k + 1}] = {a[l, k]!r} but agent {l + 1} does not feed {k + 1}",
            (int(l + 1), int(k + 1))))
    ns = topology.n_sending
    if np.any(a[ns:, :ns] != 0):
        report.violations.append(Issue("lower-left", "lower-left block of A is not zero"))
    for l, k in np.argwhere(adj & (a == 0)):
        report.warnings.append(Issue(
            "zero-weight-edge", f"edge {l + 1}->{k + 1} carries zero weight", (int(l + 1), int(k + 1))))
    return report


def agent_global_index(topology: NetworkTopology, subnet: int, n: int) -> int:
    """Global 1-based ID of the ``n``-th agent (1-based) of a sub-network."""
    size = topology.subnet_sizes[subnet - 1] if 1 <= subnet <= topology.S + topology.R else 0
    if size == 0:
        raise ValueError(f"sub-network {subnet} outside 1..{topology.S + topology.R}")
    if not 1 <= n <= size:
        raise ValueError(f"local index {n} outside 1..{size} for sub-network {subnet}")
    if subnet <= topology.S:
        return sum(topology.sending_sizes[: subnet - 1]) + n
    return topology.n_sending + sum(topology.receiving_sizes[: subnet - topology.S - 1]) + n


def build_E(topology: NetworkTopology) -> np.ndarray:
    """``S x N_gS`` 0/1 matrix whose row ``s`` marks the agents of sending sub-network ``s``."""
    E = np.zeros((topology.S, topology.n_sending))
    start = 0
    for s, size in enumerate(topology.sending_sizes):
        E[s, start : start + size] = 1.0
        start += size
    return E


def build_C(topology: NetworkTopology) -> np.ndarray:
    """``S x N_gR`` indicator: ``C[s, k] = 1`` iff sub-network ``s`` feeds receiving agent ``k``."""
    E = build_E(topology)
    feeds = topology.adjacency[: topology.n_sending, topology.n_sending :].astype(float)
    return ((E @ feeds) > 0).astype(float)


@dataclass(frozen=True, eq=False)
class AgentReduction:
    """Structure matrix restricted to the sending neighbourhood of one receiving agent."""

    agent: int
    E_k: np.ndarray
    sending_ids: tuple[int, ...]
    sending_subnet: tuple[int, ...]
    subnets: tuple[int, ...]
    counts: tuple[int, ...]

    @property
    def n_subnets(self) -> int:
        return len(self.subnets)


def reduce_for_agent(E: np.ndarray, C: np.ndarray, topology: NetworkTopology, k: int) -> AgentReduction:
    """Drop the rows and columns of ``E`` that agent ``k`` does not hear.

    Returns the reduced block matrix together with the global IDs of the
    retained sending agents, the retained sub-networks and the per-sub-network
    neighbour counts (the row sums of ``E_k``).
    """
    if not topology.is_receiving(k):
        raise ValueError(f"agent {k} is not a receiving agent")
    col = k - topology.n_sending - 1
    heard = np.flatnonzero(topology.adjacency[: topology.n_sending, k - 1])
    rows = np.flatnonzero(C[:, col] > 0)
    E_k = E[np.ix_(rows, heard)]
    subnet_of = [int(np.argmax(E[:, j])) + 1 for j in heard]
    return AgentReduction(
        agent=k,
        E_k=E_k,
        sending_ids=tuple(int(j) + 1 for j in heard),
        sending_subnet=tuple(subnet_of),
        subnets=tuple(int(r) + 1 for r in rows),
        counts=tuple(int(c) for c in E_k.sum(axis=1)),
    )
