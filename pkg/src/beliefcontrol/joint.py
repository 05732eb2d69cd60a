"""Joint design of ``T_SR`` and ``T_RR`` from the desired beliefs alone.

Receiving agent ``k`` needs ``[E_k | Q_k] [t_SR; t_RR] = q_k`` where ``Q_k``
collects the targets of its receiving in-neighbours. The weights on
receiving neighbours are kept at or above a floor ``eps`` so the receiving
sub-network stays connected. How hard the problem is depends on how many
sending sub-networks the agent hears:

* all of them: always solvable for a small enough floor;
* some of them: the rows of unheard sub-networks become equalities;
* none: ``q_k`` must be reachable as a convex mixture of ``Q_k``.

Agents that cannot be designed exactly fall back to a constrained
least-squares fit.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .limits import compute_W, beliefs_on_sending_states
from .network import NetworkTopology, build_C, build_E, reduce_for_agent
from .qp import InfeasiblePolytope, QPSolution, solve_simplex_ls
from .tsr import check_desired_beliefs

EXACT_TOL = 1e-10
NEG_TOL = 1e-12


class Case(str, enum.Enum):
    ALL = "all-subnets"
    SOME = "some-subnets"
    NONE = "no-subnets"


class Status(str, enum.Enum):
    EXACT = "exact"
    APPROXIMATE = "approximate"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class EpsilonPolicy:
    """Floor on the weights a receiving agent gives its receiving neighbours.

    ``fixed`` forces a single value. Otherwise an agent that hears every
    sending sub-network gets ``min(cap, fraction * bound)`` and every other
    agent gets ``cap``. ``per_agent`` overrides both.
    """

    fixed: float | None = None
    cap: float = 0.01
    fraction: float = 0.5
    per_agent: Mapping[int, float] = field(default_factory=dict)

    def for_agent(self, k: int, case: Case, bound: float | None) -> float:
        if k in self.per_agent:
            return float(self.per_agent[k])
        if self.fixed is not None:
            return float(self.fixed)
        if case is Case.ALL and bound is not None:
            return min(self.cap, self.fraction * bound)
        return self.cap


@dataclass(frozen=True, eq=False)
class JointColumnProblem:
    """Design problem of one receiving agent in reduced coordinates."""

    agent: int
    E_k: np.ndarray
    Q_k: np.ndarray
    q: np.ndarray
    sending_ids: tuple[int, ...]
    sending_subnet: tuple[int, ...]
    connected: tuple[int, ...]
    receiving_ids: tuple[int, ...]
    S: int
    eps: float = 0.0

    @property
    def B(self) -> np.ndarray:
        """``[E_k | Q_k]`` with the rows of all ``S`` sub-networks kept."""
        E_full = np.zeros((self.S, len(self.sending_ids)))
        for j, s in enumerate(self.sending_subnet):
            E_full[s - 1, j] = 1.0
        return np.hstack([E_full, self.Q_k])

    @property
    def n_sr(self) -> int:
        return len(self.sending_ids)

    @property
    def n_rr(self) -> int:
        return len(self.receiving_ids)

    @property
    def case(self) -> Case:
        if len(self.connected) == self.S:
            return Case.ALL
        return Case.NONE if not self.connected else Case.SOME

    def with_eps(self, eps: float) -> "JointColumnProblem":
        return JointColumnProblem(self.agent, self.E_k, self.Q_k, self.q, self.sending_ids,
                                  self.sending_subnet, self.connected, self.receiving_ids, self.S, float(eps))

    def lower_bounds(self) -> np.ndarray:
        return np.concatenate([np.zeros(self.n_sr), np.full(self.n_rr, self.eps)])

    def subnet_totals(self, t_rr: np.ndarray) -> np.ndarray:
        """Weight each sub-network must supply, ``q_k - Q_k t_RR`` (length ``S``)."""
        return self.q - self.Q_k @ t_rr if self.n_rr else self.q.copy()


@dataclass
class ColumnResult:
    agent: int
    case: Case
    status: Status
    t_sr: np.ndarray
    t_rr: np.ndarray
    residual: float
    eps: float
    bound: float | None = None
    certificate: dict | None = None
    local_status: Status | None = None

    def __post_init__(self):
        if self.local_status is None:
            self.local_status = self.status

    def to_dict(self) -> dict:
        out = {"id": self.agent, "case": self.case.value, "status": self.status.value,
               "local_status": self.local_status.value, "residual": None if np.isnan(self.residual) else self.residual, "epsilon": self.eps}
        if self.bound is not None:
            out["epsilon_bound"] = self.bound
        if self.certificate is not None:
            out["certificate"] = self.certificate
        return out


class CaseInfeasible(ValueError):
    def __init__(self, message: str, certificate: dict):
        super().__init__(message)
        self.certificate = certificate


def build_problem(k: int, Q, topology: NetworkTopology, eps: float = 0.0) -> JointColumnProblem:
    Q = np.asarray(Q, dtype=float)
    E, C = build_E(topology), build_C(topology)
    red = reduce_for_agent(E, C, topology, k)
    ns = topology.n_sending
    rr = tuple(int(j) + 1 for j in np.flatnonzero(topology.adjacency[ns:, k - 1]) + ns)
    Q_k = Q[:, [j - ns - 1 for j in rr]] if rr else np.zeros((topology.S, 0))
    return JointColumnProblem(
        agent=k, E_k=red.E_k, Q_k=Q_k, q=Q[:, k - ns - 1].copy(),
        sending_ids=red.sending_ids, sending_subnet=red.sending_subnet,
        connected=red.subnets, receiving_ids=rr, S=topology.S, eps=float(eps))


def classify_agent(k: int, C, topology: NetworkTopology | None = None) -> Case:
    """Case of receiving agent ``k`` from its column of the connectivity indicator."""
    C = np.atleast_2d(np.asarray(C))
    col = k - (topology.n_sending if topology is not None else 0) - 1
    heard = int(np.count_nonzero(C[:, col]))
    if heard == C.shape[0]:
        return Case.ALL
    return Case.NONE if heard == 0 else Case.SOME


def case1_bound(problem: JointColumnProblem) -> float:
    """Largest floor for which equal receiving weights leave every sub-network total non-negative."""
    if problem.n_rr == 0:
        return np.inf
    mass = problem.Q_k.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(mass > 0, problem.q / mass, np.inf)
    return float(ratio.min())


def _split(problem: JointColumnProblem, totals: np.ndarray, sr_weights: Mapping[int, float] | None) -> np.ndarray:
    """Distribute each heard sub-network's total over its connected sending agents."""
    t = np.full(problem.n_sr, np.nan)
    sr_weights = sr_weights or {}
    for agent, w in sr_weights.items():
        if int(agent) not in problem.sending_ids:
            raise ValueError(f"agent {problem.agent} does not hear sending agent {agent}")
        t[problem.sending_ids.index(int(agent))] = float(w)
    sub = np.array(problem.sending_subnet, dtype=int)
    for s in problem.connected:
        idx = np.flatnonzero(sub == s)
        fixed, free = idx[~np.isnan(t[idx])], idx[np.isnan(t[idx])]
        rest = totals[s - 1] - t[fixed].sum()
        if free.size:
            t[free] = rest / free.size
        elif abs(rest) > EXACT_TOL:
            raise ValueError(f"weights given to sub-network {s} by agent {problem.agent} "
                             f"sum to {t[fixed].sum():.12g}, need {totals[s - 1]:.12g}")
    t[np.abs(t) < NEG_TOL] = 0.0
    if np.any(t < 0):
        raise ValueError(f"split for agent {problem.agent} has negative weights")
    return t


def _rr_from(problem: JointColumnProblem, rr_weights: Mapping[int, float] | None) -> np.ndarray | None:
    if not rr_weights:
        return None
    t = np.full(problem.n_rr, problem.eps)
    for agent, w in rr_weights.items():
        if int(agent) not in problem.receiving_ids:
            raise ValueError(f"agent {problem.agent} does not hear receiving agent {agent}")
        t[problem.receiving_ids.index(int(agent))] = float(w)
    if np.any(t < problem.eps - NEG_TOL):
        raise ValueError(f"receiving weights of agent {problem.agent} fall below the floor {problem.eps}")
    return t


def _row_report(problem: JointColumnProblem, t_rr: np.ndarray) -> list[dict]:
    """Per-state rows ``Q_k t_RR`` against ``q_k`` with the slack each one has."""
    lhs = problem.Q_k @ t_rr if problem.n_rr else np.zeros(problem.S)
    rows = []
    for s in range(problem.S):
        kind = "inequality" if (s + 1) in problem.connected else "equality"
        gap = float(problem.q[s] - lhs[s])
        ok = gap >= -EXACT_TOL if kind == "inequality" else abs(gap) <= EXACT_TOL
        rows.append({"subnet": s + 1, "kind": kind, "lhs": float(lhs[s]), "rhs": float(problem.q[s]),
                     "satisfied": bool(ok)})
    return rows


def design_case1(problem: JointColumnProblem, rr_weights=None, sr_weights=None):
    """Exact design for an agent hearing every sending sub-network.

    With no ``rr_weights`` the receiving weights all equal the problem's
    floor. Returns ``(t_SR, t_RR)``; raises :class:`CaseInfeasible` when the
    floor exceeds the bound (in particular when the bound is zero).
    """
    bound = case1_bound(problem)
    if problem.n_rr and bound <= 0:
        raise CaseInfeasible(
            f"agent {problem.agent}: some sub-network has zero target mass but neighbours hold mass there",
            {"kind": "case1-boundary", "bound": bound})
    t_rr = _rr_from(problem, rr_weights)
    if t_rr is None:
        if problem.n_rr and problem.eps > bound + NEG_TOL:
            raise CaseInfeasible(f"agent {problem.agent}: floor {problem.eps} exceeds bound {bound}",
                                 {"kind": "case1-boundary", "bound": bound})
        t_rr = np.full(problem.n_rr, problem.eps)
    totals = problem.subnet_totals(t_rr)
    if np.any(totals < -NEG_TOL):
        raise CaseInfeasible(f"agent {problem.agent}: receiving weights overdraw a sub-network",
                             {"kind": "case1-overdraw", "rows": _row_report(problem, t_rr)})
    return _split(problem, np.clip(totals, 0.0, None), sr_weights), t_rr


def _exact(problem: JointColumnProblem, t_rr: np.ndarray) -> bool:
    if np.any(t_rr < problem.eps - NEG_TOL):
        return False
    return all(r["satisfied"] for r in _row_report(problem, t_rr))


def _phase1(problem: JointColumnProblem) -> QPSolution:
    try:
        return solve_simplex_ls(problem.B, problem.q, problem.lower_bounds())
    except InfeasiblePolytope as exc:
        raise CaseInfeasible(f"agent {problem.agent}: {exc}", {"kind": "empty-polytope", "floor": problem.eps}) from exc


def _common_weight(problem: JointColumnProblem, unheard: list[int]) -> np.ndarray | None:
    """Equal receiving weights solving the equality rows, if a common value does."""
    mass = problem.Q_k[unheard].sum(axis=1)
    if np.any(mass <= 0):
        return None
    gamma = problem.q[unheard] / mass
    if np.ptp(gamma) > EXACT_TOL or gamma[0] < problem.eps:
        return None
    return np.full(problem.n_rr, float(gamma[0]))


def design_case2(problem: JointColumnProblem, rr_weights=None, sr_weights=None):
    """Exact design for an agent hearing only some sending sub-networks.

    The rows of unheard sub-networks are equalities in ``t_RR``. A square,
    nonsingular equality system fixes ``t_RR`` outright; otherwise a common
    receiving weight solving the equalities is tried first and a
    least-squares phase one decides feasibility. Raises :class:`CaseInfeasible` with the failing rows.
    """
    t_rr = _rr_from(problem, rr_weights)
    if t_rr is not None:
        if not _exact(problem, t_rr):
            raise CaseInfeasible(f"agent {problem.agent}: given receiving weights are not exact",
                                 {"kind": "rows", "t_rr": t_rr.tolist(), "rows": _row_report(problem, t_rr)})
        return _split(problem, np.clip(problem.subnet_totals(t_rr), 0, None), sr_weights), t_rr
    unheard = [s for s in range(problem.S) if (s + 1) not in problem.connected]
    if not unheard:
        return design_case1(problem, rr_weights, sr_weights)
    if problem.n_rr == 0:
        raise CaseInfeasible(f"agent {problem.agent}: no receiving neighbours to supply unheard sub-networks",
                             {"kind": "rows", "t_rr": [], "rows": _row_report(problem, np.zeros(0))})
    M = problem.Q_k[unheard]
    if M.shape[0] == M.shape[1] and abs(np.linalg.det(M)) > 1e-12:
        t_rr = np.linalg.solve(M, problem.q[unheard])
        if not _exact(problem, t_rr):
            raise CaseInfeasible(
                f"agent {problem.agent}: the equality rows force weights that break the remaining constraints",
                {"kind": "square-equalities", "t_rr": t_rr.tolist(), "floor": problem.eps,
                 "rows": _row_report(problem, t_rr)})
        return _split(problem, np.clip(problem.subnet_totals(t_rr), 0, None), sr_weights), t_rr
    common = _common_weight(problem, unheard)
    if common is not None and _exact(problem, common):
        t_rr = common
    else:
        sol = _phase1(problem)
        t_rr = sol.t[problem.n_sr:]
        if sol.residual > EXACT_TOL or not _exact(problem, t_rr):
            raise CaseInfeasible(
                f"agent {problem.agent}: no receiving weights above the floor satisfy the constraints",
                {"kind": "phase1", "residual": sol.residual, "t_rr": t_rr.tolist(),
                 "rows": _row_report(problem, t_rr)})
    return _split(problem, np.clip(problem.subnet_totals(t_rr), 0, None), sr_weights), t_rr


def design_case3(problem: JointColumnProblem, rr_weights=None):
    """Exact receiving weights for an agent hearing no sending sub-network."""
    t_rr = _rr_from(problem, rr_weights)
    candidates = [] if t_rr is None else [t_rr]
    if t_rr is None and problem.n_rr:
        if problem.n_rr == 1:
            candidates.append(np.ones(1))
        candidates.append(np.full(problem.n_rr, 1.0 / problem.n_rr))
    for cand in candidates:
        if _exact(problem, cand):
            return cand
    if t_rr is not None or problem.n_rr == 0:
        t = t_rr if t_rr is not None else np.zeros(0)
        raise CaseInfeasible(f"agent {problem.agent}: receiving weights do not reproduce its target",
                             _case3_certificate(problem, t, None))
    sol = _phase1(problem)
    if sol.residual <= EXACT_TOL and _exact(problem, sol.t):
        return sol.t
    raise CaseInfeasible(f"agent {problem.agent}: target lies outside the floor-restricted hull of its neighbours",
                         _case3_certificate(problem, sol.t, sol.residual))


def _case3_certificate(problem, t, residual):
    gap = problem.q - (problem.Q_k @ t if t.size else np.zeros(problem.S))
    worst = int(np.argmax(np.abs(gap)))
    return {"kind": "hull", "residual": residual, "closest_t_rr": t.tolist(),
            "max_violation": {"subnet": worst + 1, "target": float(problem.q[worst]),
                              "closest": float(problem.q[worst] - gap[worst])}}


def solve_constrained_ls(problem: JointColumnProblem) -> QPSolution:
    """Closest ``B_k t`` to ``q_k`` with ``t_SR >= 0``, ``t_RR >= eps`` and unit total."""
    return solve_simplex_ls(problem.B, problem.q, problem.lower_bounds())


@dataclass
class JointDesign:
    T_SR: np.ndarray
    T_RR: np.ndarray
    columns: list[ColumnResult]
    predicted: np.ndarray | None

    @property
    def all_exact(self) -> bool:
        return all(c.status is Status.EXACT for c in self.columns)

    @property
    def solved(self) -> bool:
        return all(c.status is not Status.INFEASIBLE for c in self.columns)

    def to_dict(self) -> dict:
        return {
            "all_exact": self.all_exact,
            "per_agent": [c.to_dict() for c in self.columns],
            "predicted_beliefs": None if self.predicted is None else self.predicted.tolist(),
        }


def _design_one(problem: JointColumnProblem, bound, override, fallback_ls: bool) -> ColumnResult:
    override = override or {}
    rr_w, sr_w = override.get("rr"), override.get("sr")
    case = problem.case
    try:
        if case is Case.ALL:
            t_sr, t_rr = design_case1(problem, rr_w, sr_w)
        elif case is Case.SOME:
            t_sr, t_rr = design_case2(problem, rr_w, sr_w)
        else:
            t_sr, t_rr = np.zeros(0), design_case3(problem, rr_w)
        res = float(np.linalg.norm(problem.B @ np.concatenate([t_sr, t_rr]) - problem.q))
        return ColumnResult(problem.agent, case, Status.EXACT, t_sr, t_rr, res, problem.eps, bound)
    except CaseInfeasible as exc:
        cert = exc.certificate
    if not fallback_ls:
        return ColumnResult(problem.agent, case, Status.INFEASIBLE, np.zeros(problem.n_sr),
                            np.zeros(problem.n_rr), np.nan, problem.eps, bound, cert)
    try:
        sol = solve_constrained_ls(problem)
    except InfeasiblePolytope as exc:
        cert = dict(cert, polytope=str(exc))
        return ColumnResult(problem.agent, case, Status.INFEASIBLE, np.zeros(problem.n_sr),
                            np.zeros(problem.n_rr), np.nan, problem.eps, bound, cert)
    status = Status.EXACT if sol.residual <= EXACT_TOL else Status.APPROXIMATE
    return ColumnResult(problem.agent, case, status, sol.t[: problem.n_sr], sol.t[problem.n_sr:],
                        sol.residual, problem.eps, bound, cert)


def unfed_agents(T_SR, T_RR, tol: float = 0.0) -> list[int]:
    """Receiving columns with no weighted path from any sending agent."""
    T_SR, T_RR = np.asarray(T_SR), np.asarray(T_RR)
    fed = T_SR.sum(axis=0) > tol
    while True:
        grown = fed | ((T_RR > tol) & fed[:, None]).any(axis=0)
        if np.array_equal(grown, fed):
            break
        fed = grown
    return [int(j) for j in np.flatnonzero(~fed)]


def joint_design(Q, topology: NetworkTopology, eps_policy: EpsilonPolicy | None = None,
                 overrides: Mapping[int, Mapping] | None = None, fallback_ls: bool = True) -> JointDesign:
    """Design ``T_SR`` and ``T_RR`` column by column.

    ``overrides`` maps an agent to ``{"rr": {neighbour: weight}, "sr":
    {sending_agent: weight}}`` to pin free parameters. When any agent is not
    solved exactly every status is downgraded to ``approximate`` (a missed
    target propagates to the neighbours that rely on it) and the predicted
    limiting beliefs of the assembled matrices are reported instead.
    """
    eps_policy = eps_policy or EpsilonPolicy()
    overrides = {int(k): v for k, v in (overrides or {}).items()}
    Q = check_desired_beliefs(Q, topology.S, topology.n_receiving)
    ns = topology.n_sending
    T_SR = np.zeros((ns, topology.n_receiving))
    T_RR = np.zeros((topology.n_receiving, topology.n_receiving))
    columns = []
    for col, k in enumerate(topology.receiving_ids):
        problem = build_problem(k, Q, topology)
        bound = case1_bound(problem) if problem.case is Case.ALL else None
        eps = eps_policy.for_agent(k, problem.case, None if bound is None or not np.isfinite(bound) else bound)
        result = _design_one(problem.with_eps(eps), bound, overrides.get(k), fallback_ls)
        if result.status is not Status.INFEASIBLE:
            T_SR[np.array(problem.sending_ids, dtype=int) - 1, col] = result.t_sr
            T_RR[np.array(problem.receiving_ids, dtype=int) - ns - 1, col] = result.t_rr
        columns.append(result)
    # weights that close a group of receiving agents off from every sending agent make I - T_RR singular
    cut = unfed_agents(T_SR, T_RR)
    for col in cut:
        c = columns[col]
        if c.status is not Status.INFEASIBLE:
            c.certificate = {"kind": "no-sending-influence",
                             "agents": [topology.receiving_ids[j] for j in cut]}
            c.status = c.local_status = Status.INFEASIBLE
    predicted = None
    if all(c.status is not Status.INFEASIBLE for c in columns):
        try:
            predicted = beliefs_on_sending_states(compute_W(T_SR, T_RR, topology.sending_sizes))
        except ValueError:
            predicted = None
    if any(c.status is not Status.EXACT for c in columns):
        for c in columns:
            if c.status is Status.EXACT:
                c.status = Status.APPROXIMATE
    return JointDesign(T_SR, T_RR, columns, predicted)
