"""Independent reference computations built on scipy.optimize.linprog and cvxpy."""
import numpy as np
from scipy.optimize import linprog


def column_feasible(Q, T_RR, adjacency, sending_sizes, col, tol_pos=1e-9):
    """Is there t >= 0 on the heard sending agents with per-sub-network sums v_k and each heard sum >= tol_pos?"""
    Q, T_RR = np.asarray(Q, float), np.asarray(T_RR, float)
    ns = sum(sending_sizes)
    v = Q[:, col] - Q @ T_RR[:, col]
    heard = np.flatnonzero(adjacency[:ns, ns + col])
    owner = np.repeat(np.arange(len(sending_sizes)), sending_sizes)
    S = len(sending_sizes)
    A_eq = np.zeros((S, heard.size))
    for j, l in enumerate(heard):
        A_eq[owner[l], j] = 1.0
    A_ub, b_ub = [], []
    for s in set(owner[heard]):
        A_ub.append(-A_eq[s])
        b_ub.append(-tol_pos)
    if heard.size == 0:
        return bool(np.all(np.abs(v) <= 1e-9))
    res = linprog(np.zeros(heard.size), A_ub=np.array(A_ub) if A_ub else None, b_ub=b_ub or None,
                  A_eq=A_eq, b_eq=v, bounds=[(0, None)] * heard.size, method="highs")
    return res.status == 0


def rr_feasible(problem, eps):
    """LP: t_RR >= eps, equality rows for unheard sub-networks, inequality rows for heard ones."""
    n = problem.n_rr
    if n == 0:
        return bool(np.all([s + 1 in problem.connected or abs(problem.q[s]) <= 1e-12 for s in range(problem.S)]))
    eq = [s for s in range(problem.S) if (s + 1) not in problem.connected]
    ub = [s for s in range(problem.S) if (s + 1) in problem.connected]
    kw = {}
    if eq:
        kw["A_eq"], kw["b_eq"] = problem.Q_k[eq], problem.q[eq]
    if ub:
        kw["A_ub"], kw["b_ub"] = problem.Q_k[ub], problem.q[ub]
    res = linprog(np.zeros(n), bounds=[(eps, None)] * n, method="highs", **kw)
    return res.status == 0


def cvxpy_simplex_ls(B, q, lb):
    import cvxpy as cp

    t = cp.Variable(B.shape[1])
    prob = cp.Problem(cp.Minimize(cp.sum_squares(B @ t - q)), [t >= lb, cp.sum(t) == 1])
    prob.solve(solver=cp.CLARABEL if "CLARABEL" in cp.installed_solvers() else None)
    return np.asarray(t.value), float(prob.value)


def probe_directions(B, q, lb, t, rng, trials=200, step=1e-4):
    """Largest objective decrease over random feasible directions from t."""
    f0 = float(np.sum((B @ t - q) ** 2))
    best = 0.0
    n = t.size
    for _ in range(trials):
        d = rng.normal(size=n)
        at_bound = t - lb <= 1e-12
        free = ~at_bound
        if not free.any():
            continue
        d[at_bound] = np.abs(d[at_bound])
        d[free] -= d.sum() / free.sum()
        d /= np.linalg.norm(d) or 1.0
        alpha = step
        room = (t - lb)[d < 0] / -d[d < 0]
        if room.size:
            alpha = min(alpha, room.min())
        if alpha <= 0:
            continue
        cand = t + alpha * d
        best = max(best, f0 - float(np.sum((B @ cand - q) ** 2)))
    return best
