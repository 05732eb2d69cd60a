"""Least squares over a shifted simplex.

Solves ``min ||B t - q||^2`` subject to ``t >= lb`` and ``1^T t = 1`` with a
primal active-set method. Substituting ``u = t - lb`` turns the feasible set
into the scaled simplex ``{u >= 0, 1^T u = m}`` with ``m = 1 - 1^T lb``.
Each iteration solves the equality-constrained subproblem on the free
coordinates in an orthonormal basis of the complement of ``1``, taking the
minimum-norm step when ``B`` is rank deficient, so the output is a
deterministic function of the inputs.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MULT_TOL = 1e-12
FEAS_TOL = 1e-14


class InfeasiblePolytope(ValueError):
    """The lower bounds already exceed the unit budget."""


@dataclass(frozen=True, eq=False)
class QPSolution:
    t: np.ndarray
    residual: float
    active: tuple[int, ...]
    iterations: int

    @property
    def objective(self) -> float:
        return self.residual ** 2


def helmert_basis(n: int) -> np.ndarray:
    """``n x (n-1)`` orthonormal basis of the vectors summing to zero."""
    Z = np.zeros((n, max(n - 1, 0)))
    for j in range(1, n):
        Z[:j, j - 1] = 1.0
        Z[j, j - 1] = -float(j)
        Z[:, j - 1] /= np.sqrt(j * (j + 1.0))
    return Z


def _face_minimizer(B: np.ndarray, r: np.ndarray, free: np.ndarray, m: float) -> np.ndarray:
    """Minimiser of ``||B u - r||`` with ``u`` supported on ``free`` and ``1^T u = m``."""
    p = np.zeros(B.shape[1])
    nf = free.size
    base = np.full(nf, m / nf)
    if nf > 1:
        Z = helmert_basis(nf)
        Bf = B[:, free]
        z = np.linalg.lstsq(Bf @ Z, r - Bf @ base, rcond=None)[0]
        base = base + Z @ z
    p[free] = base
    return p


def solve_simplex_ls(B, q, lb, max_iter: int | None = None) -> QPSolution:
    """Global minimiser of ``||B t - q||`` over ``{t >= lb, sum(t) = 1}``.

    Ties between equally negative multipliers or equally blocking bounds are
    broken towards the smallest index.
    """
    B = np.atleast_2d(np.asarray(B, dtype=float))
    q = np.asarray(q, dtype=float).ravel()
    lb = np.asarray(lb, dtype=float).ravel()
    n = B.shape[1]
    if lb.shape != (n,) or q.shape != (B.shape[0],):
        raise ValueError("inconsistent problem dimensions")
    if n == 0:
        raise InfeasiblePolytope("no variables: the agent has no in-neighbours")
    m = 1.0 - lb.sum()
    if m < -FEAS_TOL:
        raise InfeasiblePolytope(f"lower bounds sum to {lb.sum():.6g} > 1")
    m = max(m, 0.0)
    r = q - B @ lb
    if max_iter is None:
        max_iter = 50 * (n + 1)
    u = np.full(n, m / n)
    active = np.zeros(n, dtype=bool)
    it = 0
    for it in range(1, max_iter + 1):
        free = np.flatnonzero(~active)
        p = _face_minimizer(B, r, free, m)
        if np.all(p[free] >= -FEAS_TOL):
            u = np.where(active, 0.0, np.clip(p, 0.0, None))
            if m > 0:
                u *= m / u.sum()
            g = B.T @ (B @ u - r)
            nu = g[free].mean()
            lam = g - nu
            cand = np.flatnonzero(active & (lam < -MULT_TOL * max(1.0, np.abs(g).max())))
            if cand.size == 0:
                break
            j = cand[np.argmin(lam[cand])]
            active[j] = False
            continue
        d = p - u
        blocking = free[d[free] < 0]
        steps = u[blocking] / (u[blocking] - p[blocking])
        alpha = steps.min()
        j = blocking[np.flatnonzero(steps == alpha)[0]]
        u = u + min(alpha, 1.0) * d
        u[j] = 0.0
        u[active] = 0.0
        u = np.clip(u, 0.0, None)
        active[j] = True
    t = u + lb
    res = float(np.linalg.norm(B @ t - q))
    return QPSolution(t, res, tuple(int(i) for i in np.flatnonzero(active)), it)
