"""Linear complementarity ground truth for the condensed QP.

The KKT conditions of the condensed QP reduce to the LCP

    0 <= lam  perp  q + M lam >= 0,    M = G H^{-1} G',  q = S x + w.

Two solvers are provided: a projected Gauss-Seidel sweep (the workhorse) and
an exponential active-set enumeration (the trusted cross-check for small
instances).  `solve_qp_via_kkt` turns a multiplier into the optimal input
sequence without any network machinery.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import linalg
from .condenser import CondensedQp
from .errors import DimensionMismatch, Infeasible, NoConvergence
from .linalg import as_matrix, as_vector

ENUM_MAX_DIM = 20
ACTIVE_TOL = 1e-10


@dataclass(frozen=True)
class LcpProblem:
    M: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        M = as_matrix(self.M, "M")
        q = as_vector(self.q, "q")
        if M.shape[0] != M.shape[1] or M.shape[0] != q.shape[0]:
            raise DimensionMismatch(f"M {M.shape} vs q length {q.shape[0]}")
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "q", q)

    @property
    def dim(self):
        return self.q.shape[0]


@dataclass(frozen=True)
class LcpSolution:
    lam: np.ndarray
    slack: np.ndarray
    iterations: int
    converged: bool


def _residual(lam, slack, q_scale):
    """Complementarity residual: negativity of lam/slack plus pairwise products."""
    neg = max(float(np.max(-lam, initial=0.0)), float(np.max(-slack, initial=0.0)))
    comp = float(np.max(np.abs(lam * slack), initial=0.0)) / q_scale
    return max(neg, comp)


def solve_lcp_pgs(l: LcpProblem, max_iters: int | None = None, tol: float = 1e-10) -> LcpSolution:
    """Projected Gauss-Seidel sweeps; falls back to enumeration on zero diagonal.

    One sweep updates lam_i <- max(0, lam_i - (q_i + (M lam)_i) / M_ii) in
    index order.  Raises NoConvergence when the residual has not reached tol
    after the sweep budget (default 100 * dim^2).
    """
    n = l.dim
    if n == 0:
        return LcpSolution(np.zeros(0), np.zeros(0), 0, True)
    if np.min(np.diag(l.M)) <= 1e-12:
        if n <= ENUM_MAX_DIM:
            return solve_lcp_enum(l)
        raise NoConvergence("nonpositive diagonal entry and instance too large to enumerate")
    if max_iters is None:
        max_iters = 100 * n * n
    q_scale = 1.0 + float(np.max(np.abs(l.q), initial=0.0))
    lam = np.zeros(n)
    diag = np.diag(l.M)
    for it in range(1, max_iters + 1):
        for i in range(n):
            lam[i] = max(0.0, lam[i] - (l.q[i] + l.M[i] @ lam) / diag[i])
        slack = l.q + l.M @ lam
        if _residual(lam, slack, q_scale) <= tol:
            return LcpSolution(lam, slack, it, True)
    slack = l.q + l.M @ lam
    raise NoConvergence(f"PGS residual {_residual(lam, slack, q_scale):.3e} after {max_iters} sweeps")


def solve_lcp_enum(l: LcpProblem) -> LcpSolution:
    """Brute-force enumeration of active sets, ascending by size then lexicographic.

    For each candidate set solve M_AA lam_A = -q_A and accept the first set
    whose multipliers and inactive slacks are nonnegative (unique when the
    instance is nondegenerate).  Only for dim <= 20.
    """
    n = l.dim
    if n > ENUM_MAX_DIM:
        raise DimensionMismatch(f"enumeration limited to dim <= {ENUM_MAX_DIM}, got {n}")
    tested = 0
    for size in range(n + 1):
        for active in itertools.combinations(range(n), size):
            tested += 1
            lam = np.zeros(n)
            if size:
                idx = np.array(active)
                sub = l.M[np.ix_(idx, idx)]
                try:
                    lam_a = np.linalg.solve(sub, -l.q[idx])
                except np.linalg.LinAlgError:
                    continue
                if np.min(lam_a) < -ACTIVE_TOL:
                    continue
                lam[idx] = lam_a
            slack = l.q + l.M @ lam
            inactive = np.setdiff1d(np.arange(n), np.array(active, dtype=int))
            if inactive.size and np.min(slack[inactive]) < -ACTIVE_TOL:
                continue
            return LcpSolution(lam, slack, tested, True)
    raise Infeasible("no active set yields a complementarity solution")


def mpc_lcp(qp: CondensedQp, x) -> LcpProblem:
    """The LCP induced by the condensed QP at state x."""
    x = as_vector(x, "x")
    M = qp.G @ qp.h_inv(qp.G.T)
    return LcpProblem(0.5 * (M + M.T), qp.S @ x + qp.w)


def solve_qp_via_kkt(qp: CondensedQp, x, max_iters=None, tol=1e-10) -> np.ndarray:
    """Optimal input sequence from the multiplier: u* = -H^{-1}(F x + G' lam)."""
    x = as_vector(x, "x")
    sol = solve_lcp_pgs(mpc_lcp(qp, x), max_iters=max_iters, tol=tol)
    return -qp.h_inv(qp.F @ x + qp.G.T @ sol.lam)


def kkt_residuals(qp: CondensedQp, x, useq, lam):
    """Infinity norms of the stationarity, complementarity and primal residuals."""
    x = as_vector(x, "x")
    useq = as_vector(useq, "useq")
    lam = as_vector(lam, "lam")
    stationarity = float(np.max(np.abs(qp.H @ useq + qp.F @ x + qp.G.T @ lam), initial=0.0))
    slack = qp.S_u @ x + qp.w - qp.G @ useq
    complementarity = float(np.max(np.abs(lam * slack), initial=0.0))
    primal_violation = float(np.max(-slack, initial=0.0))
    return stationarity, complementarity, primal_violation
