"""Converse direction: from the network's piecewise-affine law back to costs.

Sampling states and reading off active sets partitions the state space into
regions, each with an affine applied-input law u = E x + omega.  Saturated
regions carry a zero gain.  For the unsaturated regions the closed loop
Phi_i = A + B E_i is checked against the discrete-time dissipation inequality

    Phi_i' P_i Phi_i - P_i + Q + E_i' R E_i  negative definite,

which any stage cost (Q, R) generating the law must admit.  `search_cost`
runs a naive scalar grid over Q = q I, R = r I with per-region P_i built by
Lyapunov series summation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import lcp, linalg
from .condenser import CondensedQp, LtiSystem
from .errors import NotFound, SingularActiveSet, UnstableRegion
from .linalg import as_vector

ACTIVE_MULTIPLIER_TOL = 1e-9
SATURATION_TOL = 1e-9


@dataclass(frozen=True)
class PwaRegion:
    active_set: tuple
    E: np.ndarray  # applied-input gain, m x n
    omega: np.ndarray  # applied-input offset, m
    E_full: np.ndarray  # full-sequence gain, (N*m) x n
    omega_full: np.ndarray
    witnesses: list
    saturated: bool


@dataclass(frozen=True)
class CostCandidate:
    Q: np.ndarray
    R: np.ndarray
    P_regions: dict  # active_set -> P_i

    def __post_init__(self):
        if linalg.sym_eigenvalues(self.Q)[0] < -1e-9:
            raise ValueError("Q not positive semidefinite")
        if linalg.sym_eigenvalues(self.R)[0] < 1e-12:
            raise ValueError("R not positive definite")
        for sig, P in self.P_regions.items():
            if linalg.sym_eigenvalues(P)[0] < 1e-9:
                raise ValueError(f"P for region {sig} not positive definite")


def region_law(qp: CondensedQp, active_set):
    """Affine law of the equality-constrained QP on a fixed active set.

    Solves the KKT system [H, G_s'; G_s, 0] [u; lam] = [-F x; S_u,s x + w_s]
    for the affine dependence on x.  Raises SingularActiveSet when the
    active rows are linearly dependent.
    """
    sigma = np.array(sorted(active_set), dtype=int)
    nu = qp.H.shape[0]
    na = sigma.size
    kkt = np.zeros((nu + na, nu + na))
    kkt[:nu, :nu] = qp.H
    if na:
        Gs = qp.G[sigma]
        kkt[:nu, nu:] = Gs.T
        kkt[nu:, :nu] = Gs
    rhs_x = np.vstack([-qp.F, qp.S_u[sigma]]) if na else -qp.F
    rhs_c = np.concatenate([np.zeros(nu), qp.w[sigma]]) if na else np.zeros(nu)
    if np.linalg.cond(kkt) > 1e12:
        raise SingularActiveSet(f"active set {tuple(sigma)} has a singular KKT matrix")
    sol_x = np.linalg.solve(kkt, rhs_x)
    sol_c = np.linalg.solve(kkt, rhs_c)
    return sol_x[:nu], sol_c[:nu]


def extract_pwa(qp: CondensedQp, samples):
    """Group sampled states by active set and attach each group's affine law.

    Samples where the complementarity solve fails are skipped.  Witnesses are
    validated against the region law during extraction (assertion at 1e-7
    relative).
    """
    m = qp.m
    buckets = {}
    for x in samples:
        x = as_vector(x, "x")
        try:
            sol = lcp.solve_lcp_pgs(lcp.mpc_lcp(qp, x))
        except Exception:
            continue
        sigma = tuple(int(i) for i in np.nonzero(sol.lam > ACTIVE_MULTIPLIER_TOL)[0])
        buckets.setdefault(sigma, []).append(x)
    regions = []
    for sigma in sorted(buckets, key=lambda s: (len(s), s)):
        E_full, omega_full = region_law(qp, sigma)
        E = E_full[:m]
        omega = omega_full[:m]
        witnesses = buckets[sigma]
        for x in witnesses:
            u_oracle = lcp.solve_qp_via_kkt(qp, x)[:m]
            scale = 1.0 + float(np.max(np.abs(u_oracle), initial=0.0))
            assert np.max(np.abs(E @ x + omega - u_oracle)) <= 1e-7 * scale
        regions.append(
            PwaRegion(
                active_set=sigma,
                E=E,
                omega=omega,
                E_full=E_full,
                omega_full=omega_full,
                witnesses=witnesses,
                saturated=bool(np.max(np.abs(E), initial=0.0) <= SATURATION_TOL),
            )
        )
    return regions


def unsaturated(regions):
    return [r for r in regions if not r.saturated]


def verify_cost_lmi(sys: LtiSystem, regions, cand: CostCandidate, margin: float = 1e-6):
    """Per-region dissipation check; returns ([(region, max_eig, holds)], worst eig).

    The verdict holds iff the maximum eigenvalue of
    Phi' P Phi - P + Q + E' R E is below -margin.
    """
    verdicts = []
    worst = -np.inf
    for r in regions:
        Phi = sys.A + sys.B @ r.E
        P = cand.P_regions[r.active_set]
        M = Phi.T @ P @ Phi - P + cand.Q + r.E.T @ cand.R @ r.E
        max_eig = float(linalg.sym_eigenvalues(0.5 * (M + M.T))[-1])
        verdicts.append((r, max_eig, max_eig < -margin))
        worst = max(worst, max_eig)
    return verdicts, worst


def lyapunov_series(Phi, C, tol: float = 1e-14, max_terms: int = 100_000):
    """P = sum_k (Phi')^k C Phi^k, the solution of Phi' P Phi - P = -C.

    Requires the spectral radius of Phi to be below 1; raises UnstableRegion
    otherwise.
    """
    rho = float(np.max(np.abs(np.linalg.eigvals(Phi))))
    if rho >= 1.0 - 1e-9:
        raise UnstableRegion(f"spectral radius {rho:.6f} >= 1")
    P = np.zeros_like(C)
    term = C.copy()
    scale = 1.0 + float(np.max(np.abs(C)))
    for _ in range(max_terms):
        P = P + term
        if float(np.max(np.abs(term))) <= tol * scale:
            return 0.5 * (P + P.T)
        term = Phi.T @ term @ Phi
    raise UnstableRegion("Lyapunov series did not settle")


def search_cost(sys: LtiSystem, regions, q_grid, r_grid, margin: float = 1e-6) -> CostCandidate:
    """Scalar grid search for a stage cost consistent with every unsaturated region.

    Q = q I, R = r I; each region's P_i solves the Lyapunov equation with
    forcing Q + E' R E + margin I.  Returns the first candidate passing
    verify_cost_lmi on all regions; raises NotFound when the grid is
    exhausted and UnstableRegion when a region's closed loop is not a
    contraction.
    """
    regs = unsaturated(regions)
    if not regs:
        raise NotFound("no unsaturated regions to verify against")
    n, m = sys.n, sys.m
    # forcing uses twice the verification margin so the constructed P_i
    # clears the strict eigenvalue test instead of sitting on its boundary
    lyap_margin = 2.0 * margin
    for q in q_grid:
        for r in r_grid:
            Q = float(q) * np.eye(n)
            R = float(r) * np.eye(m)
            P_regions = {}
            for reg in regs:
                Phi = sys.A + sys.B @ reg.E
                C = Q + reg.E.T @ R @ reg.E + lyap_margin * np.eye(n)
                P_regions[reg.active_set] = lyapunov_series(Phi, C)
            cand = CostCandidate(Q=Q, R=R, P_regions=P_regions)
            _, worst = verify_cost_lmi(sys, regs, cand, margin=margin)
            if worst < -margin:
                return cand
    raise NotFound("no grid point passed the per-region verification")
