"""Condense a horizon-N constrained LQR problem into a dense quadratic program.

The structured problem (dynamics, stage costs, polytopic input constraints) is
folded into a single QP in the stacked input sequence:

    minimize   u' H u + 2 x' F' u
    subject to G u <= S_u x + w

where x is the current state and u the length N*m input sequence.  The state
predictions are eliminated through x[k+i] = A^i x + Bt_i u with Bt_i the i-th
block row of the prediction matrix Gamma.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import DimensionMismatch, InvalidProblem
from .linalg import SpdFactorization, as_matrix, as_vector

#: input penalty applied to every input in the sequence, with the first
#: stage reusing the first supplied weight
STANDARD = "standard"
#: first input left unpenalized; can make the Hessian singular
SKIP_FIRST_INPUT = "skip-first-input"


@dataclass(frozen=True)
class LtiSystem:
    """Discrete-time dynamics x[k+1] = A x[k] + B u[k]."""

    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = as_matrix(self.A, "A")
        B = as_matrix(self.B, "B")
        if A.shape[0] != A.shape[1]:
            raise DimensionMismatch(f"A not square: {A.shape}")
        if B.shape[0] != A.shape[0]:
            raise DimensionMismatch(f"B rows {B.shape[0]} != state dim {A.shape[0]}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]


def _weight_sequence(M, count, n, name):
    """Normalize a single matrix or a sequence of matrices to `count` entries."""
    if count == 0:
        return []
    arr = np.asarray(M, dtype=float)
    if arr.ndim == 2:
        seq = [as_matrix(arr, name)] * count
    else:
        seq = [as_matrix(Mi, name) for Mi in M]
        if len(seq) == 1:
            seq = seq * count
        if len(seq) != count:
            raise DimensionMismatch(f"{name}: expected {count} matrices, got {len(seq)}")
    for Mi in seq:
        if Mi.shape != (n, n):
            raise DimensionMismatch(f"{name}: block shape {Mi.shape}, expected {(n, n)}")
    return seq


def _check_psd(M, name, floor):
    eigs = linalg.sym_eigenvalues(M)
    if eigs.size and eigs[0] < floor:
        raise InvalidProblem(f"{name}: min eigenvalue {eigs[0]:.3e} below {floor:.1e}")


@dataclass(frozen=True)
class MpcProblem:
    """Horizon-N regulation problem with polytopic input constraints G u <= S_u x + w.

    Q and R may be single matrices (broadcast over the horizon) or sequences;
    internally both are stored as lists of length N-1 and N.  The
    `input_cost_convention` flag selects whether the first input in the
    sequence is penalized (STANDARD, the default) or skipped (SKIP_FIRST_INPUT).
    """

    sys: LtiSystem
    N: int
    Q: object
    R: object
    P: np.ndarray
    G: np.ndarray
    S_u: np.ndarray
    w: np.ndarray
    input_cost_convention: str = STANDARD

    Q_seq: list = field(init=False, repr=False)
    R_seq: list = field(init=False, repr=False)

    def __post_init__(self):
        if self.N < 1:
            raise InvalidProblem(f"horizon N={self.N} < 1")
        if self.input_cost_convention not in (STANDARD, SKIP_FIRST_INPUT):
            raise InvalidProblem(f"unknown convention {self.input_cost_convention!r}")
        n, m = self.sys.n, self.sys.m
        Q_seq = _weight_sequence(self.Q, self.N - 1, n, "Q")
        R_core = _weight_sequence(self.R, max(self.N - 1, 1), m, "R")
        # R_seq[i] penalizes input i = 0..N-1; stage 0 reuses the first weight
        R_seq = [R_core[0]] + list(R_core) if self.N > 1 else list(R_core)
        P = linalg.symmetrize(self.P, "P")
        for i, Qi in enumerate(Q_seq):
            Q_seq[i] = linalg.symmetrize(Qi, "Q")
            _check_psd(Q_seq[i], f"Q[{i + 1}]", -1e-9)
        for i, Ri in enumerate(R_seq):
            R_seq[i] = linalg.symmetrize(Ri, "R")
            _check_psd(R_seq[i], f"R[{i}]", 1e-12)
        _check_psd(P, "P", 1e-12)
        G = as_matrix(self.G, "G")
        S_u = as_matrix(self.S_u, "S_u")
        w = as_vector(self.w, "w")
        n_c = G.shape[0]
        if G.shape[1] != self.N * m:
            raise DimensionMismatch(f"G cols {G.shape[1]} != N*m = {self.N * m}")
        if S_u.shape != (n_c, n):
            raise DimensionMismatch(f"S_u shape {S_u.shape}, expected {(n_c, n)}")
        if w.shape[0] != n_c:
            raise DimensionMismatch(f"w length {w.shape[0]} != n_c = {n_c}")
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "S_u", S_u)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "Q_seq", Q_seq)
        object.__setattr__(self, "R_seq", R_seq)

    @property
    def n(self):
        return self.sys.n

    @property
    def m(self):
        return self.sys.m

    @property
    def n_c(self):
        return self.G.shape[0]


@dataclass(frozen=True)
class CondensedQp:
    """Dense QP data produced by `condense`, with the Hessian factorization cached."""

    H: np.ndarray
    F: np.ndarray
    G: np.ndarray
    S_u: np.ndarray
    S: np.ndarray
    w: np.ndarray
    Phi_pred: np.ndarray
    Gamma_pred: np.ndarray
    n: int
    m: int
    N: int
    H_chol: SpdFactorization

    @property
    def n_c(self):
        return self.G.shape[0]

    def h_inv(self, B):
        """Apply H^{-1} to a vector or matrix."""
        return linalg.solve_spd(self.H_chol, B)


def prediction_matrices(sys: LtiSystem, N: int):
    """Stacked state predictions: x[k+i] = Phi block i @ x + Gamma block i @ u.

    Phi stacks A^i for i = 1..N; Gamma's block row i is
    [A^{i-1}B ... AB B 0 ... 0].
    """
    n, m = sys.n, sys.m
    powers = [np.eye(n)]
    for _ in range(N):
        powers.append(sys.A @ powers[-1])
    Phi = np.vstack([powers[i] for i in range(1, N + 1)])
    Gamma = np.zeros((N * n, N * m))
    for i in range(1, N + 1):
        for j in range(i):
            Gamma[(i - 1) * n : i * n, j * m : (j + 1) * m] = powers[i - 1 - j] @ sys.B
    return Phi, Gamma


def _stage_weight_blocks(p: MpcProblem):
    """Block-diagonal state weights over x[1..N] and input weights over u[0..N-1]."""
    n, m, N = p.n, p.m, p.N
    Qbar = np.zeros((N * n, N * n))
    for i in range(1, N):
        Qbar[(i - 1) * n : i * n, (i - 1) * n : i * n] = p.Q_seq[i - 1]
    Qbar[(N - 1) * n :, (N - 1) * n :] = p.P
    Rbar = np.zeros((N * m, N * m))
    start = 1 if p.input_cost_convention == SKIP_FIRST_INPUT else 0
    for i in range(start, N):
        Rbar[i * m : (i + 1) * m, i * m : (i + 1) * m] = p.R_seq[i]
    return Qbar, Rbar


def condense(p: MpcProblem) -> CondensedQp:
    """Fold the structured problem into the dense QP of the stacked inputs.

    For every (x, u) the structured objective equals u'Hu + 2 x'F'u up to a
    u-independent constant; raises NotPositiveDefinite when the assembled
    Hessian fails its Cholesky test (degenerate cost).
    """
    Phi, Gamma = prediction_matrices(p.sys, p.N)
    Qbar, Rbar = _stage_weight_blocks(p)
    H = 0.5 * (Gamma.T @ Qbar @ Gamma + Rbar)
    H = H + H.T  # exact symmetry
    F = Gamma.T @ Qbar @ Phi
    chol = linalg.cholesky(H)
    S = p.S_u + p.G @ linalg.solve_spd(chol, F)
    return CondensedQp(
        H=H,
        F=F,
        G=p.G.copy(),
        S_u=p.S_u.copy(),
        S=S,
        w=p.w.copy(),
        Phi_pred=Phi,
        Gamma_pred=Gamma,
        n=p.n,
        m=p.m,
        N=p.N,
        H_chol=chol,
    )


def first_input(useq, m: int) -> np.ndarray:
    """Select the first m components of a stacked input sequence."""
    useq = as_vector(useq, "useq")
    if m < 1 or useq.shape[0] % m != 0:
        raise DimensionMismatch(f"sequence length {useq.shape[0]} not divisible by m={m}")
    return useq[:m].copy()


def rollout_cost(p: MpcProblem, x, useq) -> float:
    """Simulate the dynamics over the horizon and accumulate the quadratic cost.

    Serves as the independent oracle for `condense`: never touches H or F.
    """
    x = as_vector(x, "x")
    useq = as_vector(useq, "useq")
    if x.shape[0] != p.n or useq.shape[0] != p.N * p.m:
        raise DimensionMismatch("state or input sequence has wrong length")
    cost = 0.0
    xi = x
    start = 1 if p.input_cost_convention == SKIP_FIRST_INPUT else 0
    for i in range(p.N):
        ui = useq[i * p.m : (i + 1) * p.m]
        if i >= start:
            cost += float(ui @ p.R_seq[i] @ ui)
        xi = p.sys.A @ xi + p.sys.B @ ui
        if i + 1 < p.N:
            cost += float(xi @ p.Q_seq[i] @ xi)
    cost += float(xi @ p.P @ xi)
    return cost
