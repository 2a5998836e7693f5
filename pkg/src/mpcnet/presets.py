"""Ready-made problem instances used by the demos and the test suite."""

from __future__ import annotations

import numpy as np

from .condenser import LtiSystem, MpcProblem
from .linalg import kron


def box_input_constraints(N: int, m: int, lo: float, hi: float):
    """Symmetric-form box constraints -|lo| <= u_i <= hi on every input.

    Encoded as G u <= w with G = I_{N m} (x) [1/hi, -1/|lo|]' and w = 1, so a
    unit slack corresponds to an input at its bound.
    """
    if hi <= 0 or lo >= 0:
        raise ValueError("expects lo < 0 < hi")
    G = kron(np.eye(N * m), np.array([[1.0 / hi], [-1.0 / abs(lo)]]))
    w = np.ones(2 * N * m)
    S_u = np.zeros((2 * N * m, 0))  # placeholder; caller fixes state dim
    return G, S_u, w


def saturating_regulator(N: int = 10, bound: float = 10.0) -> MpcProblem:
    """Two-state oscillatory plant with a box-saturated scalar input.

    The stock benchmark used throughout the demos: horizon 10, input bounds
    +-10, and a terminal weight matched to the stage cost.
    """
    sys = LtiSystem(A=np.array([[4.0 / 3.0, -2.0 / 3.0], [1.0, 0.0]]), B=np.array([[0.0], [1.0]]))
    Q = np.array([[1.0, -2.0 / 3.0], [-2.0 / 3.0, 1.5]])
    R = np.array([[1.0]])
    P = np.array([[7.1667, -4.2222], [-4.2222, 4.6852]])
    G, _, w = box_input_constraints(N, 1, -bound, bound)
    return MpcProblem(
        sys=sys,
        N=N,
        Q=Q,
        R=R,
        P=P,
        G=G,
        S_u=np.zeros((G.shape[0], 2)),
        w=w,
    )
