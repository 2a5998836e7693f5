"""Implicit ReLU network that reproduces the condensed QP solution exactly.

The hidden state y(x) solves the algebraic equation

    y = W relu(y) + Y x + b

and the control sequence is read out as u*(x) = W_f relu(y) + Y_f x, with

    W = I - G H^{-1} G',   Y = -S,        b = -w,
    W_f = -H^{-1} G',      Y_f = -H^{-1} F.

relu(y) coincides with the QP's Lagrange multiplier, which is what makes the
representation exact rather than approximate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import lcp
from .condenser import CondensedQp
from .errors import DimensionMismatch, NoConvergence, ReconstructionMismatch
from .linalg import as_vector


def relu(s):
    """Componentwise max(s, 0)."""
    return np.maximum(np.asarray(s, dtype=float), 0.0)


@dataclass(frozen=True)
class ImplicitNet:
    W: np.ndarray
    Y: np.ndarray
    b: np.ndarray
    W_f: np.ndarray
    Y_f: np.ndarray
    n: int
    m: int
    N: int
    n_c: int

    def hidden_rhs(self, x):
        """The x-dependent affine part zeta = Y x + b of the hidden equation."""
        return self.Y @ as_vector(x, "x") + self.b

    def hidden_residual(self, y, x):
        """Infinity norm of y - W relu(y) - Y x - b."""
        if self.n_c == 0:
            return 0.0
        r = y - self.W @ relu(y) - self.hidden_rhs(x)
        return float(np.max(np.abs(r)))


@dataclass(frozen=True)
class FixedPointResult:
    y: np.ndarray
    residual: float
    iterations: int
    converged: bool


def build_implicit(qp: CondensedQp) -> ImplicitNet:
    """Closed-form network weights from the condensed QP data."""
    n_c = qp.n_c
    if n_c == 0:
        W = np.zeros((0, 0))
        Y = np.zeros((0, qp.n))
        b = np.zeros(0)
        W_f = np.zeros((qp.N * qp.m, 0))
    else:
        GHG = qp.G @ qp.h_inv(qp.G.T)
        W = np.eye(n_c) - 0.5 * (GHG + GHG.T)
        Y = -qp.S
        b = -qp.w
        W_f = -qp.h_inv(qp.G.T)
    Y_f = -qp.h_inv(qp.F)
    # C-contiguous storage so copies of these weights reproduce the exact
    # same matvec bits (summation order in BLAS depends on the layout)
    return ImplicitNet(
        W=np.ascontiguousarray(W),
        Y=np.ascontiguousarray(Y),
        b=np.ascontiguousarray(b),
        W_f=np.ascontiguousarray(W_f),
        Y_f=np.ascontiguousarray(Y_f),
        n=qp.n, m=qp.m, N=qp.N, n_c=n_c,
    )


def iteration_step(D, zeta, K, w):
    """One layer of the damped Picard iteration w+ = D relu(w) + zeta + K (w - D relu(w) - zeta).

    Shared by the fixed-point solver, the unraveller and the exported
    explicit network so that all three produce bit-identical iterates.
    """
    picard = D @ relu(w) + zeta
    return picard + K @ (w - picard)


def solve_fixed_point(
    net: ImplicitNet,
    x,
    K=None,
    w0=None,
    tol: float = 1e-10,
    max_iters: int = 5000,
) -> FixedPointResult:
    """Iterate the hidden equation to a fixed point.

    K is a square damping gain (zero means plain Picard; a scalar is expanded
    to scalar * identity).  Raises NoConvergence when the residual has not
    reached tol within max_iters layers: the chosen gain does not contract
    for this instance.
    """
    x = as_vector(x, "x")
    if net.n_c == 0:
        return FixedPointResult(np.zeros(0), 0.0, 0, True)
    K = expand_gain(K, net.n_c)
    w = np.zeros(net.n_c) if w0 is None else as_vector(w0, "w0").copy()
    if w.shape[0] != net.n_c:
        raise DimensionMismatch(f"w0 length {w.shape[0]} != n_c = {net.n_c}")
    zeta = net.hidden_rhs(x)
    residual = net.hidden_residual(w, x)
    it = 0
    while residual > tol:
        if it >= max_iters:
            raise NoConvergence(f"fixed point residual {residual:.3e} after {max_iters} layers")
        w = iteration_step(net.W, zeta, K, w)
        it += 1
        residual = net.hidden_residual(w, x)
    return FixedPointResult(w, residual, it, True)


def expand_gain(K, n_c):
    """Accept None, a scalar, or a full n_c x n_c gain matrix."""
    if K is None:
        return np.zeros((n_c, n_c))
    K = np.asarray(K, dtype=float)
    if K.ndim == 0:
        return float(K) * np.eye(n_c)
    if K.shape != (n_c, n_c):
        raise DimensionMismatch(f"gain shape {K.shape}, expected {(n_c, n_c)}")
    return K


def solve_via_lcp(net: ImplicitNet, qp: CondensedQp, x, tol: float = 1e-11) -> FixedPointResult:
    """Recover the hidden state from the complementarity oracle.

    With lam solving the QP's LCP, y = W lam + zeta splits into the
    multiplier (positive part) and the negated slack; relu(y) must reproduce
    lam, otherwise the instance is degenerate and ReconstructionMismatch is
    raised.
    """
    x = as_vector(x, "x")
    if net.n_c == 0:
        return FixedPointResult(np.zeros(0), 0.0, 0, True)
    sol = lcp.solve_lcp_pgs(lcp.mpc_lcp(qp, x), tol=tol)
    y = net.W @ sol.lam + net.hidden_rhs(x)
    scale = 1.0 + float(np.max(np.abs(sol.lam), initial=0.0))
    if float(np.max(np.abs(relu(y) - sol.lam), initial=0.0)) > 1e-7 * scale:
        raise ReconstructionMismatch("relu(y) does not reproduce the LCP multiplier")
    return FixedPointResult(y, net.hidden_residual(y, x), sol.iterations, True)


def eval_net(net: ImplicitNet, y, x) -> np.ndarray:
    """Output map u*(x) = W_f relu(y) + Y_f x for a solved hidden state."""
    x = as_vector(x, "x")
    if net.n_c == 0:
        return net.Y_f @ x
    y = as_vector(y, "y")
    return net.W_f @ relu(y) + net.Y_f @ x


def save_implicit(net: ImplicitNet, path):
    """Write the network to the text export format.

    Layout: four header lines `n`, `m`, `N`, `n_c`, then for each of
    W, Y, b, W_f, Y_f a line with the block name followed by its rows as
    whitespace-separated shortest round-trip decimals (b on one row).
    """
    from .textio import write_blocks

    write_blocks(
        path,
        {"n": net.n, "m": net.m, "N": net.N, "n_c": net.n_c},
        [("W", net.W), ("Y", net.Y), ("b", net.b.reshape(1, -1)), ("W_f", net.W_f), ("Y_f", net.Y_f)],
    )


def load_implicit(path) -> ImplicitNet:
    from .textio import read_blocks

    header, blocks = read_blocks(path)
    n, m, N, n_c = (int(header[k]) for k in ("n", "m", "N", "n_c"))
    return ImplicitNet(
        W=blocks["W"].reshape(n_c, n_c),
        Y=blocks["Y"].reshape(n_c, n),
        b=blocks["b"].reshape(-1),
        W_f=blocks["W_f"].reshape(N * m, n_c),
        Y_f=blocks["Y_f"].reshape(N * m, n),
        n=n,
        m=m,
        N=N,
        n_c=n_c,
    )
