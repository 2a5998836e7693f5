"""Unravel the implicit network into a finite-depth feed-forward network.

A depth-J truncation of the damped Picard iteration

    w[j+1] = D relu(w[j]) + zeta + K (w[j] - D relu(w[j]) - zeta)

is itself an explicit ReLU network: each layer applies the static maps
K (skip), (I-K) D (through the activation), Y_layer = -(I-K) S and
b_layer = -(I-K) w, and the output layer reads off
u = W_f relu(w[J]) + Y_f x.  The iteration error obeys the Lurie-type
recursion e[j+1] = K e[j] + (I-K) D phi_tilde(e[j]) with phi_tilde the
incremental (sector-bounded) ReLU.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch
from .implicit import ImplicitNet, expand_gain, iteration_step, relu
from .linalg import as_vector


@dataclass(frozen=True)
class UnravelConfig:
    """Depth, gain and stopping rule for one unravelling.

    K may be a scalar (expanded to scalar * identity) or a full matrix.
    tol = 0 disables early stopping so that all J layers are evaluated;
    w0 = None means the all-ones start.
    """

    K: object = -0.9
    J: int = 1000
    tol: float = 0.0
    w0: object = None

    def __post_init__(self):
        if self.J < 0:
            raise DimensionMismatch(f"depth J={self.J} < 0")
        if self.tol < 0:
            raise DimensionMismatch(f"tol={self.tol} < 0")

    def gain(self, n_c):
        return expand_gain(self.K, n_c)

    def start(self, n_c):
        if self.w0 is None:
            return np.ones(n_c)
        w0 = as_vector(self.w0, "w0")
        if w0.shape[0] != n_c:
            raise DimensionMismatch(f"w0 length {w0.shape[0]} != n_c = {n_c}")
        return w0.copy()


@dataclass(frozen=True)
class UnravelTrace:
    iterates: list
    residuals: list
    converged_at: int | None

    @property
    def final(self):
        return self.iterates[-1]

    @property
    def final_residual(self):
        return self.residuals[-1]

    @property
    def depth(self):
        return len(self.iterates) - 1


def unravel(net: ImplicitNet, x, cfg: UnravelConfig) -> UnravelTrace:
    """Run the damped iteration for up to cfg.J layers, recording every residual.

    Non-convergence is not an error here: the residual column simply stays
    high, which is exactly the data a gain comparison needs.
    """
    x = as_vector(x, "x")
    if net.n_c == 0:
        return UnravelTrace([np.zeros(0)], [0.0], 0)
    K = cfg.gain(net.n_c)
    zeta = net.hidden_rhs(x)
    w = cfg.start(net.n_c)
    iterates = [w]
    residuals = [net.hidden_residual(w, x)]
    converged_at = 0 if (cfg.tol > 0 and residuals[0] <= cfg.tol) else None
    for _ in range(cfg.J):
        if converged_at is not None:
            break
        w = iteration_step(net.W, zeta, K, w)
        iterates.append(w)
        residuals.append(net.hidden_residual(w, x))
        if cfg.tol > 0 and residuals[-1] <= cfg.tol:
            converged_at = len(iterates) - 1
    if converged_at is None and cfg.tol == 0:
        idx = next((j for j, r in enumerate(residuals) if r == 0.0), None)
        converged_at = idx
    return UnravelTrace(iterates, residuals, converged_at)


@dataclass(frozen=True)
class ExplicitNet:
    """Static-weight truncation of the implicit network at depth J.

    Layer weights are identical at every depth, so only one copy of each map
    is stored: W_skip = K on the pre-activation state, W_act = (I-K) D on
    relu of it, Y_layer = -(I-K) S and b_layer = -(I-K) w.  The layer state
    is the pre-activation vector; pairing it with its relu image recovers the
    conventional feed-forward form.
    """

    D: np.ndarray
    K: np.ndarray
    S: np.ndarray
    w_offset: np.ndarray
    W_f: np.ndarray
    Y_f: np.ndarray
    J: int
    tol: float
    w0: np.ndarray
    n: int
    m: int
    N: int
    n_c: int
    W_skip: np.ndarray = field(init=False, repr=False)
    W_act: np.ndarray = field(init=False, repr=False)
    Y_layer: np.ndarray = field(init=False, repr=False)
    b_layer: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        ImK = np.eye(self.n_c) - self.K
        object.__setattr__(self, "W_skip", self.K.copy())
        object.__setattr__(self, "W_act", ImK @ self.D)
        object.__setattr__(self, "Y_layer", -ImK @ self.S)
        object.__setattr__(self, "b_layer", -ImK @ self.w_offset)

    def hidden_forward(self, x, w0=None):
        """All layer states for input x; arithmetic matches `unravel` bit for bit."""
        x = as_vector(x, "x")
        if self.n_c == 0:
            return [np.zeros(0)]
        zeta = -(self.S @ x + self.w_offset)
        w = self.w0.copy() if w0 is None else as_vector(w0, "w0").copy()
        states = [w]
        for _ in range(self.J):
            w = iteration_step(self.D, zeta, self.K, w)
            states.append(w)
        return states

    def forward(self, x, w0=None):
        """Control sequence u = W_f relu(w[J]) + Y_f x."""
        x = as_vector(x, "x")
        wJ = self.hidden_forward(x, w0)[-1]
        if self.n_c == 0:
            return self.Y_f @ x
        return self.W_f @ relu(wJ) + self.Y_f @ x


def export_explicit(net: ImplicitNet, cfg: UnravelConfig) -> ExplicitNet:
    """Freeze the unravelling at depth cfg.J into a static explicit network."""
    K = cfg.gain(net.n_c)
    return ExplicitNet(
        D=net.W.copy(),
        K=K,
        S=-net.Y,
        w_offset=-net.b,
        W_f=net.W_f.copy(),
        Y_f=net.Y_f.copy(),
        J=cfg.J,
        tol=cfg.tol,
        w0=cfg.start(net.n_c),
        n=net.n,
        m=net.m,
        N=net.N,
        n_c=net.n_c,
    )


def error_dynamics_matrices(net: ImplicitNet, K):
    """Lurie-system matrices (A_err, B_err) = (K, (I-K) D) of the layer error recursion."""
    K = expand_gain(K, net.n_c)
    return K, (np.eye(net.n_c) - K) @ net.W


def sector_check(net: ImplicitNet, x, y, samples: int = 1000, rng=None) -> float:
    """Monte-Carlo check of the incremental-ReLU sector inequality.

    For random iterates w and random diagonal T > 0, evaluates
    phi_tilde' T (e - phi_tilde) with e = w - y(x) and
    phi_tilde = relu(w) - relu(y(x)); returns the most negative value seen
    (theoretically >= 0).
    """
    rng = np.random.default_rng(0) if rng is None else rng
    y = as_vector(y, "y")
    scale = 1.0 + float(np.max(np.abs(y), initial=0.0))
    worst = 0.0
    for _ in range(samples):
        w = rng.uniform(-2.0 * scale, 2.0 * scale, size=net.n_c)
        T = rng.uniform(0.1, 10.0, size=net.n_c)
        e = w - y
        phit = relu(w) - relu(y)
        worst = min(worst, float(phit @ (T * (e - phit))))
    return worst


def save_explicit(enet: ExplicitNet, path):
    """Text export mirroring the implicit format, plus the gain K and depth J."""
    from .textio import write_blocks

    write_blocks(
        path,
        {"n": enet.n, "m": enet.m, "N": enet.N, "n_c": enet.n_c, "J": enet.J},
        [
            ("D", enet.D),
            ("K", enet.K),
            ("S", enet.S),
            ("w_offset", enet.w_offset.reshape(1, -1)),
            ("W_f", enet.W_f),
            ("Y_f", enet.Y_f),
            ("w0", enet.w0.reshape(1, -1)),
        ],
    )
