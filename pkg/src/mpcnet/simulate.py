"""Closed-loop harness: run the plant under the oracle, implicit or unravelled
controller, and sweep control surfaces over a state grid."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import lcp
from .condenser import CondensedQp, MpcProblem, condense, first_input
from .errors import ControllerFailure, MpcNetError
from .implicit import ImplicitNet, build_implicit, eval_net, relu, solve_fixed_point, solve_via_lcp
from .linalg import as_vector
from .unravel import UnravelConfig, UnravelTrace, unravel

ORACLE = "oracle"
IMPLICIT = "implicit"
EXPLICIT = "explicit"
CONTROLLERS = (ORACLE, IMPLICIT, EXPLICIT)


@dataclass(frozen=True)
class SimulationConfig:
    x0: object = None
    steps: int = 30
    controller: str = ORACLE
    unravel: UnravelConfig = field(default_factory=lambda: UnravelConfig(K=-0.9, J=1000, tol=1e-12))
    fp_tol: float = 1e-10
    fp_max_iters: int = 5000
    #: how the implicit controller solves its hidden state: the robust
    #: complementarity route ("lcp", the default) or the damped Picard
    #: iteration that mirrors the unravelling ("fixed-point")
    implicit_eval: str = "lcp"
    warm_start: bool = True

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError(f"steps={self.steps} < 1")
        if self.controller not in CONTROLLERS:
            raise ValueError(f"unknown controller {self.controller!r}")
        if self.implicit_eval not in ("lcp", "fixed-point"):
            raise ValueError(f"unknown implicit_eval {self.implicit_eval!r}")


@dataclass(frozen=True)
class SimulationTrace:
    states: np.ndarray  # (steps+1, n); final row is the post-run state
    inputs: np.ndarray  # (steps, m)
    iterations: np.ndarray  # (steps,)
    residuals: np.ndarray  # (steps,)
    controller: str
    config: SimulationConfig
    failed_at: int | None = None

    @property
    def steps(self):
        return self.inputs.shape[0]


class _Controller:
    """Per-step policy evaluation with optional hidden-state warm starting."""

    def __init__(self, qp: CondensedQp, net: ImplicitNet, cfg: SimulationConfig):
        self.qp = qp
        self.net = net
        self.cfg = cfg
        self.warm = None

    def step(self, x):
        """Returns (input sequence, iterations, residual)."""
        cfg = self.cfg
        if cfg.controller == ORACLE:
            sol = lcp.solve_lcp_pgs(lcp.mpc_lcp(self.qp, x))
            useq = -self.qp.h_inv(self.qp.F @ x + self.qp.G.T @ sol.lam)
            resid = float(np.max(np.abs(sol.lam * sol.slack), initial=0.0))
            return useq, sol.iterations, resid
        if cfg.controller == IMPLICIT:
            if cfg.implicit_eval == "lcp":
                res = solve_via_lcp(self.net, self.qp, x)
            else:
                res = solve_fixed_point(
                    self.net, x, K=cfg.unravel.K, w0=self.warm, tol=cfg.fp_tol, max_iters=cfg.fp_max_iters
                )
                if cfg.warm_start:
                    self.warm = res.y
            return eval_net(self.net, res.y, x), res.iterations, res.residual
        ucfg = cfg.unravel if self.warm is None else replace(cfg.unravel, w0=self.warm)
        trace: UnravelTrace = unravel(self.net, x, ucfg)
        if cfg.warm_start:
            self.warm = trace.final
        useq = self.net.W_f @ relu(trace.final) + self.net.Y_f @ as_vector(x)
        return useq, trace.depth, trace.final_residual


def simulate(p: MpcProblem, cfg: SimulationConfig) -> SimulationTrace:
    """Close the loop for cfg.steps steps from cfg.x0.

    On a controller error the loop stops (no fallback input is substituted)
    and the partial trace is returned with failed_at set.
    """
    qp = condense(p)
    net = build_implicit(qp)
    x = as_vector(cfg.x0 if cfg.x0 is not None else np.zeros(p.n), "x0")
    ctrl = _Controller(qp, net, cfg)
    states = [x.copy()]
    inputs, iters, resids = [], [], []
    failed_at = None
    for k in range(cfg.steps):
        try:
            useq, it, resid = ctrl.step(x)
        except MpcNetError as exc:
            failed_at = k
            err = ControllerFailure(k, exc)
            err.trace = _pack(states, inputs, iters, resids, cfg, failed_at)
            raise err from exc
        u = first_input(useq, p.m)
        inputs.append(u)
        iters.append(it)
        resids.append(resid)
        x = p.sys.A @ x + p.sys.B @ u
        states.append(x.copy())
    return _pack(states, inputs, iters, resids, cfg, failed_at)


def _pack(states, inputs, iters, resids, cfg, failed_at):
    m = len(inputs[0]) if inputs else 0
    return SimulationTrace(
        states=np.array(states),
        inputs=np.array(inputs).reshape(len(inputs), m),
        iterations=np.array(iters, dtype=int),
        residuals=np.array(resids, dtype=float),
        controller=cfg.controller,
        config=cfg,
        failed_at=failed_at,
    )


def control_surface(
    p: MpcProblem,
    bounds=(-300.0, 300.0),
    resolution: int = 25,
    controller: str = ORACLE,
    cfg: SimulationConfig | None = None,
    map_fn=map,
):
    """Applied-input surface over a regular grid (2-state problems get a
    (x1, x2, u) table; higher dimensions flatten the grid index).

    Controller failures at individual grid points are recorded as NaN rows
    rather than aborting the sweep.  `map_fn` may be an executor's map for a
    parallel sweep; evaluation is pure per point.
    """
    cfg = cfg or SimulationConfig(controller=controller)
    qp = condense(p)
    net = build_implicit(qp)
    lo, hi = bounds
    axis = np.linspace(lo, hi, resolution)
    grids = np.meshgrid(*([axis] * p.n), indexing="ij")
    points = np.stack([g.reshape(-1) for g in grids], axis=1)

    def eval_point(x):
        ctrl = _Controller(qp, net, replace(cfg, controller=controller, warm_start=False))
        try:
            useq, _, _ = ctrl.step(x)
        except MpcNetError:
            return np.full(p.m, np.nan)
        return first_input(useq, p.m)

    us = list(map_fn(eval_point, points))
    return points, np.array(us).reshape(len(points), p.m)
