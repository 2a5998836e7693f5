"""MPC as an implicit ReLU network: condensing, complementarity oracle,
closed-form network weights, unravelling, and cost recovery."""

from .condenser import (
    SKIP_FIRST_INPUT,
    STANDARD,
    CondensedQp,
    LtiSystem,
    MpcProblem,
    condense,
    first_input,
    rollout_cost,
)
from .errors import (
    ControllerFailure,
    DimensionMismatch,
    Infeasible,
    InvalidProblem,
    MpcNetError,
    NoConvergence,
    NotFound,
    NotPositiveDefinite,
    ReconstructionMismatch,
    SingularActiveSet,
    UnstableRegion,
)
from .implicit import (
    FixedPointResult,
    ImplicitNet,
    build_implicit,
    eval_net,
    load_implicit,
    relu,
    save_implicit,
    solve_fixed_point,
    solve_via_lcp,
)
from .lcp import (
    LcpProblem,
    LcpSolution,
    kkt_residuals,
    mpc_lcp,
    solve_lcp_enum,
    solve_lcp_pgs,
    solve_qp_via_kkt,
)
from .pwa import (
    CostCandidate,
    PwaRegion,
    extract_pwa,
    lyapunov_series,
    region_law,
    search_cost,
    unsaturated,
    verify_cost_lmi,
)
from .simulate import (
    EXPLICIT,
    IMPLICIT,
    ORACLE,
    SimulationConfig,
    SimulationTrace,
    control_surface,
    simulate,
)
from .unravel import (
    ExplicitNet,
    UnravelConfig,
    UnravelTrace,
    error_dynamics_matrices,
    export_explicit,
    save_explicit,
    sector_check,
    unravel,
)

__version__ = "0.1.0"
