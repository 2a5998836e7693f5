import numpy as np
import pytest

from mpcnet import (
    EXPLICIT,
    IMPLICIT,
    ORACLE,
    ControllerFailure,
    SimulationConfig,
    UnravelConfig,
    control_surface,
    simulate,
    solve_qp_via_kkt,
)
from mpcnet.condenser import first_input


X0 = np.array([-200.0, -200.0])


def run(benchmark, **kw):
    return simulate(benchmark, SimulationConfig(x0=X0, **kw))


class TestOracle:
    def test_trace_shapes(self, benchmark):
        t = run(benchmark, steps=12)
        assert t.states.shape == (13, 2)
        assert t.inputs.shape == (12, 1)
        assert t.iterations.shape == (12,) and t.residuals.shape == (12,)
        assert t.failed_at is None

    def test_dynamics_consistency(self, benchmark):
        t = run(benchmark, steps=10)
        A, B = benchmark.sys.A, benchmark.sys.B
        for k in range(10):
            assert np.allclose(t.states[k + 1], A @ t.states[k] + B @ t.inputs[k])

    def test_input_bound_respected_and_saturated(self, benchmark):
        t = run(benchmark, steps=30)
        assert np.max(np.abs(t.inputs)) <= 10.0 + 1e-7
        assert np.any(np.abs(t.inputs) >= 10.0 - 1e-6)

    def test_state_regulated_to_origin(self, benchmark):
        t = run(benchmark, steps=30)
        assert np.max(np.abs(t.states[-1])) <= 1e-3

    def test_first_step_matches_qp_oracle(self, benchmark, benchmark_qp):
        t = run(benchmark, steps=1)
        expect = first_input(solve_qp_via_kkt(benchmark_qp, X0), 1)
        assert np.max(np.abs(t.inputs[0] - expect)) <= 1e-8


class TestImplicit:
    def test_matches_oracle_trajectory(self, benchmark):
        a = run(benchmark, steps=30, controller=ORACLE)
        b = run(benchmark, steps=30, controller=IMPLICIT)
        assert np.max(np.abs(a.inputs - b.inputs)) <= 1e-6
        assert np.max(np.abs(a.states - b.states)) <= 1e-4

    def test_fixed_point_route_from_mild_state(self, benchmark):
        # a mildly constrained start keeps the damped iteration affordable
        cfg = SimulationConfig(
            x0=np.array([-30.0, -30.0]), steps=15, controller=IMPLICIT,
            implicit_eval="fixed-point", fp_max_iters=200000, fp_tol=1e-9,
        )
        a = simulate(benchmark, cfg)
        b = simulate(benchmark, SimulationConfig(x0=np.array([-30.0, -30.0]), steps=15))
        assert np.max(np.abs(a.inputs - b.inputs)) <= 1e-5

    def test_controller_failure_carries_partial_trace(self, benchmark):
        # a tiny iteration budget cannot converge from a hard state
        cfg = SimulationConfig(
            x0=X0, steps=5, controller=IMPLICIT, implicit_eval="fixed-point",
            fp_max_iters=10, fp_tol=1e-10, warm_start=False,
        )
        with pytest.raises(ControllerFailure) as info:
            simulate(benchmark, cfg)
        assert info.value.step == 0
        assert info.value.trace.inputs.shape == (0, 0)
        assert info.value.trace.failed_at == 0


class TestExplicit:
    def test_deep_unravelling_tracks_oracle(self, benchmark):
        cfg = SimulationConfig(
            x0=X0, steps=30, controller=EXPLICIT,
            unravel=UnravelConfig(K=-0.9, J=12000, tol=1e-12),
        )
        a = simulate(benchmark, cfg)
        b = run(benchmark, steps=30)
        assert np.max(np.abs(a.inputs - b.inputs)) <= 1e-4
        assert np.max(np.abs(a.inputs)) <= 10.0 + 1e-4

    def test_warm_start_reduces_residuals(self, benchmark):
        cfg = SimulationConfig(
            x0=X0, steps=12, controller=EXPLICIT,
            unravel=UnravelConfig(K=-0.9, J=1000, tol=1e-12),
        )
        warm = simulate(benchmark, cfg)
        cold = simulate(benchmark, SimulationConfig(
            x0=X0, steps=12, controller=EXPLICIT,
            unravel=UnravelConfig(K=-0.9, J=1000, tol=1e-12), warm_start=False,
        ))
        # after the transient the warm-started run needs strictly fewer layers
        # per step than the cold start from all-ones
        assert np.max(warm.residuals[8:]) <= 1e-12
        assert np.all(warm.iterations[8:] < cold.iterations[8:])

    def test_warm_start_residual_fingerprint(self, benchmark):
        trace = simulate(benchmark, SimulationConfig(
            x0=X0, steps=30, controller=EXPLICIT,
            unravel=UnravelConfig(K=-0.9, J=1000, tol=1e-12),
        ))
        assert np.max(trace.residuals[8:]) <= 1e-12


class TestControlSurface:
    def test_oracle_grid_values(self, benchmark, benchmark_qp):
        points, us = control_surface(benchmark, bounds=(-300.0, 300.0), resolution=5)
        assert points.shape == (25, 2) and us.shape == (25, 1)
        for x, u in zip(points, us):
            expect = first_input(solve_qp_via_kkt(benchmark_qp, x), 1)
            assert np.max(np.abs(u - expect)) <= 1e-7

    def test_implicit_agrees_with_oracle(self, benchmark):
        _, a = control_surface(benchmark, resolution=5, controller=ORACLE)
        _, b = control_surface(benchmark, resolution=5, controller=IMPLICIT)
        assert np.nanmax(np.abs(a - b)) <= 1e-6

    def test_saturation_plateau_present(self, benchmark):
        _, us = control_surface(benchmark, resolution=9)
        assert np.min(us) == pytest.approx(-10.0, abs=1e-6)
        assert np.max(us) == pytest.approx(10.0, abs=1e-6)


class TestConfigValidation:
    def test_rejects_unknown_controller(self):
        with pytest.raises(ValueError):
            SimulationConfig(controller="pid")

    def test_rejects_zero_steps(self):
        with pytest.raises(ValueError):
            SimulationConfig(steps=0)

    def test_rejects_unknown_implicit_eval(self):
        with pytest.raises(ValueError):
            SimulationConfig(implicit_eval="newton")
