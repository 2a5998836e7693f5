import numpy as np
import pytest

from mpcnet import (
    DimensionMismatch,
    ExplicitNet,
    UnravelConfig,
    error_dynamics_matrices,
    export_explicit,
    load_implicit,
    relu,
    save_explicit,
    sector_check,
    solve_via_lcp,
    unravel,
)
from mpcnet.textio import read_blocks


class TestConfig:
    def test_defaults(self, benchmark_net):
        cfg = UnravelConfig()
        assert cfg.J == 1000 and cfg.tol == 0.0
        assert np.allclose(cfg.gain(20), -0.9 * np.eye(20))
        assert np.allclose(cfg.start(20), 1.0)

    def test_matrix_gain_passthrough(self):
        K = np.diag([0.1, 0.2])
        assert np.array_equal(UnravelConfig(K=K).gain(2), K)

    def test_rejects_negative_depth(self):
        with pytest.raises(DimensionMismatch):
            UnravelConfig(J=-1)

    def test_rejects_wrong_start_length(self, benchmark_net):
        with pytest.raises(DimensionMismatch):
            UnravelConfig(w0=np.ones(3)).start(20)


class TestUnravel:
    def test_fixed_point_start_is_stationary(self, benchmark_qp, benchmark_net):
        x = np.array([-200.0, -200.0])
        y = solve_via_lcp(benchmark_net, benchmark_qp, x).y
        trace = unravel(benchmark_net, x, UnravelConfig(K=-0.9, J=5, tol=0.0, w0=y))
        assert trace.depth == 5
        assert max(trace.residuals) <= 1e-7
        assert np.max(np.abs(trace.final - y)) <= 1e-7

    def test_residuals_decrease_on_benchmark(self, benchmark_net):
        x = np.array([-200.0, -200.0])
        trace = unravel(benchmark_net, x, UnravelConfig(K=-0.9, J=200))
        # contraction is slow here, but after a burn-in the residual must
        # shrink monotonically in the geometric-decay regime
        r = np.array(trace.residuals[50:])
        assert np.all(r[1:] <= r[:-1] * (1.0 + 1e-9))
        assert trace.final_residual < trace.residuals[0]

    def test_early_stop_records_depth(self, benchmark_qp, benchmark_net):
        x = np.array([1.0, -1.0])  # interior state: K=0 converges in one step
        trace = unravel(benchmark_net, x, UnravelConfig(K=0.0, J=50, tol=1e-10, w0=-np.ones(20)))
        assert trace.converged_at is not None
        assert trace.converged_at <= 2
        assert trace.depth == trace.converged_at

    def test_tol_zero_runs_all_layers(self, benchmark_net):
        x = np.array([1.0, -1.0])
        trace = unravel(benchmark_net, x, UnravelConfig(K=0.0, J=50, tol=0.0, w0=-np.ones(20)))
        assert trace.depth == 50
        assert len(trace.residuals) == 51

    def test_gain_ordering_at_fixed_tolerance(self, benchmark_net):
        # crossing depth of the 1e-3 residual level orders the gains; the
        # contraction rate here is slow, so the budget is generous
        x = np.array([-200.0, -200.0])
        crossing = {}
        for k in (-0.9, 0.0, 0.2):
            trace = unravel(benchmark_net, x, UnravelConfig(K=k, J=25000, tol=1e-3))
            assert trace.converged_at is not None
            crossing[k] = trace.converged_at
        assert crossing[-0.9] < crossing[0.0] <= crossing[0.2]

    def test_unconstrained_degenerate(self):
        import mpcnet

        sys = mpcnet.LtiSystem(A=np.array([[0.9]]), B=np.array([[1.0]]))
        p = mpcnet.MpcProblem(
            sys=sys, N=2, Q=np.eye(1), R=np.eye(1), P=np.eye(1),
            G=np.zeros((0, 2)), S_u=np.zeros((0, 1)), w=np.zeros(0),
        )
        net = mpcnet.build_implicit(mpcnet.condense(p))
        trace = unravel(net, np.array([1.0]), UnravelConfig(J=10))
        assert trace.depth == 0 and trace.final_residual == 0.0


class TestExplicitNet:
    def test_layer_weight_construction(self, benchmark_net):
        cfg = UnravelConfig(K=-0.9, J=3)
        enet = export_explicit(benchmark_net, cfg)
        ImK = 1.9 * np.eye(20)
        assert np.allclose(enet.W_skip, -0.9 * np.eye(20))
        assert np.allclose(enet.W_act, ImK @ benchmark_net.W)
        assert np.allclose(enet.Y_layer, ImK @ benchmark_net.Y)
        assert np.allclose(enet.b_layer, ImK @ benchmark_net.b)

    def test_forward_matches_unravel_bitwise(self, benchmark_net):
        x = np.array([-123.0, 77.0])
        cfg = UnravelConfig(K=-0.9, J=400)
        enet = export_explicit(benchmark_net, cfg)
        trace = unravel(benchmark_net, x, cfg)
        states = enet.hidden_forward(x)
        assert len(states) == len(trace.iterates)
        for a, b in zip(states, trace.iterates):
            assert np.array_equal(a, b)
        u = enet.forward(x)
        expect = benchmark_net.W_f @ relu(trace.final) + benchmark_net.Y_f @ x
        assert np.array_equal(u, expect)

    def test_depth_zero_returns_start_readout(self, benchmark_net):
        x = np.array([5.0, -5.0])
        enet = export_explicit(benchmark_net, UnravelConfig(K=-0.9, J=0))
        u = enet.forward(x)
        expect = benchmark_net.W_f @ relu(np.ones(20)) + benchmark_net.Y_f @ x
        assert np.array_equal(u, expect)

    def test_accuracy_at_large_depth(self, benchmark_qp, benchmark_net):
        from mpcnet import eval_net

        x = np.array([-200.0, -200.0])
        enet = export_explicit(benchmark_net, UnravelConfig(K=-0.9, J=12000))
        u_exact = eval_net(benchmark_net, solve_via_lcp(benchmark_net, benchmark_qp, x).y, x)
        assert np.max(np.abs(enet.forward(x) - u_exact)) <= 1e-4


class TestErrorDynamics:
    def test_matrices(self, benchmark_net):
        A_err, B_err = error_dynamics_matrices(benchmark_net, -0.9)
        assert np.allclose(A_err, -0.9 * np.eye(20))
        assert np.allclose(B_err, 1.9 * benchmark_net.W)

    def test_contraction_predicts_convergence(self, benchmark_net):
        # spectral radius of A_err + B_err (all-active linearisation) never
        # exceeds one for the gains under test; K = 0 sits exactly on the
        # boundary because D has unit eigenvalues on the inactive subspace
        for k in (-0.9, 0.0, 0.2):
            A_err, B_err = error_dynamics_matrices(benchmark_net, k)
            rho = np.max(np.abs(np.linalg.eigvals(A_err + B_err)))
            assert rho <= 1.0 + 1e-12

    def test_sector_inequality_never_violated(self, benchmark_qp, benchmark_net):
        x = np.array([-200.0, -200.0])
        y = solve_via_lcp(benchmark_net, benchmark_qp, x).y
        worst = sector_check(benchmark_net, x, y, samples=500)
        assert worst >= -1e-9


def test_save_explicit_blocks(tmp_path, benchmark_net):
    enet = export_explicit(benchmark_net, UnravelConfig(K=-0.9, J=7))
    path = tmp_path / "enet.txt"
    save_explicit(enet, path)
    header, blocks = read_blocks(path)
    assert header["J"] == 7 and header["n_c"] == 20
    assert np.array_equal(blocks["D"], enet.D)
    assert np.array_equal(blocks["K"], enet.K)
    assert np.array_equal(blocks["w0"].reshape(-1), enet.w0)
