import numpy as np
import pytest

from mpcnet import (
    CondensedQp,
    LtiSystem,
    MpcProblem,
    build_implicit,
    condense,
    eval_net,
    first_input,
    load_implicit,
    relu,
    save_implicit,
    solve_fixed_point,
    solve_qp_via_kkt,
    solve_via_lcp,
)


class TestRelu:
    def test_mixed(self):
        assert np.allclose(relu([-1.0, 2.0, 0.0]), [0.0, 2.0, 0.0])

    def test_all_negative(self):
        assert np.allclose(relu([-3.0, -0.5]), 0.0)

    def test_identity_on_nonnegative(self):
        v = np.array([0.0, 1.0, 2.5])
        assert np.allclose(relu(v), v)

    def test_complementarity_identity(self):
        # relu(s)' T (s - relu(s)) vanishes for any diagonal T > 0
        rng = np.random.default_rng(30)
        for _ in range(1000):
            s = rng.uniform(-5.0, 5.0, size=8)
            T = rng.uniform(0.1, 10.0, size=8)
            val = relu(s) @ (T * (s - relu(s)))
            assert abs(val) <= 1e-12 * (1.0 + np.max(np.abs(s)) ** 2 * np.max(T))


class TestBuild:
    def test_benchmark_shapes_and_spectrum(self, benchmark_net):
        net = benchmark_net
        assert net.W.shape == (20, 20)
        assert np.abs(net.W - net.W.T).max() <= 1e-9
        eigs = np.linalg.eigvalsh(net.W)
        assert eigs.max() <= 1.0 + 1e-9

    def test_hidden_input_map_is_negated_s(self, benchmark_qp, benchmark_net):
        qp = benchmark_qp
        expect = -(qp.S_u + qp.G @ qp.h_inv(qp.F))
        assert np.abs(benchmark_net.Y - expect).max() <= 1e-9
        assert np.allclose(benchmark_net.b, -qp.w)

    def test_output_maps(self, benchmark_qp, benchmark_net):
        assert np.abs(benchmark_net.W_f + benchmark_qp.h_inv(benchmark_qp.G.T)).max() <= 1e-12
        assert np.abs(benchmark_net.Y_f + benchmark_qp.h_inv(benchmark_qp.F)).max() <= 1e-12

    def test_unconstrained_degenerate_branch(self):
        sys = LtiSystem(A=np.array([[0.9]]), B=np.array([[1.0]]))
        p = MpcProblem(
            sys=sys, N=3, Q=np.eye(1), R=np.eye(1), P=np.eye(1),
            G=np.zeros((0, 3)), S_u=np.zeros((0, 1)), w=np.zeros(0),
        )
        qp = condense(p)
        net = build_implicit(qp)
        assert net.n_c == 0 and net.W.shape == (0, 0)
        x = np.array([2.0])
        res = solve_via_lcp(net, qp, x)
        u = eval_net(net, res.y, x)
        assert np.allclose(u, -qp.h_inv(qp.F @ x))


class TestFixedPoint:
    def test_exact_start_is_stationary(self, benchmark_qp, benchmark_net):
        x = np.array([-200.0, -200.0])
        y = solve_via_lcp(benchmark_net, benchmark_qp, x).y
        res = solve_fixed_point(benchmark_net, x, K=-0.9, w0=y, tol=1e-9)
        assert res.iterations == 0
        assert res.residual <= 1e-9

    def test_interior_one_step_with_zero_gain(self, benchmark_net):
        x = np.array([1.0, -1.0])  # strictly feasible: S x + w > 0
        zeta = benchmark_net.hidden_rhs(x)
        assert np.min(-zeta) > 0
        w0 = -np.abs(np.linspace(0.5, 2.0, 20))
        res = solve_fixed_point(benchmark_net, x, K=0.0, w0=w0, tol=1e-12, max_iters=2)
        assert res.iterations == 1
        assert np.allclose(res.y, zeta)

    def test_gain_comparison_on_benchmark(self, benchmark_net):
        x = np.array([-200.0, -200.0])
        iters = {}
        for k in (-0.9, 0.0, 0.2):
            res = solve_fixed_point(
                benchmark_net, x, K=k, w0=np.ones(20), tol=1e-8, max_iters=30000
            )
            assert res.converged
            iters[k] = res.iterations
        assert iters[-0.9] < iters[0.0] <= iters[0.2]


class TestSolveViaLcp:
    def test_interior(self, benchmark_qp, benchmark_net):
        x = np.array([1.0, -1.0])
        res = solve_via_lcp(benchmark_net, benchmark_qp, x)
        assert np.allclose(res.y, benchmark_net.hidden_rhs(x))
        assert np.max(relu(res.y)) == 0.0

    def test_matches_fixed_point(self, benchmark_qp, benchmark_net):
        x = np.array([-200.0, -200.0])
        a = solve_via_lcp(benchmark_net, benchmark_qp, x)
        b = solve_fixed_point(benchmark_net, x, K=-0.9, w0=np.ones(20), tol=1e-12, max_iters=30000)
        assert np.max(np.abs(a.y - b.y)) <= 1e-6
        assert a.residual <= 1e-7

    def test_scalar_instance_sign_split(self):
        # single bound u <= 1 on a one-step problem: for x pushing u past the
        # bound the hidden state is the positive multiplier, otherwise the
        # negated slack
        sys = LtiSystem(A=np.array([[1.0]]), B=np.array([[1.0]]))
        p = MpcProblem(
            sys=sys, N=1, Q=np.eye(1), R=np.eye(1), P=np.eye(1),
            G=np.array([[1.0]]), S_u=np.zeros((1, 1)), w=np.array([1.0]),
        )
        qp = condense(p)
        net = build_implicit(qp)
        x = np.array([-10.0])  # unconstrained u = 5 > 1, constraint active
        res = solve_via_lcp(net, qp, x)
        u = eval_net(net, res.y, x)
        assert u[0] == pytest.approx(1.0, abs=1e-9)
        assert res.y[0] > 0  # hidden state = multiplier
        x = np.array([1.0])  # u stays interior
        res = solve_via_lcp(net, qp, x)
        assert res.y[0] < 0  # hidden state = -slack


class TestEvalNet:
    def test_negative_hidden_state_gives_linear_law(self, benchmark_net):
        x = np.array([3.0, 4.0])
        y = -np.ones(20)
        assert np.allclose(eval_net(benchmark_net, y, x), benchmark_net.Y_f @ x)

    def test_origin(self, benchmark_qp, benchmark_net):
        x = np.zeros(2)
        res = solve_via_lcp(benchmark_net, benchmark_qp, x)
        assert np.allclose(eval_net(benchmark_net, res.y, x), 0.0)

    def test_grid_equivalence_with_oracle(self, benchmark_qp, benchmark_net):
        axis = np.linspace(-300.0, 300.0, 9)
        for x1 in axis:
            for x2 in axis:
                x = np.array([x1, x2])
                res = solve_via_lcp(benchmark_net, benchmark_qp, x)
                u_net = eval_net(benchmark_net, res.y, x)
                u_ref = solve_qp_via_kkt(benchmark_qp, x)
                assert np.max(np.abs(u_net - u_ref)) <= 1e-6

    def test_piecewise_affinity_inside_region(self, benchmark_qp, benchmark_net):
        # second finite difference of x -> u(x) vanishes at region-interior points
        def u_of(x):
            res = solve_via_lcp(benchmark_net, benchmark_qp, x)
            return first_input(eval_net(benchmark_net, res.y, x), 1)[0]

        h = 1e-3
        for x in (np.array([1.0, 1.0]), np.array([-180.0, -190.0]), np.array([120.0, 40.0])):
            for d in (np.array([1.0, 0.0]), np.array([0.0, 1.0])):
                second = u_of(x + h * d) - 2.0 * u_of(x) + u_of(x - h * d)
                assert abs(second) <= 1e-6


def test_export_round_trip(tmp_path, benchmark_net):
    path = tmp_path / "net.txt"
    save_implicit(benchmark_net, path)
    loaded = load_implicit(path)
    for name in ("W", "Y", "b", "W_f", "Y_f"):
        assert np.array_equal(getattr(loaded, name), getattr(benchmark_net, name))
    assert (loaded.n, loaded.m, loaded.N, loaded.n_c) == (2, 1, 10, 20)
