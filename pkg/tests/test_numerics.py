import numpy as np
import pytest

from panvein import (
    BracketError,
    Grid,
    IntegrationFailureError,
    InvalidArgumentError,
    NonConvergenceError,
    exp_convolve,
    find_root_bracketed,
    mat_exp,
    newton_nd,
    quad_trapz,
    rk4_step,
)


def taylor_expm(a, t, terms=50):
    """Independent truncated-series oracle for exp(a t)."""
    m = np.asarray(a, dtype=float) * t
    acc = np.eye(m.shape[0])
    term = np.eye(m.shape[0])
    for k in range(1, terms + 1):
        term = term @ m / k
        acc = acc + term
    return acc


class TestMatExp:
    def test_t_zero_is_identity(self):
        a = np.array([[3.0, -2.0], [1.0, 0.5]])
        np.testing.assert_allclose(mat_exp(a, 0.0), np.eye(2), atol=1e-15)

    def test_diagonal(self):
        got = mat_exp(np.diag([-1.0, -2.0]), 1.0)
        np.testing.assert_allclose(got, np.diag([np.exp(-1.0), np.exp(-2.0)]),
                                   rtol=1e-13)

    def test_matches_taylor_oracle(self):
        rng = np.random.default_rng(11)
        for _ in range(25):
            a = rng.uniform(-1.0, 1.0, size=(2, 2))
            np.testing.assert_allclose(mat_exp(a, 0.7), taylor_expm(a, 0.7),
                                       rtol=1e-10, atol=1e-12)

    def test_4x4(self):
        rng = np.random.default_rng(5)
        a = rng.uniform(-1.0, 1.0, size=(4, 4))
        np.testing.assert_allclose(mat_exp(a, 0.9), taylor_expm(a, 0.9),
                                   rtol=1e-10, atol=1e-12)

    def test_semigroup_property(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            a = rng.uniform(-1.0, 1.0, size=(2, 2))
            s, t = rng.uniform(0.0, 2.0, size=2)
            np.testing.assert_allclose(
                mat_exp(a, s + t), mat_exp(a, s) @ mat_exp(a, t),
                rtol=1e-10, atol=1e-10)

    def test_non_finite_rejected(self):
        with pytest.raises(InvalidArgumentError):
            mat_exp(np.array([[np.nan, 0.0], [0.0, 1.0]]))
        with pytest.raises(InvalidArgumentError):
            mat_exp(np.eye(2), np.inf)


class TestRk4:
    def test_zero_field(self):
        u = np.array([1.5, -2.0])
        np.testing.assert_array_equal(rk4_step(lambda x, u: 0.0 * u, 0.0, u, 0.3), u)

    def test_scalar_exponential(self):
        got = rk4_step(lambda x, u: -u, 0.0, np.array([1.0]), 0.1)
        assert abs(got[0] - np.exp(-0.1)) < 1e-7

    def test_linear_system_matches_mat_exp(self):
        b = np.array([[-0.003, -0.0002], [0.22, -0.04]])
        u = np.array([1.0, 2.0])
        got = rk4_step(lambda x, v: b @ v, 0.0, u, 0.01)
        np.testing.assert_allclose(got, mat_exp(b, 0.01) @ u, atol=1e-8)

    def test_global_fourth_order(self):
        # integrate u' = B u over [0, 1] with n and 2n steps
        b = np.array([[-1.0, 0.7], [0.3, -2.0]])
        u0 = np.array([1.0, -1.0])
        exact = mat_exp(b, 1.0) @ u0

        def march(n):
            u = u0.copy()
            h = 1.0 / n
            for i in range(n):
                u = rk4_step(lambda x, v: b @ v, i * h, u, h)
            return np.linalg.norm(u - exact)

        e1, e2 = march(32), march(64)
        order = np.log2(e1 / e2)
        assert 3.7 <= order <= 4.3

    def test_nan_propagates_with_location(self):
        def bad(x, u):
            return np.array([np.inf]) * u

        with pytest.raises(IntegrationFailureError) as err:
            rk4_step(bad, 1.25, np.array([1.0]), 0.1)
        assert err.value.location == 1.25


class TestQuadTrapz:
    def test_constant(self):
        values = np.ones(16)
        assert quad_trapz(values, 1.0) == 15.0

    def test_exact_for_linear(self):
        xs = np.linspace(0.0, 1.0, 101)
        assert quad_trapz(xs, xs[1] - xs[0]) == pytest.approx(0.5, abs=1e-15)

    def test_second_order_on_quadratic(self):
        def err(n):
            xs = np.linspace(0.0, 1.0, n + 1)
            return abs(quad_trapz(xs ** 2, 1.0 / n) - 1.0 / 3.0)

        assert err(100) / err(200) == pytest.approx(4.0, rel=1e-3)

    def test_order_on_smooth_nonlinear(self):
        def err(n):
            xs = np.linspace(0.0, 2.0, n + 1)
            exact = 1.0 - np.cos(2.0)
            return abs(quad_trapz(np.sin(xs), 2.0 / n) - exact)

        order = np.log2(err(64) / err(128))
        assert 1.9 <= order <= 2.1

    def test_too_few_values(self):
        with pytest.raises(InvalidArgumentError):
            quad_trapz([1.0], 0.1)


class TestRootFinding:
    def test_linear(self):
        assert find_root_bracketed(lambda x: x - 1.0, 0.0, 2.0) == pytest.approx(1.0)

    def test_sqrt2(self):
        root = find_root_bracketed(lambda x: x * x - 2.0, 0.0, 2.0, tol=1e-12)
        assert abs(root - np.sqrt(2.0)) < 1e-11

    def test_equilibrium_cubic_vs_plain_bisection(self):
        # scalar equilibrium equation with the published parameter set
        s, a, d_i, g_in, b = 15.0, 1e-5, 0.04, 0.06, 9.0

        def cubic(G):
            return s * a * G ** 3 - d_i * g_in * (b * b + G * G)

        lo, hi = 0.0, 320.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if cubic(lo) * cubic(mid) <= 0.0:
                hi = mid
            else:
                lo = mid
        oracle = 0.5 * (lo + hi)
        got = find_root_bracketed(cubic, 0.0, 320.0, tol=1e-12)
        assert got == pytest.approx(oracle, abs=1e-9)
        assert got == pytest.approx(19.4, abs=0.1)

    def test_no_sign_change(self):
        with pytest.raises(BracketError):
            find_root_bracketed(lambda x: x * x + 1.0, -1.0, 1.0)


class TestNewton:
    def test_identity_residual(self):
        got = newton_nd(lambda x: x, np.array([3.0, -4.0]))
        np.testing.assert_allclose(got, 0.0, atol=1e-10)

    def test_affine(self):
        iters = []
        got = newton_nd(lambda x: np.array([x[0] - 1.0, x[1] + 2.0]),
                        np.array([10.0, 10.0]),
                        callback=lambda k, x, n: iters.append(k))
        np.testing.assert_allclose(got, [1.0, -2.0], atol=1e-9)
        assert max(iters) <= 2

    def test_nonconvergence_carries_residual(self):
        with pytest.raises(NonConvergenceError) as err:
            newton_nd(lambda x: np.array([x[0] ** 2 + 1.0]), np.array([0.5]),
                      max_iter=5)
        assert err.value.residual_norm is not None


class TestGrid:
    def test_uniform(self):
        grid = Grid.uniform(15.0, 1501)
        assert grid.n_cells == 1500
        assert grid.h == pytest.approx(0.01)
        assert grid.nodes[0] == 0.0 and grid.nodes[-1] == 15.0
        assert np.all(np.diff(grid.nodes) > 0)

    def test_minimum_size(self):
        with pytest.raises(InvalidArgumentError):
            Grid.uniform(1.0, 2)

    def test_refined(self):
        grid = Grid.uniform(10.0, 11)
        fine = grid.refined()
        assert fine.n_cells == 20
        assert fine.length == grid.length


class TestExpConvolve:
    def test_against_dense_quadrature(self):
        # brute-force oracle: fine trapezoid of exp(b(x-y)) g(y) per target x
        b = np.array([[-0.4, 0.1], [0.2, -1.0]])
        n = 33
        xs = np.linspace(0.0, 2.0, n)
        g = np.column_stack([np.sin(xs), np.cos(2 * xs)])
        got = exp_convolve(b, xs[1] - xs[0], g)
        for idx in (8, 20, n - 1):
            fine = np.linspace(0.0, xs[idx], 4001)
            gf = np.column_stack([np.sin(fine), np.cos(2 * fine)])
            vals = np.array([mat_exp(b, xs[idx] - y) @ gv
                             for y, gv in zip(fine, gf)])
            oracle = np.trapezoid(vals, fine, axis=0)
            np.testing.assert_allclose(got[idx], oracle, atol=2e-3)

    def test_exact_cells_improve_on_trapezoid(self):
        b = np.array([[-2.0, 0.0], [0.0, -3.0]])
        xs = np.linspace(0.0, 2.0, 41)
        g = np.column_stack([xs, np.ones_like(xs)])          # linear data: exact
        got = exp_convolve(b, xs[1] - xs[0], g, exact_cells=True)
        # closed form for int_0^x e^{-2(x-y)} y dy
        x = xs[-1]
        exact0 = (x * (1.0 - np.exp(-2.0 * x)) / 2.0
                  - (1.0 - np.exp(-2.0 * x) * (1.0 + 2.0 * x)) / 4.0)
        assert got[-1][0] == pytest.approx(exact0, abs=1e-12)
