import numpy as np
import pytest

from compgrad import (
    ConfigError,
    DimensionError,
    IteratePoint,
    SolveError,
    SolveSettings,
    bregman_divergence,
    competitive_gradient,
    make_bilinear,
    make_quadratic_family,
    make_random_bilinear,
    proximal_map,
)


def pt(x, y):
    return IteratePoint(np.atleast_1d(x), np.atleast_1d(y))


class TestCompetitiveGradient:
    def test_alpha_zero_is_plain_game_gradient_exactly(self):
        p = make_random_bilinear(3, 4, seed=2)
        rng = np.random.default_rng(5)
        for _ in range(10):
            z = IteratePoint(rng.standard_normal(3), rng.standard_normal(4))
            fx, fy = p.grad(z)
            g = competitive_gradient(p, z, 0.0)
            assert np.array_equal(g.gx, fx) and np.array_equal(g.gy, -fy)
            assert g.residual == 0.0

    def test_hand_solved_scalar_bilinear(self):
        p = make_bilinear([[1.0]])
        g = competitive_gradient(p, pt(1.0, 1.0), 1.0)
        assert g.gx[0] == pytest.approx(1.0, abs=1e-15)
        assert g.gy[0] == pytest.approx(0.0, abs=1e-15)

    def test_quadratic_family_inner_product_closed_form(self):
        # <g_alpha(z), z> = (k + alpha) / (1 + alpha^2) * ||z||^2 for f_k
        rng = np.random.default_rng(9)
        for k in (-2.0, -0.5, 0.0, 2.0):
            p = make_quadratic_family(k)
            for alpha in (0.0, 0.5, 2.0):
                z = pt(rng.uniform(-3, 3), rng.uniform(-3, 3))
                g = competitive_gradient(p, z, alpha)
                expected = (k + alpha) / (1 + alpha**2) * z.norm() ** 2
                assert float(g.vector @ z.vector) == pytest.approx(expected, abs=1e-12)

    def test_zero_at_stationary_point(self):
        p = make_random_bilinear(2, 2, seed=3)
        g = competitive_gradient(p, pt([0.0, 0.0], [0.0, 0.0]), 1.5)
        assert g.norm() == 0.0

    def test_block_system_residual_identity(self):
        # applying [[I, aD], [-aD^T, I]] to (gx, gy) recovers (df/dx, -df/dy)
        p = make_random_bilinear(4, 6, seed=12)
        rng = np.random.default_rng(1)
        z = IteratePoint(rng.standard_normal(4), rng.standard_normal(6))
        alpha = 0.7
        fx, fy = p.grad(z)
        for method in ("dense", "matrix_free"):
            g = competitive_gradient(p, z, alpha, SolveSettings(method=method))
            rx = g.gx + alpha * (p.A @ g.gy) - fx
            ry = g.gy - alpha * (p.A.T @ g.gx) + fy
            defect = np.linalg.norm(np.concatenate([rx, ry]))
            assert defect <= 1e-9 * max(1.0, np.linalg.norm(np.concatenate([fx, fy])))
            assert g.residual <= 1e-10
            assert g.method == method

    def test_dense_and_matrix_free_agree(self):
        p = make_random_bilinear(6, 9, seed=21)
        rng = np.random.default_rng(4)
        tol = 1e-10
        for alpha in (0.3, 1.3, 8.0):
            z = IteratePoint(rng.standard_normal(6), rng.standard_normal(9))
            gd = competitive_gradient(p, z, alpha, SolveSettings(method="dense"))
            gc = competitive_gradient(p, z, alpha, SolveSettings(method="matrix_free", cg_tol=tol))
            assert np.linalg.norm(gd.vector - gc.vector) <= 10 * tol * np.linalg.norm(gd.vector)

    def test_auto_method_picks_dense_for_small_problems(self):
        p = make_random_bilinear(2, 2, seed=0)
        g = competitive_gradient(p, pt([1.0, 0.0], [0.0, 1.0]), 0.5)
        assert g.method == "dense"

    def test_cg_starved_of_iterations_raises_with_residual(self):
        p = make_random_bilinear(12, 12, seed=5)
        rng = np.random.default_rng(6)
        z = IteratePoint(rng.standard_normal(12), rng.standard_normal(12))
        settings = SolveSettings(method="matrix_free", cg_tol=1e-14, cg_max_iters=1)
        with pytest.raises(SolveError) as err:
            competitive_gradient(p, z, 5.0, settings)
        assert err.value.residual > 1e-14

    def test_inverse_ordering_identity_spot_check(self):
        # D^T (I + a^2 D D^T)^-1 == (I + a^2 D^T D)^-1 D^T
        rng = np.random.default_rng(17)
        D = rng.standard_normal((5, 3))
        for alpha in (0.1, 1.0, 10.0):
            a2 = alpha**2
            lhs = D.T @ np.linalg.inv(np.eye(5) + a2 * (D @ D.T))
            rhs = np.linalg.inv(np.eye(3) + a2 * (D.T @ D)) @ D.T
            assert np.linalg.norm(lhs - rhs) <= 1e-10 * np.linalg.norm(lhs)

    def test_rejects_nonfinite_alpha(self):
        p = make_bilinear([[1.0]])
        with pytest.raises(ConfigError):
            competitive_gradient(p, pt(1.0, 1.0), float("nan"))


class TestBregman:
    def test_euclidean_value(self):
        assert bregman_divergence(np.array([3.0, 4.0]), np.zeros(2)) == 12.5

    def test_nonnegative_and_zero_at_equal_points(self):
        rng = np.random.default_rng(8)
        for _ in range(50):
            a = rng.standard_normal(4)
            b = rng.standard_normal(4)
            assert bregman_divergence(a, b) >= 0.0
            assert bregman_divergence(a, a) == 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            bregman_divergence(np.zeros(2), np.zeros(3))

    def test_unknown_potential(self):
        with pytest.raises(ConfigError):
            bregman_divergence(np.zeros(2), np.zeros(2), potential="entropy")


class TestProximalMap:
    def test_euclidean_translation(self):
        res = proximal_map(pt(1.0, 1.0), np.array([-0.1, 0.1]))
        assert res.point.x[0] == pytest.approx(0.9)
        assert res.point.y[0] == pytest.approx(1.1)
        assert res.clamped is False

    def test_clamps_to_box_and_flags(self):
        box = np.array([[-1.0, 1.0], [-1.0, 1.0]])
        res = proximal_map(pt(1.0, 1.0), np.array([0.5, -0.2]), box=box)
        assert res.clamped is True
        assert res.point.x[0] == 1.0 and res.point.y[0] == pytest.approx(0.8)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            proximal_map(pt(1.0, 1.0), np.array([1.0, 2.0, 3.0]))
