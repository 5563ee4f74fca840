import numpy as np
import pytest

from compgrad import (
    COHERENT_NONSTRICT,
    NULL_COHERENT,
    STRICTLY_COHERENT,
    VIOLATED,
    ConfigError,
    DimensionError,
    IteratePoint,
    UnsupportedProblemError,
    discrete_rate_report,
    linear_step_matrix,
    make_bilinear,
    make_finite_difference_oracle,
    make_quadratic_family,
    make_random_bilinear,
    mvi_probe,
    ocgo_param_bounds,
    rate_continuous,
    rate_discrete,
    spectral_summary,
    svi_residual,
)
from compgrad.problems import LipschitzConstants


def pt(x, y):
    return IteratePoint(np.atleast_1d(x), np.atleast_1d(y))


XY = make_bilinear([[1.0]])


class TestSpectralSummary:
    def test_quadratic_family(self):
        s = spectral_summary(make_quadratic_family(2.0))
        assert (s.lam_xx_min, s.lam_xx_max) == (2.0, 2.0)
        assert (s.lam_yy_min, s.lam_yy_max) == (-2.0, -2.0)
        assert (s.lam_xy_min, s.lam_xy_max) == (1.0, 1.0)
        assert (s.lam_yx_min, s.lam_yx_max) == (1.0, 1.0)
        assert s.lam_bar_1 == 2.0 and s.lam_bar_2 == 2.0

    def test_diagonal_coupling_squares_singular_values(self):
        s = spectral_summary(make_bilinear(np.diag([1.0, 2.0])))
        assert (s.lam_xy_min, s.lam_xy_max) == (1.0, 4.0)
        assert s.lam_xx_min == s.lam_xx_max == 0.0

    def test_rectangular_coupling_pads_wide_side_with_zero(self):
        s = spectral_summary(make_random_bilinear(4, 5, seed=7))
        assert s.lam_xy_min > 0.0          # D D^T is 4x4, full rank
        assert s.lam_yx_min == 0.0         # D^T D is 5x5, rank 4
        assert s.lam_xy_max == s.lam_yx_max

    def test_probe_point_required_for_varying_hessian(self):
        fd = make_finite_difference_oracle(lambda x, y: float(x[0] ** 2 * y[0]), (1, 1))
        with pytest.raises(UnsupportedProblemError):
            spectral_summary(fd)
        s = spectral_summary(fd, pt(1.0, 1.0))
        assert s.lam_xx_max == pytest.approx(2.0, abs=1e-3)


class TestRates:
    def test_continuous_scalar_bilinear(self):
        assert rate_continuous(spectral_summary(XY), alpha=1.0, beta=1.0) == pytest.approx(0.5)

    def test_continuous_strongly_convex_concave(self):
        s = spectral_summary(make_quadratic_family(2.0))
        assert rate_continuous(s, alpha=0.0, beta=1.0) == pytest.approx(4.0)

    def test_continuous_rejects_bad_arguments(self):
        s = spectral_summary(XY)
        with pytest.raises(ConfigError):
            rate_continuous(s, alpha=-0.1)
        with pytest.raises(ConfigError):
            rate_continuous(s, alpha=0.5, beta=0.0)

    def test_discrete_scalar_bilinear_frozen_values(self):
        r = discrete_rate_report(spectral_summary(XY), alpha=1.0, eta=0.1)
        assert r.k == pytest.approx(-0.17375, abs=1e-12)
        assert r.c == -r.k
        assert r.lam == pytest.approx(0.086875, abs=1e-12)
        assert rate_discrete(spectral_summary(XY), 1.0, 0.1) == r.lam

    def test_discrete_alpha_zero_fallback(self):
        s = spectral_summary(make_quadratic_family(2.0))
        for eta in (0.01, 0.1, 0.2):
            r = discrete_rate_report(s, alpha=0.0, eta=eta)
            assert r.lam == 4.0 * eta
            assert r.k == 0.0 and r.c == 0.0

    def test_discrete_rate_is_sound_against_exact_step_map(self):
        # whenever the certified lam is usable, the optimistic update's
        # squared spectral radius must contract at least that fast
        problems = [
            XY,
            make_bilinear(np.diag([1.0, 2.0])),
            make_random_bilinear(3, 3, seed=11),
            make_random_bilinear(4, 5, seed=12),
            make_quadratic_family(0.05),
            make_quadratic_family(0.2),
        ]
        checked = 0
        violations = []
        for p in problems:
            s = spectral_summary(p)
            for alpha in (0.1, 0.3, 1.0):
                for eta in (0.01, 0.05, 0.1):
                    lam = rate_discrete(s, alpha, eta)
                    if not (0.0 < lam <= 1.0):
                        continue
                    checked += 1
                    rho = linear_step_matrix(p, "ocgo", alpha, eta).spectral_radius
                    if rho**2 > 1.0 - lam + 1e-9:
                        violations.append((p, alpha, eta, lam, rho))
        assert checked >= 3
        assert violations == []


class TestOcgoBounds:
    def test_no_coupling_leaves_alpha_unbounded(self):
        b = ocgo_param_bounds(LipschitzConstants(L=0.0, L_prime=1.0, L_xy=0.0))
        assert b.alpha_unbounded
        assert b.alpha_sq_max == np.inf
        assert b.eta_max(0.5) == (pytest.approx(np.sqrt(3.0) / 2.0), True)

    def test_alpha_zero_step_bound_is_inverse_smoothness(self):
        for lp in (0.5, 1.0, 4.0):
            b = ocgo_param_bounds(LipschitzConstants(L=2.0, L_prime=lp, L_xy=1.0))
            v, ok = b.eta_max(0.0)
            assert ok and v == pytest.approx(1.0 / lp)

    def test_coupled_alpha_budget(self):
        b = ocgo_param_bounds(LipschitzConstants(L=2.0, L_prime=1.0, L_xy=0.5))
        assert not b.alpha_unbounded
        assert b.alpha_sq_max == pytest.approx((np.sqrt(5.0) - 1.0) / 2.0)

    def test_negative_radicand_certifies_nothing(self):
        b = ocgo_param_bounds(LipschitzConstants(L=2.0, L_prime=1.0, L_xy=2.0))
        assert b.eta_max(1.0) == (0.0, False)

    def test_step_bound_shrinks_with_alpha(self):
        b = ocgo_param_bounds(LipschitzConstants(L=2.0, L_prime=1.0, L_xy=0.5))
        values = [b.eta_max(a).value for a in (0.0, 0.2, 0.4, 0.6)]
        assert all(u > v for u, v in zip(values, values[1:]))
        assert all(v > 0 for v in values)

    def test_rejects_degenerate_constants(self):
        with pytest.raises(ConfigError):
            ocgo_param_bounds(LipschitzConstants(L=1.0, L_prime=0.0, L_xy=1.0))
        with pytest.raises(ConfigError):
            ocgo_param_bounds(LipschitzConstants(L=-1.0, L_prime=1.0, L_xy=1.0))


class TestCoherenceProbe:
    def test_plain_gradient_on_bilinear_is_null(self):
        r = mvi_probe(XY, pt(0.0, 0.0), alpha=0.0, samples=500, seed=1)
        assert r.classification == NULL_COHERENT
        assert r.max_abs_inner <= r.tol

    def test_interaction_term_restores_strictness(self):
        r = mvi_probe(XY, pt(0.0, 0.0), alpha=0.5, samples=500, seed=1)
        assert r.classification == STRICTLY_COHERENT
        assert r.min_inner > 0

    def test_concave_convex_family_violates(self):
        r = mvi_probe(make_quadratic_family(-2.0), pt(0.0, 0.0), alpha=1.0,
                      samples=500, seed=1)
        assert r.classification == VIOLATED
        assert r.min_inner < -r.tol

    def test_cancellation_alpha_is_null(self):
        r = mvi_probe(make_quadratic_family(2.0), pt(0.0, 0.0), alpha=-2.0,
                      samples=500, seed=1)
        assert r.classification == NULL_COHERENT

    def test_inner_products_scale_with_squared_distance(self):
        # closed form: <g_alpha(z), z> = (k + alpha) / (1 + alpha^2) * ||z||^2
        for k, alpha in [(2.0, 0.5), (-0.5, 2.0), (0.0, 1.0)]:
            r = mvi_probe(make_quadratic_family(k), pt(0.0, 0.0), alpha=alpha,
                          samples=200, seed=3)
            ratio = (k + alpha) / (1 + alpha**2)
            assert np.allclose(r.inners, ratio * r.dist_sq, atol=1e-9)

    def test_argmin_attains_min_and_avoids_z_star(self):
        z_star = pt(0.5, -0.25)
        r = mvi_probe(make_quadratic_family(2.0), z_star, alpha=0.3,
                      samples=300, seed=5)
        from compgrad import competitive_gradient

        g = competitive_gradient(make_quadratic_family(2.0), r.argmin, 0.3)
        inner = g.vector @ (r.argmin.vector - z_star.vector)
        assert inner == pytest.approx(r.min_inner, rel=1e-12)
        assert np.linalg.norm(r.argmin.vector - z_star.vector) > 1e-6
        assert (r.dist_sq > 0).all()
        assert r.failed_samples == 0

    def test_json_payload_keys(self):
        r = mvi_probe(XY, pt(0.0, 0.0), alpha=0.5, samples=50, seed=0)
        d = r.to_json_dict()
        assert set(d) == {"alpha", "min_inner", "argmin", "classification",
                          "samples", "seed", "region"}
        assert d["argmin"] == r.argmin.vector.tolist()
        assert d["classification"] == STRICTLY_COHERENT

    def test_region_shape_is_validated(self):
        with pytest.raises(DimensionError):
            mvi_probe(XY, pt(0.0, 0.0), alpha=0.5, region=[[-1.0, 1.0]])

    def test_nonstrict_boundary_classification(self):
        # min_inner lands inside [-tol, tol] without the whole sample being null
        r = mvi_probe(XY, pt(0.0, 0.0), alpha=0.5, samples=100, seed=2, tol=10.0)
        assert r.classification in (COHERENT_NONSTRICT, NULL_COHERENT)


class TestSviResidual:
    def test_linear_objective_exact_corner_minimum(self):
        region = [[-1.0, 1.0], [-1.0, 1.0]]
        r = svi_residual(XY, pt(1.0, 0.0), alpha=0.0, region=region,
                         samples=1000, seed=0)
        assert r.box_min == -1.0
        assert -1.0 <= r.min_inner <= -0.9
        assert r.g_alpha_norm == 1.0

    def test_sample_min_never_beats_exact_box_min(self):
        p = make_random_bilinear(3, 2, seed=9)
        z_star = IteratePoint(np.array([0.2, -0.1, 0.4]), np.array([0.3, 0.0]))
        r = svi_residual(p, z_star, alpha=0.7, samples=2000, seed=4)
        assert r.min_inner >= r.box_min


class TestLinearStepMap:
    def test_plain_descent_ascent_matrix(self):
        m = linear_step_matrix(XY, "gda", alpha=0.7, eta=0.1)
        assert np.array_equal(m.matrix, np.array([[1.0, -0.1], [0.1, 1.0]]))
        assert m.alpha == 0.0  # ignored for gda
        assert m.spectral_radius == pytest.approx(np.sqrt(1.01))

    def test_preconditioned_matrix_and_radius(self):
        m = linear_step_matrix(XY, "cgo", alpha=1.0, eta=0.2)
        expected = np.eye(2) - 0.1 * np.array([[1.0, 1.0], [-1.0, 1.0]])
        assert np.allclose(m.matrix, expected, atol=1e-15)
        assert m.spectral_radius**2 == pytest.approx(0.82)

    def test_cgd_ties_alpha_to_eta(self):
        a = linear_step_matrix(XY, "cgd", alpha=123.0, eta=0.2)
        b = linear_step_matrix(XY, "cgo", alpha=0.2, eta=0.2)
        assert a.alpha == 0.2
        assert np.allclose(a.matrix, b.matrix, atol=1e-15)

    def test_two_stage_map_is_quadratic_in_the_generator(self):
        p = make_quadratic_family(2.0)
        single = linear_step_matrix(p, "cgo", alpha=0.3, eta=0.05).matrix
        double = linear_step_matrix(p, "ocgo", alpha=0.3, eta=0.05).matrix
        A = (np.eye(2) - single) / 0.05
        assert np.allclose(double, np.eye(2) - 0.05 * A + 0.0025 * (A @ A), atol=1e-14)

    def test_optimism_helps_on_bilinear(self):
        rho_plain = linear_step_matrix(XY, "gda", 0.0, 0.1).spectral_radius
        rho_opt = linear_step_matrix(XY, "omda", 0.0, 0.1).spectral_radius
        assert rho_opt < 1.0 < rho_plain

    def test_requires_constant_hessian(self):
        fd = make_finite_difference_oracle(lambda x, y: float(x[0] ** 3 * y[0]), (1, 1))
        with pytest.raises(UnsupportedProblemError):
            linear_step_matrix(fd, "gda", 0.0, 0.1)

    def test_rejects_unknown_algorithm(self):
        with pytest.raises(ConfigError):
            linear_step_matrix(XY, "newton", 0.0, 0.1)
