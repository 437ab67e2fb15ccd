import numpy as np
import pytest

from kofilter import (
    Equicorrelated,
    build_knockoffs,
    frpp_estimate,
    frpp_perturb,
    lasso_augmented,
    ols_augmented,
    shift_estimates,
)
from kofilter.errors import InvalidEpsilon, NotPositiveSemiDefinite
from kofilter.estimators import EstimatePair, _kkt_residual, _laplace_inverse_cdf
from kofilter._kernels import cd_gram_sweeps

from conftest import make_design
from oracles import gauss_jordan_solve, ista_lasso, lasso_objective
from test_knockoff import pair_swap_columns


def random_flips(rng, p):
    flips = np.flatnonzero(rng.random(p) < 0.5)
    return flips if flips.size else np.array([0])


def swapped_model_estimates(m, y, flips, fit):
    """Fit on the design with columns (i, i+p) swapped for i in flips.

    The augmented Gram is unchanged under pair swaps, so this is the
    'rebuild with swapped columns' route of the swap contract.
    """
    aug = pair_swap_columns(m.augmented(), m.p, flips)
    products = aug.T @ y
    return fit(products)


class TestOls:
    def test_zero_response(self, small_model):
        e = ols_augmented(small_model, np.zeros(small_model.n))
        assert np.all(e.theta == 0) and np.all(e.theta_prime == 0)

    def test_orthogonal_design_identity_gram(self):
        x = np.eye(12)[:, :5]
        m = build_knockoffs(x, Equicorrelated(1.0))
        y = np.arange(12, dtype=float)
        e = ols_augmented(m, y)
        np.testing.assert_allclose(e.stacked, m.products(y), atol=1e-12)

    def test_vs_gauss_jordan_oracle(self, rng):
        for _ in range(10):
            x = make_design(60, 10, rng, rho=rng.uniform(0, 0.8))
            m = build_knockoffs(x, Equicorrelated(1.0))
            y = rng.standard_normal(60)
            e = ols_augmented(m, y)
            oracle = gauss_jordan_solve(m.g, m.products(y))
            np.testing.assert_allclose(e.stacked, oracle, atol=1e-8)

    def test_infeasible_reports_condition(self):
        from kofilter import ExplicitS

        x = np.eye(10)[:, :4]
        m = build_knockoffs(x, ExplicitS(np.full(4, 2.0)))
        with pytest.raises(NotPositiveSemiDefinite, match="2\\*lambda_min"):
            ols_augmented(m, np.ones(10))


class TestLasso:
    def test_lam0_equals_ols(self, small_model, rng):
        y = rng.standard_normal(small_model.n)
        e_ols = ols_augmented(small_model, y)
        e_las = lasso_augmented(small_model, y, 0.0)
        np.testing.assert_allclose(e_las.stacked, e_ols.stacked, atol=1e-6)

    def test_lam0_with_offset_equals_shifted_ols(self, small_model, rng):
        y = rng.standard_normal(small_model.n)
        offset = rng.standard_normal(2 * small_model.p) * 0.3
        e_ols = ols_augmented(small_model, y)
        e_las = lasso_augmented(small_model, y, 0.0, offset)
        np.testing.assert_allclose(e_las.stacked, e_ols.stacked - offset, atol=1e-6)

    def test_zero_kill_threshold(self, small_model, rng):
        y = rng.standard_normal(small_model.n)
        offset = np.zeros(2 * small_model.p)
        offset[small_model.p :] = 0.25
        aug = small_model.augmented()
        lam = 2.0 * np.max(np.abs(aug.T @ (y - aug @ offset)))
        e = lasso_augmented(small_model, y, lam + 1e-9, offset)
        assert np.all(e.stacked == 0.0)
        e2 = lasso_augmented(small_model, y, lam * 0.9, offset)
        assert np.any(e2.stacked != 0.0)

    def test_vs_proximal_gradient_oracle(self, rng):
        for trial in range(10):
            x = make_design(60, 10, rng, rho=0.3)
            m = build_knockoffs(x, Equicorrelated(1.0))
            y = x @ np.concatenate([np.full(3, 2.0), np.zeros(7)]) + rng.standard_normal(60)
            offset = np.zeros(20) if trial % 2 == 0 else np.concatenate([np.zeros(10), np.full(10, 0.5)])
            e = lasso_augmented(m, y, 1.0, offset)
            aug = m.augmented()
            b_oracle = ista_lasso(aug, y, 1.0, offset)
            obj = lasso_objective(aug, y, 1.0, offset, e.stacked)
            obj_oracle = lasso_objective(aug, y, 1.0, offset, b_oracle)
            assert abs(obj - obj_oracle) < 1e-7

    def test_kkt_invariant(self, small_model, rng):
        y = rng.standard_normal(small_model.n)
        for lam in (0.0, 0.5, 2.0):
            offset = np.zeros(2 * small_model.p)
            e = lasso_augmented(small_model, y, lam, offset)
            aug = small_model.augmented()
            grad = 2.0 * aug.T @ (y - aug @ (e.stacked + offset))
            b = e.stacked
            on = b != 0
            assert np.all(np.abs(grad[~on]) <= lam + 1e-6)
            if on.any():
                np.testing.assert_allclose(grad[on], lam * np.sign(b[on]), atol=1e-6)

    def test_objective_monotone_across_sweeps(self, small_model, rng):
        y = rng.standard_normal(small_model.n)
        c = small_model.products(y)
        g = np.ascontiguousarray(small_model.g)
        objs = []
        for sweeps in range(1, 12):
            b = np.zeros(2 * small_model.p)
            cd_gram_sweeps(g, c, 1.0, 0.0, sweeps, b)
            objs.append(lasso_objective(small_model.augmented(), y, 1.0, np.zeros_like(b), b))
        assert all(b2 <= b1 + 1e-12 for b1, b2 in zip(objs, objs[1:]))

    def test_negative_lambda_rejected(self, small_model):
        with pytest.raises(ValueError):
            lasso_augmented(small_model, np.zeros(small_model.n), -1.0)


class TestShift:
    def test_zero_shift_identity(self):
        e = EstimatePair(np.array([1.0]), np.array([2.0]), "ols", np.zeros(1))
        out = shift_estimates(e, np.zeros(1))
        np.testing.assert_array_equal(out.theta_prime, e.theta_prime)

    def test_addition(self):
        e = EstimatePair(np.array([0.0, 0.0]), np.array([1.0, -1.0]), "ols", np.zeros(2))
        out = shift_estimates(e, np.array([0.5, 0.5]))
        np.testing.assert_allclose(out.theta_prime, [1.5, -0.5])
        np.testing.assert_array_equal(out.theta, e.theta)
        np.testing.assert_allclose(out.shift, [0.5, 0.5])

    def test_negative_shift_allowed(self):
        e = EstimatePair(np.array([1.0]), np.array([1.0]), "ols", np.zeros(1))
        out = shift_estimates(e, np.array([-0.7]))
        np.testing.assert_allclose(out.theta_prime, [0.3])


class TestSwapEquivariance:
    def test_ols_and_lasso(self, rng):
        x = make_design(70, 8, rng, rho=0.5)
        m = build_knockoffs(x, Equicorrelated(1.0))
        y = x @ np.concatenate([np.full(2, 3.0), np.zeros(6)]) + rng.standard_normal(70)
        fits = {
            "ols": lambda products: frpp_estimate(m, products, "ols"),
            "lasso0": lambda products: frpp_estimate(m, products, "lasso", 0.0),
            "lasso1": lambda products: frpp_estimate(m, products, "lasso", 1.0),
        }
        base = {name: fit(m.products(y)) for name, fit in fits.items()}
        for _ in range(5):
            flips = random_flips(rng, m.p)
            for name, fit in fits.items():
                e_sw = swapped_model_estimates(m, y, flips, fit)
                want_theta = base[name].theta.copy()
                want_prime = base[name].theta_prime.copy()
                want_theta[flips], want_prime[flips] = (
                    base[name].theta_prime[flips],
                    base[name].theta[flips],
                )
                np.testing.assert_allclose(e_sw.theta, want_theta, atol=1e-8)
                np.testing.assert_allclose(e_sw.theta_prime, want_prime, atol=1e-8)


class TestFrpp:
    def test_zero_boundary_exact_products(self, small_model, rng):
        y = rng.standard_normal(small_model.n)
        products, noise = frpp_perturb(small_model, y, 1.0, 0.0, 7)
        assert np.array_equal(products, small_model.products(y))
        assert np.all(noise.delta == 0.0)

    def test_scale_formula(self):
        from kofilter import ExplicitS

        x = np.eye(10)[:, :4]
        m = build_knockoffs(x, ExplicitS(np.full(4, 0.5)))
        _, noise = frpp_perturb(m, np.zeros(10), 1.0, 1.0, 0)
        np.testing.assert_array_equal(noise.scales, np.full(8, 1.0))

    def test_sampler_moment_one_percent(self):
        rng = np.random.default_rng(123)
        u = rng.random(1_000_000)
        draws = _laplace_inverse_cdf(u, np.full(1, 0.7))
        assert abs(np.abs(draws).mean() / 0.7 - 1.0) < 0.01

    def test_pooled_noise_moment(self, small_model, rng):
        scale = 2.0 * small_model.s[0] * 0.5 / 1.0
        mags = []
        for seed in range(400):
            _, noise = frpp_perturb(small_model, np.zeros(small_model.n), 1.0, 0.5, seed)
            mags.append(np.abs(noise.delta))
        assert abs(np.mean(mags) / scale - 1.0) < 0.04

    def test_seed_bit_identical(self, small_model, rng):
        y = rng.standard_normal(small_model.n)
        p1, n1 = frpp_perturb(small_model, y, 0.7, 0.3, 99)
        p2, n2 = frpp_perturb(small_model, y, 0.7, 0.3, 99)
        assert np.array_equal(p1, p2) and np.array_equal(n1.delta, n2.delta)

    def test_invalid_epsilon(self, small_model):
        with pytest.raises(InvalidEpsilon):
            frpp_perturb(small_model, np.zeros(small_model.n), 0.0, 0.5, 0)

    def test_zero_noise_matches_plain_estimators(self, small_model, rng):
        y = rng.standard_normal(small_model.n)
        products = small_model.products(y)
        np.testing.assert_array_equal(
            frpp_estimate(small_model, products, "ols").stacked,
            ols_augmented(small_model, y).stacked,
        )
        np.testing.assert_array_equal(
            frpp_estimate(small_model, products, "lasso", 1.0).stacked,
            lasso_augmented(small_model, y, 1.0).stacked,
        )

    def test_product_swap_oracle(self, small_model, rng):
        # Permuting product slots (i, i+p) must swap the estimates exactly;
        # oracle = solving on the explicitly permuted inputs.
        y = rng.standard_normal(small_model.n)
        products, _ = frpp_perturb(small_model, y, 1.0, 0.5, 3)
        p = small_model.p
        base = frpp_estimate(small_model, products, "ols")
        flips = random_flips(rng, p)
        perm = np.arange(2 * p)
        perm[flips], perm[flips + p] = flips + p, flips.copy()
        swapped = frpp_estimate(small_model, products[perm], "ols")
        np.testing.assert_allclose(swapped.theta[flips], base.theta_prime[flips], atol=1e-10)
        np.testing.assert_allclose(swapped.theta_prime[flips], base.theta[flips], atol=1e-10)
        keep = np.setdiff1d(np.arange(p), flips)
        np.testing.assert_allclose(swapped.theta[keep], base.theta[keep], atol=1e-10)
