import math

import numpy as np
import pytest

from conftest import (
    conditioned_instance,
    pgd_constrained_loss,
    random_instance,
    stable_radius_scale,
)
from rkhsball.errors import InputError, NumericalError
from rkhsball.estimator import (
    clip,
    eigen_gram,
    empirical_sq_distance,
    fit_constrained,
    mu_of_r,
    predict,
    rkhs_sq_distance,
)
from rkhsball.kernels import GaussianKernel, gram

K1 = np.array([[1.0]])


class TestEigenGram:
    def test_one_by_one(self):
        ge = eigen_gram(K1, np.array([2.0]))
        assert ge.values[0] == 1.0 and ge.rank == 1
        assert ge.proj[0] == pytest.approx(2.0)
        assert ge.rho == pytest.approx(2.0, abs=1e-12)

    def test_zero_matrix(self):
        ge = eigen_gram(np.array([[0.0]]), np.array([5.0]))
        assert ge.rank == 0 and ge.rho == 0.0

    def test_rank_one_two_by_two(self):
        ge = eigen_gram(np.array([[1.0, 1.0], [1.0, 1.0]]), np.array([1.0, 1.0]))
        assert np.allclose(ge.values, [2.0, 0.0], atol=1e-12)
        assert ge.rank == 1
        assert abs(ge.proj[0]) == pytest.approx(math.sqrt(2.0), abs=1e-12)
        assert ge.rho == pytest.approx(1.0, abs=1e-12)

    def test_reconstruction(self, rng):
        for _ in range(20):
            _, k, _, y = random_instance(rng, n_max=30)
            ge = eigen_gram(k, y)
            rebuilt = ge.vectors @ np.diag(ge.values) @ ge.vectors.T
            top = ge.values[0]
            assert np.abs(rebuilt - k).max() <= 1e-8 * (1.0 + top)
            assert all(a >= b for a, b in zip(ge.values, ge.values[1:]))

    def test_asymmetric_rejected(self):
        with pytest.raises(NumericalError):
            eigen_gram(np.array([[1.0, 0.5], [0.0, 1.0]]), np.array([1.0, 1.0]))

    def test_indefinite_rejected(self):
        with pytest.raises(NumericalError):
            eigen_gram(np.array([[0.0, 1.0], [1.0, 0.0]]), np.array([1.0, 1.0]))

    def test_length_mismatch(self):
        with pytest.raises(InputError):
            eigen_gram(K1, np.array([1.0, 2.0]))


class TestMuOfR:
    def test_unit_case(self):
        ge = eigen_gram(K1, np.array([2.0]))
        assert mu_of_r(ge, 1.0, 1) == pytest.approx(1.0, abs=1e-10)

    def test_interpolation_branch(self):
        ge = eigen_gram(K1, np.array([2.0]))
        assert mu_of_r(ge, 2.0, 1) == 0.0

    def test_scaled_case(self):
        ge = eigen_gram(K1, np.array([4.0]))
        assert mu_of_r(ge, 1.0, 1) == pytest.approx(3.0, abs=1e-9)

    def test_nonpositive_radius(self):
        ge = eigen_gram(K1, np.array([2.0]))
        with pytest.raises(InputError):
            mu_of_r(ge, 0.0, 1)

    def test_monotone_in_r(self, rng):
        _, k, _, y = random_instance(rng, n_max=20)
        ge = eigen_gram(k, y)
        radii = np.linspace(0.05, max(ge.rho, 1.0), 12)
        mus = [mu_of_r(ge, r, ge.n) for r in radii]
        assert all(a >= b - 1e-12 for a, b in zip(mus, mus[1:]))


class TestFitConstrained:
    def test_zero_radius(self):
        fit = fit_constrained(K1, np.array([2.0]), 0.0)
        assert fit.coeffs[0] == 0.0
        assert fit.train_loss(np.array([2.0])) == 4.0

    def test_active_constraint(self):
        fit = fit_constrained(K1, np.array([2.0]), 1.0)
        assert fit.coeffs[0] == pytest.approx(1.0, abs=1e-10)
        assert fit.train_pred[0] == pytest.approx(1.0, abs=1e-10)
        assert fit.h_norm == pytest.approx(1.0, abs=1e-10)
        assert fit.mu == pytest.approx(1.0, abs=1e-10)

    def test_interpolation_branch(self):
        fit = fit_constrained(K1, np.array([2.0]), 3.0)
        assert fit.mu == 0.0
        assert fit.coeffs[0] == pytest.approx(2.0, abs=1e-12)
        assert fit.h_norm == pytest.approx(2.0, abs=1e-12)

    def test_feasibility_and_activity(self, rng):
        for _ in range(200):
            _, k, _, y = random_instance(rng)
            ge = eigen_gram(k, y)
            r = float(rng.uniform(0.05, 1.2)) * stable_radius_scale(k, y)
            fit = fit_constrained(k, y, r, eigen=ge)
            sq = float(fit.coeffs @ k @ fit.coeffs)
            assert sq <= r * r * (1.0 + 1e-8)
            if fit.mu > 0:
                assert abs(math.sqrt(sq) - r) <= 1e-6 * r

    def test_radius_lipschitz(self, rng):
        # ||fit_r - fit_s||^2 in the function space is at most |r^2 - s^2|.
        for _ in range(10):
            _, k, _, y = random_instance(rng, n_max=25)
            ge = eigen_gram(k, y)
            scale = max(stable_radius_scale(k, y), 1.0)
            for _ in range(10):
                r, s = rng.uniform(0.0, 1.3, size=2) * scale
                fa = fit_constrained(k, y, float(r), eigen=ge)
                fb = fit_constrained(k, y, float(s), eigen=ge)
                lhs = rkhs_sq_distance(fa, fb, k)
                assert lhs <= abs(r * r - s * s) + 1e-8 * (1.0 + r * r + s * s)

    def test_loss_monotone_in_radius(self, rng):
        for _ in range(10):
            _, k, _, y = random_instance(rng, n_max=25)
            ge = eigen_gram(k, y)
            losses = [fit_constrained(k, y, r, eigen=ge).train_loss(y)
                      for r in np.linspace(0.0, 1.2 * max(ge.rho, 1.0), 8)]
            assert all(a >= b - 1e-10 for a, b in zip(losses, losses[1:]))

    def test_interpolation_beyond_rho(self, rng):
        for _ in range(10):
            _, k, _, y = random_instance(rng, n_max=15)
            ge = eigen_gram(k, y)
            fit = fit_constrained(k, y, ge.rho * 1.5 + 1.0, eigen=ge)
            proj = ge.vectors[:, : ge.rank] @ ge.proj[: ge.rank]
            assert np.abs(fit.train_pred - proj).max() <= 1e-8 * (1.0 + np.abs(y).max())

    def test_matches_pgd_oracle(self, rng):
        for _ in range(20):
            k, y = conditioned_instance(rng, n_max=6)
            ge = eigen_gram(k, y)
            r = float(rng.uniform(0.1, 1.1)) * max(ge.rho, 0.5)
            loss = fit_constrained(k, y, r, eigen=ge).train_loss(y)
            oracle = pgd_constrained_loss(k, y, r)
            assert loss == pytest.approx(oracle, rel=1e-6, abs=1e-12)

    def test_negative_radius(self):
        with pytest.raises(InputError):
            fit_constrained(K1, np.array([1.0]), -0.5)

    def test_zero_responses_give_zero_fit(self):
        k = gram(GaussianKernel(1.0, 1), np.linspace(0, 1, 5)[:, None])
        fit = fit_constrained(k, np.zeros(5), 2.0)
        assert fit.h_norm == 0.0
        assert np.all(fit.coeffs == 0.0)


class TestClip:
    def test_above(self):
        assert clip(3.0, 2.0) == 2.0

    def test_below(self):
        assert clip(-5.0, 2.0) == -2.0

    def test_identity(self):
        assert clip(1.0, 2.0) == 1.0

    def test_idempotent_and_lipschitz(self, rng):
        xs = rng.normal(0, 3, size=200)
        ys = rng.normal(0, 3, size=200)
        cx, cy = clip(xs, 1.7), clip(ys, 1.7)
        assert np.array_equal(clip(cx, 1.7), cx)
        assert np.all(np.abs(cx - cy) <= np.abs(xs - ys) + 1e-15)

    def test_invalid_bound(self):
        with pytest.raises(InputError):
            clip(1.0, 0.0)


class TestPredict:
    def test_reproduces_training_value(self):
        kern = GaussianKernel(1.0, 1)
        fit = fit_constrained(K1, np.array([2.0]), 1.0, kernel_id=kern.kernel_id)
        out = predict(fit, kern, [[0.0]], [[0.0]])
        assert out[0] == pytest.approx(1.0, abs=1e-10)

    def test_zero_coefficients(self):
        kern = GaussianKernel(1.0, 1)
        fit = fit_constrained(K1, np.array([2.0]), 0.0)
        assert np.all(predict(fit, kern, [[0.0]], [[0.3], [0.9]]) == 0.0)

    def test_clipped(self):
        kern = GaussianKernel(1.0, 1)
        fit = fit_constrained(K1, np.array([2.0]), 3.0)  # interpolates: coefficient 2
        out = predict(fit, kern, [[0.0]], [[0.0]], c=1.0)
        assert out[0] == 1.0

    def test_matches_gram_on_training_points(self, rng):
        kern, k, x, y = random_instance(rng, n_max=12)
        fit = fit_constrained(k, y, 1.0)
        out = predict(fit, kern, x, x)
        assert np.allclose(out, fit.train_pred, atol=1e-10)


class TestDistances:
    def test_empirical_zero(self):
        assert empirical_sq_distance([1.0, 2.0], [1.0, 2.0]) == 0.0

    def test_empirical_single(self):
        assert empirical_sq_distance([1.0], [2.0]) == 1.0

    def test_empirical_pair(self):
        assert empirical_sq_distance([0.0, 2.0], [0.0, 0.0]) == 2.0

    def test_empirical_length_mismatch(self):
        with pytest.raises(InputError):
            empirical_sq_distance([1.0], [1.0, 2.0])

    def test_rkhs_distance_same_fit(self):
        fit = fit_constrained(K1, np.array([2.0]), 1.0)
        assert rkhs_sq_distance(fit, fit, K1) == 0.0

    def test_rkhs_distance_examples(self):
        f1 = fit_constrained(K1, np.array([2.0]), 1.0)
        f3 = fit_constrained(K1, np.array([2.0]), 3.0)
        f0 = fit_constrained(K1, np.array([2.0]), 0.0)
        assert rkhs_sq_distance(f1, f3, K1) == pytest.approx(1.0, abs=1e-9)
        assert rkhs_sq_distance(f0, f1, K1) == pytest.approx(1.0, abs=1e-9)

    def test_rkhs_distance_kernel_mismatch(self):
        f1 = fit_constrained(K1, np.array([2.0]), 1.0, kernel_id="a")
        f2 = fit_constrained(K1, np.array([2.0]), 1.0, kernel_id="b")
        with pytest.raises(InputError):
            rkhs_sq_distance(f1, f2, K1)
