import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gpbnb.errors import InvalidInputError
from gpbnb.gp import CandidatePredictor, fit, interpolation_error_bound
from gpbnb.kernels import KernelSpec, eval_kernel, gram_matrix, kernel_matrix


def random_design(rng, d, n, spacing=0.05):
    """``n`` points in ``[0, 1]^d`` at least ``spacing`` apart (shrunk if infeasible)."""
    spacing = min(spacing, 0.5 / n ** (1.0 / d))
    pts = []
    while len(pts) < n:
        p = rng.uniform(0, 1, size=d)
        if all(np.linalg.norm(p - q) >= spacing for q in pts):
            pts.append(p)
    return np.array(pts)


class TestFit:
    def test_empty_is_prior(self):
        gp = fit(KernelSpec.se(0.3, signal_variance=2.0))
        X = np.linspace(-1, 2, 7)[:, None]
        mu, sd = gp.predict(X)
        np.testing.assert_array_equal(mu, 0.0)
        np.testing.assert_allclose(sd, math.sqrt(2.0), rtol=1e-15)

    def test_one_point(self):
        gp = fit(KernelSpec.se(0.5), [[0.3]], [2.0])
        assert gp.predict_mean([0.3]) == pytest.approx(2.0, abs=1e-8)
        assert gp.predict_std([0.3]) <= 1e-4

    def test_two_point_oracle(self):
        # hand-solved: K = [[1, e], [e, 1]] with e = exp(-1/2); k(0.5) = [c, c], c = exp(-1/8)
        gp = fit(KernelSpec.se(1.0), [[0.0], [1.0]], [1.0, -1.0], jitter=0.0)
        assert gp.jitter == 0.0
        e, c = math.exp(-0.5), math.exp(-0.125)
        K = np.array([[1, e], [e, 1]])
        k = np.array([c, c])
        mu = k @ np.linalg.solve(K, [1.0, -1.0])
        var = 1 - k @ np.linalg.solve(K, k)
        assert gp.predict_mean([0.5]) == pytest.approx(mu, abs=1e-10)
        assert mu == pytest.approx(0.0, abs=1e-15)
        assert gp.predict_std([0.5]) == pytest.approx(math.sqrt(var), abs=1e-10)
        # closed form of the same solve
        assert var == pytest.approx(1 - 2 * c * c / (1 + e), rel=1e-13)

    def test_interpolates_samples(self):
        rng = np.random.default_rng(3)
        X = random_design(rng, 2, 15, 0.1)
        f = rng.normal(size=15)
        gp = fit(KernelSpec.se(0.3, dim=2), X, f)
        np.testing.assert_allclose(gp.predict(X)[0], f, atol=1e-6)
        assert gp.predict(X)[1].max() <= 1e-3

    def test_prior_reversion_far_away(self):
        gp = fit(KernelSpec.se(0.1), [[0.0], [0.1]], [3.0, -2.0])
        assert abs(gp.predict_mean([5.0])) <= 1e-3

    def test_duplicate_points_rejected(self):
        with pytest.raises(InvalidInputError):
            fit(KernelSpec.se(1.0), [[0.1], [0.1]], [1.0, 1.0])

    def test_length_mismatch_rejected(self):
        with pytest.raises(InvalidInputError):
            fit(KernelSpec.se(1.0), [[0.1], [0.2]], [1.0])

    def test_nonfinite_rejected(self):
        with pytest.raises(InvalidInputError):
            fit(KernelSpec.se(1.0), [[0.1]], [math.nan])

    def test_near_singular_escalates_jitter(self):
        X = np.linspace(0, 1, 60)[:, None]
        gp = fit(KernelSpec.se(1.0), X, np.sin(X[:, 0]))
        assert gp.jitter >= 1e-10
        assert np.all(np.isfinite(gp.predict(X)[1]))


class TestUpdate:
    def test_empty_update_noop(self):
        gp = fit(KernelSpec.se(0.4), [[0.1], [0.7]], [1.0, 0.0])
        P = np.linspace(0, 1, 11)[:, None]
        g2 = gp.update(np.zeros((0, 1)), [])
        np.testing.assert_array_equal(g2.predict(P)[0], gp.predict(P)[0])
        np.testing.assert_array_equal(g2.predict(P)[1], gp.predict(P)[1])

    @pytest.mark.parametrize("d, ell", [(1, 0.08), (2, 0.3), (3, 0.6)])
    def test_matches_full_refit(self, d, ell):
        rng = np.random.default_rng(10 + d)
        k = KernelSpec.se(ell, dim=d)
        X = random_design(rng, d, 20, 0.15)
        f = rng.normal(size=20)
        # agreement to 1e-10 is only meaningful on a well-conditioned design
        assert np.linalg.cond(gram_matrix(k, X)) < 1e7
        inc = fit(k, X[:8], f[:8]).update(X[8:14], f[8:14]).update(X[14:], f[14:])
        full = fit(k, X, f)
        P = rng.uniform(0, 1, size=(200, d))
        mu_i, sd_i = inc.predict(P)
        mu_f, sd_f = full.predict(P)
        np.testing.assert_allclose(mu_i, mu_f, atol=1e-10)
        np.testing.assert_allclose(sd_i, sd_f, atol=1e-10)

    def test_duplicate_rejected(self):
        gp = fit(KernelSpec.se(0.4), [[0.1], [0.7]], [1.0, 0.0])
        with pytest.raises(InvalidInputError):
            gp.update([[0.7]], [0.0])

    def test_original_unchanged(self):
        gp = fit(KernelSpec.se(0.4), [[0.1]], [1.0])
        gp.update([[0.5]], [2.0])
        assert len(gp) == 1


class TestResidualNorm:
    def test_empty_is_prior_std(self):
        k = KernelSpec.matern(0.5, "5/2", signal_variance=3.0)
        assert fit(k).residual_norm([0.4]) == pytest.approx(math.sqrt(3.0), rel=1e-15)

    def test_zero_at_samples(self):
        gp = fit(KernelSpec.se(0.3), [[0.1], [0.5], [0.8]], [1.0, 2.0, 0.0])
        for x in (0.1, 0.5, 0.8):
            assert gp.residual_norm([x]) <= 1e-4

    @pytest.mark.parametrize("seed", range(10))
    def test_equals_predict_std(self, seed):
        rng = np.random.default_rng(seed)
        d = int(rng.integers(1, 4))
        n = int(rng.integers(1, 41))
        ls = rng.uniform(0.3, 1.5, size=d)
        fam = ["se", "5/2", "7/2"][seed % 3]
        k = KernelSpec("se", ls) if fam == "se" else KernelSpec("matern", ls, nu=fam)
        gp = fit(k, random_design(rng, d, n, 0.05), rng.normal(size=n))
        for x in rng.uniform(-0.2, 1.2, size=(10, d)):
            assert gp.residual_norm(x) == pytest.approx(gp.predict_std(x), abs=1e-8)


class TestProject:
    def test_zero_values(self):
        gp = fit(KernelSpec.se(0.3), [[0.0], [0.4], [1.0]], [1.0, 2.0, 3.0])
        h = gp.project(np.zeros(3))
        np.testing.assert_array_equal(h(np.linspace(-1, 2, 30)[:, None]), 0.0)
        assert h.norm == 0.0

    def test_reproduces_kernel_section(self):
        k = KernelSpec.se(0.4)
        X = np.array([[0.0], [0.3], [0.55], [1.0]])
        gp = fit(k, X)
        j = 2
        h = gp.project(kernel_matrix(k, X, X[j:j + 1])[:, 0])
        P = np.linspace(-0.5, 1.5, 101)[:, None]
        np.testing.assert_allclose(h(P), kernel_matrix(k, P, X[j:j + 1])[:, 0], atol=1e-8)
        # ||k(x_j, .)||_H = sqrt(k(x_j, x_j))
        assert h.norm == pytest.approx(1.0, abs=1e-8)

    def test_interpolation(self):
        rng = np.random.default_rng(1)
        X = random_design(rng, 2, 12, 0.1)
        gp = fit(KernelSpec.matern(0.5, "7/2", dim=2), X)
        vals = rng.normal(size=12)
        np.testing.assert_allclose(gp.project(vals)(X), vals, atol=1e-6)


class TestMonotonicity:
    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**31), st.integers(1, 3))
    def test_std_never_increases(self, seed, d):
        rng = np.random.default_rng(seed)
        k = KernelSpec.se(rng.uniform(0.3, 1.0), dim=d)
        X = random_design(rng, d, 15, 0.05)
        P = rng.uniform(0, 1, size=(50, d))
        gp = fit(k)
        prev = gp.predict(P)[1]
        for i in range(len(X)):
            gp = gp.update(X[i:i + 1], [0.0])
            cur = gp.predict(P)[1]
            assert np.all(cur <= prev + 1e-8)
            prev = cur


class TestInterpolationErrorBound:
    def test_value(self):
        assert interpolation_error_bound(0.1, math.sqrt(3)) == pytest.approx(0.004330127018922193, rel=1e-15)

    def test_zero_delta(self):
        assert interpolation_error_bound(0.0, 5.0) == 0.0

    def test_quadratic_scaling(self):
        assert interpolation_error_bound(0.2, 2.0) == pytest.approx(4 * interpolation_error_bound(0.1, 2.0), rel=1e-15)


class TestCandidatePredictor:
    def test_matches_posterior(self):
        rng = np.random.default_rng(5)
        k = KernelSpec.se(0.05)
        C = np.linspace(0, 1, 65)[:, None]
        pred = CandidatePredictor(k, C)
        order = rng.permutation(65)[:20]
        f = rng.normal(size=20)
        for i, v in zip(order, f):
            pred.add(C[i], v)
        mu, sd = fit(k, C[order], f).predict(C)
        np.testing.assert_allclose(pred.mean, mu, atol=1e-9)
        np.testing.assert_allclose(pred.std, sd, atol=1e-9)

    def test_prior(self):
        pred = CandidatePredictor(KernelSpec.se(0.2, signal_variance=4.0), np.linspace(0, 1, 5)[:, None])
        np.testing.assert_array_equal(pred.mean, 0.0)
        np.testing.assert_allclose(pred.std, 2.0)


def test_eval_consistency_with_gram():
    k = KernelSpec.se(0.5)
    assert kernel_matrix(k, [[0.0]], [[0.3]])[0, 0] == eval_kernel(k, [0.0], [0.3])
