import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from potforecast.gpd import (
    GpParams,
    gp_cdf,
    gp_density,
    gp_loglik,
    gp_quantile,
    gp_sample,
    gp_sf,
    threshold_stability_transform,
)
from potforecast.predictive import extreme_level, extreme_quantile

GAMMAS = [-0.45, -0.34, -0.1, 0.0, 0.2, 1.0, 2.0]
SIGMAS = [0.5, 1.0, 1.65, 10.0]

gammas = st.floats(-0.49, 3.0)
sigmas = st.floats(0.05, 50.0)


class TestParams:
    @pytest.mark.parametrize("sigma,gamma", [(0, 0.1), (-1, 0.1), (1, -0.5), (1, -0.6), (math.nan, 0), (1, math.inf)])
    def test_rejects_outside_theta(self, sigma, gamma):
        with pytest.raises(ValueError):
            GpParams(sigma, gamma)

    def test_support(self):
        assert GpParams(2, -0.25).support() == (0.0, 8.0)
        assert GpParams(1, 0).support().upper == math.inf
        assert GpParams(1, 0.3).upper == math.inf


class TestDensity:
    @pytest.mark.parametrize(
        "x,theta,expected",
        [
            (0.0, (1, 0.5), 1.0),
            (1.0, (1, 0.0), math.exp(-1)),
            (2.0, (1, 1.0), 1 / 9),
        ],
    )
    def test_examples(self, x, theta, expected):
        assert gp_density(x, GpParams(*theta)) == pytest.approx(expected, rel=1e-14)

    def test_zero_outside_support(self):
        p = GpParams(1, -0.25)
        assert gp_density(-0.1, p) == 0.0
        assert gp_density(4.0, p) == 0.0
        assert gp_density(5.0, p) == 0.0

    @pytest.mark.parametrize("gamma", GAMMAS)
    @pytest.mark.parametrize("sigma", SIGMAS)
    def test_normalised(self, sigma, gamma):
        p = GpParams(sigma, gamma)
        upper = p.upper
        if math.isfinite(upper):
            mass, _ = integrate.quad(lambda x: gp_density(x, p), 0, upper, epsabs=1e-13, epsrel=1e-12, limit=200)
        else:
            # split off the far tail, whose mass is known
            edges = np.concatenate([[0.0], np.geomspace(1e-3 * sigma, float(gp_quantile(1 - 1e-6, p)), 60)])
            mass = math.fsum(
                integrate.quad(lambda x: gp_density(x, p), a, b, epsabs=1e-14, epsrel=1e-12)[0]
                for a, b in zip(edges[:-1], edges[1:])
            )
            mass += 1e-6
        assert mass == pytest.approx(1.0, abs=1e-8)

    @pytest.mark.parametrize("gamma", GAMMAS)
    def test_matches_cdf_derivative(self, gamma):
        p = GpParams(1.3, gamma)
        xs = gp_quantile(np.linspace(0.05, 0.95, 19), p)
        h = 1e-5 * np.maximum(xs, 1.0)
        fd = (gp_cdf(xs + h, p) - gp_cdf(xs - h, p)) / (2 * h)
        np.testing.assert_allclose(fd, gp_density(xs, p), rtol=1e-6)

    @pytest.mark.parametrize("eps", [1e-9, -1e-9, 1e-7, -1e-7])
    def test_continuous_at_zero_shape(self, eps):
        x = np.linspace(0, 30, 301)
        np.testing.assert_allclose(gp_density(x, GpParams(1.5, eps)), gp_density(x, GpParams(1.5, 0.0)), atol=1e-6)

    def test_broadcasts(self):
        x = np.array([[0.0, 1.0], [2.0, 3.0]])
        assert gp_density(x, GpParams(1, 0.2)).shape == (2, 2)
        assert isinstance(gp_density(1.0, GpParams(1, 0.2)), float)

    def test_scipy_agreement(self):
        x = np.linspace(0, 6, 25)
        for gamma in (-0.3, 0.25):
            np.testing.assert_allclose(
                gp_density(x, GpParams(2, gamma)), stats.genpareto.pdf(x, gamma, scale=2), rtol=1e-12, atol=1e-300
            )


class TestCdf:
    @pytest.mark.parametrize("theta", [(1, 0.5), (2, -0.25), (1, 0)])
    def test_zero_at_origin(self, theta):
        assert gp_cdf(0.0, GpParams(*theta)) == 0.0
        assert gp_cdf(-3.0, GpParams(*theta)) == 0.0

    def test_examples(self):
        assert gp_cdf(1.0, GpParams(1, 1)) == pytest.approx(0.5, abs=1e-15)
        assert gp_cdf(8.0, GpParams(2, -0.25)) == 1.0
        assert gp_cdf(9.0, GpParams(2, -0.25)) == 1.0

    @given(sigmas, gammas, st.lists(st.floats(0, 100), min_size=2, max_size=20))
    def test_monotone(self, sigma, gamma, xs):
        xs = np.sort(xs)
        F = gp_cdf(xs, GpParams(sigma, gamma))
        assert np.all(np.diff(F) >= 0)
        assert np.all((F >= 0) & (F <= 1))

    def test_sf_complements(self):
        p = GpParams(1, 0.2)
        x = np.linspace(0, 10, 11)
        np.testing.assert_allclose(gp_sf(x, p) + gp_cdf(x, p), 1.0, atol=1e-15)


class TestQuantile:
    def test_examples(self):
        assert gp_quantile(0.0, GpParams(3, 0.4)) == 0.0
        assert gp_quantile(0.5, GpParams(1, 0)) == pytest.approx(math.log(2), rel=1e-14)
        expected = 1.65 * (0.025 ** 0.34 - 1) / -0.34
        assert gp_quantile(0.975, GpParams(1.65, -0.34)) == pytest.approx(expected, rel=1e-13)
        assert expected == pytest.approx(3.468, abs=1e-3)

    def test_agrees_with_bisection(self):
        from scipy.optimize import brentq

        p = GpParams(1.65, -0.34)
        root = brentq(lambda x: gp_cdf(x, p) - 0.975, 0, p.upper, xtol=1e-14)
        assert gp_quantile(0.975, p) == pytest.approx(root, abs=1e-10)

    @pytest.mark.parametrize("q", [-0.1, 1.0, 1.5, math.nan])
    def test_domain(self, q):
        with pytest.raises(ValueError):
            gp_quantile(q, GpParams(1, 0))

    @pytest.mark.parametrize("gamma", GAMMAS)
    def test_round_trip(self, gamma):
        p = GpParams(1.7, gamma)
        q = np.linspace(0, 0.999, 1000)
        assert np.max(np.abs(gp_cdf(gp_quantile(q, p), p) - q)) < 1e-10

    @settings(max_examples=200)
    @given(sigmas, gammas, st.floats(0, 0.9999))
    def test_round_trip_property(self, sigma, gamma, q):
        p = GpParams(sigma, gamma)
        assert abs(gp_cdf(gp_quantile(q, p), p) - q) < 1e-10


class TestSample:
    def test_deterministic(self):
        a = gp_sample(GpParams(1, 0.3), 5, seed=7)
        b = gp_sample(GpParams(1, 0.3), 5, seed=7)
        assert a.tobytes() == b.tobytes()

    def test_bounded_support(self):
        x = gp_sample(GpParams(1, -0.25), 10_000, seed=1)
        assert np.all((x >= 0) & (x < 4))

    def test_ks(self):
        p = GpParams(1, 0.2)
        x = gp_sample(p, 100_000, seed=1)
        ks = stats.kstest(x, lambda v: gp_cdf(v, p)).statistic
        assert ks < 0.01

    def test_needs_positive_m(self):
        with pytest.raises(ValueError):
            gp_sample(GpParams(1, 0), 0, seed=1)


class TestLoglik:
    @pytest.mark.parametrize(
        "x,theta,expected",
        [([1.0], (1, 0), -1.0), ([2.0], (1, 1), math.log(1 / 9)), ([5.0], (1, -0.25), -math.inf)],
    )
    def test_examples(self, x, theta, expected):
        assert gp_loglik(GpParams(*theta), x) == pytest.approx(expected, rel=1e-14)

    def test_empty(self):
        with pytest.raises(ValueError):
            gp_loglik(GpParams(1, 0), [])

    def test_is_sum_of_logs(self, rng):
        p = GpParams(0.7, 0.15)
        x = rng.exponential(size=50)
        assert gp_loglik(p, x) == pytest.approx(np.sum(np.log(gp_density(x, p))), rel=1e-12)


class TestThresholdStability:
    @pytest.mark.parametrize("theta,u,expected", [((1, 0), 3, (1, 0)), ((2, 0.5), 2, (3, 0.5))])
    def test_examples(self, theta, u, expected):
        out = threshold_stability_transform(GpParams(*theta), u)
        assert (out.sigma, out.gamma) == pytest.approx(expected, rel=1e-15)

    def test_scaling_factor_identity(self):
        theta = GpParams(1.65, -0.34)
        p = extreme_level(2, theta.gamma, 169, 3140)
        u = extreme_quantile(theta, 34.0, 169, 3140, p) - 34.0
        assert threshold_stability_transform(theta, u).sigma == pytest.approx(0.825, rel=1e-12)

    @pytest.mark.parametrize("u", [-1.0, 4.0, 10.0])
    def test_domain(self, u):
        with pytest.raises(ValueError):
            threshold_stability_transform(GpParams(1, -0.25), u)

    @pytest.mark.parametrize("gamma", [-0.45, -0.2, 0.0, 0.3, 1.5])
    @pytest.mark.parametrize("q", [0.1, 0.5, 0.9])
    def test_conditional_law_is_gp(self, gamma, q):
        theta = GpParams(1.2, gamma)
        u = float(gp_quantile(q, theta))
        new = threshold_stability_transform(theta, u)
        x = gp_quantile(np.linspace(0, 0.99, 50), new)
        lhs = gp_density(u + x, theta) / gp_sf(u, theta)
        np.testing.assert_allclose(lhs, gp_density(x, new), rtol=1e-10, atol=1e-14)
