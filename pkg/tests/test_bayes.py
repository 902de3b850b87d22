import math

import numpy as np
import pytest
from scipy import integrate

from conftest import gp_excess_data
from potforecast.bayes import (
    AnchoredScale,
    FlatShape,
    LogFlatScale,
    PosteriorChain,
    PriorSpec,
    TruncatedGaussianShape,
    credible_interval,
    default_prior,
    equal_tailed,
    log_posterior_unnorm,
    log_prior,
    metropolis_step,
    sample_posterior,
)
from potforecast.estimators import endpoint_estimate, fit_gpwm, fit_mle
from potforecast.gpd import GpParams, gp_loglik


class FlatScale:
    """Improper flat scale prior, for checks against the likelihood."""

    def logpdf(self, sigma):
        return 0.0 if sigma > 0 else -math.inf


FLAT = PriorSpec(FlatShape(), FlatScale())

SHIPPED_PRIORS = [
    PriorSpec(),
    PriorSpec(FlatShape(), LogFlatScale()),
    PriorSpec(TruncatedGaussianShape(0, 10), AnchoredScale(2.0)),
    PriorSpec(TruncatedGaussianShape(0.1, 0.5), AnchoredScale(0.3)),
]


class TestPriors:
    def test_flat_logflat_constant(self):
        prior = PriorSpec(FlatShape(), LogFlatScale())
        a = log_prior(GpParams(1.0, 0.1), prior) + math.log(1.0)
        b = log_prior(GpParams(3.0, -0.2), prior) + math.log(3.0)
        assert a == pytest.approx(b, abs=1e-14)

    @pytest.mark.parametrize("prior", SHIPPED_PRIORS)
    def test_outside_theta(self, prior):
        assert prior.shape.logpdf(-0.6) == -math.inf
        assert prior.shape.logpdf(-0.5) == -math.inf
        assert prior.scale.logpdf(-1.0) == -math.inf

    def test_anchored_closed_form(self):
        prior = AnchoredScale(2.0)
        for s, t in [(1.0, 3.0), (0.5, 2.0), (10.0, 0.01)]:
            expected = math.log((t * (1 + math.log(t / 2) ** 2)) / (s * (1 + math.log(s / 2) ** 2)))
            assert prior.logpdf(s) - prior.logpdf(t) == pytest.approx(expected, abs=1e-12)

    def test_anchored_integrates_to_one(self):
        prior = AnchoredScale(1.7)
        # substitute sigma = anchor * exp(u)
        mass, _ = integrate.quad(lambda u: math.exp(prior.logpdf(1.7 * math.exp(u))) * 1.7 * math.exp(u), -np.inf, np.inf)
        assert mass == pytest.approx(1.0, abs=1e-8)

    def test_truncated_gaussian_normalised(self):
        shape = TruncatedGaussianShape(0, 10)
        mass, _ = integrate.quad(lambda g: math.exp(shape.logpdf(g)), -0.5, np.inf)
        assert mass == pytest.approx(1.0, abs=1e-8)

    @pytest.mark.parametrize("prior", SHIPPED_PRIORS)
    def test_compliance(self, prior):
        sig = np.geomspace(1e-7, 1e7, 2001)
        bound = max(sig * np.exp([prior.scale.logpdf(s) for s in sig]))
        assert np.isfinite(bound)
        assert bound <= 1 / math.pi + 1e-12 or isinstance(prior.scale, LogFlatScale)
        mass, err = integrate.quad(lambda g: math.exp(prior.shape.logpdf(g)), -0.5, 0)
        assert np.isfinite(mass) and err < 1e-8
        g = np.geomspace(1e-6, 1e6, 1001)
        assert np.all(np.isfinite([math.exp(prior.shape.logpdf(v)) for v in g]))

    def test_default_prior_anchor(self, exact_gp_data):
        prior = default_prior(exact_gp_data)
        assert isinstance(prior.scale, AnchoredScale)
        assert prior.scale.anchor == fit_gpwm(exact_gp_data).sigma
        assert isinstance(prior.shape, TruncatedGaussianShape)


class TestLogPosterior:
    def test_outside_support(self):
        d = gp_excess_data(1, 0.1, 50, seed=1)
        big = float(d.excesses.max())
        assert log_posterior_unnorm(GpParams(big / 4, -0.45), d, PriorSpec()) == -math.inf

    def test_flat_is_loglik(self, exact_gp_data):
        a, b = GpParams(1.0, 0.2), GpParams(1.3, 0.1)
        diff = log_posterior_unnorm(a, exact_gp_data, FLAT) - log_posterior_unnorm(b, exact_gp_data, FLAT)
        expected = gp_loglik(a, exact_gp_data.excesses) - gp_loglik(b, exact_gp_data.excesses)
        assert diff == pytest.approx(expected, rel=1e-10)

    def test_mle_dominates_grid(self):
        d = gp_excess_data(1.0, -0.2, 400, seed=2)
        fit = fit_mle(d)
        top = log_posterior_unnorm(fit.params, d, FLAT)
        for s in np.linspace(0.5, 2, 40):
            for g in np.linspace(-0.49, 0.5, 40):
                assert log_posterior_unnorm(GpParams(s, g), d, FLAT) <= top + 1e-9


class TestMetropolis:
    def test_two_state_detailed_balance(self):
        target = np.log([0.3, 0.7])
        rng = np.random.default_rng(4)
        steps = 100_000
        counts = np.zeros((2, 2))
        state, lp = 0, target[0]
        for _ in range(steps):
            new, lp, _ = metropolis_step(state, lp, 1 - state, lambda s: target[s], rng)
            counts[state, new] += 1
            state = new
        kernel = counts / counts.sum(axis=1, keepdims=True)
        expected = np.array([[0.0, 1.0], [3 / 7, 4 / 7]])
        np.testing.assert_allclose(kernel, expected, atol=0.02)
        flow = counts / steps
        assert flow[0, 1] == pytest.approx(flow[1, 0], abs=0.02)

    def test_rejects_impossible(self):
        rng = np.random.default_rng(0)
        state, lp, acc = metropolis_step(1.0, 0.0, 2.0, lambda s: -math.inf, rng)
        assert (state, lp, acc) == (1.0, 0.0, False)


class TestSamplePosterior:
    def test_recovers_truth(self):
        d = gp_excess_data(1.0, 0.2, 5000, seed=21)
        chain = sample_posterior(d, M=5000, seed=3)
        assert np.mean(chain.sigma) == pytest.approx(1.0, abs=0.1)
        assert np.mean(chain.gamma) == pytest.approx(0.2, abs=0.1)
        lo, hi = equal_tailed(chain.sigma)
        assert lo < 1.0 < hi
        lo, hi = equal_tailed(chain.gamma)
        assert lo < 0.2 < hi
        assert 0.1 < chain.acceptance_rate < 0.5

    def test_deterministic(self, exact_gp_data):
        a = sample_posterior(exact_gp_data, M=500, seed=11)
        b = sample_posterior(exact_gp_data, M=500, seed=11)
        assert a.sigma.tobytes() == b.sigma.tobytes()
        assert a.gamma.tobytes() == b.gamma.tobytes()
        c = sample_posterior(exact_gp_data, M=500, seed=12)
        assert c.sigma.tobytes() != a.sigma.tobytes()

    def test_lengths(self, exact_gp_data):
        chain = sample_posterior(exact_gp_data, M=1000, seed=1)
        assert len(chain) == 1000 and chain.burn_in == 200
        thin = sample_posterior(exact_gp_data, M=1000, seed=1, thin=4, burn_in=50)
        assert len(thin) == 250 and thin.burn_in == 50

    @pytest.mark.parametrize("kw", [{"M": 99}, {"M": 200, "burn_in": -1}, {"M": 200, "thin": 0}])
    def test_bad_arguments(self, exact_gp_data, kw):
        with pytest.raises(ValueError):
            sample_posterior(exact_gp_data, **kw)

    def test_mode_near_mle(self, exact_gp_data):
        chain = sample_posterior(exact_gp_data, prior=FLAT, M=20000, seed=5)
        best = chain.draws[int(np.argmax(chain.log_posts))]
        fit = fit_mle(exact_gp_data)
        assert gp_loglik(best, exact_gp_data.excesses) == pytest.approx(fit.loglik, abs=0.05)

    def test_draws_in_theta(self):
        d = gp_excess_data(1.0, -0.45, 300, seed=3)
        chain = sample_posterior(d, M=2000, seed=2)
        assert np.all(chain.gamma > -0.5) and np.all(chain.sigma > 0)
        assert np.all(np.isfinite(chain.log_posts))


class TestChain:
    def test_csv_round_trip(self, tmp_path, exact_gp_data):
        chain = sample_posterior(exact_gp_data, M=200, seed=1)
        path = tmp_path / "chain.csv"
        chain.to_csv(path)
        assert path.read_text().splitlines()[0] == "sigma,gamma,log_post"
        back = PosteriorChain.from_csv(path)
        np.testing.assert_array_equal(back.sigma, chain.sigma)
        np.testing.assert_array_equal(back.gamma, chain.gamma)
        np.testing.assert_array_equal(back.log_posts, chain.log_posts)

    def test_invariants(self):
        with pytest.raises(ValueError):
            PosteriorChain([1.0], [-0.6], [0.0], 0.3, 0)
        with pytest.raises(ValueError):
            PosteriorChain([1.0, 2.0], [0.1], [0.0], 0.3, 0)

    def test_constant(self):
        chain = PosteriorChain.constant(GpParams(2, -0.1), 3)
        assert len(chain) == 3 and chain.draws[1] == GpParams(2, -0.1)


class TestCredibleInterval:
    def test_constant_chain(self):
        chain = PosteriorChain.constant(GpParams(1.65, -0.34), 50)
        lo, hi = credible_interval(chain, lambda p: endpoint_estimate(p, 34.0))
        assert lo == hi == pytest.approx(34 + 1.65 / 0.34, abs=1e-12)

    def test_linear_interpolation_rule(self):
        assert equal_tailed(np.arange(1, 101), 0.90) == pytest.approx((5.95, 95.05), abs=1e-12)

    def test_transform(self):
        sig = np.arange(1, 101, dtype=float)
        chain = PosteriorChain(sig, np.zeros(100), np.zeros(100), 0.3, 0)
        assert credible_interval(chain, lambda p: p.sigma, 0.90) == pytest.approx((5.95, 95.05), abs=1e-12)

    @pytest.mark.parametrize("level", [0, 1, 1.5])
    def test_bad_level(self, level):
        with pytest.raises(ValueError):
            equal_tailed([1.0, 2.0], level)
