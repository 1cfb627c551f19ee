import math

import numpy as np
import pytest
import scipy.special

from banditlab.bayes import (
    BetaParams,
    FiniteSupportPrior,
    bayes_confidence_containment,
    beta_cdf,
    beta_quantile,
    posterior_summary,
    run_bayes_greedy_with_prior,
    sample_beta,
)
from banditlab.core import Instance


class TestBetaParams:
    def test_update_paths(self):
        p = BetaParams(1, 1).updated(1).updated(0).updated(1)
        assert (p.alpha, p.beta) == (3, 2)
        assert p.strength == 5
        assert p.mean == pytest.approx(0.6)

    @pytest.mark.parametrize("alpha,beta", [(0, 1), (1, 0), (1.5, 1), (-2, 3)])
    def test_rejects_non_positive_integers(self, alpha, beta):
        with pytest.raises((ValueError, TypeError)):
            BetaParams(alpha, beta)


class TestBetaCdf:
    def test_uniform_is_identity(self):
        for y in np.linspace(0, 1, 21):
            assert beta_cdf(BetaParams(1, 1), float(y)) == pytest.approx(y, abs=1e-12)

    def test_alpha2_beta1_is_square(self):
        for y in np.linspace(0, 1, 21):
            assert beta_cdf(BetaParams(2, 1), float(y)) == pytest.approx(y * y, abs=1e-12)

    def test_boundaries_over_parameter_grid(self):
        for alpha in (1, 3, 17, 50):
            for beta in (1, 5, 25, 50):
                params = BetaParams(alpha, beta)
                assert beta_cdf(params, 0.0) == 0.0
                assert beta_cdf(params, 1.0) == 1.0

    def test_against_scipy_incomplete_beta(self):
        rng = np.random.Generator(np.random.PCG64(6))
        for _ in range(200):
            params = BetaParams(int(rng.integers(1, 40)), int(rng.integers(1, 40)))
            y = float(rng.random())
            expected = scipy.special.betainc(params.alpha, params.beta, y)
            assert beta_cdf(params, y) == pytest.approx(expected, rel=1e-9, abs=1e-12)

    def test_nondecreasing(self):
        params = BetaParams(3, 7)
        values = [beta_cdf(params, y) for y in np.linspace(0, 1, 101)]
        assert all(a <= b + 1e-15 for a, b in zip(values, values[1:]))

    def test_matches_order_statistic_sampler(self):
        """The binomial-identity CDF against the order-statistic sampler:
        two independent constructions of the same distribution."""
        rng = np.random.Generator(np.random.PCG64(123))
        n_samples = 100_000
        for alpha in range(1, 6):
            for beta in range(1, 6):
                u = rng.random((n_samples, alpha + beta - 1))
                draws = np.sort(u, axis=1)[:, alpha - 1]
                draws.sort()
                grid = np.linspace(0.02, 0.98, 49)
                empirical = np.searchsorted(draws, grid) / n_samples
                exact = np.array(
                    [beta_cdf(BetaParams(alpha, beta), float(y)) for y in grid]
                )
                assert np.max(np.abs(empirical - exact)) < 0.01


class TestBetaQuantile:
    def test_uniform_identity(self):
        for z in (0.01, 0.25, 0.5, 0.9, 0.99):
            assert beta_quantile(BetaParams(1, 1), z) == pytest.approx(z, abs=1e-9)

    def test_roundtrip_residual(self):
        for alpha in (1, 2, 5, 10, 25):
            for beta in (1, 3, 8, 20):
                params = BetaParams(alpha, beta)
                for z in (0.01, 0.5, 0.99):
                    y = beta_quantile(params, z)
                    assert abs(beta_cdf(params, y) - z) <= 1e-9

    def test_rejects_boundary_levels(self):
        with pytest.raises(ValueError):
            beta_quantile(BetaParams(2, 2), 0.0)
        with pytest.raises(ValueError):
            beta_quantile(BetaParams(2, 2), 1.0)

    def test_mean_inside_moderate_quantile_interval(self):
        # For parameters >= 2 the mean sits inside [Q(z), Q(1-z)] at
        # moderate z; extreme z shrinks the interval below the mean-median
        # distance (documented failure below).
        for alpha in range(2, 7):
            for beta in range(2, 7):
                params = BetaParams(alpha, beta)
                mean = params.mean
                for z in (0.05, 0.1, 0.2):
                    assert beta_quantile(params, z) <= mean <= beta_quantile(params, 1 - z)

    def test_extreme_level_can_exclude_mean(self):
        # Skewed Beta(2,6): the tight median interval at z = 0.45 sits
        # below the mean.
        params = BetaParams(2, 6)
        assert params.mean > beta_quantile(params, 0.55)


class TestSampleBeta:
    def test_uniform_case(self):
        rng = np.random.Generator(np.random.PCG64(5))
        draws = [sample_beta(BetaParams(1, 1), rng) for _ in range(10_000)]
        assert abs(np.mean(draws) - 0.5) < 0.02

    def test_mean_matches_parameters(self):
        rng = np.random.Generator(np.random.PCG64(7))
        params = BetaParams(6, 2)
        draws = [sample_beta(params, rng) for _ in range(20_000)]
        assert abs(np.mean(draws) - 0.75) < 0.01


class TestPosteriorSummary:
    def test_symmetric_parameters(self):
        xi, rho = posterior_summary(BetaParams(4, 4))
        assert xi == 0.5 and rho == pytest.approx(3 / 7)

    def test_gap_identity(self):
        for alpha in range(1, 12):
            for beta in range(1, 12):
                params = BetaParams(alpha, beta)
                if params.strength < 2:
                    continue
                xi, rho = posterior_summary(params)
                exact = params.beta / (params.strength * (params.strength - 1))
                assert abs(xi - rho) == pytest.approx(exact, abs=1e-15)
                assert abs(xi - rho) <= 1.0 / (params.strength - 1)

    def test_rejects_strength_one(self):
        # Integer parameters are >= 1 each, so strength < 2 cannot be
        # constructed; the guard is exercised through the validator.
        with pytest.raises(ValueError):
            BetaParams(1, 0)


class TestConcentrationContainment:
    def test_mass_outside_band(self):
        # Mass beyond rho +- sqrt(ln(2/z)/(M-1)) is at most z.
        for alpha, beta in ((2, 2), (3, 5), (8, 4), (10, 10)):
            params = BetaParams(alpha, beta)
            _, rho = posterior_summary(params)
            for z in (0.05, 0.2):
                radius = math.sqrt(math.log(2.0 / z) / (params.strength - 1))
                lo, hi = max(0.0, rho - radius), min(1.0, rho + radius)
                outside = beta_cdf(params, lo) + 1.0 - beta_cdf(params, hi)
                assert outside <= z + 1e-12

    def test_quantile_interval_inside_band(self):
        for alpha, beta in ((2, 2), (4, 7), (9, 3)):
            params = BetaParams(alpha, beta)
            _, rho = posterior_summary(params)
            for z in (0.05, 0.2):
                radius = math.sqrt(math.log(2.0 / z) / (params.strength - 1))
                assert beta_quantile(params, z) >= rho - radius - 1e-9
                assert beta_quantile(params, 1 - z) <= rho + radius + 1e-9


class TestContainmentReport:
    def test_eta_decreases_as_n0_quadruples(self):
        etas = []
        for n0 in (4, 16, 64):
            inst = Instance(mu1=0.6, mu2=0.4, n0=n0, horizon=200)
            report = bayes_confidence_containment(
                BetaParams(1, 1), BetaParams(1, 1), inst, trials=100, master_seed=3
            )
            etas.append(report.eta_unbiased)
        assert etas[0] > etas[1] > etas[2]

    def test_uniform_prior_matches_extreme_path_bound(self):
        # With an all-ones or all-zeros prefix the deviation of the
        # posterior mean is exactly n/(n+2)^2 * 4 ... bounded by M^2/n0.
        inst = Instance(mu1=0.6, mu2=0.4, n0=4, horizon=100)
        report = bayes_confidence_containment(
            BetaParams(1, 1), BetaParams(1, 1), inst, trials=150, master_seed=3
        )
        assert report.eta_unbiased <= 2.0**2 / inst.n0 + 1e-12
        assert report.fitted_c_unbiased == pytest.approx(
            report.eta_unbiased / (2.0 / math.sqrt(4)), rel=1e-12
        )

    def test_confident_variant_reports_ln_term(self):
        inst = Instance(mu1=0.6, mu2=0.4, n0=2, horizon=20)
        report = bayes_confidence_containment(
            BetaParams(1, 1),
            BetaParams(1, 1),
            inst,
            trials=5,
            master_seed=9,
            zeta=0.25,
        )
        assert report.eta_confident is not None and report.eta_confident > 0
        assert report.fitted_c_confident == pytest.approx(
            report.eta_confident / (2.0 / math.sqrt(2) + math.log(4.0)), rel=1e-12
        )

    def test_median_point_interval_allowed(self):
        inst = Instance(mu1=0.6, mu2=0.4, n0=2, horizon=15)
        report = bayes_confidence_containment(
            BetaParams(1, 1), BetaParams(1, 1), inst, trials=3, master_seed=1, zeta=0.5
        )
        assert report.eta_confident is not None


class TestFiniteSupportPrior:
    def test_prior_gap(self):
        prior = FiniteSupportPrior(
            support=((0.6, 0.4), (0.4, 0.6)), weights=(0.75, 0.25)
        )
        assert prior.prior_gap == pytest.approx(0.1)

    def test_rejects_bad_weights(self):
        with pytest.raises(ValueError):
            FiniteSupportPrior(support=((0.5, 0.5),), weights=(0.9,))
        with pytest.raises(ValueError):
            FiniteSupportPrior(support=((0.5, 0.5), (0.2, 0.1)), weights=(1.2, -0.2))
        with pytest.raises(ValueError):
            FiniteSupportPrior(support=(), weights=())

    def test_rejects_out_of_range_support(self):
        with pytest.raises(ValueError):
            FiniteSupportPrior(support=((1.2, 0.4),), weights=(1.0,))


class TestGreedyWithPrior:
    def test_point_mass_prior_never_moves(self):
        prior = FiniteSupportPrior(support=((0.7, 0.3),), weights=(1.0,))
        res = run_bayes_greedy_with_prior(prior, horizon=50, trials=500, master_seed=2)
        assert res.never_chose_bad_frequency == 1.0
        assert res.prior_gap == pytest.approx(0.4)

    def test_symmetric_prior_rejected(self):
        prior = FiniteSupportPrior(
            support=((0.7, 0.3), (0.3, 0.7)), weights=(0.5, 0.5)
        )
        with pytest.raises(ValueError):
            run_bayes_greedy_with_prior(prior, horizon=10, trials=10, master_seed=0)

    def test_deterministic_in_master_seed(self):
        prior = FiniteSupportPrior(
            support=((0.6, 0.4), (0.4, 0.6)), weights=(0.75, 0.25)
        )
        r1 = run_bayes_greedy_with_prior(prior, horizon=100, trials=2000, master_seed=5)
        r2 = run_bayes_greedy_with_prior(prior, horizon=100, trials=2000, master_seed=5)
        assert r1.successes == r2.successes

    def test_doob_martingale_mean(self):
        prior = FiniteSupportPrior(
            support=((0.6, 0.4), (0.4, 0.6)), weights=(0.75, 0.25)
        )
        res = run_bayes_greedy_with_prior(
            prior, horizon=100, trials=20_000, master_seed=14, track_rounds=(1, 5, 20)
        )
        mean1, se1 = res.z_means[1]
        assert mean1 == pytest.approx(0.1, abs=1e-12)  # no data yet
        for t in (5, 20):
            mean, se = res.z_means[t]
            assert abs(mean - 0.1) <= 5 * se

    def test_never_frequency_at_least_prior_gap(self):
        prior = FiniteSupportPrior(
            support=((0.6, 0.4), (0.4, 0.6)), weights=(0.75, 0.25)
        )
        res = run_bayes_greedy_with_prior(prior, horizon=200, trials=20_000, master_seed=31)
        se = math.sqrt(res.never_chose_bad_frequency * (1 - res.never_chose_bad_frequency) / 20_000)
        assert res.never_chose_bad_frequency >= res.prior_gap - 3 * se

    def test_posterior_reweighting_matches_hand_computation(self):
        """One-step Bayes update on a two-point support, done by hand."""
        # Truth forced to (0.6, 0.4) by a point-mass-like weight split and
        # checked through the exposed Z trajectory at round 2.
        prior = FiniteSupportPrior(
            support=((0.6, 0.4), (0.4, 0.6)), weights=(0.75, 0.25)
        )
        res = run_bayes_greedy_with_prior(
            prior, horizon=2, trials=50_000, master_seed=8, track_rounds=(1, 2)
        )
        # Z_1 = 0.1 for every trial; arm 1 is chosen; after one arm-1 reward
        # r the posterior weight of (0.6, 0.4) is 0.75*l1/(0.75*l1+0.25*l2)
        # with l = mu if r else 1-mu, so Z_2 in {0.2*9/11, -0.2*... } model:
        w_hi = 0.75 * 0.6 / (0.75 * 0.6 + 0.25 * 0.4)  # reward = 1
        w_lo = 0.75 * 0.4 / (0.75 * 0.4 + 0.25 * 0.6)  # reward = 0
        z_hi = 0.2 * w_hi - 0.2 * (1 - w_hi)
        z_lo = 0.2 * w_lo - 0.2 * (1 - w_lo)
        p_reward = 0.75 * 0.6 + 0.25 * 0.4  # marginal over the prior
        expected = p_reward * z_hi + (1 - p_reward) * z_lo
        mean2, se2 = res.z_means[2]
        assert mean2 == pytest.approx(expected, abs=5 * max(se2, 1e-6))
