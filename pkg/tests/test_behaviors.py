import numpy as np
import pytest

from banditlab.bayes import BetaParams
from banditlab.behaviors import (
    BayesConfident,
    BayesUnbiased,
    ConfidentInterpolated,
    IntervalOptimistic,
    Optimistic,
    Pessimistic,
    PopulationSpec,
    RecencyOptimist,
    ThompsonProjected,
    Unbiased,
    choose_arm,
    compute_indices,
    thompson_index,
)
from banditlab.core import ArmStats, confidence_bounds


def _rng(seed=0):
    return np.random.Generator(np.random.PCG64(seed))


def _random_stats(rng, max_pulls=200):
    pulls = int(rng.integers(1, max_pulls))
    return ArmStats(pulls=pulls, reward_sum=int(rng.integers(0, pulls + 1)))


DETERMINISTIC_STAT_BEHAVIORS = [
    Unbiased(),
    Optimistic(0.7),
    Pessimistic(0.7),
    ConfidentInterpolated(0.7, 0.3, 0.3),
    BayesUnbiased(),
    BayesConfident(zeta=0.1, quantile_selector=0.25),
]


class TestIndexRules:
    def test_unbiased_is_identity_on_means(self):
        i1, i2 = compute_indices(
            Unbiased(), ArmStats(10, 7), ArmStats(10, 2)
        )
        assert (i1, i2) == (0.7, 0.2)

    def test_optimistic_truncates_at_one(self):
        i1, _ = compute_indices(Optimistic(1.0), ArmStats(4, 2), ArmStats(4, 2))
        assert i1 == 1.0

    def test_pessimistic_is_lcb(self):
        i1, i2 = compute_indices(Pessimistic(0.25), ArmStats(100, 50), ArmStats(4, 0))
        assert i1 == pytest.approx(0.5 - 0.05)
        assert i2 == 0.0

    def test_interpolation_endpoints_match_optimism_pessimism(self):
        rng = _rng(1)
        for _ in range(1000):
            s1, s2 = _random_stats(rng), _random_stats(rng)
            eta = float(rng.random() * 3)
            pess = compute_indices(ConfidentInterpolated(eta, 0.0, 0.0), s1, s2)
            opt = compute_indices(ConfidentInterpolated(eta, 1.0, 1.0), s1, s2)
            assert pess == compute_indices(Pessimistic(eta), s1, s2)
            assert opt == compute_indices(Optimistic(eta), s1, s2)

    def test_confidence_containment_across_family(self):
        rng = _rng(2)
        behaviors = [
            Optimistic(0.8),
            Pessimistic(0.8),
            ConfidentInterpolated(0.8, 0.2, 0.9),
            ThompsonProjected(0.8),
            RecencyOptimist(0.8, window=3),
        ]
        for _ in range(300):
            s1, s2 = _random_stats(rng, 30), _random_stats(rng, 30)
            rewards1 = np.zeros(s1.pulls, dtype=np.uint8)
            rewards1[: s1.reward_sum] = 1
            rewards2 = np.zeros(s2.pulls, dtype=np.uint8)
            rewards2[: s2.reward_sum] = 1
            for behavior in behaviors:
                i1, i2 = compute_indices(
                    behavior, s1, s2, recent_rewards=(rewards1, rewards2), rng=rng
                )
                for idx, stats in ((i1, s1), (i2, s2)):
                    ci = confidence_bounds(stats, 0.8)
                    assert ci.lcb - 1e-12 <= idx <= ci.ucb + 1e-12

    def test_swap_symmetry_for_stat_behaviors(self):
        rng = _rng(3)
        for _ in range(300):
            s1, s2 = _random_stats(rng), _random_stats(rng)
            for behavior in DETERMINISTIC_STAT_BEHAVIORS:
                i1, i2 = compute_indices(behavior, s1, s2)
                j2, j1 = compute_indices(behavior, s2, s1)
                assert (i1, i2) == (j1, j2)

    def test_monotonicity_all_zero_to_all_one(self):
        # Turning an arm's all-zero sample set into all-ones (same size)
        # never lowers its index, the other arm held at all zeros.
        for behavior in DETERMINISTIC_STAT_BEHAVIORS:
            for k in (1, 3, 10):
                zero = ArmStats(pulls=k, reward_sum=0)
                one = ArmStats(pulls=k, reward_sum=k)
                other = ArmStats(pulls=k, reward_sum=0)
                lo, _ = compute_indices(behavior, zero, other)
                hi, _ = compute_indices(behavior, one, other)
                assert hi >= lo - 1e-12

    def test_monotonicity_by_frequency_for_thompson(self):
        rng = _rng(4)
        behavior = ThompsonProjected(1.5)
        k = 4
        zero_hist = (ArmStats(k, 0), ArmStats(k, 0))
        one_hist = (ArmStats(k, k), ArmStats(k, 0))
        chose_zero = chose_one = 0
        for _ in range(20_000):
            i1, i2 = compute_indices(behavior, *zero_hist, rng=rng)
            chose_zero += choose_arm(i1, i2, rng) == 1
            i1, i2 = compute_indices(behavior, *one_hist, rng=rng)
            chose_one += choose_arm(i1, i2, rng) == 1
        assert chose_one / 20_000 >= chose_zero / 20_000

    def test_interval_optimist_sandwich(self):
        rng = _rng(5)
        behavior = IntervalOptimistic(0.4, 1.6)
        for _ in range(500):
            s1, s2 = _random_stats(rng), _random_stats(rng)
            i1, i2 = compute_indices(behavior, s1, s2, rng=rng)
            for idx, stats in ((i1, s1), (i2, s2)):
                lo = confidence_bounds(stats, 0.4).ucb
                hi = confidence_bounds(stats, 1.6).ucb
                assert lo - 1e-12 <= idx <= hi + 1e-12

    def test_interval_optimist_requires_rng(self):
        with pytest.raises(ValueError):
            compute_indices(IntervalOptimistic(0.1, 0.2), ArmStats(1, 0), ArmStats(1, 0))

    def test_rejects_unpulled_arms(self):
        with pytest.raises(ValueError):
            compute_indices(Unbiased(), ArmStats(), ArmStats(1, 0))

    @pytest.mark.parametrize(
        "factory",
        [
            lambda: Optimistic(-1.0),
            lambda: IntervalOptimistic(2.0, 1.0),
            lambda: ConfidentInterpolated(1.0, -0.1, 0.5),
            lambda: BayesConfident(zeta=0.6),
            lambda: RecencyOptimist(1.0, window=0),
        ],
    )
    def test_parameter_validation(self, factory):
        with pytest.raises(ValueError):
            factory()


class TestThompsonIndex:
    def test_identity_inside_interval(self):
        # With the full [0,1] interval the projection never fires, so the
        # returned value equals the raw posterior draw (same stream).
        rng_a, rng_b = _rng(6), _rng(6)
        from banditlab.bayes import sample_beta

        for _ in range(500):
            raw = sample_beta(BetaParams(2, 2), rng_a)
            assert thompson_index(BetaParams(2, 2), 0.0, 1.0, rng_b) == raw

    def test_point_interval(self):
        rng = _rng(7)
        for _ in range(100):
            assert thompson_index(BetaParams(3, 5), 0.4, 0.4, rng) == 0.4

    def test_projection_clips(self):
        rng = _rng(8)
        values = [thompson_index(BetaParams(1, 1), 0.45, 0.55, rng) for _ in range(2000)]
        assert min(values) >= 0.45 and max(values) <= 0.55
        assert any(v == 0.45 for v in values) and any(v == 0.55 for v in values)

    def test_beta22_distribution_ks(self):
        # Wide interval, no projection: draws follow Beta(2,2) with CDF
        # 3y^2 - 2y^3 (Kolmogorov distance below 0.01 at 1e5 draws).
        rng = _rng(9)
        draws = np.sort([thompson_index(BetaParams(2, 2), 0.0, 1.0, rng) for _ in range(100_000)])
        grid = np.linspace(0.01, 0.99, 99)
        empirical = np.searchsorted(draws, grid) / draws.size
        exact = 3 * grid**2 - 2 * grid**3
        assert np.max(np.abs(empirical - exact)) < 0.01

    def test_rejects_inverted_interval(self):
        with pytest.raises(ValueError):
            thompson_index(BetaParams(1, 1), 0.6, 0.4, _rng(0))


class TestBayesBehaviors:
    def test_unbiased_posterior_mean(self):
        behavior = BayesUnbiased(prior1=BetaParams(2, 2), prior2=BetaParams(1, 1))
        i1, i2 = compute_indices(behavior, ArmStats(4, 3), ArmStats(2, 0))
        assert i1 == pytest.approx(5 / 8)
        assert i2 == pytest.approx(1 / 4)

    def test_confident_selector_endpoints_are_quantiles(self):
        stats = (ArmStats(5, 3), ArmStats(5, 2))
        low = compute_indices(BayesConfident(zeta=0.1, quantile_selector=0.0), *stats)
        mid = compute_indices(BayesConfident(zeta=0.1, quantile_selector=0.5), *stats)
        high = compute_indices(BayesConfident(zeta=0.1, quantile_selector=1.0), *stats)
        assert low[0] < mid[0] < high[0]


class TestRecencyOptimist:
    def test_switches_on_recent_improvement(self):
        behavior = RecencyOptimist(eta=0.5, window=2)
        s1 = ArmStats(5, 2)
        s2 = ArmStats(5, 2)
        recent = (np.array([0, 0, 0, 1, 1]), np.array([1, 1, 0, 0, 0]))
        i1, i2 = compute_indices(behavior, s1, s2, recent_rewards=recent)
        ci = confidence_bounds(s1, 0.5)
        assert i1 == ci.ucb  # recent mean 1.0 > 0.4
        assert i2 == ci.lcb  # recent mean 0.0 < 0.4

    def test_short_history_defaults_to_pessimism(self):
        behavior = RecencyOptimist(eta=0.5, window=5)
        s = ArmStats(3, 2)
        recent = (np.array([1, 1, 0]), np.array([1, 1, 0]))
        i1, _ = compute_indices(behavior, s, s, recent_rewards=recent)
        assert i1 == confidence_bounds(s, 0.5).lcb

    def test_requires_sequences(self):
        with pytest.raises(ValueError):
            compute_indices(RecencyOptimist(0.5), ArmStats(1, 0), ArmStats(1, 0))

    def test_sequence_length_checked(self):
        with pytest.raises(ValueError):
            compute_indices(
                RecencyOptimist(0.5),
                ArmStats(3, 1),
                ArmStats(3, 1),
                recent_rewards=(np.array([1]), np.array([0, 1, 0])),
            )


class TestChooseArm:
    def test_strict_winners(self):
        rng = _rng(10)
        assert choose_arm(0.7, 0.3, rng) == 1
        assert choose_arm(0.3, 0.7, rng) == 2

    def test_tie_frequency(self):
        rng = _rng(11)
        picks = sum(choose_arm(0.5, 0.5, rng) == 1 for _ in range(1_000_000))
        assert abs(picks / 1_000_000 - 0.5) < 0.002

    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            choose_arm(float("nan"), 0.5, _rng(0))


class TestPopulationSpec:
    def test_weights_must_sum_to_one(self):
        with pytest.raises(ValueError):
            PopulationSpec(components=((Unbiased(), 0.5), (Optimistic(1.0), 0.4)))

    def test_single_consumes_no_randomness(self):
        pop = PopulationSpec.single(Unbiased())
        rng = _rng(12)
        before = rng.bit_generator.state["state"]["state"]
        pop.draw(rng)
        assert rng.bit_generator.state["state"]["state"] == before

    def test_mixture_draw_frequencies(self):
        pop = PopulationSpec(components=((Optimistic(1.0), 0.2), (Pessimistic(1.0), 0.8)))
        rng = _rng(13)
        draws = [pop.draw(rng) for _ in range(50_000)]
        frac = sum(isinstance(b, Optimistic) for b in draws) / 50_000
        assert abs(frac - 0.2) < 0.01

    def test_interpolated_components_mapping(self):
        pop = PopulationSpec(
            components=(
                (Unbiased(), 0.25),
                (Optimistic(1.5), 0.25),
                (Pessimistic(0.5), 0.25),
                (ConfidentInterpolated(1.0, 0.2, 0.8), 0.25),
            )
        )
        comps = pop.interpolated_components()
        assert comps == [
            (0.0, 0.5, 0.5, 0.25),
            (1.5, 1.0, 1.0, 0.25),
            (0.5, 0.0, 0.0, 0.25),
            (1.0, 0.2, 0.8, 0.25),
        ]

    def test_non_interpolated_components_return_none(self):
        pop = PopulationSpec(
            components=((Unbiased(), 0.5), (ThompsonProjected(1.0), 0.5))
        )
        assert pop.interpolated_components() is None
