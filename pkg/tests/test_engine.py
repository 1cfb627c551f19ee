import numpy as np
import pytest

from banditlab.behaviors import (
    Optimistic,
    Pessimistic,
    PopulationSpec,
    RecencyOptimist,
    ThompsonProjected,
    Unbiased,
)
from banditlab.core import Instance, RewardTape, generate_tape
from banditlab.engine import detect_sampling_failure, run_trajectory
from banditlab.probtools import clean_event_check


def _rng(seed):
    return np.random.Generator(np.random.PCG64(seed))


class TestRunTrajectory:
    def test_dominant_arm_always_chosen(self):
        inst = Instance(mu1=1.0, mu2=0.0, n0=1, horizon=20)
        tape = generate_tape(inst, seed=0)
        traj = run_trajectory(inst, PopulationSpec.single(Unbiased()), tape, _rng(1))
        assert np.all(traj.chosen_arms == 1)
        assert traj.pseudo_regret == 0.0
        assert traj.first_good_pull_round == 1

    def test_zero_gap_zero_regret(self):
        inst = Instance(mu1=0.5, mu2=0.5, n0=2, horizon=30)
        tape = generate_tape(inst, seed=4)
        traj = run_trajectory(inst, PopulationSpec.single(Unbiased()), tape, _rng(2))
        assert traj.pseudo_regret == 0.0

    def test_conservation_and_regret_identity(self):
        populations = [
            PopulationSpec.single(Unbiased()),
            PopulationSpec.single(RecencyOptimist(0.5, window=3)),
            PopulationSpec(
                components=((Optimistic(1.0), 0.3), (ThompsonProjected(0.5), 0.7))
            ),
        ]
        inst = Instance(mu1=0.6, mu2=0.4, n0=2, horizon=40)
        for k, population in enumerate(populations):
            tape = generate_tape(inst, seed=10 + k)
            traj = run_trajectory(inst, population, tape, _rng(20 + k))
            total = traj.good_arm_pulls_beyond_init + traj.bad_arm_pulls_beyond_init
            assert total == inst.horizon == traj.rounds_executed
            assert traj.pseudo_regret == pytest.approx(
                inst.gap * (inst.horizon - traj.good_arm_pulls_beyond_init)
            )
            assert not traj.truncated

    def test_reproducible(self):
        inst = Instance(mu1=0.55, mu2=0.45, n0=1, horizon=100)
        population = PopulationSpec(
            components=((Optimistic(0.5), 0.5), (Pessimistic(0.5), 0.5))
        )
        tape = generate_tape(inst, seed=3)
        t1 = run_trajectory(inst, population, tape, _rng(9))
        t2 = run_trajectory(inst, population, tape, _rng(9))
        assert np.array_equal(t1.chosen_arms, t2.chosen_arms)
        assert t1.pseudo_regret == t2.pseudo_regret

    def test_matches_independent_replay(self):
        """Replay the greedy rule directly from the tape with the same tie
        coin; the engine must take the identical branch at every round."""
        inst = Instance(mu1=0.6, mu2=0.4, n0=1, horizon=6)
        for seed in range(200):
            tape = generate_tape(inst, seed=seed)
            traj = run_trajectory(inst, PopulationSpec.single(Unbiased()), tape, _rng(seed))
            rng = _rng(seed)
            n = [1, 1]
            s = [int(tape.entries[0, 0]), int(tape.entries[1, 0])]
            for t in range(inst.horizon):
                m1, m2 = s[0] / n[0], s[1] / n[1]
                if m1 > m2:
                    arm = 1
                elif m2 > m1:
                    arm = 2
                else:
                    arm = 1 if rng.random() < 0.5 else 2
                assert traj.chosen_arms[t] == arm
                s[arm - 1] += int(tape.entries[arm - 1, n[arm - 1]])
                n[arm - 1] += 1

    def test_tape_length_must_match(self):
        inst = Instance(mu1=0.6, mu2=0.4, n0=1, horizon=10)
        short = RewardTape(entries=np.zeros((2, 5), dtype=np.uint8))
        with pytest.raises(ValueError):
            run_trajectory(inst, PopulationSpec.single(Unbiased()), short, _rng(0))

    def test_early_exit_stops_after_threshold(self):
        inst = Instance(mu1=1.0, mu2=0.0, n0=1, horizon=50)
        tape = generate_tape(inst, seed=0)
        traj = run_trajectory(
            inst, PopulationSpec.single(Unbiased()), tape, _rng(1), stop_after_good_pulls=2
        )
        assert traj.truncated
        assert traj.good_arm_pulls_beyond_init == 3
        assert traj.rounds_executed == 3

    def test_early_exit_preserves_failure_indicator(self):
        inst = Instance(mu1=0.55, mu2=0.45, n0=1, horizon=60)
        population = PopulationSpec.single(Unbiased())
        for seed in range(100):
            tape = generate_tape(inst, seed=seed)
            full = run_trajectory(inst, population, tape, _rng(seed))
            quick = run_trajectory(
                inst, population, tape, _rng(seed), stop_after_good_pulls=0
            )
            assert detect_sampling_failure(full, 0) == detect_sampling_failure(quick, 0)

    def test_containment_validation_mode(self):
        inst = Instance(mu1=0.6, mu2=0.4, n0=1, horizon=60)
        population = PopulationSpec(
            components=(
                (Optimistic(0.7), 0.4),
                (ThompsonProjected(0.7), 0.3),
                (RecencyOptimist(0.7, window=3), 0.3),
            )
        )
        for seed in range(10):
            tape = generate_tape(inst, seed=seed)
            run_trajectory(inst, population, tape, _rng(seed), validate_containment=True)

    def test_rejects_negative_stop_threshold(self):
        inst = Instance(mu1=0.6, mu2=0.4, n0=1, horizon=5)
        tape = generate_tape(inst, seed=1)
        with pytest.raises(ValueError):
            run_trajectory(
                inst, PopulationSpec.single(Unbiased()), tape, _rng(0), stop_after_good_pulls=-1
            )


class TestDetectSamplingFailure:
    def _traj(self, good, horizon=10):
        inst = Instance(mu1=1.0, mu2=0.0, n0=1, horizon=horizon)
        tape = generate_tape(inst, seed=0)
        traj = run_trajectory(inst, PopulationSpec.single(Unbiased()), tape, _rng(0))
        object.__setattr__(traj, "good_arm_pulls_beyond_init", good)
        return traj

    def test_all_bad_is_zero_failure(self):
        assert detect_sampling_failure(self._traj(0), 0)

    def test_single_good_pull_boundary(self):
        traj = self._traj(1)
        assert not detect_sampling_failure(traj, 0)
        assert detect_sampling_failure(traj, 1)

    def test_rejects_negative_threshold(self):
        with pytest.raises(ValueError):
            detect_sampling_failure(self._traj(0), -1)


class TestCleanEventClaim:
    def test_clean_events_bound_bad_pulls_for_optimists(self):
        """On tapes where both clean events hold, optimistic agents cannot
        choose the bad arm more than 64*eta/gap^2 times (checked with the
        stated n0 slack)."""
        eta = 0.5
        inst = Instance(mu1=0.75, mu2=0.25, n0=2, horizon=400)
        bound = 64.0 * eta / inst.gap**2 + inst.n0
        population = PopulationSpec.single(Optimistic(eta))
        checked = 0
        for seed in range(300):
            tape = generate_tape(inst, seed=seed)
            clean1, clean2 = clean_event_check(tape, inst.mu1, inst.mu2, eta)
            if not (clean1 and clean2):
                continue
            traj = run_trajectory(inst, population, tape, _rng(seed))
            assert traj.bad_arm_pulls_beyond_init <= bound
            checked += 1
        assert checked >= 100  # the clean events are the typical case here
