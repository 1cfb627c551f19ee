"""One trajectory of the sequential learning protocol.

Initial samples seed both arms' statistics, then each arriving agent draws
its behavioral type from the population, computes indices on the current
statistics, and consumes the next tape entry of the chosen arm.  The record
kept per run is exactly what the estimators need: the chosen arms, per-arm
pull counts beyond the initial samples, and the exact pseudo-regret
gap * (bad-arm pulls).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .behaviors import (
    PopulationSpec,
    assert_indices_contained,
    choose_arm,
    compute_indices,
)
from .core import ArmStats, Instance, RewardTape

__all__ = ["Trajectory", "run_trajectory", "detect_sampling_failure"]


@dataclass(frozen=True)
class Trajectory:
    """Per-run record.  `truncated` runs stopped early once the requested
    good-pull threshold was exceeded; their counts cover only the executed
    rounds and their pseudo-regret is not meaningful."""

    chosen_arms: np.ndarray  # uint8 array, one entry per executed round
    good_arm_pulls_beyond_init: int
    bad_arm_pulls_beyond_init: int
    pseudo_regret: float
    first_good_pull_round: int | None
    rounds_executed: int
    truncated: bool


def run_trajectory(
    instance: Instance,
    population: PopulationSpec,
    tape: RewardTape,
    rng: np.random.Generator,
    stop_after_good_pulls: int | None = None,
    validate_containment: bool = False,
) -> Trajectory:
    """Run the protocol for `instance.horizon` agents against a fixed tape.

    When `stop_after_good_pulls = n` is given, the run stops as soon as the
    good arm has been chosen n+1 times: at that point the n-sampling-failure
    indicator is already determined, so stopping cannot change it.  Early
    exit must not be combined with regret estimation.

    `validate_containment` is a debug mode asserting, at every round, that
    confidence-interval behaviors produced indices inside their interval.
    """
    if tape.length != instance.tape_length:
        raise ValueError(
            f"tape length {tape.length} != n0 + horizon = {instance.tape_length}"
        )
    if stop_after_good_pulls is not None and stop_after_good_pulls < 0:
        raise ValueError("stop_after_good_pulls must be >= 0")

    n0, horizon = instance.n0, instance.horizon
    row1, row2 = tape.entries[0], tape.entries[1]
    stats1 = ArmStats(pulls=n0, reward_sum=int(row1[:n0].sum()))
    stats2 = ArmStats(pulls=n0, reward_sum=int(row2[:n0].sum()))
    needs_recent = any(b.needs_recent for b in population.behaviors)

    chosen = np.empty(horizon, dtype=np.uint8)
    good = bad = 0
    first_good: int | None = None
    executed = 0
    for t in range(1, horizon + 1):
        behavior = population.draw(rng)
        recent = (row1[: stats1.pulls], row2[: stats2.pulls]) if needs_recent else None
        i1, i2 = compute_indices(behavior, stats1, stats2, recent_rewards=recent, rng=rng)
        if validate_containment:
            assert_indices_contained(behavior, stats1, stats2, i1, i2)
        arm = choose_arm(i1, i2, rng)
        if arm == 1:
            stats1.update(int(row1[stats1.pulls]))
            good += 1
            if first_good is None:
                first_good = t
        else:
            stats2.update(int(row2[stats2.pulls]))
            bad += 1
        chosen[t - 1] = arm
        executed = t
        if stop_after_good_pulls is not None and good > stop_after_good_pulls:
            break

    truncated = executed < horizon
    return Trajectory(
        chosen_arms=chosen[:executed],
        good_arm_pulls_beyond_init=good,
        bad_arm_pulls_beyond_init=bad,
        pseudo_regret=instance.gap * bad,
        first_good_pull_round=first_good,
        rounds_executed=executed,
        truncated=truncated,
    )


def detect_sampling_failure(traj: Trajectory, n: int) -> bool:
    """Whether all but at most n agents chose the bad arm.

    Assumes the trajectory came from an instance with mu1 > mu2 (arm 1 is
    the good arm).  Valid on truncated runs only when they were stopped
    after more than n good pulls, which is how the estimators use them.
    """
    if n < 0:
        raise ValueError(f"failure threshold must be >= 0, got {n}")
    return traj.good_arm_pulls_beyond_init <= n
