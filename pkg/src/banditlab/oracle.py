"""Exact small-instance oracle.

Walks every realization of the reward tape that the decision process can
consume, weighting each branch by its Bernoulli probability and splitting
ties into both arms with weight 1/2.  Unconsumed tape entries marginalize
out, so the walk is equivalent to enumerating full tapes while only paying
for the consumed prefixes.  Statistics-only behaviors additionally admit
memoization on the per-arm (pulls, reward sum) state, which keeps even the
largest legal instances fast.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .behaviors import Behavior
from .core import ArmStats, Instance

__all__ = ["ExactResult", "enumerate_exact", "ENUMERATION_BIT_LIMIT"]

ENUMERATION_BIT_LIMIT = 24  # total tape cells 2*(n0+T) must not exceed this


@dataclass(frozen=True)
class ExactResult:
    """Exact law of the number of good-arm pulls beyond the initial samples."""

    failure_probability: float  # mass of {good pulls <= threshold}
    expected_regret: float
    failure_threshold: int
    good_pull_distribution: np.ndarray  # length horizon + 1
    total_mass: float


def enumerate_exact(
    instance: Instance, behavior: Behavior, failure_threshold: int = 0
) -> ExactResult:
    """Exact failure probability and expected pseudo-regret for a small
    instance under a single deterministic (up to tie-breaking) behavior.

    Failure and regret semantics take arm 1 as the good arm, matching the
    estimators; the distribution itself is exact for any valid instance.
    """
    bits = 2 * instance.tape_length
    if bits > ENUMERATION_BIT_LIMIT:
        raise ValueError(
            f"instance too large for exact enumeration: 2*(n0 + horizon) = {bits} "
            f"exceeds the limit of {ENUMERATION_BIT_LIMIT}"
        )
    if not behavior.deterministic:
        raise ValueError(
            f"{type(behavior).__name__} randomizes beyond tie-breaking; "
            "exact enumeration only supports deterministic behaviors"
        )
    if not 0 <= failure_threshold <= instance.horizon:
        raise ValueError(f"failure threshold must lie in [0, {instance.horizon}]")

    if behavior.stats_only:
        dist = _enumerate_stats_only(instance, behavior)
    else:
        dist = _enumerate_sequences(instance, behavior)

    horizon, delta = instance.horizon, instance.gap
    failure = float(dist[: failure_threshold + 1].sum())
    expected_bad = float(np.dot(dist, horizon - np.arange(horizon + 1)))
    return ExactResult(
        failure_probability=failure,
        expected_regret=delta * expected_bad,
        failure_threshold=failure_threshold,
        good_pull_distribution=dist,
        total_mass=float(dist.sum()),
    )


def _arm_split(behavior: Behavior, n1, s1, n2, s2, recent=None) -> tuple[float, float]:
    """Probabilities of choosing (arm 1, arm 2) at the given state."""
    i1, i2 = behavior.indices(ArmStats(n1, s1), ArmStats(n2, s2), recent=recent)
    if i1 > i2:
        return 1.0, 0.0
    if i2 > i1:
        return 0.0, 1.0
    return 0.5, 0.5


def _binomial_pmf(n: int, k: int, p: float) -> float:
    return math.comb(n, k) * p**k * (1.0 - p) ** (n - k)


def _enumerate_stats_only(instance: Instance, behavior: Behavior) -> np.ndarray:
    mu1, mu2, n0, horizon = instance.mu1, instance.mu2, instance.n0, instance.horizon
    memo: dict[tuple[int, int, int, int], np.ndarray] = {}

    def dist(n1: int, s1: int, n2: int, s2: int, rounds_left: int) -> np.ndarray:
        if rounds_left == 0:
            return np.ones(1)
        key = (n1, s1, n2, s2)
        cached = memo.get(key)
        if cached is not None:
            return cached
        out = np.zeros(rounds_left + 1)
        p_arm1, p_arm2 = _arm_split(behavior, n1, s1, n2, s2)
        if p_arm1 > 0.0:
            for reward, p_r in ((1, mu1), (0, 1.0 - mu1)):
                if p_r > 0.0:
                    sub = dist(n1 + 1, s1 + reward, n2, s2, rounds_left - 1)
                    out[1:] += p_arm1 * p_r * sub
        if p_arm2 > 0.0:
            for reward, p_r in ((1, mu2), (0, 1.0 - mu2)):
                if p_r > 0.0:
                    sub = dist(n1, s1, n2 + 1, s2 + reward, rounds_left - 1)
                    out[:-1] += p_arm2 * p_r * sub
        memo[key] = out
        return out

    total = np.zeros(horizon + 1)
    for s1 in range(n0 + 1):
        w1 = _binomial_pmf(n0, s1, mu1)
        if w1 == 0.0:
            continue
        for s2 in range(n0 + 1):
            w = w1 * _binomial_pmf(n0, s2, mu2)
            if w == 0.0:
                continue
            total += w * dist(n0, s1, n0, s2, horizon)
    return total


def _enumerate_sequences(instance: Instance, behavior: Behavior) -> np.ndarray:
    """Full-sequence walk for behaviors that read the reward order."""
    mu1, mu2, n0, horizon = instance.mu1, instance.mu2, instance.n0, instance.horizon
    total = np.zeros(horizon + 1)

    def walk(seq1: list[int], seq2: list[int], good: int, weight: float, t: int) -> None:
        if t > horizon:
            total[good] += weight
            return
        recent = (np.asarray(seq1), np.asarray(seq2))
        p_arm1, p_arm2 = _arm_split(
            behavior, len(seq1), sum(seq1), len(seq2), sum(seq2), recent=recent
        )
        for arm, p_arm in ((1, p_arm1), (2, p_arm2)):
            if p_arm == 0.0:
                continue
            mu = mu1 if arm == 1 else mu2
            for reward, p_r in ((1, mu), (0, 1.0 - mu)):
                if p_r == 0.0:
                    continue
                if arm == 1:
                    seq1.append(reward)
                    walk(seq1, seq2, good + 1, weight * p_arm * p_r, t + 1)
                    seq1.pop()
                else:
                    seq2.append(reward)
                    walk(seq1, seq2, good, weight * p_arm * p_r, t + 1)
                    seq2.pop()

    def init_sequences(mu: float):
        """All initial reward sequences of one arm with their probabilities."""
        out = [([], 1.0)]
        for _ in range(n0):
            nxt = []
            for seq, w in out:
                for reward, p_r in ((1, mu), (0, 1.0 - mu)):
                    if p_r > 0.0:
                        nxt.append((seq + [reward], w * p_r))
            out = nxt
        return out

    for seq1, w1 in init_sequences(mu1):
        for seq2, w2 in init_sequences(mu2):
            walk(list(seq1), list(seq2), 0, w1 * w2, 1)
    return total
