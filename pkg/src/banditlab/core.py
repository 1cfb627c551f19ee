"""Problem instances, reward tapes, running arm statistics, and truncated
confidence-bound arithmetic.

Everything downstream (behaviors, the round loop, the estimators) consumes
the small value types defined here.  Rewards are stored as 0/1 bits and all
sample means are computed as integer ratios at query time, so repeated
incremental updates cannot drift.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Instance",
    "RewardTape",
    "ArmStats",
    "ConfidenceInterval",
    "derive_seed",
    "generate_tape",
    "confidence_bounds",
    "tape_prefix_bounds",
]

_MASK64 = (1 << 64) - 1
_GOLDEN64 = 0x9E3779B97F4A7C15


def derive_seed(master_seed: int, index: int) -> int:
    """Derive the seed for stream `index` from a 64-bit master seed.

    Uses the splitmix64 finalizer, a bijection on 64-bit integers, applied
    to ``master_seed + (index + 1) * golden_gamma``.  Distinct indices under
    the same master seed therefore map to distinct seeds, and the mapping is
    independent of how work is later chunked across processes.
    """
    z = (master_seed + (index + 1) * _GOLDEN64) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class Instance:
    """A two-armed problem: arm means, initial samples, horizon, margin.

    Arm 1 is the good arm whenever failure semantics are requested
    (``mu1 > mu2`` strictly); plain regret runs tolerate any means.
    ``margin_c`` is the interiority constant used by the lower-bound
    machinery; 0 disables the assumption checks.
    """

    mu1: float
    mu2: float
    n0: int = 1
    horizon: int = 1
    margin_c: float = 0.0

    def __post_init__(self) -> None:
        if not (0.0 <= self.mu1 <= 1.0 and 0.0 <= self.mu2 <= 1.0):
            raise ValueError(f"means must lie in [0,1], got ({self.mu1}, {self.mu2})")
        if not isinstance(self.n0, int) or self.n0 < 1:
            raise ValueError(f"n0 must be a positive integer, got {self.n0!r}")
        if not isinstance(self.horizon, int) or self.horizon < 1:
            raise ValueError(f"horizon must be a positive integer, got {self.horizon!r}")
        if not (0.0 <= self.margin_c < 0.5):
            raise ValueError(f"margin_c must lie in [0, 0.5), got {self.margin_c}")

    @property
    def gap(self) -> float:
        return self.mu1 - self.mu2

    @property
    def tape_length(self) -> int:
        """Per-arm tape length n0 + T: enough for any pull sequence."""
        return self.n0 + self.horizon

    def margin_assumption_holds(self) -> bool | None:
        """Whether c < mu2 < mu1 < 1 - c; None when margin_c == 0."""
        if self.margin_c == 0.0:
            return None
        return self.margin_c < self.mu2 < self.mu1 < 1.0 - self.margin_c

    def initial_samples_assumption_holds(self, eta: float) -> bool | None:
        """Whether n0 >= 64*eta/c^2 + 1/c; None when margin_c == 0."""
        if self.margin_c == 0.0:
            return None
        c = self.margin_c
        return self.n0 >= 64.0 * eta / c**2 + 1.0 / c

    def validate_assumptions(self, eta: float = 0.0) -> tuple[bool | None, bool | None]:
        """Report (margin ok, initial-samples ok), warning on violations.

        Only the failure-floor bound shapes need these assumptions;
        simulation does not, so violations warn and never abort.
        """
        ok1 = self.margin_assumption_holds()
        ok2 = self.initial_samples_assumption_holds(eta)
        if ok1 is False:
            warnings.warn(
                f"margin assumption violated: need {self.margin_c} < mu2 < mu1 < "
                f"{1 - self.margin_c}, got mu=({self.mu1}, {self.mu2})",
                stacklevel=2,
            )
        if ok2 is False:
            c = self.margin_c
            warnings.warn(
                f"initial-samples assumption violated: need n0 >= "
                f"{64 * eta / c**2 + 1 / c:.3f}, got n0={self.n0}",
                stacklevel=2,
            )
        return ok1, ok2


@dataclass(frozen=True)
class RewardTape:
    """Pre-drawn Bernoulli rewards: row a-1 holds the pulls of arm a in order.

    Entry (a-1, i) is revealed when and if arm a is pulled for the
    (i+1)-th time, counting from the initial samples.
    """

    entries: np.ndarray  # shape (2, n0 + T), dtype uint8, values in {0, 1}

    def __post_init__(self) -> None:
        if self.entries.ndim != 2 or self.entries.shape[0] != 2:
            raise ValueError(f"tape must be 2 x L, got shape {self.entries.shape}")

    @property
    def length(self) -> int:
        return self.entries.shape[1]

    def prefix_sum(self, arm: int, n: int) -> int:
        """Total reward over the first n pulls of the given arm (1 or 2)."""
        return int(self.entries[arm - 1, :n].sum())

    def prefix_mean(self, arm: int, n: int) -> float:
        return self.prefix_sum(arm, n) / n


def generate_tape(instance: Instance, seed: int) -> RewardTape:
    """Draw a fresh 2 x (n0+T) reward tape, deterministic in (instance, seed)."""
    rng = np.random.Generator(np.random.PCG64(seed))
    length = instance.tape_length
    u = rng.random((2, length))
    mus = np.array([[instance.mu1], [instance.mu2]])
    return RewardTape(entries=(u < mus).astype(np.uint8))


@dataclass
class ArmStats:
    """Running pull count and reward sum for one arm.

    Mutable, but confined to a single trajectory; never shared across
    concurrent trial workers.
    """

    pulls: int = 0
    reward_sum: int = 0

    def __post_init__(self) -> None:
        if not (0 <= self.reward_sum <= self.pulls):
            raise ValueError(
                f"need 0 <= reward_sum <= pulls, got ({self.reward_sum}, {self.pulls})"
            )

    @property
    def mean(self) -> float:
        if self.pulls == 0:
            raise ZeroDivisionError("mean undefined before any pull")
        return self.reward_sum / self.pulls

    def update(self, reward: int) -> None:
        if reward not in (0, 1):
            raise ValueError(f"reward must be 0 or 1, got {reward!r}")
        self.pulls += 1
        self.reward_sum += reward


@dataclass(frozen=True)
class ConfidenceInterval:
    lcb: float
    ucb: float
    eta: float

    @property
    def width(self) -> float:
        return self.ucb - self.lcb


def confidence_bounds(stats: ArmStats, eta: float) -> ConfidenceInterval:
    """Truncated confidence interval around the sample mean.

    ucb = min(1, mean + sqrt(eta/pulls)) and lcb = max(0, mean - sqrt(eta/pulls)).
    Requires at least one pull; eta = 0 collapses both bounds onto the mean.
    """
    if stats.pulls < 1:
        raise ValueError("confidence bounds need pulls >= 1")
    if eta < 0:
        raise ValueError(f"eta must be nonnegative, got {eta}")
    mean = stats.mean
    half = math.sqrt(eta / stats.pulls)
    return ConfidenceInterval(
        lcb=max(0.0, mean - half), ucb=min(1.0, mean + half), eta=eta
    )


def tape_prefix_bounds(tape: RewardTape, arm: int, n: int, eta: float) -> ConfidenceInterval:
    """Confidence interval computed from the first n tape entries of an arm."""
    if arm not in (1, 2):
        raise ValueError(f"arm must be 1 or 2, got {arm}")
    if not 1 <= n <= tape.length:
        raise ValueError(f"prefix length must lie in [1, {tape.length}], got {n}")
    return confidence_bounds(ArmStats(pulls=n, reward_sum=tape.prefix_sum(arm, n)), eta)
