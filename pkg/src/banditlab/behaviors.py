"""The family of myopic behavioral types.

Every behavior maps per-arm statistics (plus, for the recency variant, the
full consumed reward sequences) to one index per arm; the agent then picks
the arm with the larger index, breaking exact ties uniformly at random.
Indices of the confidence-interval variants always lie inside the truncated
interval [LCB_eta, UCB_eta] by construction; the Bayesian variants satisfy
containment only for an enlarged scale, which is measured, not assumed
(see :mod:`banditlab.bayes`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import ClassVar

import numpy as np

from .bayes import BetaParams, beta_quantile, sample_beta
from .core import ArmStats, confidence_bounds

__all__ = [
    "Behavior",
    "Unbiased",
    "Optimistic",
    "Pessimistic",
    "IntervalOptimistic",
    "ConfidentInterpolated",
    "ThompsonProjected",
    "BayesUnbiased",
    "BayesConfident",
    "RecencyOptimist",
    "PopulationSpec",
    "compute_indices",
    "thompson_index",
    "choose_arm",
]


class Behavior:
    """Base type: subclasses implement `indices`.

    Class flags describe what the engine must supply and what the exact
    enumeration oracle can handle: `stats_only` behaviors depend on the
    history only through (pulls, reward_sum) per arm; `deterministic`
    behaviors consume no randomness beyond tie-breaking.
    """

    stats_only: ClassVar[bool] = True
    deterministic: ClassVar[bool] = True
    needs_recent: ClassVar[bool] = False

    def indices(
        self,
        stats1: ArmStats,
        stats2: ArmStats,
        recent: tuple[np.ndarray, np.ndarray] | None = None,
        rng: np.random.Generator | None = None,
    ) -> tuple[float, float]:
        raise NotImplementedError

    def interpolated_params(self) -> tuple[float, float, float] | None:
        """(eta, lambda1, lambda2) when this behavior is a confidence-interval
        interpolation, else None.  Used to route populations onto the
        compiled simulation kernel."""
        return None


def _check_eta(eta: float) -> None:
    if eta < 0.0:
        raise ValueError(f"eta must be nonnegative, got {eta}")


@dataclass(frozen=True)
class Unbiased(Behavior):
    """Index equals the sample average of each arm (the greedy rule)."""

    def indices(self, stats1, stats2, recent=None, rng=None):
        return stats1.mean, stats2.mean

    def interpolated_params(self):
        return 0.0, 0.5, 0.5


@dataclass(frozen=True)
class Optimistic(Behavior):
    """Index equals the truncated upper confidence bound at scale eta."""

    eta: float

    def __post_init__(self):
        _check_eta(self.eta)

    def indices(self, stats1, stats2, recent=None, rng=None):
        return (
            confidence_bounds(stats1, self.eta).ucb,
            confidence_bounds(stats2, self.eta).ucb,
        )

    def interpolated_params(self):
        return self.eta, 1.0, 1.0


@dataclass(frozen=True)
class Pessimistic(Behavior):
    """Index equals the truncated lower confidence bound at scale eta."""

    eta: float

    def __post_init__(self):
        _check_eta(self.eta)

    def indices(self, stats1, stats2, recent=None, rng=None):
        return (
            confidence_bounds(stats1, self.eta).lcb,
            confidence_bounds(stats2, self.eta).lcb,
        )

    def interpolated_params(self):
        return self.eta, 0.0, 0.0


@dataclass(frozen=True)
class ConfidentInterpolated(Behavior):
    """Index_a = LCB_eta + lambda_a * (UCB_eta - LCB_eta).

    Per-arm mixing weights allow asymmetric attitudes (optimistic for one
    arm, pessimistic for the other); lambda = 0 is pessimism, 1 is optimism.
    """

    eta: float
    lambda1: float
    lambda2: float

    def __post_init__(self):
        _check_eta(self.eta)
        for lam in (self.lambda1, self.lambda2):
            if not 0.0 <= lam <= 1.0:
                raise ValueError(f"lambda weights must lie in [0,1], got {lam}")

    def indices(self, stats1, stats2, recent=None, rng=None):
        ci1 = confidence_bounds(stats1, self.eta)
        ci2 = confidence_bounds(stats2, self.eta)
        return (
            ci1.lcb + self.lambda1 * ci1.width,
            ci2.lcb + self.lambda2 * ci2.width,
        )

    def interpolated_params(self):
        return self.eta, self.lambda1, self.lambda2


@dataclass(frozen=True)
class IntervalOptimistic(Behavior):
    """Index drawn uniformly between UCB_eta and UCB_eta_max per arm.

    Realizes an agent whose amount of optimism varies arbitrarily within
    the band [eta, eta_max]; the draw consumes the trajectory rng.
    """

    eta: float
    eta_max: float

    deterministic: ClassVar[bool] = False

    def __post_init__(self):
        _check_eta(self.eta)
        if self.eta_max < self.eta:
            raise ValueError(f"need eta_max >= eta, got {self.eta_max} < {self.eta}")

    def indices(self, stats1, stats2, recent=None, rng=None):
        if rng is None:
            raise ValueError("IntervalOptimistic needs an rng")
        out = []
        for stats in (stats1, stats2):
            lo = confidence_bounds(stats, self.eta).ucb
            hi = confidence_bounds(stats, self.eta_max).ucb
            out.append(lo + rng.random() * (hi - lo))
        return out[0], out[1]


def thompson_index(
    posterior: BetaParams,
    lcb: float,
    ucb: float,
    rng: np.random.Generator,
) -> float:
    """Draw from the Beta posterior and project into [lcb, ucb]."""
    if lcb > ucb:
        raise ValueError(f"need lcb <= ucb, got ({lcb}, {ucb})")
    nu = sample_beta(posterior, rng)
    if nu < lcb:
        return lcb
    if nu > ucb:
        return ucb
    return nu


@dataclass(frozen=True)
class ThompsonProjected(Behavior):
    """Posterior sample per arm, projected into the eta-confidence interval.

    Posteriors are the per-arm Beta priors updated by every observed 0/1
    reward, so the parameters stay integer and the draws are exact.
    """

    eta: float
    prior1: BetaParams = BetaParams(1, 1)
    prior2: BetaParams = BetaParams(1, 1)

    deterministic: ClassVar[bool] = False

    def __post_init__(self):
        _check_eta(self.eta)

    def _posterior(self, prior: BetaParams, stats: ArmStats) -> BetaParams:
        return BetaParams(
            prior.alpha + stats.reward_sum,
            prior.beta + stats.pulls - stats.reward_sum,
        )

    def indices(self, stats1, stats2, recent=None, rng=None):
        if rng is None:
            raise ValueError("ThompsonProjected needs an rng")
        out = []
        for prior, stats in ((self.prior1, stats1), (self.prior2, stats2)):
            ci = confidence_bounds(stats, self.eta)
            out.append(thompson_index(self._posterior(prior, stats), ci.lcb, ci.ucb, rng))
        return out[0], out[1]


@dataclass(frozen=True)
class BayesUnbiased(Behavior):
    """Index equals the posterior mean under independent Beta priors."""

    prior1: BetaParams = BetaParams(1, 1)
    prior2: BetaParams = BetaParams(1, 1)

    def indices(self, stats1, stats2, recent=None, rng=None):
        out = []
        for prior, stats in ((self.prior1, stats1), (self.prior2, stats2)):
            out.append(
                (prior.alpha + stats.reward_sum) / (prior.strength + stats.pulls)
            )
        return out[0], out[1]


@dataclass(frozen=True)
class BayesConfident(Behavior):
    """Index equals a fixed posterior quantile inside [zeta, 1 - zeta].

    `quantile_selector` in [0, 1] interpolates the level:
    level = zeta + selector * (1 - 2*zeta), so 0 is the pessimistic endpoint,
    1 the optimistic one, and 0.5 the posterior median.
    """

    zeta: float
    prior1: BetaParams = BetaParams(1, 1)
    prior2: BetaParams = BetaParams(1, 1)
    quantile_selector: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.zeta < 0.5:
            raise ValueError(f"zeta must lie in (0, 1/2), got {self.zeta}")
        if not 0.0 <= self.quantile_selector <= 1.0:
            raise ValueError(
                f"quantile_selector must lie in [0,1], got {self.quantile_selector}"
            )

    def indices(self, stats1, stats2, recent=None, rng=None):
        level = self.zeta + self.quantile_selector * (1.0 - 2.0 * self.zeta)
        out = []
        for prior, stats in ((self.prior1, stats1), (self.prior2, stats2)):
            post = BetaParams(
                prior.alpha + stats.reward_sum,
                prior.beta + stats.pulls - stats.reward_sum,
            )
            out.append(beta_quantile(post, level))
        return out[0], out[1]


@dataclass(frozen=True)
class RecencyOptimist(Behavior):
    """eta-optimistic for an arm iff the mean of its last `window` rewards
    strictly exceeds its overall mean, else eta-pessimistic.

    With fewer than `window` observations the two means coincide, so the
    pessimistic branch applies.
    """

    eta: float
    window: int = 5

    stats_only: ClassVar[bool] = False
    needs_recent: ClassVar[bool] = True

    def __post_init__(self):
        _check_eta(self.eta)
        if self.window < 1:
            raise ValueError(f"window must be >= 1, got {self.window}")

    def indices(self, stats1, stats2, recent=None, rng=None):
        if recent is None:
            raise ValueError("RecencyOptimist needs the per-arm reward sequences")
        out = []
        for stats, rewards in zip((stats1, stats2), recent):
            if len(rewards) != stats.pulls:
                raise ValueError(
                    f"reward sequence length {len(rewards)} != pulls {stats.pulls}"
                )
            ci = confidence_bounds(stats, self.eta)
            recent_mean = float(np.mean(rewards[-self.window :]))
            out.append(ci.ucb if recent_mean > stats.mean else ci.lcb)
        return out[0], out[1]


@dataclass(frozen=True)
class PopulationSpec:
    """Mixture of behavioral types; each round draws one type independently,
    before the agent observes anything."""

    components: tuple[tuple[Behavior, float], ...]

    def __post_init__(self):
        if not self.components:
            raise ValueError("population must have at least one component")
        weights = [w for _, w in self.components]
        if any(w < 0.0 for w in weights):
            raise ValueError("mixture probabilities must be nonnegative")
        if abs(sum(weights) - 1.0) > 1e-9:
            raise ValueError(f"mixture probabilities must sum to 1, got {sum(weights)}")

    @classmethod
    def single(cls, behavior: Behavior) -> "PopulationSpec":
        return cls(components=((behavior, 1.0),))

    @property
    def is_single(self) -> bool:
        return len(self.components) == 1

    @property
    def behaviors(self) -> tuple[Behavior, ...]:
        return tuple(b for b, _ in self.components)

    def draw(self, rng: np.random.Generator) -> Behavior:
        """Draw a type; a single-component population consumes no randomness."""
        if self.is_single:
            return self.components[0][0]
        u = rng.random()
        acc = 0.0
        for behavior, w in self.components:
            acc += w
            if u < acc:
                return behavior
        return self.components[-1][0]

    def interpolated_components(self) -> list[tuple[float, float, float, float]] | None:
        """Per-component (eta, lambda1, lambda2, weight) when every component
        is an interpolation of confidence bounds, else None."""
        out = []
        for behavior, w in self.components:
            params = behavior.interpolated_params()
            if params is None:
                return None
            out.append((*params, w))
        return out


def compute_indices(
    behavior: Behavior,
    stats1: ArmStats,
    stats2: ArmStats,
    recent_rewards: tuple[np.ndarray, np.ndarray] | None = None,
    rng: np.random.Generator | None = None,
) -> tuple[float, float]:
    """Evaluate a behavior's pair of arm indices on the current statistics."""
    if stats1.pulls < 1 or stats2.pulls < 1:
        raise ValueError("indices need at least one pull of each arm")
    return behavior.indices(stats1, stats2, recent=recent_rewards, rng=rng)


def containment_scale(behavior: Behavior) -> float | None:
    """The confidence scale at which this behavior's indices are guaranteed
    to stay inside the interval, or None for posterior-based behaviors
    (whose effective scale is measured, not guaranteed)."""
    if isinstance(behavior, Unbiased):
        return 0.0
    if isinstance(behavior, IntervalOptimistic):
        return behavior.eta_max
    if isinstance(
        behavior, (Optimistic, Pessimistic, ConfidentInterpolated, ThompsonProjected, RecencyOptimist)
    ):
        return behavior.eta
    return None


def assert_indices_contained(
    behavior: Behavior,
    stats1: ArmStats,
    stats2: ArmStats,
    index1: float,
    index2: float,
) -> None:
    """Debug check: indices of a confidence-interval behavior must lie in
    its interval (up to float slack).  No-op for posterior-based behaviors."""
    eta = containment_scale(behavior)
    if eta is None:
        return
    for idx, stats in ((index1, stats1), (index2, stats2)):
        ci = confidence_bounds(stats, eta)
        if not ci.lcb - 1e-9 <= idx <= ci.ucb + 1e-9:
            raise AssertionError(
                f"{type(behavior).__name__} index {idx} escaped "
                f"[{ci.lcb}, {ci.ucb}] at scale {eta}"
            )


def choose_arm(index1: float, index2: float, rng: np.random.Generator) -> int:
    """Pick the arm with the larger index; exact ties are fair coin flips."""
    if math.isnan(index1) or math.isnan(index2):
        raise ValueError(f"indices must not be NaN, got ({index1}, {index2})")
    if index1 > index2:
        return 1
    if index2 > index1:
        return 2
    return 1 if rng.random() < 0.5 else 2
