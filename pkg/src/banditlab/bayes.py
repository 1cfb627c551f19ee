"""Beta-posterior machinery for Bayesian agents and the finite-support-prior
optional-stopping experiment.

Beta parameters are integers throughout (a uniform or integer Beta prior
updated by 0/1 rewards stays integer), which makes the CDF exactly
computable through the binomial-tail identity and makes posterior sampling
exact through the order-statistic construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Instance, derive_seed, generate_tape
from .probtools import binomial_tail_exact

__all__ = [
    "BetaParams",
    "beta_cdf",
    "beta_quantile",
    "sample_beta",
    "posterior_summary",
    "ContainmentReport",
    "bayes_confidence_containment",
    "FiniteSupportPrior",
    "GreedyPriorResult",
    "run_bayes_greedy_with_prior",
]


@dataclass(frozen=True)
class BetaParams:
    """Integer Beta(alpha, beta) parameters; strength M = alpha + beta."""

    alpha: int
    beta: int

    def __post_init__(self) -> None:
        if not (isinstance(self.alpha, int) and isinstance(self.beta, int)):
            raise ValueError(f"Beta parameters must be integers, got {self!r}")
        if self.alpha < 1 or self.beta < 1:
            raise ValueError(f"Beta parameters must be >= 1, got {self!r}")

    @property
    def strength(self) -> int:
        return self.alpha + self.beta

    @property
    def mean(self) -> float:
        return self.alpha / self.strength

    def updated(self, reward: int) -> "BetaParams":
        if reward not in (0, 1):
            raise ValueError(f"reward must be 0 or 1, got {reward!r}")
        if reward:
            return BetaParams(self.alpha + 1, self.beta)
        return BetaParams(self.alpha, self.beta + 1)


def beta_cdf(params: BetaParams, y: float) -> float:
    """Exact Beta CDF via the binomial identity
    F(y) = 1 - Pr[Binomial(alpha+beta-1, y) <= alpha-1]."""
    if not 0.0 <= y <= 1.0:
        raise ValueError(f"y must lie in [0,1], got {y}")
    if y == 0.0:
        return 0.0
    if y == 1.0:
        return 1.0
    return 1.0 - binomial_tail_exact(params.strength - 1, y, params.alpha - 1)


def beta_quantile(params: BetaParams, z: float) -> float:
    """Invert the exact Beta CDF by bisection to residual |F(y) - z| <= 1e-9."""
    if not 0.0 < z < 1.0:
        raise ValueError(f"quantile level must lie in (0,1), got {z}")
    lo, hi = 0.0, 1.0
    y = 0.5
    for _ in range(80):
        y = 0.5 * (lo + hi)
        fy = beta_cdf(params, y)
        if abs(fy - z) <= 1e-10:
            break
        if fy < z:
            lo = y
        else:
            hi = y
    residual = abs(beta_cdf(params, y) - z)
    if residual > 1e-9:
        raise AssertionError(f"quantile residual {residual:.2e} > 1e-9 for {params}")
    return y


def sample_beta(params: BetaParams, rng: np.random.Generator) -> float:
    """Exact Beta(alpha, beta) draw: the alpha-th smallest of alpha+beta-1
    independent uniforms."""
    n = params.strength - 1
    u = rng.random(n)
    if n == 1:
        return float(u[0])
    return float(np.partition(u, params.alpha - 1)[params.alpha - 1])


def posterior_summary(params: BetaParams) -> tuple[float, float]:
    """Return (xi, rho) = (alpha/M, (alpha-1)/(M-1)); rho needs M >= 2."""
    if params.strength < 2:
        raise ValueError(f"rho undefined at strength {params.strength}")
    xi = params.alpha / params.strength
    rho = (params.alpha - 1) / (params.strength - 1)
    return xi, rho


@dataclass(frozen=True)
class ContainmentReport:
    """Measured confidence-scale requirements for posterior-derived indices.

    `eta_unbiased` is the smallest eta such that the posterior mean stays
    inside the frequentist eta-interval at every prefix length n >= n0, maxed
    over sample paths and arms; `eta_confident` is the analogue for the
    posterior-quantile interval at level zeta.  The fitted constants divide
    out the predicted scales M/sqrt(n0) and M/sqrt(n0) + ln(1/zeta).
    """

    eta_unbiased: float
    fitted_c_unbiased: float
    eta_confident: float | None
    fitted_c_confident: float | None
    strength: int
    n0: int
    zeta: float | None
    trials: int


def _required_eta(prefix_means: np.ndarray, indices: np.ndarray, n0: int) -> float:
    """max over steps n >= n0 of n * (index_n - prefix_mean_n)^2."""
    n = np.arange(1, prefix_means.size + 1, dtype=np.float64)
    needed = n * (indices - prefix_means) ** 2
    return float(needed[n0 - 1 :].max())


def bayes_confidence_containment(
    prior1: BetaParams,
    prior2: BetaParams,
    instance: Instance,
    trials: int,
    master_seed: int = 0,
    zeta: float | None = None,
    quantile_steps: int = 64,
) -> ContainmentReport:
    """Measure how large a frequentist confidence scale eta is needed to
    contain posterior-derived indices along simulated reward prefixes.

    For each of `trials` tapes and both arms, scans prefix lengths
    n in [n0, n0 + T]: the posterior-mean index must satisfy
    |mean_index - prefix_mean| <= sqrt(eta/n), and (when `zeta` is given)
    likewise for both endpoints of the posterior quantile interval
    [Q(zeta), Q(1-zeta)], evaluated on the first `quantile_steps` prefixes
    to keep the exact quantile inversions affordable.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    # zeta = 0.5 degenerates the quantile interval to the posterior median,
    # which is still a measurable containment target.
    if zeta is not None and not 0.0 < zeta <= 0.5:
        raise ValueError(f"zeta must lie in (0, 1/2], got {zeta}")
    priors = (prior1, prior2)
    strength = max(p.strength for p in priors)
    eta_unbiased = 0.0
    eta_confident = 0.0 if zeta is not None else None
    for trial in range(trials):
        tape = generate_tape(instance, derive_seed(master_seed, trial))
        for arm in (1, 2):
            prior = priors[arm - 1]
            rewards = tape.entries[arm - 1].astype(np.int64)
            cum = np.cumsum(rewards)
            n = np.arange(1, rewards.size + 1)
            prefix_means = cum / n
            xi = (prior.alpha + cum) / (prior.strength + n)
            eta_unbiased = max(eta_unbiased, _required_eta(prefix_means, xi, instance.n0))
            if zeta is None:
                continue
            stop = min(rewards.size, instance.n0 + quantile_steps)
            for i in range(instance.n0 - 1, stop):
                post = BetaParams(prior.alpha + int(cum[i]), prior.beta + int(i + 1 - cum[i]))
                q_lo = beta_quantile(post, zeta)
                q_hi = beta_quantile(post, 1.0 - zeta)
                dev = max(abs(q_lo - prefix_means[i]), abs(q_hi - prefix_means[i]))
                eta_confident = max(eta_confident, (i + 1) * dev * dev)
    scale = strength / math.sqrt(instance.n0)
    fitted_c_confident = None
    if zeta is not None:
        fitted_c_confident = eta_confident / (scale + math.log(1.0 / zeta))
    return ContainmentReport(
        eta_unbiased=eta_unbiased,
        fitted_c_unbiased=eta_unbiased / scale,
        eta_confident=eta_confident,
        fitted_c_confident=fitted_c_confident,
        strength=strength,
        n0=instance.n0,
        zeta=zeta,
        trials=trials,
    )


@dataclass(frozen=True)
class FiniteSupportPrior:
    """Joint prior on (mu1, mu2) supported on finitely many points.

    Supports correlation across arms; posterior updates are exact Bernoulli
    likelihood reweightings of the support weights.
    """

    support: tuple[tuple[float, float], ...]
    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.support:
            raise ValueError("support must be nonempty")
        if len(self.support) != len(self.weights):
            raise ValueError("support and weights must have equal length")
        for mu1, mu2 in self.support:
            if not (0.0 <= mu1 <= 1.0 and 0.0 <= mu2 <= 1.0):
                raise ValueError(f"support point ({mu1}, {mu2}) outside [0,1]^2")
        if any(w < 0.0 for w in self.weights):
            raise ValueError("weights must be nonnegative")
        if abs(sum(self.weights) - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1, got {sum(self.weights)}")

    @property
    def prior_gap(self) -> float:
        return sum(w * (mu1 - mu2) for (mu1, mu2), w in zip(self.support, self.weights))


@dataclass(frozen=True)
class GreedyPriorResult:
    never_chose_bad_frequency: float
    successes: int
    trials: int
    prior_gap: float
    z_means: dict[int, tuple[float, float]]  # round -> (mean of Z_t, stderr)


def run_bayes_greedy_with_prior(
    prior: FiniteSupportPrior,
    horizon: int,
    trials: int,
    master_seed: int = 0,
    track_rounds: tuple[int, ...] = (),
) -> GreedyPriorResult:
    """Run posterior-mean-greedy agents whose beliefs match the prior the
    means are actually drawn from, and measure how often arm 2 is never
    chosen over `horizon` rounds.

    Per trial, the true pair (mu1, mu2) is drawn from the prior; each agent
    observes the full history, computes Z_t = E[mu1 - mu2 | history] by exact
    reweighting of the support, and picks arm 2 iff Z_t <= 0 (ties favor
    arm 2).  When `track_rounds` is given, the per-round sample mean of Z_t
    is also recorded (with its standard error), which requires simulating
    every trial to the largest tracked round even after arm 2 is chosen.
    """
    if prior.prior_gap <= 0.0:
        raise ValueError(
            f"prior gap must be positive, got {prior.prior_gap}; "
            "arm 1 must be better in prior expectation"
        )
    if horizon < 1 or trials < 1:
        raise ValueError("horizon and trials must be >= 1")
    if any(t < 1 or t > horizon for t in track_rounds):
        raise ValueError(f"track_rounds must lie in [1, {horizon}]")

    rng = np.random.Generator(np.random.PCG64(master_seed))
    support = np.asarray(prior.support)  # (S, 2)
    mu1s, mu2s = support[:, 0], support[:, 1]
    gaps = mu1s - mu2s
    truth_idx = rng.choice(len(prior.support), size=trials, p=np.asarray(prior.weights))
    true_mu = support[truth_idx]  # (trials, 2)

    weights = np.tile(np.asarray(prior.weights), (trials, 1))
    never_bad = np.ones(trials, dtype=bool)
    z_samples: dict[int, np.ndarray] = {}
    last_tracked = max(track_rounds) if track_rounds else 0

    alive = np.arange(trials)
    for t in range(1, horizon + 1):
        if t > last_tracked:
            # Beyond the tracked rounds only the never-chose-bad event matters,
            # so trials that already chose arm 2 can be dropped.
            keep = never_bad[alive]
            alive = alive[keep]
            weights = weights[keep]
            if alive.size == 0:
                break
        z = weights @ gaps
        if t in track_rounds:
            z_samples[t] = z.copy()
        chooses_bad = z <= 0.0  # ties favor arm 2
        never_bad[alive[chooses_bad]] = False
        arm_col = np.where(chooses_bad, 1, 0)  # column into (mu1, mu2)
        p_reward = true_mu[alive, arm_col]
        rewards = rng.random(alive.size) < p_reward
        like = np.where(
            arm_col[:, None] == 0,
            np.where(rewards[:, None], mu1s, 1.0 - mu1s),
            np.where(rewards[:, None], mu2s, 1.0 - mu2s),
        )
        weights = weights * like
        total = weights.sum(axis=1, keepdims=True)
        if np.any(total <= 0.0):
            raise AssertionError("posterior mass vanished; inconsistent prior draw")
        weights = weights / total

    successes = int(never_bad.sum())
    z_means = {
        t: (float(z.mean()), float(z.std(ddof=1) / math.sqrt(z.size)))
        for t, z in z_samples.items()
        if t in track_rounds
    }
    return GreedyPriorResult(
        never_chose_bad_frequency=successes / trials,
        successes=successes,
        trials=trials,
        prior_gap=prior.prior_gap,
        z_means=z_means,
    )
