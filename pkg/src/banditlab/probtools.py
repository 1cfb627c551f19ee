"""Probability toolbox: Bernoulli KL, exact binomial tails, the exponential
supermartingale and its maximal-inequality consequences, clean-event checks
on reward tapes, and evaluable bound shapes with free constants.

The closed-form pieces (KL, binomial tail, the root `u` of the martingale
base equation) are exact up to float rounding and serve as oracles for the
asymptotic bounds, whose hidden constants are exposed as fittable fields of
:class:`BoundShape` rather than assumed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Mapping

import numpy as np

from .core import Instance, RewardTape

__all__ = [
    "kl_bernoulli",
    "binomial_tail_exact",
    "anti_concentration_floor",
    "fit_anti_concentration_constants",
    "AntiConcentrationFit",
    "martingale_u",
    "uniform_prefix_floor",
    "prefix_event_probability",
    "ville_exceedance",
    "martingale_mean_at",
    "maximal_deviation_frequency",
    "clean_event_check",
    "BoundShape",
    "ShapeReport",
    "initial_samples_threshold",
    "theorem_shapes",
]


def kl_bernoulli(q: float, p: float) -> float:
    """KL divergence D(Bernoulli(q) || Bernoulli(p)).

    Boundary values of q are handled by the usual 0*log(0) = 0 convention;
    p on the boundary with q != p has infinite divergence and is rejected.
    """
    if not (0.0 <= q <= 1.0 and 0.0 <= p <= 1.0):
        raise ValueError(f"need q, p in [0,1], got q={q}, p={p}")
    if p in (0.0, 1.0):
        if q == p:
            return 0.0
        raise ValueError(f"D({q}||{p}) is infinite")
    if q == 0.0:
        return -math.log1p(-p)
    if q == 1.0:
        return -math.log(p)
    return q * math.log(q / p) + (1.0 - q) * math.log((1.0 - q) / (1.0 - p))


def binomial_tail_exact(n: int, p: float, k: int) -> float:
    """Exact lower tail Pr[Binomial(n, p) <= k] via log-space term recursion.

    Terms are accumulated as log-pmf values (cumulative sum of the log ratio
    between consecutive terms) and combined with a max-shifted exponential
    sum, so the result is stable down to tails around exp(-700).
    """
    if not isinstance(n, int) or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    if n > 10**6:
        raise ValueError(f"n too large for term summation, got {n}")
    if not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n, got k={k}, n={n}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0,1], got {p}")
    if k == n or p == 0.0:
        return 1.0
    if p == 1.0:
        return 0.0
    log_p0 = n * math.log1p(-p)
    if k == 0:
        return math.exp(log_p0)
    i = np.arange(1, k + 1, dtype=np.float64)
    log_ratios = np.log((n - i + 1.0) / i) + (math.log(p) - math.log1p(-p))
    log_terms = np.empty(k + 1)
    log_terms[0] = 0.0
    np.cumsum(log_ratios, out=log_terms[1:])
    log_terms += log_p0
    m = log_terms.max()
    return float(min(1.0, math.exp(m) * np.exp(log_terms - m).sum()))


@dataclass(frozen=True)
class AntiConcentrationFit:
    """Constants (c_f, C_f) of the lower-tail floor c_f * exp(-C_f n (p-q)^2),
    fitted so the floor never exceeds the exact binomial tail on the grid."""

    c_f: float
    C_f: float
    grid_size: int
    verified: bool
    min_slack: float  # min of exact_tail - floor across the grid


def anti_concentration_floor(
    n: int, p: float, q: float, c_f: float, C_f: float, c: float | None = None
) -> float:
    """Evaluate the fitted anti-concentration floor c_f * exp(-C_f n (p-q)^2).

    When the interiority constant `c` is supplied, the hypotheses
    n >= 1/c, q in (c/8, p), p in (c, 1-c) are enforced.
    """
    if c is not None:
        if n < 1.0 / c:
            raise ValueError(f"need n >= 1/c = {1.0 / c:.3f}, got n={n}")
        if not (c / 8.0 < q < p):
            raise ValueError(f"need q in (c/8, p) = ({c / 8.0}, {p}), got q={q}")
        if not (c < p < 1.0 - c):
            raise ValueError(f"need p in (c, 1-c) = ({c}, {1.0 - c}), got p={p}")
    return min(1.0, max(0.0, c_f * math.exp(-C_f * n * (p - q) ** 2)))


def fit_anti_concentration_constants(
    grid: list[tuple[int, float, float]],
) -> AntiConcentrationFit:
    """Fit (c_f, C_f) against exact binomial tails on a grid of (n, p, q).

    The decay rate C_f comes from a least-squares fit of log tail versus
    n (p-q)^2; the leading constant is then shrunk so the floor sits below
    the exact tail at every grid point (fit-then-verify).
    """
    if not grid:
        raise ValueError("empty fitting grid")
    xs, log_tails = [], []
    for n, p, q in grid:
        k = int(math.floor(q * n + 1e-9))
        tail = binomial_tail_exact(n, p, k)
        if tail <= 0.0:
            raise ValueError(f"tail underflowed at grid point {(n, p, q)}")
        xs.append(n * (p - q) ** 2)
        log_tails.append(math.log(tail))
    xs = np.asarray(xs)
    log_tails = np.asarray(log_tails)
    slope = np.polyfit(xs, log_tails, 1)[0] if len(grid) > 1 else -1.0
    C_f = max(1e-12, -slope)
    c_f = float(np.exp((log_tails + C_f * xs).min()))
    slack = float(np.min(np.exp(log_tails) - c_f * np.exp(-C_f * xs)))
    return AntiConcentrationFit(
        c_f=c_f, C_f=C_f, grid_size=len(grid), verified=slack >= -1e-15, min_slack=slack
    )


def martingale_u(p: float, q: float) -> tuple[float, float]:
    """Solve p*u^(1-q) + (1-p)*u^(-q) = 1 for u in (0, 1) by bisection.

    Returns (u, x0) where x0 = (1-p)q / (p(1-q)) is the stationary point of
    the left-hand side; the root always satisfies u <= x0, which is asserted.
    The residual of the returned root is at most 1e-12.
    """
    if not (0.0 < q < p < 1.0):
        raise ValueError(f"need 0 < q < p < 1, got q={q}, p={p}")

    def f(u: float) -> float:
        return p * u ** (1.0 - q) + (1.0 - p) * u ** (-q) - 1.0

    x0 = (1.0 - p) * q / (p * (1.0 - q))
    # f decreases from +inf on (0, x0) and f(x0) < 0, so the root is bracketed
    # once a positive left endpoint is found.
    lo = x0 / 2.0
    while f(lo) <= 0.0:
        lo /= 2.0
        if lo < 1e-300:
            raise AssertionError(f"failed to bracket root for p={p}, q={q}")
    hi = x0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-17 * hi:
            break
    u = 0.5 * (lo + hi)
    residual = abs(f(u))
    if residual > 1e-12:
        raise AssertionError(f"bisection residual {residual:.3e} > 1e-12 at p={p}, q={q}")
    if u > x0 * (1.0 + 1e-12):
        raise AssertionError(f"root u={u} exceeds x0={x0}")
    return u, x0


def uniform_prefix_floor(p: float, q: float) -> float:
    """Lower bound p*(1 - u^(1-q)) on Pr[every prefix mean of an i.i.d.
    Bernoulli(p) sequence stays >= q].

    At q = 0 the base equation degenerates (u -> 1) and the floor is 0,
    which is still valid since the event is certain there.
    """
    if not (0.0 <= q < p < 1.0):
        raise ValueError(f"need 0 <= q < p < 1, got q={q}, p={p}")
    if q == 0.0:
        return 0.0
    u, _ = martingale_u(p, q)
    return p * (1.0 - u ** (1.0 - q))


def _prefix_margin_survival(
    p: float,
    q: float,
    thresh: float,
    paths: int,
    horizon: int,
    seed: int,
    block: int = 512,
    slab: int = 8192,
) -> float:
    """Fraction of Bernoulli(p) paths whose running margin sum(X_i) - q*n
    stays strictly above `thresh` for every n in [1, horizon].

    Paths are processed in slabs of at most `slab` rows and scanned in time
    blocks of `block` steps, dropping rows as soon as they cross; memory
    stays bounded by slab*block and crossed paths cost nothing further.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    survivors = 0
    for slab_start in range(0, paths, slab):
        rows = min(slab, paths - slab_start)
        carry = np.zeros(rows)
        n_done = 0
        while n_done < horizon and carry.size > 0:
            w = min(block, horizon - n_done)
            x = rng.random((carry.size, w)) < p
            margins = np.cumsum(x, axis=1, dtype=np.float64)
            margins -= q * np.arange(1.0, w + 1.0)
            margins += carry[:, None]
            ok = margins.min(axis=1) > thresh
            carry = margins[ok, -1]
            n_done += w
        survivors += carry.size
    return survivors / paths


def prefix_event_probability(
    p: float, q: float, horizon: int, paths: int, seed: int
) -> tuple[float, int]:
    """Monte Carlo probability that all prefix means up to `horizon` are >= q.

    Returns (frequency, successes).  Truncating the all-n event at a finite
    horizon only enlarges it, so this estimate is an upper-biased check for
    :func:`uniform_prefix_floor`.
    """
    if not (0.0 <= q < p < 1.0):
        raise ValueError(f"need 0 <= q < p < 1, got q={q}, p={p}")
    # Margin comparison is >= 0 on an integer-valued sum minus q*n; the small
    # epsilon absorbs float error in q*n without crossing the lattice gap.
    frac = _prefix_margin_survival(p, q, -1e-9, paths, horizon, seed)
    return frac, round(frac * paths)


def ville_exceedance(
    p: float, q: float, x: float, horizon: int, paths: int, seed: int
) -> tuple[float, float]:
    """Empirical frequency of max_n Z_n >= x for Z_n = u^(sum(X_i - q)).

    Returns (frequency, bound) with bound = min(1, 1/x) from the maximal
    inequality for positive supermartingales with E[Z_0] = 1.
    """
    if x <= 0.0:
        raise ValueError(f"x must be positive, got {x}")
    bound = min(1.0, 1.0 / x)
    if x <= 1.0:
        return 1.0, bound  # Z_0 = 1 already reaches x
    u, _ = martingale_u(p, q)
    thresh = math.log(x) / math.log(u)  # log u < 0 flips the inequality
    frac = _prefix_margin_survival(p, q, thresh, paths, horizon, seed)
    return 1.0 - frac, bound


def martingale_mean_at(
    p: float, q: float, n: int, paths: int, seed: int
) -> tuple[float, float]:
    """Sample mean and standard error of Z_n = u^(sum(X_i - q)) at fixed n.

    E[Z_n] = 1 exactly, by the defining equation of u.
    """
    u, _ = martingale_u(p, q)
    rng = np.random.Generator(np.random.PCG64(seed))
    s = rng.binomial(n, p, size=paths)
    z = u ** (s - q * n)
    return float(z.mean()), float(z.std(ddof=1) / math.sqrt(paths))


def maximal_deviation_frequency(
    n: int, mu: float, x: float, paths: int, seed: int
) -> tuple[float, float]:
    """Empirical frequency of any prefix sum deviating from its mean by > x,
    against the constant-free maximal bound 2*exp(-2x^2/n)."""
    rng = np.random.Generator(np.random.PCG64(seed))
    draws = (rng.random((paths, n)) < mu).astype(np.float64)
    dev = np.cumsum(draws - mu, axis=1)
    freq = float((np.abs(dev).max(axis=1) > x).mean())
    return freq, min(1.0, 2.0 * math.exp(-2.0 * x * x / n))


def clean_event_check(
    tape: RewardTape, mu1: float, mu2: float, eta: float
) -> tuple[bool, bool]:
    """Scan a realized tape for the two clean events at level eta.

    Event 1: every prefix UCB of arm 1 stays >= mu1 - gap/2.
    Event 2: every prefix UCB of arm 2 with index >= 64*eta/gap^2 stays
    <= mu2 + gap/4 (vacuous when the cutoff exceeds the tape).
    """
    delta = mu1 - mu2
    if delta <= 0.0:
        raise ValueError(f"need mu1 > mu2, got ({mu1}, {mu2})")
    length = tape.length
    counts = np.arange(1, length + 1, dtype=np.float64)
    half = np.sqrt(eta / counts)
    ucb1 = np.minimum(1.0, tape.entries[0].cumsum() / counts + half)
    ucb2 = np.minimum(1.0, tape.entries[1].cumsum() / counts + half)
    clean1 = bool(np.all(ucb1 >= mu1 - delta / 2.0))
    cutoff = max(1, math.ceil(64.0 * eta / delta**2))
    clean2 = True if cutoff > length else bool(
        np.all(ucb2[cutoff - 1 :] <= mu2 + delta / 4.0)
    )
    return clean1, clean2


@dataclass(frozen=True)
class BoundShape:
    """An evaluable bound of the form

        leading * prefactor * exp(-sum_k coeff_k * term_k) + add_coeff * add_value

    with the free constants (leading, the exponent coefficients, and the
    additive coefficient) exposed for fitting.  Probability-kind shapes are
    clamped to [0, 1] on evaluation.
    """

    name: str
    kind: str  # "probability" or "regret"
    exponent_coefficients: Mapping[str, float]
    term_values: Mapping[str, float]
    leading_coefficient: float = 1.0
    prefactor: float = 1.0
    additive_coefficient: float = 0.0
    additive_value: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in ("probability", "regret"):
            raise ValueError(f"unknown shape kind {self.kind!r}")
        missing = set(self.exponent_coefficients) - set(self.term_values)
        if missing:
            raise ValueError(f"terms without values: {sorted(missing)}")
        for label, value in self.term_values.items():
            if not math.isfinite(value):
                raise ValueError(f"term {label!r} is not finite: {value}")

    def value(self) -> float:
        expo = sum(
            coeff * self.term_values[label]
            for label, coeff in self.exponent_coefficients.items()
        )
        v = self.leading_coefficient * self.prefactor * math.exp(-expo)
        v += self.additive_coefficient * self.additive_value
        if self.kind == "probability":
            v = min(1.0, max(0.0, v))
        return v

    def with_constants(
        self,
        leading_coefficient: float | None = None,
        exponent_coefficients: Mapping[str, float] | None = None,
        additive_coefficient: float | None = None,
    ) -> "BoundShape":
        changes = {}
        if leading_coefficient is not None:
            changes["leading_coefficient"] = leading_coefficient
        if exponent_coefficients is not None:
            changes["exponent_coefficients"] = dict(exponent_coefficients)
        if additive_coefficient is not None:
            changes["additive_coefficient"] = additive_coefficient
        return replace(self, **changes)


def initial_samples_threshold(eta: float, c: float) -> int:
    """The pivot count ceil(64*eta/c^2 + 1/c) separating the large- and
    small-initial-sample failure regimes."""
    if not 0.0 < c < 0.5:
        raise ValueError(f"need c in (0, 1/2), got {c}")
    if eta < 0.0:
        raise ValueError(f"eta must be nonnegative, got {eta}")
    return math.ceil(64.0 * eta / c**2 + 1.0 / c)


@dataclass(frozen=True)
class ShapeReport:
    shapes: dict[str, BoundShape]
    margin_assumption_holds: bool | None
    initial_samples_assumption_holds: bool | None
    n_star: int | None


def _gap_log_term(delta: float) -> float:
    """delta * (1 + ln(1/delta)), continuously extended to 0 at delta = 0."""
    if delta == 0.0:
        return 0.0
    return delta * (1.0 + math.log(1.0 / delta))


def theorem_shapes(
    instance: Instance,
    eta: float,
    eta_max: float | None = None,
    q: float | None = None,
) -> ShapeReport:
    """Build the named bound shapes for an instance, with unit free constants.

    Failure floors cover confident agents (exponent in eta + n0*gap^2), the
    small-gap specialization (eta only), the unbiased case (n0*gap^2 only),
    and the small-n0 regime (c^(2 N*)); regret ceilings cover plain optimism,
    interval optimism (scale eta_max), and optimist mixtures (scale eta_max/q).
    Assumption flags are reported, never enforced.
    """
    if eta < 0.0:
        raise ValueError(f"eta must be nonnegative, got {eta}")
    delta = instance.gap
    n0 = instance.n0
    horizon = instance.horizon
    shapes: dict[str, BoundShape] = {}

    floor_prefactor = delta + math.sqrt(eta / n0)
    shapes["confident_failure_floor"] = BoundShape(
        name="confident_failure_floor",
        kind="probability",
        prefactor=floor_prefactor,
        exponent_coefficients={"eta": 1.0, "n0_gap_sq": 1.0},
        term_values={"eta": eta, "n0_gap_sq": n0 * delta**2},
    )
    shapes["small_gap_failure_floor"] = BoundShape(
        name="small_gap_failure_floor",
        kind="probability",
        prefactor=floor_prefactor,
        exponent_coefficients={"eta": 1.0},
        term_values={"eta": eta},
    )
    shapes["unbiased_failure_floor"] = BoundShape(
        name="unbiased_failure_floor",
        kind="probability",
        prefactor=delta,
        exponent_coefficients={"n0_gap_sq": 1.0},
        term_values={"n0_gap_sq": n0 * delta**2},
    )

    def regret_ceiling(name: str, phi: float) -> BoundShape:
        return BoundShape(
            name=name,
            kind="regret",
            prefactor=horizon * _gap_log_term(delta),
            exponent_coefficients={"eta": 1.0},
            term_values={"eta": eta},
            additive_coefficient=1.0,
            additive_value=phi / delta if delta > 0.0 else 0.0,
        )

    shapes["optimist_regret_ceiling"] = regret_ceiling("optimist_regret_ceiling", eta)
    if eta_max is not None:
        if eta_max < eta:
            raise ValueError(f"need eta_max >= eta, got {eta_max} < {eta}")
        shapes["interval_optimist_regret_ceiling"] = regret_ceiling(
            "interval_optimist_regret_ceiling", eta_max
        )
        if q is not None:
            if not 0.0 < q <= 1.0:
                raise ValueError(f"need mixture probability q in (0, 1], got {q}")
            shapes["mixture_regret_ceiling"] = regret_ceiling(
                "mixture_regret_ceiling", eta_max / q
            )

    n_star = None
    if instance.margin_c > 0.0:
        c = instance.margin_c
        n_star = initial_samples_threshold(eta, c)
        shapes["small_n0_failure_floor"] = BoundShape(
            name="small_n0_failure_floor",
            kind="probability",
            exponent_coefficients={"n_star_log": 1.0},
            term_values={"n_star_log": 2.0 * n_star * math.log(1.0 / c)},
        )

    return ShapeReport(
        shapes=shapes,
        margin_assumption_holds=instance.margin_assumption_holds(),
        initial_samples_assumption_holds=instance.initial_samples_assumption_holds(eta),
        n_star=n_star,
    )
