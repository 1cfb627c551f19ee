"""Trial orchestration: replicated trajectories, failure-probability and
regret estimators with confidence intervals, and parameter sweeps.

Per-trial seeds come from the splitmix64 counter scheme in
:func:`banditlab.core.derive_seed`, and chunk reductions are pure integer
sums (failure counts, bad-pull counts and their squares), so estimates are
bit-identical across any parallelism level under the same master seed.

Two backends execute trials.  Populations built entirely from
confidence-interval interpolations run on the compiled kernel in
:mod:`banditlab._kernel`; everything else (posterior-sampling, Bayesian,
recency agents) runs the reference Python loop in
:mod:`banditlab.engine`.  Backend choice is a pure function of the
population, so any given configuration always takes the same path.
"""

from __future__ import annotations

import itertools
import math
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import _kernel
from .behaviors import PopulationSpec
from .core import Instance, derive_seed, generate_tape
from .engine import run_trajectory

__all__ = [
    "EstimateWithCI",
    "wilson_interval",
    "estimate_failure_probability",
    "estimate_regret",
    "EstimatorSettings",
    "SweepGrid",
    "SweepRow",
    "sweep",
]

SWEEP_AXES = ("eta", "eta_max", "delta", "n0", "horizon", "q")


@dataclass(frozen=True)
class EstimateWithCI:
    """Point estimate with confidence interval; `successes` is set for
    proportions and None for means."""

    point: float
    ci_low: float
    ci_high: float
    trials: int
    successes: int | None
    level: float

    def __post_init__(self) -> None:
        if not self.ci_low <= self.point <= self.ci_high:
            raise ValueError(f"interval must contain the point: {self}")

    @property
    def stderr(self) -> float:
        """Half-width expressed in normal standard errors."""
        z = _normal_quantile(self.level)
        return (self.ci_high - self.ci_low) / (2.0 * z)


def _normal_quantile(level: float) -> float:
    if not 0.0 < level < 1.0:
        raise ValueError(f"confidence level must lie in (0,1), got {level}")
    return statistics.NormalDist().inv_cdf(0.5 + level / 2.0)


def wilson_interval(successes: int, trials: int, level: float = 0.99) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion.

    Valid near 0 and 1, which is the regime of interest for rare failures.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 0 <= successes <= trials:
        raise ValueError(f"need 0 <= successes <= trials, got {successes}/{trials}")
    z = _normal_quantile(level)
    phat = successes / trials
    z2n = z * z / trials
    denom = 1.0 + z2n
    center = (phat + z2n / 2.0) / denom
    half = z * math.sqrt(phat * (1.0 - phat) / trials + z2n / (4.0 * trials)) / denom
    # At the extremes the algebraic endpoints are exactly 0 and 1.
    low = 0.0 if successes == 0 else max(0.0, center - half)
    high = 1.0 if successes == trials else min(1.0, center + half)
    return low, high


def _chunk_bounds(trials: int, parallelism: int) -> list[tuple[int, int]]:
    size = -(-trials // parallelism)
    return [(s, min(size, trials - s)) for s in range(0, trials, size)]


def _simulate_chunk(args) -> tuple[int, int, int]:
    """Run trials [start, start+count); return integer sums
    (failures at threshold, total bad pulls, total squared bad pulls)."""
    (instance, population, master_seed, start, count, stop_after, threshold, use_kernel) = args
    if use_kernel:
        comps = population.interpolated_components()
        etas = np.array([c[0] for c in comps], dtype=np.float64)
        lam1s = np.array([c[1] for c in comps], dtype=np.float64)
        lam2s = np.array([c[2] for c in comps], dtype=np.float64)
        cumw = np.cumsum(np.array([c[3] for c in comps], dtype=np.float64))
        seeds = np.array(
            [derive_seed(master_seed, i) for i in range(start, start + count)],
            dtype=np.uint64,
        )
        good, rounds = _kernel.simulate_interpolated(
            instance.mu1,
            instance.mu2,
            instance.n0,
            instance.horizon,
            etas,
            lam1s,
            lam2s,
            cumw,
            seeds,
            -1 if stop_after is None else stop_after,
        )
        bad = rounds - good
        return (
            int((good <= threshold).sum()),
            int(bad.sum()),
            int((bad.astype(np.int64) ** 2).sum()),
        )
    failures = 0
    bad_sum = 0
    bad_sq = 0
    for i in range(start, start + count):
        tape = generate_tape(instance, derive_seed(master_seed, 2 * i))
        rng = np.random.Generator(np.random.PCG64(derive_seed(master_seed, 2 * i + 1)))
        traj = run_trajectory(instance, population, tape, rng, stop_after_good_pulls=stop_after)
        failures += traj.good_arm_pulls_beyond_init <= threshold
        bad_sum += traj.bad_arm_pulls_beyond_init
        bad_sq += traj.bad_arm_pulls_beyond_init**2
    return failures, bad_sum, bad_sq


def _run_trials(
    instance: Instance,
    population: PopulationSpec,
    trials: int,
    master_seed: int,
    parallelism: int,
    stop_after: int | None,
    threshold: int,
    backend: str,
) -> tuple[int, int, int]:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")
    if backend not in ("auto", "fast", "python"):
        raise ValueError(f"unknown backend {backend!r}")
    eligible = population.interpolated_components() is not None
    if backend == "fast" and not eligible:
        raise ValueError("population is not eligible for the compiled backend")
    use_kernel = eligible and backend != "python"
    jobs = [
        (instance, population, master_seed, start, count, stop_after, threshold, use_kernel)
        for start, count in _chunk_bounds(trials, parallelism)
    ]
    if parallelism == 1:
        results = [_simulate_chunk(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            results = list(pool.map(_simulate_chunk, jobs))
    failures = sum(r[0] for r in results)
    bad_sum = sum(r[1] for r in results)
    bad_sq = sum(r[2] for r in results)
    return failures, bad_sum, bad_sq


def estimate_failure_probability(
    instance: Instance,
    population: PopulationSpec,
    n: int = 0,
    trials: int = 10_000,
    master_seed: int = 0,
    parallelism: int = 1,
    ci_level: float = 0.99,
    early_exit: bool = True,
    backend: str = "auto",
) -> EstimateWithCI:
    """Proportion of trials in which all but at most n agents chose the bad
    arm, with a Wilson interval.

    `early_exit` stops each trial at the (n+1)-th good-arm pull, which fixes
    the failure indicator without running the remaining rounds; it never
    mixes with full runs inside one estimate.
    """
    if instance.mu1 <= instance.mu2:
        raise ValueError("failure estimation needs mu1 > mu2 (arm 1 is the good arm)")
    if not 0 <= n <= instance.horizon:
        raise ValueError(f"failure threshold must lie in [0, {instance.horizon}]")
    stop_after = n if early_exit else None
    failures, _, _ = _run_trials(
        instance, population, trials, master_seed, parallelism, stop_after, n, backend
    )
    low, high = wilson_interval(failures, trials, ci_level)
    return EstimateWithCI(
        point=failures / trials,
        ci_low=low,
        ci_high=high,
        trials=trials,
        successes=failures,
        level=ci_level,
    )


def estimate_regret(
    instance: Instance,
    population: PopulationSpec,
    trials: int = 10_000,
    master_seed: int = 0,
    parallelism: int = 1,
    ci_level: float = 0.99,
    backend: str = "auto",
) -> EstimateWithCI:
    """Mean pseudo-regret gap * (bad pulls) across full trials, with a
    CLT interval.  Bad-pull counts and their squares are accumulated as
    integers, so the estimate is exact in the trial outcomes."""
    failures, bad_sum, bad_sq = _run_trials(
        instance, population, trials, master_seed, parallelism, None, 0, backend
    )
    delta = instance.gap
    mean_bad = bad_sum / trials
    point = delta * mean_bad
    if trials > 1:
        var_bad = (bad_sq - trials * mean_bad * mean_bad) / (trials - 1)
        se = abs(delta) * math.sqrt(max(0.0, var_bad) / trials)
    else:
        se = 0.0
    z = _normal_quantile(ci_level)
    return EstimateWithCI(
        point=point,
        ci_low=point - z * se,
        ci_high=point + z * se,
        trials=trials,
        successes=None,
        level=ci_level,
    )


@dataclass(frozen=True)
class EstimatorSettings:
    """Which estimator a sweep runs at every grid point, and how."""

    metric: str = "failure"  # "failure" | "regret"
    failure_threshold: int = 0
    trials: int = 10_000
    master_seed: int = 0
    parallelism: int = 1
    ci_level: float = 0.99
    early_exit: bool = True
    backend: str = "auto"

    def __post_init__(self) -> None:
        if self.metric not in ("failure", "regret"):
            raise ValueError(f"unknown metric {self.metric!r}")


@dataclass(frozen=True)
class SweepGrid:
    """Cross product of named axes, enumerated row-major: the first axis
    varies slowest and the last axis fastest."""

    axes: tuple[tuple[str, tuple[float, ...]], ...]

    def __post_init__(self) -> None:
        if not self.axes:
            raise ValueError("sweep grid needs at least one axis")
        seen = set()
        for name, values in self.axes:
            if name not in SWEEP_AXES:
                raise ValueError(f"unknown sweep axis {name!r}; valid: {SWEEP_AXES}")
            if name in seen:
                raise ValueError(f"duplicate sweep axis {name!r}")
            if not values:
                raise ValueError(f"sweep axis {name!r} has no values")
            seen.add(name)

    @property
    def size(self) -> int:
        return math.prod(len(values) for _, values in self.axes)

    def points(self) -> list[dict[str, float]]:
        names = [name for name, _ in self.axes]
        value_lists = [values for _, values in self.axes]
        return [dict(zip(names, combo)) for combo in itertools.product(*value_lists)]


@dataclass(frozen=True)
class SweepRow:
    index: int
    params: dict[str, float]
    estimate: EstimateWithCI
    metric: str
    seed: int
    wall_seconds: float


def _override_population_scale(population: PopulationSpec, field: str, value: float) -> PopulationSpec:
    touched = False
    components = []
    for behavior, w in population.components:
        if hasattr(behavior, field):
            behavior = replace(behavior, **{field: value})
            touched = True
        components.append((behavior, w))
    if not touched:
        raise ValueError(f"no behavior in the population has a {field!r} parameter")
    return PopulationSpec(components=tuple(components))


def apply_sweep_point(
    instance: Instance, population: PopulationSpec, params: dict[str, float]
) -> tuple[Instance, PopulationSpec]:
    """Materialize one grid point.

    `delta` moves the arm means symmetrically about their current midpoint;
    `q` reassigns the first mixture component's probability, rescaling the
    rest; `eta`/`eta_max` rewrite every behavior carrying that parameter.
    """
    for name, value in params.items():
        if name == "delta":
            center = (instance.mu1 + instance.mu2) / 2.0
            instance = replace(instance, mu1=center + value / 2.0, mu2=center - value / 2.0)
        elif name == "n0":
            instance = replace(instance, n0=int(value))
        elif name == "horizon":
            instance = replace(instance, horizon=int(value))
        elif name in ("eta", "eta_max"):
            population = _override_population_scale(population, name, value)
        elif name == "q":
            if len(population.components) < 2:
                raise ValueError("axis 'q' needs a population with >= 2 components")
            if not 0.0 < value < 1.0:
                raise ValueError(f"axis 'q' values must lie in (0,1), got {value}")
            first, rest = population.components[0], population.components[1:]
            rest_total = sum(w for _, w in rest)
            scaled = tuple((b, w * (1.0 - value) / rest_total) for b, w in rest)
            population = PopulationSpec(components=((first[0], value),) + scaled)
        else:
            raise ValueError(f"unknown sweep axis {name!r}")
    return instance, population


def sweep(
    instance: Instance,
    population: PopulationSpec,
    grid: SweepGrid,
    settings: EstimatorSettings,
    start_index: int = 0,
) -> list[SweepRow]:
    """Run the configured estimator at every grid point (from `start_index`
    on, for resumption).  Each point gets its own seed derived from
    (master seed, grid index), so rows are independent and reproducible
    row by row."""
    rows = []
    for index, params in enumerate(grid.points()):
        if index < start_index:
            continue
        point_instance, point_population = apply_sweep_point(instance, population, params)
        seed = derive_seed(settings.master_seed, index)
        started = time.perf_counter()
        if settings.metric == "failure":
            estimate = estimate_failure_probability(
                point_instance,
                point_population,
                n=settings.failure_threshold,
                trials=settings.trials,
                master_seed=seed,
                parallelism=settings.parallelism,
                ci_level=settings.ci_level,
                early_exit=settings.early_exit,
                backend=settings.backend,
            )
        else:
            estimate = estimate_regret(
                point_instance,
                point_population,
                trials=settings.trials,
                master_seed=seed,
                parallelism=settings.parallelism,
                ci_level=settings.ci_level,
                backend=settings.backend,
            )
        rows.append(
            SweepRow(
                index=index,
                params=params,
                estimate=estimate,
                metric=settings.metric,
                seed=seed,
                wall_seconds=time.perf_counter() - started,
            )
        )
    return rows
