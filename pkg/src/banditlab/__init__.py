"""Monte Carlo laboratory for two-armed bandit social learning.

Sequential myopic agents observe the full history, score each arm with an
index consistent with truncated confidence bounds (or with a Bayesian
posterior), and pick the higher index.  The package simulates these
dynamics at scale, estimates sampling-failure probabilities and
pseudo-regret with confidence intervals, cross-checks small instances
against an exact enumeration oracle, and numerically validates the
supporting probability toolbox.
"""

from .bayes import (
    BetaParams,
    FiniteSupportPrior,
    bayes_confidence_containment,
    beta_cdf,
    beta_quantile,
    posterior_summary,
    run_bayes_greedy_with_prior,
    sample_beta,
)
from .behaviors import (
    BayesConfident,
    BayesUnbiased,
    Behavior,
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
from .core import (
    ArmStats,
    ConfidenceInterval,
    Instance,
    RewardTape,
    confidence_bounds,
    derive_seed,
    generate_tape,
    tape_prefix_bounds,
)
from .engine import Trajectory, detect_sampling_failure, run_trajectory
from .montecarlo import (
    EstimateWithCI,
    EstimatorSettings,
    SweepGrid,
    SweepRow,
    estimate_failure_probability,
    estimate_regret,
    sweep,
    wilson_interval,
)
from .oracle import ExactResult, enumerate_exact
from .probtools import (
    BoundShape,
    ShapeReport,
    binomial_tail_exact,
    clean_event_check,
    initial_samples_threshold,
    kl_bernoulli,
    martingale_u,
    theorem_shapes,
    uniform_prefix_floor,
)

__version__ = "0.1.0"
