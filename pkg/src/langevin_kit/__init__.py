"""Langevin Monte Carlo for strongly log-concave targets.

Samplers (first- and second-order, exact or noisy gradients), closed-form
Wasserstein-2 guarantees, iteration planning and exact W2 ground truth on
Gaussian targets.
"""

from .bounds import (
    BoundQuery,
    BoundValue,
    bound_dm,
    bound_propB,
    bound_thm1,
    bound_thm2,
    bound_thm3,
    bound_thm4,
    bound_thm5,
    one_step_recursion,
    recursion_iterate,
    recursion_lemE,
    recursion_lemI,
)
from .config import ExperimentConfig, load_config
from .exceptions import (
    ConfigError,
    DimensionError,
    HypothesisError,
    HypothesisWarning,
    InfeasibleError,
    LangevinKitError,
    MissingOracleError,
)
from .metrics import (
    GaussianLaw,
    empirical_w2,
    gaussian_w2,
    lmc_pushforward,
    lmco_pushforward,
    moment_report,
    target_law,
)
from .model import (
    DiagonalGaussian,
    FiniteSumQuadratic,
    FunctionTarget,
    GaussianMeanMixture,
    IsotropicGaussian,
    MixtureTarget,
    RidgeLogistic,
    ScaledTarget,
    Target,
    TargetCertificate,
    certify,
    initial_w2_bound,
)
from .noise import GaussianNoise, StateDependentBias, SubsampledGradient, ZeroNoise, certify_condition_n
from .planner import PlanResult, figure1_summary, figure1_table, min_iterations, sufficient_pair
from .samplers import (
    ChainState,
    ChainTrace,
    StepSchedule,
    compute_K1,
    lmc_ensemble,
    lmc_run,
    lmco_prime_run,
    lmco_run,
    mlmc_ensemble,
    mlmc_run,
    nlmc_run,
    tau_scaled_run,
)

__version__ = "0.1.0"
