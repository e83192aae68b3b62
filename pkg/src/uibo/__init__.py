"""Bayesian optimisation when queries land at noisy, partially observed
locations.

The core model is a GP over probability distributions built from kernel
mean embeddings of Gaussian inputs; on top of it sit a distribution-input
UCB method, point-input UCB and unscented-EI baselines, and a regret
benchmark harness with executable checks of the supporting theory.
"""

from .acquisition import (
    AcquisitionConfig,
    BetaSchedule,
    beta_value,
    maximize_acquisition,
    ucb_score,
    uei_score,
    unscented_points,
)
from .config import (
    ConfigError,
    ExperimentConfig,
    ObjectiveSpec,
    config_to_dict,
    load_config,
)
from .gp import NumericalError, UncertainGP
from .harness import (
    ExperimentResult,
    RegretTrace,
    TrialSetup,
    instantaneous_regret,
    prepare_trial,
    rho_q,
    run_experiment,
    run_trial,
    write_outputs,
)
from .kernels import (
    GaussianInput,
    SEKernelParams,
    expected_rkhs_value,
    se_gram,
    se_kernel,
    uncertain_se_kernel,
    uncertain_se_kernel_matrix,
)
from .noise import (
    NoiseConfig,
    QueryOutcome,
    execute_query,
    pinsker_bound,
    se_lipschitz_constant,
    subgaussian_sigma_bounded,
    subgaussian_sigma_gaussian,
)
from .objectives import (
    BenchmarkObjective,
    RKHSObjective,
    eval_objective,
    expected_objective,
    expected_optimum,
    sample_rkhs_objective,
)
from .theory import TheoryCheckReport, theory_check_suite

__version__ = "0.1.0"

__all__ = [
    "AcquisitionConfig",
    "BenchmarkObjective",
    "BetaSchedule",
    "ConfigError",
    "ExperimentConfig",
    "ExperimentResult",
    "GaussianInput",
    "NoiseConfig",
    "NumericalError",
    "ObjectiveSpec",
    "QueryOutcome",
    "RKHSObjective",
    "RegretTrace",
    "SEKernelParams",
    "TheoryCheckReport",
    "TrialSetup",
    "UncertainGP",
    "beta_value",
    "config_to_dict",
    "eval_objective",
    "execute_query",
    "expected_objective",
    "expected_optimum",
    "expected_rkhs_value",
    "instantaneous_regret",
    "load_config",
    "maximize_acquisition",
    "pinsker_bound",
    "prepare_trial",
    "rho_q",
    "run_experiment",
    "run_trial",
    "sample_rkhs_objective",
    "se_gram",
    "se_kernel",
    "se_lipschitz_constant",
    "subgaussian_sigma_bounded",
    "subgaussian_sigma_gaussian",
    "theory_check_suite",
    "ucb_score",
    "uei_score",
    "uncertain_se_kernel",
    "uncertain_se_kernel_matrix",
    "unscented_points",
    "write_outputs",
]
