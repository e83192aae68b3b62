"""Optimisation loop, regret accounting, and the multi-trial benchmark runner.

Each trial draws a fresh objective (for the expansion family), computes the
noise-smoothed reference optimum once, then runs every configured method
against the same objective with common random numbers, so per-trial method
comparisons are paired.  Per-iteration records hold the commanded target,
the true query location, the observation, the confidence parameter, and
the instantaneous and running-mean regret against the reference optimum.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .acquisition import AcquisitionConfig, BetaSchedule, beta_value, maximize_acquisition
from .config import ConfigError, ExperimentConfig, config_to_dict
from .gp import NumericalError, UncertainGP
from .kernels import GaussianInput
from .noise import (
    NoiseConfig,
    execute_query,
    se_lipschitz_constant,
    subgaussian_sigma_gaussian,
)
from .objectives import (
    BenchmarkObjective,
    expected_objective,
    expected_optimum,
)

__all__ = [
    "RegretTrace",
    "TrialSetup",
    "ExperimentResult",
    "instantaneous_regret",
    "rho_q",
    "prepare_trial",
    "run_trial",
    "run_experiment",
    "write_outputs",
    "CSV_HEADER",
]

CSV_HEADER = "trial,t,method,x_target,x_true,y,beta,regret,mean_regret"


# ----------------------------------------------------------------------
# regret accounting


def instantaneous_regret(obj: BenchmarkObjective, cfg: NoiseConfig, target,
                         reference_opt: float, mc: int = 1000,
                         rng_seed: int = 0) -> float:
    """Reference optimum minus the expected objective at the chosen target."""
    value = expected_objective(obj, target, cfg.exec_cov, mc_samples=mc,
                               rng_seed=rng_seed)
    return reference_opt - value


def rho_q(obj: BenchmarkObjective, cfg: NoiseConfig, budget: int = 100_000,
          rng_seed: int = 0, mc_samples: int = 1000) -> float:
    """Gap between the noiseless maximum and the best noise-smoothed value.

    Both maxima come from the same search procedure (and candidate seed),
    so the gap is non-negative up to the search tolerance.
    """
    zero = np.zeros_like(cfg.exec_cov)
    _, noiseless = expected_optimum(obj, zero, budget, rng_seed, mc_samples)
    _, smoothed = expected_optimum(obj, cfg.exec_cov, budget, rng_seed, mc_samples)
    return noiseless - smoothed


# ----------------------------------------------------------------------
# per-trial context


@dataclass(frozen=True)
class TrialSetup:
    """Objective and cached reference quantities shared by all methods."""

    trial: int
    objective: BenchmarkObjective
    objective_seed: int
    reference_seed: int
    reference_location: np.ndarray
    reference_value: float
    noiseless_max: float
    rho_q: float
    reference_tolerance: float


def _trial_seed(seed: int, trial: int, stream: int) -> int:
    return int(np.random.SeedSequence([seed, trial, stream]).generate_state(1)[0])


def _trial_rng(seed: int, trial: int, stream: int) -> np.random.Generator:
    return np.random.default_rng([seed, trial, stream])


def prepare_trial(config: ExperimentConfig, trial: int) -> TrialSetup:
    obj_seed = _trial_seed(config.seed, trial, 101)
    ref_seed = _trial_seed(config.seed, trial, 102)
    obj = config.objective.build(obj_seed)
    budget = config.expected_optimum_budget
    mc = config.expected_optimum_mc_samples
    ref_x, ref_val = expected_optimum(obj, config.noise.exec_cov, budget, ref_seed, mc)
    zero = np.zeros_like(config.noise.exec_cov)
    _, noiseless = expected_optimum(obj, zero, budget, ref_seed, mc)
    return TrialSetup(
        trial=trial,
        objective=obj,
        objective_seed=obj_seed,
        reference_seed=ref_seed,
        reference_location=ref_x,
        reference_value=ref_val,
        noiseless_max=noiseless,
        rho_q=noiseless - ref_val,
        reference_tolerance=_reference_tolerance(config, obj),
    )


def _reference_tolerance(config: ExperimentConfig, obj: BenchmarkObjective) -> float:
    """Conservative bound on how far the searched reference sits below the max.

    For expansion objectives on a grid this is the Lipschitz bound
    B * L_k * h * sqrt(d) / 2 with h the grid spacing; the smoothed
    objective inherits the expansion's norm under i.i.d. noise.  For the
    random-search path no comparable bound exists, so a nominal percent of
    the observed value range is recorded instead.
    """
    d = obj.dim
    if obj.kind == "rkhs_expansion" and d <= 2:
        from .objectives import GRID_POINTS_PER_AXIS

        widths = obj.domain_bounds[:, 1] - obj.domain_bounds[:, 0]
        h = float(np.max(widths)) / (GRID_POINTS_PER_AXIS - 1)
        lip = obj.payload.norm_b * se_lipschitz_constant(obj.payload.kernel)
        return 0.5 * lip * h * float(np.sqrt(d))
    return 0.05


@dataclass(frozen=True)
class ResolvedMethod:
    """AcquisitionConfig with trial-level quantities filled in."""

    acq: AcquisitionConfig
    lam: float
    sigma_q: float


def resolve_method(config: ExperimentConfig, method: AcquisitionConfig,
                   setup: TrialSetup) -> ResolvedMethod:
    """Fill in the assumed covariance, regulariser and schedule constants.

    The sub-Gaussian execution constant uses the method's *assumed*
    covariance, which is what lets a mismatch sweep inflate both the
    regulariser and the theory-mode schedule.
    """
    model_cov = method.model_cov if method.model_cov is not None else config.noise.model_cov
    obj = setup.objective
    norm_b = obj.payload.norm_b if obj.kind == "rkhs_expansion" else None

    lip = se_lipschitz_constant(config.objective.kernel)
    sigma_q = None
    if norm_b is not None:
        sigma_q = subgaussian_sigma_gaussian(norm_b, lip, model_cov)

    if config.lam is not None:
        lam = config.lam
    elif sigma_q is not None:
        lam = config.noise.obs_sigma ** 2 + sigma_q ** 2
    else:
        raise ConfigError(
            "lambda must be set explicitly for objectives without a computable norm")

    beta = method.beta
    if beta.mode == "theory":
        b = beta.norm_b
        if b is None:
            if norm_b is None:
                raise ConfigError(
                    "theory-mode beta requires a computable objective norm; "
                    "set beta.norm_b or use fixed mode")
            b = norm_b
        nu = beta.sigma_nu
        if nu is None:
            if sigma_q is None:
                sigma_q = subgaussian_sigma_gaussian(b, lip, model_cov)
            nu = float(np.sqrt(sigma_q ** 2 + config.noise.obs_sigma ** 2))
        beta = BetaSchedule.theory(b, nu, beta.delta)

    acq = replace(method, model_cov=model_cov, beta=beta)
    return ResolvedMethod(acq=acq, lam=lam, sigma_q=0.0 if sigma_q is None else sigma_q)


# ----------------------------------------------------------------------
# the optimisation loop


@dataclass
class RegretTrace:
    """Per-iteration records of one (trial, method) run."""

    trial: int
    method: str
    targets: np.ndarray
    true_locations: np.ndarray
    observations: np.ndarray
    betas: np.ndarray
    regrets: np.ndarray
    mean_regrets: np.ndarray
    recommendation: Optional[np.ndarray]
    recommendation_value: Optional[float]
    resolved_lambda: float
    resolved_beta: dict

    @property
    def iterations(self) -> int:
        return self.targets.shape[0]


def run_trial(config: ExperimentConfig, method: AcquisitionConfig, trial: int,
              setup: Optional[TrialSetup] = None) -> RegretTrace:
    """Run one method for one trial; deterministic per (seed, trial, method).

    Random streams derive from (seed, trial) only, so methods within a
    trial see common random numbers and identical configurations produce
    identical traces.
    """
    if setup is None:
        setup = prepare_trial(config, trial)
    resolved = resolve_method(config, method, setup)
    acq = resolved.acq
    obj = setup.objective
    d = obj.dim
    bounds = obj.domain_bounds
    noise = config.noise

    rng_acq = _trial_rng(config.seed, trial, 103)
    rng_query = _trial_rng(config.seed, trial, 104)

    gp = UncertainGP(config.objective.kernel, resolved.lam)
    n = config.iterations
    targets = np.zeros((n, d))
    true_locs = np.zeros((n, d))
    ys = np.zeros(n)
    betas = np.zeros(n)
    regrets = np.zeros(n)

    incumbent = 0.0
    for t in range(n):
        beta = beta_value(acq.beta, gp.information_gain())
        x_t = maximize_acquisition(gp, acq, beta, incumbent, bounds, rng_acq)
        outcome = execute_query(x_t, obj, noise, rng_query)
        gp = gp.update(_dataset_input(acq, outcome), outcome.observation)
        incumbent = outcome.observation if t == 0 else max(incumbent, outcome.observation)

        targets[t] = x_t
        true_locs[t] = outcome.true_location
        ys[t] = outcome.observation
        betas[t] = beta
        regrets[t] = instantaneous_regret(
            obj, noise, x_t, setup.reference_value, mc=config.regret_mc_samples,
            rng_seed=_trial_seed(config.seed, trial, 105) + t)

    mean_regrets = np.cumsum(regrets) / np.arange(1, n + 1) if n else np.zeros(0)

    recommendation = None
    rec_value = None
    if n:
        probe_cov = acq.model_cov if acq.method == "ugp_ucb" else np.zeros((d, d))
        post = gp.posterior_mean_many(targets, probe_cov)
        best = int(np.argmax(post))
        recommendation = targets[best].copy()
        rec_value = expected_objective(obj, recommendation, noise.exec_cov,
                                       mc_samples=config.regret_mc_samples,
                                       rng_seed=_trial_seed(config.seed, trial, 106))

    return RegretTrace(
        trial=trial,
        method=acq.label,
        targets=targets,
        true_locations=true_locs,
        observations=ys,
        betas=betas,
        regrets=regrets,
        mean_regrets=mean_regrets,
        recommendation=recommendation,
        recommendation_value=rec_value,
        resolved_lambda=resolved.lam,
        resolved_beta=_beta_dict(acq.beta),
    )


def _dataset_input(acq: AcquisitionConfig, outcome) -> GaussianInput:
    if acq.method == "ugp_ucb":
        if acq.dataset_inputs == "query_model":
            return GaussianInput(outcome.target, acq.model_cov)
        return outcome.loc_estimate
    return GaussianInput.dirac(outcome.target)


def _beta_dict(beta: BetaSchedule) -> dict:
    if beta.mode == "fixed":
        return {"mode": "fixed", "fixed_value": beta.fixed_value}
    return {"mode": "theory", "norm_b": beta.norm_b, "sigma_nu": beta.sigma_nu,
            "delta": beta.delta}


# ----------------------------------------------------------------------
# multi-trial runner


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    setups: list[TrialSetup]
    traces: dict[str, list[RegretTrace]]
    aggregates: dict[str, dict]
    failures: list[dict]

    @property
    def ok(self) -> bool:
        return not self.failures


def run_experiment(config: ExperimentConfig,
                   out_dir: Optional[Path] = None) -> ExperimentResult:
    """Run trials x methods, aggregate mean-regret curves, write outputs.

    A numerical failure aborts only its own (trial, method) run; the
    failure is recorded and the remaining runs proceed.
    """
    setups = [prepare_trial(config, trial) for trial in range(config.trials)]
    traces: dict[str, list] = {m.label: [] for m in config.methods}
    failures: list[dict] = []
    for setup in setups:
        for method in config.methods:
            try:
                traces[method.label].append(run_trial(config, method, setup.trial, setup))
            except NumericalError as exc:
                failures.append({"trial": setup.trial, "method": method.label,
                                 "error": str(exc)})

    aggregates = {label: _aggregate(runs) for label, runs in traces.items()}
    result = ExperimentResult(config=config, setups=setups, traces=traces,
                              aggregates=aggregates, failures=failures)
    if out_dir is not None:
        write_outputs(result, Path(out_dir))
    return result


def _aggregate(runs: list[RegretTrace]) -> dict:
    if not runs:
        return {"trials": 0, "mean_regret_mean": [], "mean_regret_std": []}
    curves = np.stack([r.mean_regrets for r in runs])
    std = curves.std(axis=0, ddof=1) if curves.shape[0] > 1 else np.zeros(curves.shape[1])
    return {
        "trials": len(runs),
        "mean_regret_mean": curves.mean(axis=0).tolist(),
        "mean_regret_std": std.tolist(),
        "final_mean_regret": [float(r.mean_regrets[-1]) if r.iterations else None
                              for r in runs],
        "recommendations": [None if r.recommendation is None else r.recommendation.tolist()
                            for r in runs],
        "recommendation_values": [r.recommendation_value for r in runs],
        "resolved_lambda": [r.resolved_lambda for r in runs],
        "resolved_beta": [r.resolved_beta for r in runs],
    }


# ----------------------------------------------------------------------
# file outputs


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _fmt_vec(v: np.ndarray) -> str:
    return ";".join(_fmt(c) for c in v)


def write_outputs(result: ExperimentResult, out_dir: Path) -> list[Path]:
    """One trace CSV per method plus an aggregate JSON; returns the paths."""
    out_dir = Path(out_dir)
    written = []
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        for label, runs in result.traces.items():
            path = out_dir / f"trace_{label}.csv"
            lines = [CSV_HEADER]
            for run in sorted(runs, key=lambda r: r.trial):
                for t in range(run.iterations):
                    lines.append(",".join([
                        str(run.trial), str(t + 1), label,
                        _fmt_vec(run.targets[t]), _fmt_vec(run.true_locations[t]),
                        _fmt(run.observations[t]), _fmt(run.betas[t]),
                        _fmt(run.regrets[t]), _fmt(run.mean_regrets[t]),
                    ]))
            path.write_text("\n".join(lines) + "\n")
            written.append(path)

        agg_path = out_dir / "aggregate.json"
        agg_path.write_text(json.dumps(_aggregate_document(result), indent=2,
                                       sort_keys=True) + "\n")
        written.append(agg_path)
    except OSError as exc:
        raise OSError(f"failed writing outputs under {out_dir}: {exc}") from exc
    return written


def _aggregate_document(result: ExperimentResult) -> dict:
    config = result.config
    search_meta = {"budget": config.expected_optimum_budget,
                   "mc_samples": config.expected_optimum_mc_samples}
    if config.objective.dim <= 2:
        from .objectives import GRID_POINTS_PER_AXIS

        search_meta = {"kind": "grid", "points_per_axis": GRID_POINTS_PER_AXIS}
    else:
        search_meta["kind"] = "random"
    return {
        "config": config_to_dict(config),
        "methods": result.aggregates,
        "trials": [
            {
                "trial": s.trial,
                "objective_seed": s.objective_seed,
                "reference_seed": s.reference_seed,
                "reference_location": s.reference_location.tolist(),
                "reference_value": s.reference_value,
                "noiseless_max": s.noiseless_max,
                "rho_q": s.rho_q,
                "reference_tolerance": s.reference_tolerance,
            }
            for s in result.setups
        ],
        "reference_search": search_meta,
        "failures": result.failures,
    }
