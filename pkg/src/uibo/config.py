"""Experiment configuration: dataclasses plus a strict JSON loader.

JSON documents mirror the dataclasses field for field; unknown keys are
rejected so typos cannot silently fall back to defaults.  Covariance
fields accept a d x d nested list, a flat list of per-dimension variances,
or a single number meaning an isotropic variance.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .acquisition import AcquisitionConfig, BetaSchedule
from .kernels import SEKernelParams
from .noise import NoiseConfig
from .objectives import BenchmarkObjective, sample_rkhs_objective

__all__ = ["ConfigError", "ObjectiveSpec", "ExperimentConfig",
           "load_config", "config_to_dict"]

_MICHALEWICZ_BOUNDS = [[0.0, float(np.pi)]] * 4


class ConfigError(Exception):
    """Invalid or inconsistent experiment configuration."""


@dataclass(frozen=True)
class ObjectiveSpec:
    """Which objective family a run optimises, and its kernel."""

    kind: str
    domain_bounds: np.ndarray
    kernel: SEKernelParams
    m: int = 30

    def __post_init__(self) -> None:
        bounds = np.atleast_2d(np.asarray(self.domain_bounds, dtype=float))
        if bounds.shape[1] != 2 or np.any(bounds[:, 0] >= bounds[:, 1]):
            raise ConfigError("domain_bounds must be (lower, upper) pairs with lower < upper")
        if self.kind not in ("rkhs_expansion", "michalewicz_4d"):
            raise ConfigError(f"unknown objective kind {self.kind!r}")
        if self.kind == "michalewicz_4d" and bounds.shape[0] != 4:
            raise ConfigError("michalewicz_4d requires 4-dimensional bounds")
        if self.m < 1:
            raise ConfigError("m must be at least 1")
        object.__setattr__(self, "domain_bounds", bounds)

    @property
    def dim(self) -> int:
        return self.domain_bounds.shape[0]

    def build(self, objective_seed: int) -> BenchmarkObjective:
        """Materialise the trial objective (seed only matters for rkhs)."""
        if self.kind == "rkhs_expansion":
            payload = sample_rkhs_objective(objective_seed, self.m,
                                            self.domain_bounds, self.kernel)
            return BenchmarkObjective("rkhs_expansion", self.domain_bounds, payload)
        return BenchmarkObjective("michalewicz_4d", self.domain_bounds)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one benchmark run needs; JSON-serialisable."""

    seed: int
    trials: int
    iterations: int
    objective: ObjectiveSpec
    noise: NoiseConfig
    methods: tuple[AcquisitionConfig, ...]
    lam: Optional[float] = None
    expected_optimum_budget: int = 100_000
    expected_optimum_mc_samples: int = 1000
    regret_mc_samples: int = 1000

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if self.iterations < 0:
            raise ConfigError("iterations must be non-negative")
        if self.lam is not None and self.lam <= 0.0:
            raise ConfigError("lambda must be positive when given")
        if not self.methods:
            raise ConfigError("at least one method is required")
        labels = [m.label for m in self.methods]
        if len(set(labels)) != len(labels):
            raise ConfigError(f"duplicate method labels: {labels}; use 'name' to distinguish")
        if self.noise.dim != self.objective.dim:
            raise ConfigError("noise covariances do not match the objective dimension")
        object.__setattr__(self, "methods", tuple(self.methods))


# ----------------------------------------------------------------------
# JSON loading


def _check_keys(obj: dict, allowed: Sequence[str], where: str) -> None:
    unknown = set(obj) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")


def _covariance(value, dim: int, where: str) -> np.ndarray:
    """Scalar isotropic variance, per-dimension variances, or full matrix."""
    if isinstance(value, (int, float)):
        if value < 0:
            raise ConfigError(f"{where} must be non-negative")
        return float(value) * np.eye(dim)
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 1:
        if arr.size != dim:
            raise ConfigError(f"{where}: expected {dim} diagonal entries, got {arr.size}")
        return np.diag(arr)
    if arr.shape != (dim, dim):
        raise ConfigError(f"{where}: expected a {dim}x{dim} matrix, got {arr.shape}")
    return arr


def _parse_objective(obj: dict) -> ObjectiveSpec:
    _check_keys(obj, ["kind", "domain_bounds", "m", "signal_variance", "lengthscales"],
                "objective")
    kind = obj.get("kind")
    if kind is None:
        raise ConfigError("objective.kind is required")
    bounds = obj.get("domain_bounds")
    if bounds is None:
        if kind != "michalewicz_4d":
            raise ConfigError("objective.domain_bounds is required")
        bounds = _MICHALEWICZ_BOUNDS
    bounds = np.atleast_2d(np.asarray(bounds, dtype=float))
    try:
        kernel = SEKernelParams(obj.get("signal_variance", 1.0),
                                obj.get("lengthscales", 0.1))
        if kernel.dim not in (1, bounds.shape[0]):
            raise ConfigError("lengthscales do not match domain dimension")
        if kernel.dim == 1 and bounds.shape[0] != 1:
            kernel = SEKernelParams(kernel.signal_variance,
                                    np.full(bounds.shape[0], kernel.lengthscales[0]))
        return ObjectiveSpec(kind=kind, domain_bounds=bounds, kernel=kernel,
                             m=int(obj.get("m", 30)))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _parse_noise(obj: dict, dim: int) -> NoiseConfig:
    _check_keys(obj, ["exec_cov", "model_cov", "loc_cov", "obs_sigma"], "noise")
    if "exec_cov" not in obj:
        raise ConfigError("noise.exec_cov is required")
    exec_cov = _covariance(obj["exec_cov"], dim, "noise.exec_cov")
    model_cov = (_covariance(obj["model_cov"], dim, "noise.model_cov")
                 if "model_cov" in obj else exec_cov.copy())
    # Default localisation noise: half the execution standard deviation.
    loc_cov = (_covariance(obj["loc_cov"], dim, "noise.loc_cov")
               if "loc_cov" in obj else 0.25 * exec_cov)
    try:
        return NoiseConfig(exec_cov=exec_cov, model_cov=model_cov, loc_cov=loc_cov,
                           obs_sigma=float(obj.get("obs_sigma", 0.0)))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _parse_beta(obj: dict) -> BetaSchedule:
    _check_keys(obj, ["mode", "fixed_value", "norm_b", "sigma_nu", "delta"], "beta")
    mode = obj.get("mode")
    if mode == "fixed":
        if "fixed_value" not in obj:
            raise ConfigError("fixed beta requires fixed_value")
        return BetaSchedule.fixed(float(obj["fixed_value"]))
    if mode == "theory":
        norm_b = obj.get("norm_b")
        sigma_nu = obj.get("sigma_nu")
        try:
            return BetaSchedule(mode="theory",
                                norm_b=None if norm_b is None else float(norm_b),
                                sigma_nu=None if sigma_nu is None else float(sigma_nu),
                                delta=float(obj.get("delta", 0.4)))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    raise ConfigError(f"unknown beta mode {mode!r}")


def _parse_method(obj: dict, dim: int, index: int) -> AcquisitionConfig:
    where = f"methods[{index}]"
    _check_keys(obj, ["method", "beta", "model_cov", "candidates", "refinements",
                      "ut_kappa", "dataset_inputs", "name"], where)
    if "method" not in obj:
        raise ConfigError(f"{where}.method is required")
    beta = _parse_beta(obj["beta"]) if "beta" in obj else BetaSchedule.fixed(0.0)
    model_cov = (_covariance(obj["model_cov"], dim, f"{where}.model_cov")
                 if obj.get("model_cov") is not None else None)
    try:
        return AcquisitionConfig(
            method=obj["method"],
            beta=beta,
            model_cov=model_cov,
            candidates=int(obj.get("candidates", 1000)),
            refinements=int(obj.get("refinements", 20)),
            ut_kappa=obj.get("ut_kappa"),
            dataset_inputs=obj.get("dataset_inputs", "loc_estimate"),
            name=obj.get("name"),
        )
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def parse_config(doc: dict) -> ExperimentConfig:
    _check_keys(doc, ["seed", "trials", "iterations", "objective", "noise", "methods",
                      "lambda", "expected_optimum_budget", "expected_optimum_mc_samples",
                      "regret_mc_samples"], "config")
    for key in ("seed", "trials", "iterations", "objective", "noise", "methods"):
        if key not in doc:
            raise ConfigError(f"config.{key} is required")
    if int(doc["iterations"]) < 1:
        raise ConfigError("iterations must be at least 1")
    objective = _parse_objective(doc["objective"])
    noise = _parse_noise(doc["noise"], objective.dim)
    if not isinstance(doc["methods"], list) or not doc["methods"]:
        raise ConfigError("config.methods must be a non-empty list")
    methods = tuple(_parse_method(m, objective.dim, i)
                    for i, m in enumerate(doc["methods"]))
    lam = doc.get("lambda")
    try:
        return ExperimentConfig(
            seed=int(doc["seed"]),
            trials=int(doc["trials"]),
            iterations=int(doc["iterations"]),
            objective=objective,
            noise=noise,
            methods=methods,
            lam=None if lam is None else float(lam),
            expected_optimum_budget=int(doc.get("expected_optimum_budget", 100_000)),
            expected_optimum_mc_samples=int(doc.get("expected_optimum_mc_samples", 1000)),
            regret_mc_samples=int(doc.get("regret_mc_samples", 1000)),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return parse_config(doc)


def apply_overrides(config: ExperimentConfig, *, methods: Optional[list[str]] = None,
                    trials: Optional[int] = None, iterations: Optional[int] = None,
                    seed: Optional[int] = None) -> ExperimentConfig:
    """CLI-style field overrides; method names filter the configured list."""
    if methods is not None:
        known = {m.label: m for m in config.methods}
        missing = [name for name in methods if name not in known]
        if missing:
            raise ConfigError(f"unknown methods {missing}; configured: {sorted(known)}")
        config = replace(config, methods=tuple(known[name] for name in methods))
    if trials is not None:
        config = replace(config, trials=trials)
    if iterations is not None:
        config = replace(config, iterations=iterations)
    if seed is not None:
        config = replace(config, seed=seed)
    return config


# ----------------------------------------------------------------------
# serialisation back to plain data (for run outputs)


def _matrix(arr: np.ndarray) -> list:
    return np.asarray(arr, dtype=float).tolist()


def _beta_to_dict(beta: BetaSchedule) -> dict:
    out = {"mode": beta.mode}
    if beta.mode == "fixed":
        out["fixed_value"] = beta.fixed_value
    else:
        out.update(norm_b=beta.norm_b, sigma_nu=beta.sigma_nu, delta=beta.delta)
    return out


def config_to_dict(config: ExperimentConfig) -> dict:
    """Plain-data view of the full configuration, JSON-ready."""
    return {
        "seed": config.seed,
        "trials": config.trials,
        "iterations": config.iterations,
        "objective": {
            "kind": config.objective.kind,
            "domain_bounds": _matrix(config.objective.domain_bounds),
            "m": config.objective.m,
            "signal_variance": config.objective.kernel.signal_variance,
            "lengthscales": config.objective.kernel.lengthscales.tolist(),
        },
        "noise": {
            "exec_cov": _matrix(config.noise.exec_cov),
            "model_cov": _matrix(config.noise.model_cov),
            "loc_cov": _matrix(config.noise.loc_cov),
            "obs_sigma": config.noise.obs_sigma,
        },
        "methods": [
            {
                "method": m.method,
                "name": m.label,
                "beta": _beta_to_dict(m.beta),
                "model_cov": None if m.model_cov is None else _matrix(m.model_cov),
                "candidates": m.candidates,
                "refinements": m.refinements,
                "ut_kappa": m.ut_kappa,
                "dataset_inputs": m.dataset_inputs,
            }
            for m in config.methods
        ],
        "lambda": config.lam,
        "expected_optimum_budget": config.expected_optimum_budget,
        "expected_optimum_mc_samples": config.expected_optimum_mc_samples,
        "regret_mc_samples": config.regret_mc_samples,
    }
