"""Simulated querying under execution, observation and localisation noise,
plus the sub-Gaussian and model-mismatch constants used by the schedules.

A query commanded at x lands at x~ = x + eps with eps ~ N(0, exec_cov),
returns y = f(x~) + zeta with zeta ~ N(0, obs_sigma^2), and reports its
location as a Gaussian centred at x~ + eta, eta ~ N(0, loc_cov), with the
exact loc_cov as the stated covariance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import GaussianInput, SEKernelParams
from .objectives import BenchmarkObjective, eval_objective

__all__ = [
    "NoiseConfig",
    "QueryOutcome",
    "execute_query",
    "subgaussian_sigma_gaussian",
    "subgaussian_sigma_bounded",
    "se_lipschitz_constant",
    "pinsker_bound",
]


def _as_psd(name: str, cov) -> np.ndarray:
    c = np.asarray(cov, dtype=float)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ValueError(f"{name} must be a square matrix")
    if np.max(np.abs(c - c.T), initial=0.0) > 1e-12:
        raise ValueError(f"{name} must be symmetric")
    if c.size and np.min(np.linalg.eigvalsh(c)) < -1e-12:
        raise ValueError(f"{name} must be positive semi-definite")
    return c


@dataclass(frozen=True)
class NoiseConfig:
    """True and assumed covariances of the querying process.

    exec_cov drives the actual query execution, model_cov is the covariance
    the algorithms assume for it, loc_cov is the covariance reported with
    every localisation estimate, obs_sigma the observation noise scale.
    """

    exec_cov: np.ndarray
    model_cov: np.ndarray
    loc_cov: np.ndarray
    obs_sigma: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "exec_cov", _as_psd("exec_cov", self.exec_cov))
        object.__setattr__(self, "model_cov", _as_psd("model_cov", self.model_cov))
        object.__setattr__(self, "loc_cov", _as_psd("loc_cov", self.loc_cov))
        if self.exec_cov.shape != self.model_cov.shape or self.exec_cov.shape != self.loc_cov.shape:
            raise ValueError("covariances must share one dimension")
        if self.obs_sigma < 0.0:
            raise ValueError("obs_sigma must be non-negative")

    @classmethod
    def isotropic(cls, dim: int, exec_std: float = 0.1, obs_sigma: float = 0.1,
                  model_std: float | None = None,
                  loc_std: float | None = None) -> "NoiseConfig":
        """Isotropic covariances from standard deviations.

        The localisation estimate defaults to half the execution standard
        deviation, the assumed model to the true one.
        """
        if model_std is None:
            model_std = exec_std
        if loc_std is None:
            loc_std = 0.5 * exec_std
        eye = np.eye(dim)
        return cls(exec_std ** 2 * eye, model_std ** 2 * eye,
                   loc_std ** 2 * eye, obs_sigma)

    @property
    def dim(self) -> int:
        return self.exec_cov.shape[0]


@dataclass(frozen=True)
class QueryOutcome:
    target: np.ndarray
    true_location: np.ndarray
    loc_estimate: GaussianInput
    observation: float


def execute_query(target, obj: BenchmarkObjective, cfg: NoiseConfig,
                  rng: np.random.Generator) -> QueryOutcome:
    """Simulate one query at ``target``.

    Draw order is fixed (execution, observation, localisation) so traces
    are reproducible from the generator seed alone.
    """
    target = np.atleast_1d(np.asarray(target, dtype=float))
    zero = np.zeros(target.size)
    true_loc = target + rng.multivariate_normal(zero, cfg.exec_cov)
    y = eval_objective(obj, true_loc) + cfg.obs_sigma * rng.standard_normal()
    loc_mean = true_loc + rng.multivariate_normal(zero, cfg.loc_cov)
    return QueryOutcome(target=target, true_location=true_loc,
                        loc_estimate=GaussianInput(loc_mean, cfg.loc_cov),
                        observation=float(y))


def subgaussian_sigma_gaussian(norm_b: float, lip_k: float, cov) -> float:
    """Sub-Gaussian scale of f(X) - E[f(X)] for Gaussian X with covariance cov."""
    if norm_b < 0.0 or lip_k < 0.0:
        raise ValueError("norm_b and lip_k must be non-negative")
    return norm_b * lip_k * float(np.sqrt(np.trace(np.asarray(cov, dtype=float))))


def subgaussian_sigma_bounded(norm_b: float, lip_k: float, side_lengths) -> float:
    """Sub-Gaussian scale when X has compact per-coordinate support.

    ``side_lengths[i]`` bounds the support width: |x_i - mean_i| <= side/2.
    """
    if norm_b < 0.0 or lip_k < 0.0:
        raise ValueError("norm_b and lip_k must be non-negative")
    sides = np.atleast_1d(np.asarray(side_lengths, dtype=float))
    if np.any(sides < 0.0):
        raise ValueError("side_lengths must be non-negative")
    return 0.5 * norm_b * lip_k * float(np.sqrt(np.sum(sides * sides)))


def se_lipschitz_constant(params: SEKernelParams) -> float:
    """Smallest L with L^2 >= sup_i d^2 k / dx_i dx'_i at x = x'.

    For the SE kernel that mixed second derivative is sigma_f^2 / l_i^2,
    so L = sigma_f / min(l).
    """
    return float(np.sqrt(params.signal_variance) / np.min(params.lengthscales))


def pinsker_bound(norm_b: float, model_cov, exec_cov) -> float:
    """Worst-case |E_q[f] - E_model[f]| over unit-sup-norm-bounded f.

    (B/2) * sqrt(tr(Shat^{-1} Sq) - d + log(|Shat| / |Sq|)) for Gaussians
    with a common mean; zero when the covariances coincide.
    """
    shat = np.asarray(model_cov, dtype=float)
    sq = np.asarray(exec_cov, dtype=float)
    if shat.shape != sq.shape or shat.ndim != 2:
        raise ValueError("covariances must be square matrices of equal shape")
    if np.array_equal(shat, sq):
        return 0.0
    try:
        lhat = np.linalg.cholesky(shat)
        lq = np.linalg.cholesky(sq)
    except np.linalg.LinAlgError as exc:
        raise ValueError("pinsker_bound requires strictly positive-definite covariances") from exc
    d = shat.shape[0]
    half = np.linalg.solve(lhat, lq)
    trace_term = float(np.sum(half * half))
    logdet_ratio = 2.0 * float(np.sum(np.log(np.diagonal(lhat)))
                               - np.sum(np.log(np.diagonal(lq))))
    inner = max(trace_term - d + logdet_ratio, 0.0)
    return 0.5 * norm_b * float(np.sqrt(inner))
