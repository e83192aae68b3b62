"""Acquisition functions and their maximisation over the search box.

Three methods share one posterior interface:

* ``ugp_ucb``  scores the confidence bound at the Gaussian probe
  N(x, model_cov), the assumed execution distribution of target x;
* ``igp_ucb``  scores the same bound at the Dirac probe, which by the
  degeneracy of the lifted kernel is the conventional point-input UCB;
* ``uei``      averages expected improvement over the sigma points of an
  unscented transform of N(x, model_cov) on a point-input GP.

The maximiser is a seeded random multistart followed by lockstep
golden-section refinement along coordinates, deterministic per seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import ndtr

from .gp import UncertainGP
from .kernels import GaussianInput

__all__ = [
    "BetaSchedule",
    "AcquisitionConfig",
    "beta_value",
    "ucb_score",
    "uei_score",
    "unscented_points",
    "maximize_acquisition",
    "acquisition_scores",
]

METHODS = ("ugp_ucb", "igp_ucb", "uei")


@dataclass(frozen=True)
class BetaSchedule:
    """Confidence-bound multiplier, fixed or from the regret analysis.

    Theory mode evaluates B + sigma_nu * sqrt(2 * (I + 1 + log(1/delta)))
    at the current information gain I.  In configs, norm_b and sigma_nu may
    be left None; the runner fills them in from the trial objective's norm
    and the assumed noise model before the schedule is evaluated.
    """

    mode: str
    fixed_value: float = 0.0
    norm_b: Optional[float] = None
    sigma_nu: Optional[float] = None
    delta: float = 0.5

    def __post_init__(self) -> None:
        if self.mode not in ("fixed", "theory"):
            raise ValueError(f"unknown beta mode {self.mode!r}")
        if self.mode == "theory":
            if self.norm_b is not None and self.norm_b < 0.0:
                raise ValueError("norm_b must be non-negative")
            if self.sigma_nu is not None and self.sigma_nu < 0.0:
                raise ValueError("sigma_nu must be non-negative")
            if not 0.0 < self.delta < 1.0:
                raise ValueError("delta must lie in (0, 1)")

    @classmethod
    def fixed(cls, value: float) -> "BetaSchedule":
        return cls(mode="fixed", fixed_value=float(value))

    @classmethod
    def theory(cls, norm_b: float, sigma_nu: float, delta: float) -> "BetaSchedule":
        return cls(mode="theory", norm_b=float(norm_b), sigma_nu=float(sigma_nu),
                   delta=float(delta))


def beta_value(sched: BetaSchedule, info_gain: float) -> float:
    if info_gain < 0.0:
        raise ValueError("info_gain must be non-negative")
    if sched.mode == "fixed":
        return sched.fixed_value
    if sched.norm_b is None or sched.sigma_nu is None:
        raise ValueError("theory-mode schedule not resolved: norm_b or sigma_nu missing")
    return sched.norm_b + sched.sigma_nu * float(
        np.sqrt(2.0 * (info_gain + 1.0 + np.log(1.0 / sched.delta))))


@dataclass(frozen=True)
class AcquisitionConfig:
    """One method's acquisition settings.

    ``model_cov`` may be left None in configs and resolved by the runner
    to the noise model's assumed covariance.  ``dataset_inputs`` selects
    what the distribution-input method stores after a query: the reported
    localisation estimate or its own query model N(x_t, model_cov).
    """

    method: str
    beta: BetaSchedule
    model_cov: Optional[np.ndarray] = None
    candidates: int = 1000
    refinements: int = 20
    ut_kappa: Optional[float] = None
    dataset_inputs: str = "loc_estimate"
    name: Optional[str] = None

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.candidates < 1:
            raise ValueError("candidates must be at least 1")
        if self.refinements < 0:
            raise ValueError("refinements must be non-negative")
        if self.dataset_inputs not in ("loc_estimate", "query_model"):
            raise ValueError(f"unknown dataset_inputs {self.dataset_inputs!r}")
        if self.model_cov is not None:
            object.__setattr__(self, "model_cov",
                               np.asarray(self.model_cov, dtype=float))

    @property
    def label(self) -> str:
        return self.name if self.name is not None else self.method


def resolve_kappa(ut_kappa: Optional[float], dim: int) -> float:
    """Explicit kappa validated, otherwise 3 - d clamped so d + kappa >= 1."""
    if ut_kappa is None:
        return max(3.0 - dim, 1.0 - dim)
    if dim + ut_kappa <= 0.0:
        raise ValueError("d + ut_kappa must be positive")
    return float(ut_kappa)


def ucb_score(gp: UncertainGP, probe: GaussianInput, beta: float) -> float:
    """Posterior mean plus beta posterior standard deviations at the probe."""
    return gp.posterior_mean(probe) + beta * float(np.sqrt(gp.posterior_variance(probe)))


def unscented_points(x: np.ndarray, model_cov: np.ndarray, kappa: float):
    """Sigma points and weights of the unscented transform of N(x, model_cov).

    2d + 1 points: the mean, then the mean plus/minus each column of the
    matrix square root of (d + kappa) * model_cov.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    d = x.size
    if d + kappa <= 0.0:
        raise ValueError("d + ut_kappa must be positive")
    root = _psd_sqrt((d + kappa) * np.asarray(model_cov, dtype=float))
    points = np.empty((2 * d + 1, d))
    points[0] = x
    for i in range(d):
        points[1 + 2 * i] = x + root[:, i]
        points[2 + 2 * i] = x - root[:, i]
    weights = np.full(2 * d + 1, 1.0 / (2.0 * (d + kappa)))
    weights[0] = kappa / (d + kappa)
    return points, weights


def uei_score(gp: UncertainGP, x, model_cov, ut_kappa: Optional[float],
              incumbent: float) -> float:
    """Expected improvement averaged over the unscented sigma points."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    kappa = resolve_kappa(ut_kappa, x.size)
    points, weights = unscented_points(x, model_cov, kappa)
    zero = np.zeros((x.size, x.size))
    mu = gp.posterior_mean_many(points, zero)
    sd = np.sqrt(gp.posterior_variance_many(points, zero))
    return float(np.dot(weights, _expected_improvement(mu, sd, incumbent)))


def acquisition_scores(gp: UncertainGP, targets: np.ndarray, cfg: AcquisitionConfig,
                       beta: float, incumbent: float) -> np.ndarray:
    """Scores of each row of ``targets`` under the configured method."""
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    d = targets.shape[1]
    if cfg.model_cov is None:
        raise ValueError("model_cov must be resolved before scoring")
    if cfg.method == "uei":
        return _uei_scores(gp, targets, cfg, incumbent)
    cov = cfg.model_cov if cfg.method == "ugp_ucb" else np.zeros((d, d))
    mu = gp.posterior_mean_many(targets, cov)
    var = gp.posterior_variance_many(targets, cov)
    return mu + beta * np.sqrt(var)


def _uei_scores(gp: UncertainGP, targets: np.ndarray, cfg: AcquisitionConfig,
                incumbent: float) -> np.ndarray:
    m, d = targets.shape
    kappa = resolve_kappa(cfg.ut_kappa, d)
    root = _psd_sqrt((d + kappa) * cfg.model_cov)
    offsets = np.zeros((2 * d + 1, d))
    offsets[1::2] = root.T
    offsets[2::2] = -root.T
    weights = np.full(2 * d + 1, 1.0 / (2.0 * (d + kappa)))
    weights[0] = kappa / (d + kappa)

    probes = (targets[:, None, :] + offsets[None, :, :]).reshape(-1, d)
    zero = np.zeros((d, d))
    mu = gp.posterior_mean_many(probes, zero)
    sd = np.sqrt(gp.posterior_variance_many(probes, zero))
    ei = _expected_improvement(mu, sd, incumbent).reshape(m, 2 * d + 1)
    return ei @ weights


def maximize_acquisition(gp: UncertainGP, cfg: AcquisitionConfig, beta: float,
                         incumbent: float, domain_bounds,
                         rng: np.random.Generator) -> np.ndarray:
    """Best target found by random multistart plus coordinate refinement.

    Scores ``cfg.candidates`` uniform draws, then runs ``cfg.refinements``
    sweeps of golden-section line search along each coordinate from the
    best 5 candidates, over brackets that halve per sweep.  The result is
    always inside the bounds and deterministic per generator state.
    """
    bounds = np.atleast_2d(np.asarray(domain_bounds, dtype=float))
    d = bounds.shape[0]
    cands = rng.uniform(bounds[:, 0], bounds[:, 1], size=(cfg.candidates, d))
    scores = acquisition_scores(gp, cands, cfg, beta, incumbent)
    order = np.argsort(scores, kind="stable")[::-1]
    if cfg.refinements == 0:
        return cands[order[0]].copy()

    k = min(5, cfg.candidates)
    pts = cands[order[:k]].copy()
    vals = scores[order[:k]].copy()
    for sweep in range(cfg.refinements):
        half_width = 0.5 * (bounds[:, 1] - bounds[:, 0]) * 0.5 ** sweep
        for j in range(d):
            lo = np.maximum(bounds[j, 0], pts[:, j] - half_width[j])
            hi = np.minimum(bounds[j, 1], pts[:, j] + half_width[j])
            pts, vals = _golden_coord(gp, cfg, beta, incumbent, pts, vals, j, lo, hi)
    return pts[int(np.argmax(vals))].copy()


_INVPHI = (np.sqrt(5.0) - 1.0) / 2.0
_GOLDEN_STEPS = 10


def _golden_coord(gp, cfg, beta, incumbent, pts, vals, j, lo, hi):
    """Lockstep golden-section maximisation of coordinate j for every row."""

    def evaluate(coord):
        probes = pts.copy()
        probes[:, j] = coord
        return acquisition_scores(gp, probes, cfg, beta, incumbent)

    a, b = lo.astype(float), hi.astype(float)
    x1 = b - _INVPHI * (b - a)
    x2 = a + _INVPHI * (b - a)
    f1, f2 = evaluate(x1), evaluate(x2)
    for _ in range(_GOLDEN_STEPS):
        take_right = f1 < f2
        a = np.where(take_right, x1, a)
        b = np.where(take_right, b, x2)
        span = b - a
        fresh = np.where(take_right, a + _INVPHI * span, b - _INVPHI * span)
        fresh_val = evaluate(fresh)
        x1, f1, x2, f2 = (
            np.where(take_right, x2, fresh),
            np.where(take_right, f2, fresh_val),
            np.where(take_right, fresh, x1),
            np.where(take_right, fresh_val, f1),
        )

    best_x = np.where(f1 >= f2, x1, x2)
    best_f = np.maximum(f1, f2)
    improved = best_f > vals
    if np.any(improved):
        pts = pts.copy()
        pts[improved, j] = best_x[improved]
        vals = np.where(improved, best_f, vals)
    return pts, vals


def _psd_sqrt(mat: np.ndarray) -> np.ndarray:
    """A square root of a PSD matrix; Cholesky when possible, eigh otherwise."""
    mat = np.asarray(mat, dtype=float)
    try:
        return np.linalg.cholesky(mat)
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(mat)
        if w[0] < -1e-10:
            raise ValueError("model_cov must be positive semi-definite") from None
        return v * np.sqrt(np.maximum(w, 0.0))


def _expected_improvement(mu: np.ndarray, sd: np.ndarray, incumbent: float) -> np.ndarray:
    gain = mu - incumbent
    out = np.maximum(gain, 0.0)
    live = sd >= 1e-12
    if np.any(live):
        z = gain[live] / sd[live]
        out[live] = gain[live] * ndtr(z) + sd[live] * np.exp(-0.5 * z * z) / np.sqrt(2.0 * np.pi)
    return out
