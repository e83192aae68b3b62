"""Benchmark objectives and the noise-smoothed expected objective.

Two families:

* random kernel expansions f = sum_i a_i k(., x_i) with exactly computable
  norm, drawn with a_i ~ U[-1, 1] and support points uniform on the domain;
* the 4-d Michalewicz function, negated so that, as for the expansions,
  the task is maximisation.

``expected_objective`` evaluates g(x) = E[f(x + eps)] for eps ~ N(0, C):
analytically for kernel expansions (via the mean embedding), by seeded
Monte Carlo for Michalewicz.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .kernels import GaussianInput, SEKernelParams, se_gram, uncertain_se_kernel_matrix

__all__ = [
    "RKHSObjective",
    "BenchmarkObjective",
    "sample_rkhs_objective",
    "eval_objective",
    "expected_objective",
    "expected_optimum",
]

MICHALEWICZ_STEEPNESS = 10


@dataclass(frozen=True)
class RKHSObjective:
    """Finite kernel expansion with its exactly computed norm.

    norm_b is sqrt(a^T K a) for the Gram matrix K of the support points,
    which is the RKHS norm of the expansion.
    """

    support_points: np.ndarray
    weights: np.ndarray
    kernel: SEKernelParams
    norm_b: float = field(init=False)

    def __post_init__(self) -> None:
        pts = np.atleast_2d(np.asarray(self.support_points, dtype=float))
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if pts.shape[0] != w.size:
            raise ValueError("one weight per support point required")
        object.__setattr__(self, "support_points", pts)
        object.__setattr__(self, "weights", w)
        gram = se_gram(pts, self.kernel)
        object.__setattr__(self, "norm_b", float(np.sqrt(max(w @ gram @ w, 0.0))))

    @property
    def dim(self) -> int:
        return self.support_points.shape[1]

    def __call__(self, x) -> float:
        return float(self.evaluate_many(np.atleast_2d(np.asarray(x, dtype=float)))[0])

    def evaluate_many(self, points: np.ndarray) -> np.ndarray:
        """Expansion values at each row of ``points``."""
        zero = np.zeros((self.dim, self.dim))
        kmat = uncertain_se_kernel_matrix(points, zero, self.support_points, zero,
                                          self.kernel)
        return kmat @ self.weights


@dataclass(frozen=True)
class BenchmarkObjective:
    """A maximisation target over a box domain."""

    kind: str
    domain_bounds: np.ndarray
    payload: Optional[RKHSObjective] = None

    def __post_init__(self) -> None:
        if self.kind not in ("rkhs_expansion", "michalewicz_4d"):
            raise ValueError(f"unknown objective kind {self.kind!r}")
        bounds = np.atleast_2d(np.asarray(self.domain_bounds, dtype=float))
        if bounds.shape[1] != 2 or np.any(bounds[:, 0] >= bounds[:, 1]):
            raise ValueError("domain_bounds must be (lower, upper) pairs with lower < upper")
        if self.kind == "rkhs_expansion":
            if self.payload is None:
                raise ValueError("rkhs_expansion requires a payload expansion")
            if self.payload.dim != bounds.shape[0]:
                raise ValueError("payload dimension does not match domain_bounds")
        elif bounds.shape[0] != 4:
            raise ValueError("michalewicz_4d requires 4 dimensions")
        object.__setattr__(self, "domain_bounds", bounds)

    @property
    def dim(self) -> int:
        return self.domain_bounds.shape[0]


def sample_rkhs_objective(rng_seed: int, m: int, domain_bounds,
                          kernel: SEKernelParams) -> RKHSObjective:
    """Draw a random m-atom expansion; deterministic per seed."""
    if m < 1:
        raise ValueError("m must be at least 1")
    bounds = np.atleast_2d(np.asarray(domain_bounds, dtype=float))
    rng = np.random.default_rng(rng_seed)
    weights = rng.uniform(-1.0, 1.0, size=m)
    points = rng.uniform(bounds[:, 0], bounds[:, 1], size=(m, bounds.shape[0]))
    return RKHSObjective(points, weights, kernel)


def _michalewicz_many(points: np.ndarray) -> np.ndarray:
    idx = np.arange(1, points.shape[1] + 1)
    terms = np.sin(points) * np.sin(idx * points * points / np.pi) ** (
        2 * MICHALEWICZ_STEEPNESS)
    return np.sum(terms, axis=1)


def eval_objective(obj: BenchmarkObjective, x) -> float:
    """Objective value at a single point (defined on all of R^d)."""
    return float(eval_objective_many(obj, np.atleast_2d(np.asarray(x, dtype=float)))[0])


def eval_objective_many(obj: BenchmarkObjective, points: np.ndarray) -> np.ndarray:
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if obj.kind == "rkhs_expansion":
        return obj.payload.evaluate_many(points)
    return _michalewicz_many(points)


def expected_objective(obj: BenchmarkObjective, x, exec_cov,
                       mc_samples: int = 1000, rng_seed: int = 0) -> float:
    """g(x) = E[f(x + eps)], eps ~ N(0, exec_cov).

    Analytic for kernel expansions; seeded Monte Carlo otherwise.  With a
    zero covariance this is exactly ``eval_objective``.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    cov = np.asarray(exec_cov, dtype=float)
    if obj.kind == "rkhs_expansion":
        from .kernels import expected_rkhs_value

        if not np.any(cov):
            return eval_objective(obj, x)
        return expected_rkhs_value(obj.payload, GaussianInput(x, cov))
    if mc_samples < 1:
        raise ValueError("mc_samples must be at least 1 for Monte Carlo objectives")
    if not np.any(cov):
        return eval_objective(obj, x)
    rng = np.random.default_rng(rng_seed)
    eps = rng.multivariate_normal(np.zeros(x.size), cov, size=mc_samples)
    return float(np.mean(_michalewicz_many(x + eps)))


GRID_POINTS_PER_AXIS = 201


def expected_optimum(obj: BenchmarkObjective, exec_cov, search_budget: int = 100_000,
                     rng_seed: int = 0, mc_samples: int = 1000):
    """Best (location, value) of the expected objective over the domain.

    Dense grid search (201 points per axis) for d <= 2, seeded random search
    of ``search_budget`` points otherwise.  Candidates are scored the same
    way ``expected_objective`` scores single points; for Monte Carlo
    objectives all candidates share one noise draw of ``mc_samples``.
    """
    if search_budget < 1:
        raise ValueError("search_budget must be at least 1")
    bounds = obj.domain_bounds
    d = obj.dim
    if d <= 2:
        axes = [np.linspace(lo, hi, GRID_POINTS_PER_AXIS) for lo, hi in bounds]
        mesh = np.meshgrid(*axes, indexing="ij")
        candidates = np.stack([m.ravel() for m in mesh], axis=1)
    else:
        rng = np.random.default_rng(rng_seed)
        candidates = rng.uniform(bounds[:, 0], bounds[:, 1], size=(search_budget, d))
    scores = _expected_objective_many(obj, candidates, np.asarray(exec_cov, dtype=float),
                                      mc_samples, rng_seed)
    best = int(np.argmax(scores))
    return candidates[best].copy(), float(scores[best])


def _expected_objective_many(obj: BenchmarkObjective, points: np.ndarray,
                             cov: np.ndarray, mc_samples: int,
                             rng_seed: int) -> np.ndarray:
    if obj.kind == "rkhs_expansion":
        f = obj.payload
        return uncertain_se_kernel_matrix(
            points, cov, f.support_points, np.zeros_like(cov), f.kernel) @ f.weights
    if not np.any(cov):
        return _michalewicz_many(points)
    rng = np.random.default_rng((rng_seed, 1))
    eps = rng.multivariate_normal(np.zeros(points.shape[1]), cov, size=mc_samples)
    out = np.empty(points.shape[0])
    chunk = max(1, 2_000_000 // mc_samples)
    for start in range(0, points.shape[0], chunk):
        block = points[start:start + chunk]
        vals = _michalewicz_many((block[:, None, :] + eps[None, :, :]).reshape(-1, points.shape[1]))
        out[start:start + chunk] = vals.reshape(block.shape[0], mc_samples).mean(axis=1)
    return out
