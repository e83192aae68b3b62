"""Regularised GP posterior over Gaussian-measure inputs.

The model is a zero-mean GP with the lifted SE kernel kt and regulariser
lambda:

    mean(P*) = kt_n(P*)^T (Kt_n + lambda I)^{-1} y_n
    var(P*)  = kt(P*, P*) - kt_n(P*)^T (Kt_n + lambda I)^{-1} kt_n(P*)

Feeding only Dirac inputs makes this the conventional point-input GP with
the same kernel and regulariser, so one implementation serves both the
distribution-input method and the point-input baselines.

States are immutable: ``update`` returns a new state whose Cholesky factor
extends the old one by a bordered row instead of refactorising.  Dataset
inputs are grouped by identical covariance so kernel vectors against the
dataset vectorise over means within each group.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from scipy.linalg import solve_triangular

from .kernels import (
    GaussianInput,
    SEKernelParams,
    uncertain_se_cross,
    uncertain_se_kernel,
    uncertain_se_kernel_matrix,
)

__all__ = ["UncertainGP", "NumericalError"]


class NumericalError(RuntimeError):
    """Raised when a factorisation fails even after jitter retries."""


class _CovGroup:
    """Dataset rows sharing one covariance matrix."""

    __slots__ = ("cov", "indices", "means")

    def __init__(self, cov: np.ndarray, indices: np.ndarray, means: np.ndarray):
        self.cov = cov
        self.indices = indices
        self.means = means


class UncertainGP:
    """GP over Gaussian-measure inputs with append-only updates."""

    def __init__(self, kernel: SEKernelParams, lam: float):
        if lam <= 0.0:
            raise ValueError("lam must be positive")
        self.kernel = kernel
        self.lam = float(lam)
        self._inputs: tuple[GaussianInput, ...] = ()
        self._y = np.zeros(0)
        self._chol = np.zeros((0, 0))
        self._alpha = np.zeros(0)
        self._groups: tuple[_CovGroup, ...] = ()

    @property
    def n(self) -> int:
        return len(self._inputs)

    @property
    def inputs(self) -> tuple[GaussianInput, ...]:
        return self._inputs

    @property
    def observations(self) -> np.ndarray:
        return self._y.copy()

    @property
    def chol(self) -> np.ndarray:
        """Lower-triangular factor of (Kt_n + lambda I)."""
        return self._chol.copy()

    # ------------------------------------------------------------------
    # state transitions

    def update(self, p: GaussianInput, y: float) -> "UncertainGP":
        """Return a new state with (p, y) appended.

        The factor of the bordered matrix is completed with one triangular
        solve; a failing pivot gets diagonal jitter 1e-10 * sigma_f^2,
        doubled over up to 3 retries.
        """
        if self.n and p.dim != self._inputs[0].dim:
            raise ValueError(f"dimension mismatch: {p.dim} vs {self._inputs[0].dim}")
        n = self.n
        kvec = self._kernel_vector(p)
        kself = uncertain_se_kernel(p, p, self.kernel)
        if n:
            row = solve_triangular(self._chol, kvec, lower=True, check_finite=False)
            rest = float(kself + self.lam - np.dot(row, row))
        else:
            row = np.zeros(0)
            rest = kself + self.lam

        jitter = 1e-10 * self.kernel.signal_variance
        tries = 0
        while rest <= 0.0 and tries < 3:
            rest += jitter
            jitter *= 2.0
            tries += 1
        if rest <= 0.0:
            raise NumericalError(
                f"non-positive pivot {rest:.3e} while appending point {n + 1}"
            )

        chol = np.zeros((n + 1, n + 1))
        chol[:n, :n] = self._chol
        chol[n, :n] = row
        chol[n, n] = np.sqrt(rest)

        new = UncertainGP.__new__(UncertainGP)
        new.kernel = self.kernel
        new.lam = self.lam
        new._inputs = self._inputs + (p,)
        new._y = np.append(self._y, float(y))
        new._chol = chol
        new._alpha = _chol_solve(chol, new._y)
        new._groups = _extend_groups(self._groups, p, n)
        return new

    @classmethod
    def fit(cls, kernel: SEKernelParams, lam: float,
            inputs: Sequence[GaussianInput], y: Sequence[float]) -> "UncertainGP":
        """Sequentially fit a dataset (convenience over repeated update)."""
        gp = cls(kernel, lam)
        for p, v in zip(inputs, y):
            gp = gp.update(p, v)
        return gp

    # ------------------------------------------------------------------
    # posterior queries

    def posterior_mean(self, p: GaussianInput) -> float:
        if self.n == 0:
            return 0.0
        return float(np.dot(self._kernel_vector(p), self._alpha))

    def posterior_variance(self, p: GaussianInput) -> float:
        prior = uncertain_se_kernel(p, p, self.kernel)
        if self.n == 0:
            return prior
        v = solve_triangular(self._chol, self._kernel_vector(p), lower=True,
                             check_finite=False)
        return max(prior - float(np.dot(v, v)), 0.0)

    def posterior_mean_many(self, means: np.ndarray, cov: np.ndarray) -> np.ndarray:
        """Posterior mean at probes N(means[i], cov) sharing one covariance."""
        means = np.atleast_2d(means)
        if self.n == 0:
            return np.zeros(means.shape[0])
        return self._kernel_matrix(means, cov).T @ self._alpha

    def posterior_variance_many(self, means: np.ndarray, cov: np.ndarray) -> np.ndarray:
        means = np.atleast_2d(means)
        prior = self._prior_variance(means.shape[1], cov)
        if self.n == 0:
            return np.full(means.shape[0], prior)
        kmat = self._kernel_matrix(means, cov)
        v = solve_triangular(self._chol, kmat, lower=True, check_finite=False)
        return np.maximum(prior - np.sum(v * v, axis=0), 0.0)

    def information_gain(self) -> float:
        """0.5 * log |I + lambda^{-1} Kt_n| from the cached factor diagonal.

        Clamped at zero: every pivot is at least sqrt(lambda) up to
        round-off, so a negative total can only be rounding noise.
        """
        if self.n == 0:
            return 0.0
        d = np.diagonal(self._chol)
        return max(float(0.5 * np.sum(np.log(d * d / self.lam))), 0.0)

    # ------------------------------------------------------------------
    # internals

    def _prior_variance(self, dim: int, cov: np.ndarray) -> float:
        probe = GaussianInput(np.zeros(dim), cov)
        return uncertain_se_kernel(probe, probe, self.kernel)

    def _kernel_vector(self, p: GaussianInput) -> np.ndarray:
        out = np.empty(self.n)
        for g in self._groups:
            out[g.indices] = uncertain_se_cross(p.mean, p.covariance, g.means,
                                                g.cov, self.kernel)
        return out

    def _kernel_matrix(self, probe_means: np.ndarray, probe_cov: np.ndarray) -> np.ndarray:
        """Kernel values between the dataset (rows) and probes (columns)."""
        out = np.empty((self.n, probe_means.shape[0]))
        for g in self._groups:
            out[g.indices] = uncertain_se_kernel_matrix(
                g.means, g.cov, probe_means, probe_cov, self.kernel)
        return out


def _chol_solve(chol: np.ndarray, y: np.ndarray) -> np.ndarray:
    half = solve_triangular(chol, y, lower=True, check_finite=False)
    return solve_triangular(chol.T, half, lower=False, check_finite=False)


def _extend_groups(groups: tuple[_CovGroup, ...], p: GaussianInput,
                   index: int) -> tuple[_CovGroup, ...]:
    key = p.covariance.tobytes()
    out = []
    placed = False
    for g in groups:
        if not placed and g.cov.shape == p.covariance.shape and g.cov.tobytes() == key:
            out.append(_CovGroup(g.cov,
                                 np.append(g.indices, index),
                                 np.vstack([g.means, p.mean])))
            placed = True
        else:
            out.append(g)
    if not placed:
        out.append(_CovGroup(p.covariance.copy(),
                             np.array([index]),
                             p.mean.copy()[None, :]))
    return tuple(out)
