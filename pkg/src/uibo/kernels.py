"""Squared-exponential kernels on points and on Gaussian probability measures.

The point kernel is the standard anisotropic squared exponential

    k(x, x') = sigma_f^2 * exp(-0.5 * sum_i (x_i - x'_i)^2 / l_i^2).

Its lift to Gaussian inputs N(m, S), N(m', S') has the closed form

    kt(P, P') = sigma_f^2 * exp(-0.5 * (m - m')^T (W + S + S')^{-1} (m - m'))
                / |I + W^{-1} (S + S')|^{1/2},

with W = diag(l^2).  This equals the double integral of k against the two
measures, i.e. the inner product of their kernel mean embeddings, so
expectations of kernel expansions are available analytically.  Dirac measures
are Gaussians with zero covariance and recover the point kernel exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

__all__ = [
    "SEKernelParams",
    "GaussianInput",
    "se_kernel",
    "se_gram",
    "uncertain_se_kernel",
    "uncertain_se_kernel_matrix",
    "expected_rkhs_value",
]

_SYM_TOL = 1e-12
_EIG_TOL = 1e-12


@dataclass(frozen=True)
class SEKernelParams:
    """Signal variance and per-dimension lengthscales of the SE kernel.

    ``lengthscales`` may be passed as a scalar (shared across dimensions)
    or as a 1-d array of one lengthscale per input dimension.
    """

    signal_variance: float
    lengthscales: np.ndarray

    def __init__(self, signal_variance: float, lengthscales) -> None:
        sv = float(signal_variance)
        ls = np.atleast_1d(np.asarray(lengthscales, dtype=float))
        if sv <= 0.0:
            raise ValueError("signal_variance must be positive")
        if ls.ndim != 1 or ls.size == 0 or np.any(ls <= 0.0):
            raise ValueError("lengthscales must be positive reals")
        object.__setattr__(self, "signal_variance", sv)
        object.__setattr__(self, "lengthscales", ls)

    @property
    def dim(self) -> int:
        return self.lengthscales.size

    def lengthscales_for(self, dim: int) -> np.ndarray:
        """Lengthscale vector for a ``dim``-dimensional input.

        A single shared lengthscale broadcasts to any dimension; a
        per-dimension vector must match exactly.
        """
        ls = self.lengthscales
        if ls.size == dim:
            return ls
        if ls.size == 1:
            return np.full(dim, ls[0])
        raise ValueError(f"kernel has {ls.size} lengthscales, input has dimension {dim}")


@dataclass(frozen=True)
class GaussianInput:
    """A Gaussian probability measure N(mean, covariance) on R^d.

    Zero covariance is valid and denotes the Dirac measure at ``mean``.
    The covariance is symmetrised on construction and eigenvalues in
    [-1e-12, 0) are clamped to zero; anything worse is rejected.
    """

    mean: np.ndarray
    covariance: np.ndarray

    def __init__(self, mean, covariance) -> None:
        m = np.atleast_1d(np.asarray(mean, dtype=float))
        c = np.asarray(covariance, dtype=float)
        if m.ndim != 1:
            raise ValueError("mean must be a vector")
        d = m.size
        if c.shape != (d, d):
            raise ValueError(f"covariance must be {d}x{d}, got {c.shape}")
        asym = np.max(np.abs(c - c.T)) if d > 0 else 0.0
        if asym > _SYM_TOL:
            raise ValueError(f"covariance asymmetry {asym:.3e} exceeds {_SYM_TOL}")
        c = 0.5 * (c + c.T)
        c = _clamp_psd(c)
        object.__setattr__(self, "mean", m)
        object.__setattr__(self, "covariance", c)

    @classmethod
    def dirac(cls, x) -> "GaussianInput":
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return cls(x, np.zeros((x.size, x.size)))

    @property
    def dim(self) -> int:
        return self.mean.size

    @property
    def is_dirac(self) -> bool:
        return not np.any(self.covariance)


def _clamp_psd(c: np.ndarray) -> np.ndarray:
    """Clamp round-off negative eigenvalues to zero; reject genuine ones."""
    diag = np.diagonal(c)
    if not np.any(c - np.diag(diag)):
        # Diagonal (incl. zero) matrices: clamp entrywise, no eigh needed.
        if np.min(diag, initial=0.0) < -_EIG_TOL:
            raise ValueError("covariance has eigenvalue below -1e-12")
        return np.diag(np.maximum(diag, 0.0)) if np.any(diag < 0.0) else c
    w, v = np.linalg.eigh(c)
    if w[0] < -_EIG_TOL:
        raise ValueError(f"covariance has eigenvalue {w[0]:.3e} below -1e-12")
    if w[0] >= 0.0:
        return c
    w = np.maximum(w, 0.0)
    return (v * w) @ v.T


def se_kernel(x, x2, params: SEKernelParams) -> float:
    """Point SE kernel sigma_f^2 * exp(-0.5 * sum((x - x2)^2 / l^2))."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    if x.shape != x2.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {x2.shape}")
    ls = params.lengthscales_for(x.size)
    z = (x - x2) / ls
    return params.signal_variance * float(np.exp(-0.5 * np.dot(z, z)))


def se_gram(points: np.ndarray, params: SEKernelParams) -> np.ndarray:
    """Gram matrix of the point SE kernel over the rows of ``points``."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    ls = params.lengthscales_for(pts.shape[1])
    z = pts / ls
    sq = np.sum(z * z, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (z @ z.T)
    np.maximum(d2, 0.0, out=d2)
    return params.signal_variance * np.exp(-0.5 * d2)


def _lifted_factor(cov_sum: np.ndarray, ls: np.ndarray):
    """Cholesky of (W + cov_sum) and the determinant ratio sqrt(|W| / |W + cov_sum|).

    The ratio is formed from the factor diagonal, which keeps it stable for
    lengthscales much smaller than the covariance scale.
    """
    m = np.diag(ls * ls) + cov_sum
    try:
        low = np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            "W + Sigma + Sigma' is not positive definite; covariances must be PSD"
        ) from exc
    ratio = float(np.prod(ls / np.diagonal(low)))
    return low, ratio


def uncertain_se_kernel(p: GaussianInput, q: GaussianInput, params: SEKernelParams) -> float:
    """SE kernel lifted to Gaussian measures (embedding inner product).

    Reduces exactly to ``se_kernel(p.mean, q.mean)`` when both covariances
    are zero.
    """
    if p.dim != q.dim:
        raise ValueError(f"dimension mismatch: {p.dim} vs {q.dim}")
    ls = params.lengthscales_for(p.dim)
    low, ratio = _lifted_factor(p.covariance + q.covariance, ls)
    u = solve_triangular(low, p.mean - q.mean, lower=True, check_finite=False)
    return params.signal_variance * ratio * float(np.exp(-0.5 * np.dot(u, u)))


def uncertain_se_cross(x: np.ndarray, cov_x: np.ndarray, means: np.ndarray,
                       cov_shared: np.ndarray, params: SEKernelParams) -> np.ndarray:
    """Lifted-kernel vector between N(x, cov_x) and N(means[i], cov_shared).

    Difference-based evaluation, accurate to round-off; used for posterior
    kernel vectors where precision matters.
    """
    means = np.atleast_2d(means)
    ls = params.lengthscales_for(means.shape[1])
    low, ratio = _lifted_factor(cov_x + cov_shared, ls)
    u = solve_triangular(low, (means - x).T, lower=True, check_finite=False)
    quad = np.sum(u * u, axis=0)
    return params.signal_variance * ratio * np.exp(-0.5 * quad)


def uncertain_se_kernel_matrix(means_a: np.ndarray, cov_a: np.ndarray,
                               means_b: np.ndarray, cov_b: np.ndarray,
                               params: SEKernelParams) -> np.ndarray:
    """Lifted-kernel matrix between two Gaussian families with shared covariances.

    Row i, column j holds kt(N(means_a[i], cov_a), N(means_b[j], cov_b)).
    All pairs share the same (W + cov_a + cov_b), so one factorisation serves
    the whole matrix.
    """
    means_a = np.atleast_2d(means_a)
    means_b = np.atleast_2d(means_b)
    ls = params.lengthscales_for(means_a.shape[1])
    low, ratio = _lifted_factor(cov_a + cov_b, ls)
    ta = solve_triangular(low, means_a.T, lower=True, check_finite=False).T
    tb = solve_triangular(low, means_b.T, lower=True, check_finite=False).T
    sq = (
        np.sum(ta * ta, axis=1)[:, None]
        + np.sum(tb * tb, axis=1)[None, :]
        - 2.0 * (ta @ tb.T)
    )
    np.maximum(sq, 0.0, out=sq)
    return params.signal_variance * ratio * np.exp(-0.5 * sq)


def expected_rkhs_value(f, p: GaussianInput) -> float:
    """Expectation of a kernel expansion f = sum_i a_i k(., x_i) under p.

    Computed analytically through the mean embedding: E_p[f] equals
    sum_i a_i kt(p, delta_{x_i}).  ``f`` needs ``support_points``,
    ``weights`` and ``kernel`` attributes.
    """
    support = np.atleast_2d(f.support_points)
    if support.shape[1] != p.dim:
        raise ValueError(f"dimension mismatch: {support.shape[1]} vs {p.dim}")
    zero = np.zeros((p.dim, p.dim))
    vals = uncertain_se_cross(p.mean, p.covariance, support, zero, f.kernel)
    return float(np.dot(f.weights, vals))
