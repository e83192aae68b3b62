"""Executable checks of the guarantees behind the algorithms.

Four families, each validated on randomised instances:

* embedding identity: the analytic expectation of a kernel expansion at a
  Dirac measure equals the plain function value;
* sub-Gaussian envelope: the empirical moment generating function of
  f(X) - E[f(X)] under Gaussian X stays below the envelope implied by the
  constant ``subgaussian_sigma_gaussian``;
* information-gain dominance: for i.i.d. input noise and the (translation
  invariant) SE kernel, the log-determinant of the point-kernel Gram
  dominates that of the lifted-kernel Gram;
* mismatch bound: the Monte-Carlo gap between expectations under the true
  and the assumed Gaussian execution model stays below ``pinsker_bound``.

The dominance check also exposes a non-translation-invariant control
kernel (quadratic polynomial) for which the inequality is allowed to fail,
demonstrating that the hypothesis matters.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kernels import (
    GaussianInput,
    SEKernelParams,
    expected_rkhs_value,
    se_gram,
    uncertain_se_kernel,
)
from .noise import pinsker_bound, se_lipschitz_constant, subgaussian_sigma_gaussian
from .objectives import sample_rkhs_objective

__all__ = ["FamilyResult", "TheoryCheckReport", "theory_check_suite",
           "gram_dominance_gaps"]


@dataclass
class FamilyResult:
    name: str
    checked: int
    failures: int
    worst_margin: float
    note: str = ""

    @property
    def passed(self) -> bool:
        return self.failures == 0


@dataclass
class TheoryCheckReport:
    seed: int
    families: list[FamilyResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(f.passed for f in self.families)

    def lines(self) -> list[str]:
        out = []
        for f in self.families:
            status = "PASS" if f.passed else "FAIL"
            line = (f"{status} {f.name}: {f.checked - f.failures}/{f.checked} ok, "
                    f"worst margin {f.worst_margin:+.3e}")
            if f.note:
                line += f" ({f.note})"
            out.append(line)
        return out


def _random_kernel(rng: np.random.Generator, dim: int) -> SEKernelParams:
    return SEKernelParams(1.0, rng.uniform(0.2, 0.8, size=dim))


def _random_spd(rng: np.random.Generator, dim: int, scale: float) -> np.ndarray:
    a = rng.normal(size=(dim, dim))
    return scale * (a @ a.T / dim + 0.05 * np.eye(dim))


def check_dirac_identity(seed: int, instances: int = 100) -> FamilyResult:
    """|E_{delta_x}[f] - f(x)| <= 1e-10 on random expansions and points."""
    rng = np.random.default_rng((seed, 0))
    worst = 0.0
    failures = 0
    for i in range(instances):
        dim = int(rng.integers(1, 4))
        kernel = _random_kernel(rng, dim)
        bounds = np.column_stack([np.zeros(dim), np.ones(dim)])
        f = sample_rkhs_objective(int(rng.integers(2**31)), 30, bounds, kernel)
        x = rng.uniform(0.0, 1.0, size=dim)
        gap = abs(expected_rkhs_value(f, GaussianInput.dirac(x)) - f(x))
        worst = max(worst, gap)
        failures += gap > 1e-10
    return FamilyResult("dirac embedding identity", instances, failures, worst)


def check_mgf_bound(seed: int, instances: int = 10, samples: int = 1_000_000,
                    slack: float = 1.05) -> FamilyResult:
    """E[exp(l * (f(X) - E f(X)))] <= slack * exp(l^2 sigma_F^2 / 2)."""
    rng = np.random.default_rng((seed, 1))
    lambdas = np.array([-2.0, -1.0, -0.5, 0.5, 1.0, 2.0])
    worst = -np.inf
    failures = 0
    for i in range(instances):
        dim = 2
        kernel = _random_kernel(rng, dim)
        bounds = np.column_stack([np.zeros(dim), np.ones(dim)])
        f = sample_rkhs_objective(int(rng.integers(2**31)), 30, bounds, kernel)
        mean = rng.uniform(0.0, 1.0, size=dim)
        cov = _random_spd(rng, dim, rng.uniform(0.01, 0.05))
        sigma_f = subgaussian_sigma_gaussian(f.norm_b, se_lipschitz_constant(kernel), cov)
        expected = expected_rkhs_value(f, GaussianInput(mean, cov))

        draws = rng.multivariate_normal(mean, cov, size=samples)
        centred = np.empty(samples)
        chunk = 100_000
        for start in range(0, samples, chunk):
            centred[start:start + chunk] = f.evaluate_many(draws[start:start + chunk])
        centred -= expected
        for lam in lambdas:
            mgf = float(np.mean(np.exp(lam * centred)))
            envelope = slack * float(np.exp(0.5 * lam * lam * sigma_f * sigma_f))
            margin = mgf - envelope
            worst = max(worst, margin)
            failures += margin > 0.0
    return FamilyResult("sub-Gaussian MGF envelope", instances * lambdas.size,
                        failures, worst)


def gram_dominance_gaps(seed: int, instances: int = 100, lam: float = 1.0,
                        kernel_kind: str = "se") -> np.ndarray:
    """log|I + K/lam| - log|I + Kt/lam| on random i.i.d.-noise instances.

    ``kernel_kind`` selects the SE kernel or the quadratic-polynomial
    control, whose lifted Gram uses second moments and need not be
    dominated.
    """
    rng = np.random.default_rng((seed, 2))
    gaps = np.empty(instances)
    for i in range(instances):
        dim = int(rng.integers(1, 4))
        n = int(rng.integers(2, 16))
        means = rng.uniform(0.0, 1.0, size=(n, dim))
        cov = _random_spd(rng, dim, rng.uniform(0.005, 0.05))
        if kernel_kind == "se":
            kernel = _random_kernel(rng, dim)
            k_point = se_gram(means, kernel)
            inputs = [GaussianInput(m, cov) for m in means]
            k_lift = np.array([
                [uncertain_se_kernel(inputs[a], inputs[b], kernel) for b in range(n)]
                for a in range(n)])
        elif kernel_kind == "quadratic":
            k_point = (means @ means.T) ** 2
            second = means[:, :, None] * means[:, None, :] + cov[None, :, :]
            k_lift = np.einsum("aij,bij->ab", second, second)
        else:
            raise ValueError(f"unknown kernel_kind {kernel_kind!r}")
        gaps[i] = (_logdet_eye_plus(k_point / lam) - _logdet_eye_plus(k_lift / lam))
    return gaps


def check_gram_dominance(seed: int, instances: int = 100) -> FamilyResult:
    gaps = gram_dominance_gaps(seed, instances, kernel_kind="se")
    failures = int(np.sum(gaps < -1e-10))
    return FamilyResult("information-gain dominance", instances, failures,
                        float(np.min(gaps)))


def check_pinsker_gap(seed: int, instances: int = 50,
                      samples: int = 200_000) -> FamilyResult:
    """|E_q[f] - E_model[f]| (Monte Carlo) <= bound + 3 standard errors."""
    rng = np.random.default_rng((seed, 3))
    worst = -np.inf
    failures = 0
    for i in range(instances):
        dim = 2
        kernel = _random_kernel(rng, dim)
        bounds = np.column_stack([np.zeros(dim), np.ones(dim)])
        f = sample_rkhs_objective(int(rng.integers(2**31)), 30, bounds, kernel)
        mean = rng.uniform(0.0, 1.0, size=dim)
        cov_q = _random_spd(rng, dim, rng.uniform(0.01, 0.1))
        cov_hat = _random_spd(rng, dim, rng.uniform(0.01, 0.1))
        bound = pinsker_bound(f.norm_b, cov_hat, cov_q)

        vals_q = f.evaluate_many(rng.multivariate_normal(mean, cov_q, size=samples))
        vals_h = f.evaluate_many(rng.multivariate_normal(mean, cov_hat, size=samples))
        gap = abs(float(np.mean(vals_q) - np.mean(vals_h)))
        se = float(np.sqrt(np.var(vals_q) / samples + np.var(vals_h) / samples))
        margin = gap - bound - 3.0 * se
        worst = max(worst, margin)
        failures += margin > 0.0
    return FamilyResult("Gaussian-model mismatch bound", instances, failures, worst)


def theory_check_suite(seed: int = 0, mgf_samples: int = 1_000_000,
                       pinsker_samples: int = 200_000) -> TheoryCheckReport:
    """Run all four families and collect pass/fail results."""
    report = TheoryCheckReport(seed=seed)
    report.families.append(check_dirac_identity(seed))
    report.families.append(check_mgf_bound(seed, samples=mgf_samples))
    report.families.append(check_gram_dominance(seed))
    report.families.append(check_pinsker_gap(seed, samples=pinsker_samples))
    return report


def _logdet_eye_plus(mat: np.ndarray) -> float:
    sign, logdet = np.linalg.slogdet(np.eye(mat.shape[0]) + mat)
    if sign <= 0:
        raise np.linalg.LinAlgError("matrix I + K must have positive determinant")
    return float(logdet)
