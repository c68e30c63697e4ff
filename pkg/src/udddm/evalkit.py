"""Synthetic datasets and desk-scale sample-quality metrics.

Dataset constants are fixed so plots and metrics are comparable between
runs: eight-gaussians has component means on a circle of radius 2 with a
per-coordinate std of 0.02; two-moons uses the usual unit half circles
with noise std 0.05.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from udddm._validation import as_matrix, check_int

EIGHT_GAUSSIANS_RADIUS = 2.0
EIGHT_GAUSSIANS_STD = 0.02
TWO_MOONS_NOISE = 0.05
DATASET_KINDS = ("eight_gaussians", "two_moons", "isotropic_gaussian", "gmm")


@dataclass
class DatasetSpec:
    kind: str = "eight_gaussians"
    n_data: int = 10000
    dim: int = 2
    seed: int = 0
    # isotropic_gaussian: mean (list) and std; gmm: weights, means, stds
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in DATASET_KINDS:
            raise ValueError(f"unknown dataset kind {self.kind!r}")
        check_int(self.n_data, "n_data", minimum=1)
        check_int(self.dim, "dim", minimum=1)
        if self.kind in ("eight_gaussians", "two_moons") and self.dim != 2:
            raise ValueError(f"{self.kind} is two-dimensional")


def eight_gaussians_means() -> np.ndarray:
    angles = 2.0 * np.pi * np.arange(8) / 8
    return EIGHT_GAUSSIANS_RADIUS * np.stack([np.cos(angles), np.sin(angles)], axis=1)


def density_for(spec: DatasetSpec):
    """Analytic density matching ``spec``, or ``None`` for two-moons."""
    from udddm.oracle import AnalyticDensity

    if spec.kind == "eight_gaussians":
        means = eight_gaussians_means()
        return AnalyticDensity.gmm(np.full(8, 1 / 8), means, np.full(8, EIGHT_GAUSSIANS_STD))
    if spec.kind == "isotropic_gaussian":
        mean = np.asarray(spec.params.get("mean", np.zeros(spec.dim)), dtype=np.float64)
        return AnalyticDensity.gaussian(np.broadcast_to(mean, (spec.dim,)), spec.params.get("std", 1.0))
    if spec.kind == "gmm":
        return AnalyticDensity.gmm(spec.params["weights"], spec.params["means"], spec.params["stds"])
    return None


def generate_dataset(spec: DatasetSpec, n: int | None = None, seed: int | None = None) -> np.ndarray:
    """Deterministic draw of ``n`` (default ``spec.n_data``) points."""
    n = spec.n_data if n is None else check_int(n, "n", minimum=0)
    rng = np.random.default_rng(spec.seed if seed is None else seed)
    if spec.kind == "two_moons":
        upper = rng.random(n) < 0.5
        theta = np.pi * rng.random(n)
        x = np.where(upper, np.cos(theta), 1.0 - np.cos(theta))
        y = np.where(upper, np.sin(theta), 0.5 - np.sin(theta))
        pts = np.stack([x, y], axis=1)
        return pts + TWO_MOONS_NOISE * rng.standard_normal((n, 2))
    return density_for(spec).sample(n, rng)


def split_heldout(spec: DatasetSpec, n_heldout: int) -> np.ndarray:
    """A held-out draw from the same distribution on an independent stream."""
    return generate_dataset(spec, n=n_heldout, seed=[spec.seed, 0x5EED])


def random_directions(dim: int, projections: int, seed) -> np.ndarray:
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((projections, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def wasserstein2_1d(a: np.ndarray, b: np.ndarray) -> float:
    """Exact W2 between two 1-D empirical distributions.

    Equal sizes pair sorted samples directly; unequal sizes integrate the
    squared quantile difference over the merged quantile grid.
    """
    a, b = np.sort(np.ravel(a)), np.sort(np.ravel(b))
    if a.size == 0 or b.size == 0:
        raise ValueError("empty sample set")
    if a.size == b.size:
        return float(np.sqrt(np.mean((a - b) ** 2)))
    qs = np.union1d(np.arange(1, a.size + 1) / a.size, np.arange(1, b.size + 1) / b.size)
    widths = np.diff(np.concatenate([[0.0], qs]))
    mids = qs - widths / 2
    ia = np.minimum((mids * a.size).astype(np.int64), a.size - 1)
    ib = np.minimum((mids * b.size).astype(np.int64), b.size - 1)
    return float(np.sqrt(np.sum(widths * (a[ia] - b[ib]) ** 2)))


def sliced_wasserstein(A, B, projections: int = 128, seed=0) -> float:
    """Mean over random unit directions of the 1-D W2 between projections."""
    A = as_matrix(A, "A")
    B = as_matrix(B, "B", A.shape[1])
    projections = check_int(projections, "projections", minimum=1)
    if A.shape[0] == 0 or B.shape[0] == 0:
        raise ValueError("empty sample set")
    dirs = random_directions(A.shape[1], projections, seed)
    pa, pb = A @ dirs.T, B @ dirs.T
    return float(np.mean([wasserstein2_1d(pa[:, k], pb[:, k]) for k in range(projections)]))


def resample_baseline(data, projections: int = 128, seed=0) -> float:
    """SW between the two halves of ``data`` (first half vs second half)."""
    data = as_matrix(data, "data")
    half = data.shape[0] // 2
    return sliced_wasserstein(data[:half], data[half : 2 * half], projections, seed)


@dataclass
class MomentReport:
    mean: np.ndarray
    cov: np.ndarray
    z_mean: np.ndarray
    z_cov: np.ndarray
    threshold: float = 4.0

    @property
    def max_abs_z(self) -> float:
        return float(max(np.max(np.abs(self.z_mean)), np.max(np.abs(self.z_cov))))

    @property
    def flagged(self) -> bool:
        return self.max_abs_z >= self.threshold


def moment_report(samples, density, threshold: float = 4.0) -> MomentReport:
    """Standard-error z-scores of the empirical mean and covariance entries.

    Standard errors use the true moments: ``sqrt(S_ii / n)`` for means and
    ``sqrt((S_ii S_jj + S_ij^2) / n)`` for covariances, less the fourth-moment
    excess which is exact for Gaussian data.
    """
    X = as_matrix(samples, "samples", density.dim)
    n = X.shape[0]
    mu, S = density.moments()
    emp_mean = X.mean(axis=0)
    emp_cov = np.cov(X, rowvar=False, bias=False).reshape(density.dim, density.dim)
    z_mean = (emp_mean - mu) / np.sqrt(np.diag(S) / n)
    var_ij = (np.outer(np.diag(S), np.diag(S)) + S**2) / n
    if density.kind == "gmm":
        var_ij = density.cov_entry_variance() / n
    z_cov = (emp_cov - S) / np.sqrt(var_ij)
    return MomentReport(emp_mean, emp_cov, z_mean, z_cov, threshold)
