"""Sample-based discrepancy estimators used for evaluation.

Maximum mean discrepancy (unbiased U-statistic and plug-in V-statistic),
sliced Wasserstein distance over random projections, a nearest-neighbor KL
divergence estimate, and pairwise Pearson correlations.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from .kernels import KernelSpec, eval_matrix

DISTANCE_CLAMP = 1e-12


class DegenerateSamplesError(ValueError):
    """Raised when too many nearest-neighbor distances hit the clamp."""


def _check_sample_set(X, name, min_rows=2):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < min_rows:
        raise ValueError(f"{name} must be a 2-D array with at least {min_rows} rows")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains non-finite entries")
    return X


def _check_pair_dims(X, Y):
    if X.shape[1] != Y.shape[1]:
        raise ValueError(f"sample dimensions differ: {X.shape[1]} vs {Y.shape[1]}")


def mmd2_ustat(X, Y, kernel: KernelSpec) -> float:
    """Unbiased squared maximum mean discrepancy."""
    X = _check_sample_set(X, "X")
    Y = _check_sample_set(Y, "Y")
    _check_pair_dims(X, Y)
    n, m = X.shape[0], Y.shape[0]
    kxx = eval_matrix(kernel, X, X)
    kyy = eval_matrix(kernel, Y, Y)
    kxy = eval_matrix(kernel, X, Y)
    within_x = (kxx.sum() - np.trace(kxx)) / (n * (n - 1))
    within_y = (kyy.sum() - np.trace(kyy)) / (m * (m - 1))
    return float(within_x + within_y - 2.0 * kxy.mean())


def mmd2_vstat(X, Y, kernel: KernelSpec) -> float:
    """Plug-in squared maximum mean discrepancy; exactly zero for X == Y."""
    X = _check_sample_set(X, "X", min_rows=1)
    Y = _check_sample_set(Y, "Y", min_rows=1)
    _check_pair_dims(X, Y)
    return float(
        eval_matrix(kernel, X, X).mean()
        + eval_matrix(kernel, Y, Y).mean()
        - 2.0 * eval_matrix(kernel, X, Y).mean()
    )


def sliced_wd(X, Y, n_proj: int = 128, seed: int = 0) -> float:
    """Average order-2 Wasserstein distance over random 1-D projections.

    Unequal sample counts are resolved by seeded subsampling of the larger
    set, so the sorted-coupling formula applies directly.
    """
    X = _check_sample_set(X, "X")
    Y = _check_sample_set(Y, "Y")
    _check_pair_dims(X, Y)
    rng = np.random.default_rng(seed)
    if X.shape[0] != Y.shape[0]:
        n = min(X.shape[0], Y.shape[0])
        if X.shape[0] > n:
            X = X[rng.choice(X.shape[0], size=n, replace=False)]
        else:
            Y = Y[rng.choice(Y.shape[0], size=n, replace=False)]
    dirs = rng.standard_normal((n_proj, X.shape[1]))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    proj_x = np.sort(X @ dirs.T, axis=0)
    proj_y = np.sort(Y @ dirs.T, axis=0)
    w2 = np.sqrt(((proj_x - proj_y) ** 2).mean(axis=0))
    return float(w2.mean())


def kl_knn(X, Y, k: int = 1) -> float:
    """Nearest-neighbor estimate of KL(q || p) from X ~ q and Y ~ p.

    Uses the ratio of the k-th neighbor distance into Y to the k-th neighbor
    distance within X.  Distances are clamped below; if more than 1% of the
    within-set distances hit the clamp the sample set is effectively
    degenerate and the estimate is refused.
    """
    X = _check_sample_set(X, "X")
    Y = _check_sample_set(Y, "Y")
    _check_pair_dims(X, Y)
    n, m = X.shape[0], Y.shape[0]
    if k < 1 or n <= k or m <= k:
        raise ValueError("need more samples than neighbors on both sides")
    d = X.shape[1]
    rho = cKDTree(X).query(X, k=k + 1)[0][:, k]  # self sits at distance 0
    nu = cKDTree(Y).query(X, k=k)[0]
    if k > 1:
        nu = nu[:, k - 1]
    else:
        nu = np.atleast_1d(nu).reshape(n)
    clamped = rho < DISTANCE_CLAMP
    if clamped.mean() > 0.01:
        raise DegenerateSamplesError(
            f"{int(clamped.sum())} of {n} within-set neighbor distances collapsed; "
            "samples contain too many duplicates for a neighbor-ratio estimate"
        )
    rho = np.maximum(rho, DISTANCE_CLAMP)
    nu = np.maximum(nu, DISTANCE_CLAMP)
    return float((d / n) * np.log(nu / rho).sum() + np.log(m / (n - 1.0)))


def corr_pairs(X) -> np.ndarray:
    """Sample Pearson correlation matrix; requires every coordinate to vary."""
    X = _check_sample_set(X, "X", min_rows=3)
    stds = X.std(axis=0)
    if np.any(stds == 0.0):
        bad = int(np.flatnonzero(stds == 0.0)[0])
        raise ValueError(f"coordinate {bad} has zero variance")
    corr = np.corrcoef(X.T)
    return np.clip(corr, -1.0, 1.0)


def upper_triangle(matrix: np.ndarray) -> np.ndarray:
    """Strictly-upper-triangular entries in row-major pair order."""
    matrix = np.asarray(matrix)
    idx = np.triu_indices(matrix.shape[0], k=1)
    return matrix[idx]
