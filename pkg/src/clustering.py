import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp
from scipy.spatial.distance import cdist
from sklearn import metrics

from src.config import config
from src.errors import InputError
from src.tabular_domain import Table
from src.tabular_encoder import encode_features

logger = logging.getLogger(__name__)

VARIANCE_FLOOR = 1e-6


@dataclass(frozen=True)
class PcaResult:
    mean: np.ndarray
    basis: np.ndarray          # (d, 2), orthonormal columns
    eigenvalues: np.ndarray    # (2,), descending
    points: np.ndarray         # (n, 2)


def _as_matrix(data: Table | np.ndarray) -> np.ndarray:
    x = encode_features(data) if isinstance(data, Table) else np.asarray(data, dtype=float)
    if x.ndim != 2:
        raise InputError(f"expected a 2-D matrix, got shape {x.shape}")
    return x


def pca_top2(data: Table | np.ndarray) -> PcaResult:
    """Top-2 principal components of the column-centred data by exact eigendecomposition."""
    x = _as_matrix(data)
    if x.shape[1] < 2:
        raise InputError(f"PCA to two components needs d >= 2, got {x.shape[1]}")
    if x.shape[0] < 2:
        raise InputError("PCA needs at least two rows")
    mean = x.mean(axis=0)
    centred = x - mean
    cov = centred.T @ centred / (x.shape[0] - 1)
    values, vectors = np.linalg.eigh(cov)
    top = np.argsort(values)[::-1][:2]
    basis = vectors[:, top]
    # sign convention: largest-magnitude loading positive
    signs = np.sign(basis[np.argmax(np.abs(basis), axis=0), [0, 1]])
    basis = basis * np.where(signs == 0, 1.0, signs)
    return PcaResult(mean, basis, np.maximum(values[top], 0.0), centred @ basis)


def pca_project(pca: PcaResult, data: Table | np.ndarray) -> np.ndarray:
    """Project new points with the fitted mean and basis."""
    x = _as_matrix(data)
    if x.shape[1] != pca.mean.size:
        raise InputError(f"data width {x.shape[1]} differs from the fitted width {pca.mean.size}")
    return (x - pca.mean) @ pca.basis


@dataclass
class DiagonalGmm:
    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray

    def log_joint(self, x: np.ndarray) -> np.ndarray:
        """(n, k) matrix of log w_k + log N(x | mu_k, diag var_k)."""
        diff = x[:, None, :] - self.means[None, :, :]
        log_pdf = -0.5 * np.sum(diff ** 2 / self.variances + np.log(2 * np.pi * self.variances), axis=2)
        return np.log(self.weights) + log_pdf

    def predict(self, x: np.ndarray) -> np.ndarray:
        return np.argmax(self.log_joint(x), axis=1)


def _farthest_point(x: np.ndarray, means: np.ndarray) -> int:
    return int(np.argmax(cdist(x, means).min(axis=1)))


def _farthest_point_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    means = [x[rng.integers(x.shape[0])]]
    for _ in range(1, k):
        means.append(x[_farthest_point(x, np.array(means))])
    return np.array(means)


def fit_diagonal_gmm(x: np.ndarray, k: int, rng: np.random.Generator) -> DiagonalGmm:
    """EM with diagonal covariances; an emptied component is re-seeded at the farthest point."""
    n, d = x.shape
    if n < k:
        raise InputError(f"{n} points cannot fit {k} mixture components")
    spread = np.maximum(x.var(axis=0), VARIANCE_FLOOR)
    gmm = DiagonalGmm(np.full(k, 1.0 / k), _farthest_point_init(x, k, rng), np.tile(spread, (k, 1)))

    previous = -np.inf
    for iteration in range(1, config.eval_gmm_iterations + 1):
        log_joint = gmm.log_joint(x)
        log_norm = logsumexp(log_joint, axis=1, keepdims=True)
        resp = np.exp(log_joint - log_norm)
        log_likelihood = float(log_norm.mean())

        mass = resp.sum(axis=0)
        for c in np.flatnonzero(mass < 1e-10):
            others = np.delete(gmm.means, c, axis=0)
            point = _farthest_point(x, others)
            logger.debug("GMM component %d emptied at iteration %d; re-seeded at point %d", c, iteration, point)
            resp[:, c] = 0.0
            resp[point] = 0.0
            resp[point, c] = 1.0
            mass = resp.sum(axis=0)

        gmm.weights = np.maximum(mass / n, 1e-12)
        gmm.weights /= gmm.weights.sum()
        gmm.means = (resp.T @ x) / mass[:, None]
        gmm.variances = np.maximum((resp.T @ x ** 2) / mass[:, None] - gmm.means ** 2, VARIANCE_FLOOR)

        if abs(log_likelihood - previous) < config.eval_gmm_tolerance:
            logger.debug("GMM converged after %d iterations (mean log-likelihood %.6g)", iteration, log_likelihood)
            break
        previous = log_likelihood
    return gmm


def silhouette(points: np.ndarray, labels: np.ndarray) -> float:
    """Mean silhouette; 0 when fewer than two clusters are present."""
    distinct = np.unique(labels)
    if distinct.size < 2 or distinct.size >= points.shape[0]:
        return 0.0
    return float(metrics.silhouette_score(points, labels, metric="euclidean"))


def gmm_fit_silhouette(train_projected: np.ndarray, test_projected: np.ndarray, k: int | None = None,
                       seed: int = 0) -> float:
    """Fit a k-component diagonal GMM on training points; silhouette of the test points' labels."""
    k = config.eval_gmm_components if k is None else k
    if k < 2:
        raise InputError(f"need at least two mixture components, got {k}")
    train_projected = np.asarray(train_projected, dtype=float)
    test_projected = np.asarray(test_projected, dtype=float)
    if test_projected.shape[0] == 0:
        raise InputError("silhouette needs a non-empty test set")

    rng = np.random.default_rng(seed)
    gmm = fit_diagonal_gmm(train_projected, k, rng)
    if test_projected.shape[0] > config.silhouette_max_points:
        keep = rng.choice(test_projected.shape[0], config.silhouette_max_points, replace=False)
        test_projected = test_projected[keep]
    return silhouette(test_projected, gmm.predict(test_projected))
