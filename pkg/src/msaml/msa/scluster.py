"""Spectral-clustering structure analysis over a recurrence + path graph.

The graph joins mutual k-nearest-neighbour recurrences with a chain linking
temporally adjacent frames; the bottom eigenvectors of its normalized
Laplacian, smoothed over time and clustered with k-means, give frame labels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh
from scipy.ndimage import maximum_filter, median_filter
from scipy.spatial.distance import cdist
from sklearn.cluster import KMeans

from ..core import StructureEstimate
from .common import estimate_from_labels, odd, single_segment, smooth_labels

MAX_AUTO_CLUSTERS = 12
LABEL_SMOOTH = 5


@dataclass(frozen=True)
class SclusterParams:
    evec_smooth: int = 5
    rec_smooth: int = 3
    rec_width: int = 2
    n_clusters: int | None = None  # None selects K from the eigengap
    seed: int = 0

    def __post_init__(self):
        if self.rec_width < 1:
            raise ValueError("rec_width must be >= 1")
        if self.n_clusters is not None and self.n_clusters < 1:
            raise ValueError("n_clusters must be positive")


def _filter_diagonals(R: np.ndarray, fn) -> np.ndarray:
    """Apply a 1-D filter along every diagonal of ``R``."""
    n = R.shape[0]
    out = np.zeros_like(R)
    rows = np.arange(n)
    for off in range(-(n - 1), n):
        d = np.diagonal(R, off)
        i = rows[:len(d)] + max(-off, 0)
        out[i, i + off] = fn(d)
    return out


def _timelag_median(R: np.ndarray, width: int) -> np.ndarray:
    """Median filter along the time direction of each lag (matrix diagonal)."""
    if width <= 1:
        return R
    size = odd(width)
    return _filter_diagonals(R, lambda d: median_filter(d, size=size, mode="nearest"))


def _diag_widen(R: np.ndarray, width: int) -> np.ndarray:
    """Extend each recurrence along its diagonal by ``width - 1`` frames each way."""
    if width <= 1:
        return R
    size = 2 * width - 1
    return _filter_diagonals(R, lambda d: maximum_filter(d, size=size, mode="constant"))


def recurrence_matrix(X: np.ndarray, rec_smooth: int = 3, rec_width: int = 2) -> np.ndarray:
    n = X.shape[0]
    k = min(1 + int(np.ceil(np.sqrt(n))), n - 1)
    D = cdist(X, X)
    np.fill_diagonal(D, np.inf)
    # Frames strictly closer than the (k+1)-th neighbour, so a group tied at
    # the cut-off is left out as a whole instead of being split by index.
    # Identical frames are always neighbours.
    if k + 1 <= n - 1:
        cut = np.partition(D, k, axis=1)[:, k]
    else:
        cut = np.full(n, np.inf)
    tol = 1e-9 * max(float(np.max(D[np.isfinite(D)], initial=0.0)), 1e-12)
    K = ((D < (cut - tol)[:, None]) | (D <= tol)).astype(float)
    R = K * K.T
    R = _timelag_median(R, rec_smooth)
    R = _diag_widen(R, rec_width)
    np.fill_diagonal(R, 0.0)
    return R


def path_matrix(X: np.ndarray) -> np.ndarray:
    n = X.shape[0]
    d2 = np.sum(np.diff(X, axis=0) ** 2, axis=1)
    sigma2 = float(np.median(d2))
    if sigma2 <= 0:
        pos = d2[d2 > 0]
        sigma2 = float(pos.mean()) if len(pos) else 1.0
    w = np.exp(-d2 / sigma2)
    P = np.zeros((n, n))
    P[np.arange(n - 1), np.arange(1, n)] = w
    P[np.arange(1, n), np.arange(n - 1)] = w
    return P


def combined_graph(R: np.ndarray, P: np.ndarray) -> np.ndarray:
    """``mu R + (1 - mu) P`` with equal mean degree from each part."""
    dr, dp = R.sum(axis=1).mean(), P.sum(axis=1).mean()
    mu = dp / (dr + dp) if dr + dp > 0 else 0.0
    return mu * R + (1 - mu) * P


def laplacian_eigs(A: np.ndarray):
    deg = A.sum(axis=1)
    inv = 1.0 / np.sqrt(np.maximum(deg, 1e-12))
    L = np.eye(A.shape[0]) - inv[:, None] * A * inv[None, :]
    return eigh(0.5 * (L + L.T))


def eigengap_k(evals: np.ndarray, kmax: int = MAX_AUTO_CLUSTERS) -> int:
    """K in 2..kmax maximizing ``evals[K] - evals[K-1]`` (ascending eigenvalues)."""
    kmax = min(kmax, len(evals) - 1)
    if kmax < 2:
        return 1
    gaps = evals[2:kmax + 1] - evals[1:kmax]
    return int(np.argmax(gaps)) + 2


def scluster_labels(X, p: SclusterParams = SclusterParams()) -> np.ndarray:
    """One cluster label per frame (before median smoothing)."""
    X = np.asarray(getattr(X, "data", X), dtype=np.float64)
    n = X.shape[0]
    if n < 4 or np.ptp(X, axis=0).max() <= 1e-12:
        return np.zeros(n, dtype=np.int64)
    A = combined_graph(recurrence_matrix(X, p.rec_smooth, p.rec_width), path_matrix(X))
    evals, evecs = laplacian_eigs(A)
    k = p.n_clusters if p.n_clusters is not None else eigengap_k(evals)
    k = min(k, n)
    if k <= 1:
        return np.zeros(n, dtype=np.int64)
    V = evecs[:, :k]
    V = median_filter(V, size=(odd(p.evec_smooth), 1), mode="nearest")
    norms = np.linalg.norm(V, axis=1, keepdims=True)
    V = V / np.maximum(norms, 1e-12)
    km = KMeans(n_clusters=k, n_init=10, random_state=p.seed)
    return km.fit_predict(V).astype(np.int64)


def scluster_analyze(X, grid=None, p: SclusterParams = SclusterParams(),
                     duration: float | None = None) -> StructureEstimate:
    """Boundaries where the smoothed frame labels change, mapped to grid times."""
    data = np.asarray(getattr(X, "data", X))
    n = data.shape[0]
    if n < 4:
        return single_segment(grid, n, duration)
    labels = smooth_labels(scluster_labels(data, p), LABEL_SMOOTH)
    return estimate_from_labels(labels, grid, duration)
