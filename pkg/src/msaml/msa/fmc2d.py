"""Segment labeling by clustering 2-D Fourier magnitude signatures."""

from __future__ import annotations

import numpy as np
from sklearn.cluster import KMeans
from sklearn.metrics import silhouette_score

from ..core import canonical_labels

RESAMPLE_STEPS = 32
MAX_K = 8


def _resample_rows(X: np.ndarray, steps: int) -> np.ndarray:
    n = X.shape[0]
    if n == 1:
        return np.repeat(X, steps, axis=0)
    src = np.linspace(0, 1, n)
    dst = np.linspace(0, 1, steps)
    return np.stack([np.interp(dst, src, X[:, d]) for d in range(X.shape[1])], axis=1)


def segment_signature(X: np.ndarray, steps: int = RESAMPLE_STEPS) -> np.ndarray:
    """Shift-invariant signature: |2-D DFT| of the time-resampled patch."""
    return np.abs(np.fft.fft2(_resample_rows(np.asarray(X, dtype=float), steps))).ravel()


def fmc2d_labels(X, boundaries, seed: int = 0) -> np.ndarray:
    """One label per segment; ``boundaries`` are frame indices including 0 and N."""
    X = np.asarray(getattr(X, "data", X), dtype=np.float64)
    edges = [int(b) for b in boundaries]
    n_seg = len(edges) - 1
    if n_seg < 1:
        raise ValueError("need at least one segment")
    if n_seg == 1:
        return np.zeros(1, dtype=np.int64)
    F = np.stack([segment_signature(X[a:b]) for a, b in zip(edges[:-1], edges[1:])])
    scale = np.abs(F).max()
    if scale > 0:
        F = F / scale
    if np.ptp(F, axis=0).max() <= 1e-9:
        return np.zeros(n_seg, dtype=np.int64)
    if n_seg == 2:
        return np.array([0, 1], dtype=np.int64)
    best, best_score = None, -np.inf
    for k in range(2, min(MAX_K, n_seg - 1) + 1):
        labels = KMeans(n_clusters=k, n_init=10, random_state=seed).fit_predict(F)
        if len(np.unique(labels)) < 2:
            continue
        score = silhouette_score(F, labels)
        if score > best_score + 1e-12:
            best, best_score = labels, score
    if best is None:
        return np.zeros(n_seg, dtype=np.int64)
    return canonical_labels(best)
