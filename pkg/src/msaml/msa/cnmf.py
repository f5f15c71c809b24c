"""Convex NMF segmentation: F ~ F W G with nonnegative W and G."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..core import StructureEstimate
from .common import estimate_from_labels, single_segment, smooth_labels

log = logging.getLogger(__name__)

TINY = 1e-12


@dataclass(frozen=True)
class CnmfParams:
    rank: int = 4
    iterations: int = 300
    median_width: int = 9
    seed: int = 0

    def __post_init__(self):
        if self.rank < 2:
            raise ValueError("rank must be >= 2")


@dataclass
class CnmfResult:
    W: np.ndarray
    G: np.ndarray
    objective: list = field(default_factory=list)
    diverged: bool = False


def _objective(Y: np.ndarray, W: np.ndarray, G: np.ndarray) -> float:
    # ||F - F W G||^2 written through the Gram matrix Y = F^T F
    YW = Y @ W
    val = np.trace(Y) - 2 * np.sum(YW * G.T) + np.sum((W.T @ YW) * (G @ G.T))
    return float(max(val, 0.0))


def convex_nmf(F: np.ndarray, rank: int, iterations: int = 300, seed: int = 0,
               init: str = "random", patience: int = 10) -> CnmfResult:
    """Multiplicative updates for convex NMF of a nonnegative ``dims x N`` matrix.

    ``objective`` lists the reconstruction error of every accepted iterate;
    if the error rises for more than ``patience`` consecutive steps the best
    iterate is returned with ``diverged`` set.
    """
    F = np.asarray(F, dtype=np.float64)
    if np.any(F < 0):
        raise ValueError("convex NMF input must be nonnegative")
    n = F.shape[1]
    if n < rank:
        raise ValueError(f"need at least rank={rank} frames")
    rng = np.random.default_rng(seed)
    if init == "identity":
        W = np.eye(n, rank) + 1e-3
        G = np.eye(rank, n) + 1e-3
    else:
        W = rng.random((n, rank)) + 0.2
        G = rng.random((rank, n)) + 0.2
    Y = F.T @ F
    obj = _objective(Y, W, G)
    res = CnmfResult(W.copy(), G.copy(), [obj])
    best = obj
    rising = 0
    for _ in range(iterations):
        # G update (Gt is N x R in the usual X ~ X W G^T orientation)
        YW = Y @ W
        G = G * np.sqrt(YW.T / (((W.T @ YW) @ G) + TINY))
        YG = Y @ G.T
        W = W * np.sqrt(YG / ((Y @ W) @ (G @ G.T) + TINY))
        obj = _objective(Y, W, G)
        if obj <= best:
            best = obj
            rising = 0
            res.W, res.G = W.copy(), G.copy()
            res.objective.append(obj)
        else:
            rising += 1
            if rising > patience:
                log.warning("convex NMF objective rose for %d steps; keeping best iterate", rising)
                res.diverged = True
                break
    return res


def cnmf_analyze(X, grid=None, p: CnmfParams = CnmfParams(),
                 duration: float | None = None) -> StructureEstimate:
    """Frame label = dominant convex-NMF component, median filtered."""
    data = np.asarray(getattr(X, "data", X), dtype=np.float64)
    n = data.shape[0]
    if n < p.rank:
        return single_segment(grid, n, duration)
    F = (data - data.min()).T
    res = convex_nmf(F, p.rank, p.iterations, p.seed)
    labels = smooth_labels(np.argmax(res.G, axis=0), p.median_width)
    return estimate_from_labels(labels, grid, duration)
