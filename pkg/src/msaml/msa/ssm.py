"""Gaussian-kernel self-similarity matrices."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist


@dataclass(frozen=True)
class Ssm:
    S: np.ndarray
    frame_times: np.ndarray

    def __post_init__(self):
        S = np.array(self.S, dtype=np.float64)
        if S.ndim != 2 or S.shape[0] != S.shape[1]:
            raise ValueError("SSM must be square")
        if not np.allclose(S, S.T, atol=1e-9):
            raise ValueError("SSM must be symmetric")
        S.setflags(write=False)
        object.__setattr__(self, "S", S)

    @property
    def n(self) -> int:
        return self.S.shape[0]


def median_offdiag_distance(D: np.ndarray) -> float:
    n = D.shape[0]
    return float(np.median(D[~np.eye(n, dtype=bool)])) if n > 1 else 0.0


def build_ssm(X, sigma: float | None = None, frame_times=None) -> Ssm:
    """``exp(-d^2 / (2 sigma^2))`` over Euclidean row distances.

    ``sigma=None`` uses the median off-diagonal distance, or 1 when that is 0.
    """
    data = getattr(X, "data", X)
    if frame_times is None:
        frame_times = getattr(X, "frame_times", np.arange(len(data), dtype=float))
    data = np.asarray(data, dtype=np.float64)
    if data.shape[0] < 2:
        raise ValueError("need at least 2 frames for an SSM")
    D = cdist(data, data)
    if sigma is None:
        sigma = median_offdiag_distance(D)
        if sigma <= 0:
            sigma = 1.0
    S = np.exp(-D ** 2 / (2 * sigma ** 2))
    S = 0.5 * (S + S.T)
    np.fill_diagonal(S, 1.0)
    return Ssm(S, np.asarray(frame_times, dtype=float))
