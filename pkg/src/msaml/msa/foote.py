"""Checkerboard-kernel novelty and peak picking."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import uniform_filter1d

from .ssm import Ssm


@dataclass(frozen=True)
class FooteParams:
    kernel_half_width: int = 16
    peak_delta: float = 0.5
    peak_window: int = 32

    def __post_init__(self):
        if self.kernel_half_width < 2:
            raise ValueError("kernel_half_width must be >= 2")


def checkerboard_kernel(M: int) -> np.ndarray:
    """(2M+1)^2 Gaussian-tapered checkerboard; +1 on the same-side quadrants."""
    i = np.arange(-M, M + 1)
    C = np.sign(i)[:, None] * np.sign(i)[None, :]
    std = M / 2.0
    G = np.exp(-(i[:, None] ** 2 + i[None, :] ** 2) / (2 * std ** 2))
    return C * G


def novelty_curve(S, M: int = 16) -> np.ndarray:
    """Correlation of the kernel along the main diagonal.

    The matrix is padded by edge replication, so a constant SSM has zero
    novelty everywhere, including near the ends.
    """
    S = np.asarray(getattr(S, "S", S), dtype=np.float64)
    n = S.shape[0]
    # one weight block per quadrant; the data quadrants are flipped onto it so
    # equal inputs cancel exactly
    A = checkerboard_kernel(M)[M + 1:, M + 1:]
    P = np.pad(S, M, mode="edge")
    out = np.empty(n)
    for t in range(n):
        c = t + M
        before = slice(c - M, c)
        after = slice(c + 1, c + M + 1)
        same = np.sum(A * P[after, after]) + np.sum(A * P[before, before][::-1, ::-1])
        cross = np.sum(A * P[before, after][::-1]) + np.sum(A * P[after, before][:, ::-1])
        out[t] = same - cross
    return out


def pick_peaks(nov: np.ndarray, delta: float = 0.5, window: int = 32) -> np.ndarray:
    """Local maxima above a sliding ``mean + delta * std`` threshold."""
    nov = np.asarray(nov, dtype=float)
    n = len(nov)
    if n < 3:
        return np.zeros(0, dtype=int)
    w = max(int(window), 1)
    mean = uniform_filter1d(nov, w, mode="nearest")
    sq = uniform_filter1d(nov ** 2, w, mode="nearest")
    std = np.sqrt(np.maximum(sq - mean ** 2, 0.0))
    thr = mean + delta * std
    left = np.r_[-np.inf, nov[:-1]]
    right = np.r_[nov[1:], -np.inf]
    peaks = (nov >= left) & (nov > right) & (nov > thr) & (nov > 1e-9 * np.abs(nov).max(initial=0))
    peaks[0] = peaks[-1] = False
    return np.flatnonzero(peaks)


def foote_boundary_frames(ssm, p: FooteParams = FooteParams()) -> np.ndarray:
    """Interior boundary frame indices (a boundary at ``t`` starts frame ``t``)."""
    S = np.asarray(getattr(ssm, "S", ssm))
    if S.shape[0] <= 2 * p.kernel_half_width:
        return np.zeros(0, dtype=int)
    return pick_peaks(novelty_curve(S, p.kernel_half_width), p.peak_delta, p.peak_window)


def foote_boundaries(ssm: Ssm, p: FooteParams = FooteParams(), grid=None,
                     duration: float | None = None) -> np.ndarray:
    """Boundary times including 0 and the song end."""
    from .common import grid_times
    n = ssm.n if isinstance(ssm, Ssm) else np.asarray(ssm).shape[0]
    times = grid_times(grid, n)
    end = float(times[-1]) if duration is None else duration
    inner = [float(times[t]) for t in foote_boundary_frames(ssm, p) if 0 < times[t] < end]
    return np.array([0.0] + inner + [end])
