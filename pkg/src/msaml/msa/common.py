"""Helpers shared by the analyzers."""

from __future__ import annotations

import numpy as np
from scipy.ndimage import median_filter

from ..core import StructureEstimate, TimeGrid, canonical_labels


def odd(w: int) -> int:
    return 2 * (int(w) // 2) + 1


def smooth_labels(labels, width: int) -> np.ndarray:
    labels = np.asarray(labels)
    if width <= 1 or len(labels) < 2:
        return labels
    return median_filter(labels, size=odd(width), mode="nearest")


def grid_times(grid: TimeGrid | np.ndarray | None, n_frames: int) -> np.ndarray:
    """Interval start times (length ``n_frames + 1``) for frame-indexed analyzers."""
    if grid is None:
        return np.arange(n_frames + 1, dtype=float)
    inst = np.asarray(getattr(grid, "instants", grid), dtype=float)
    if len(inst) != n_frames + 1:
        raise ValueError(f"grid has {len(inst)} instants for {n_frames} frames")
    return inst


def estimate_from_labels(labels, grid, duration: float | None) -> StructureEstimate:
    times = grid_times(grid, len(labels))
    if duration is None:
        duration = float(times[-1])
    return StructureEstimate.from_frame_labels(labels, times, duration)


def estimate_from_bounds(bound_idx, labels, grid, n_frames: int,
                         duration: float | None) -> StructureEstimate:
    """Estimate from interior boundary frame indices and one label per segment."""
    edges = [0] + sorted(int(b) for b in bound_idx) + [n_frames]
    times = grid_times(grid, n_frames)
    if duration is None:
        duration = float(times[-1])
    keep = [0] + [k + 1 for k, e in enumerate(edges[1:-1]) if 0 < times[e] < duration]
    bounds = [0.0] + [float(times[edges[k]]) for k in keep[1:]] + [duration]
    return StructureEstimate(np.array(bounds), canonical_labels(np.asarray(labels)[keep]))


def single_segment(grid, n_frames: int, duration: float | None) -> StructureEstimate:
    times = grid_times(grid, n_frames)
    end = float(times[-1]) if duration is None else duration
    return StructureEstimate(np.array([0.0, end]), np.array([0]))
