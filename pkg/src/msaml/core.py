"""Domain types shared across the package.

All types are frozen dataclasses. Arrays held inside them are marked
read-only on construction so the values can be shared freely.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

GAP_TOLERANCE = 0.05  # seconds; larger gaps between segments are rejected


class AnnotationError(ValueError):
    pass


def _frozen(a, dtype=np.float64) -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Segment:
    start: float
    end: float
    label: str

    def __post_init__(self):
        if self.start < 0:
            raise AnnotationError(f"segment start {self.start} < 0")
        if not self.end > self.start:
            raise AnnotationError(f"segment end {self.end} <= start {self.start}")
        if not self.label:
            raise AnnotationError("empty segment label")


@dataclass(frozen=True)
class Annotation:
    """Flat labeled segmentation of one song."""

    segments: tuple[Segment, ...]
    song_id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        for a, b in zip(self.segments, self.segments[1:]):
            if b.start < a.start:
                raise AnnotationError("segments are not sorted by start")
            if b.start < a.end - 1e-9:
                raise AnnotationError(f"overlap at {b.start:.3f}s")
            if b.start - a.end > GAP_TOLERANCE + 1e-9:
                raise AnnotationError(f"gap of {b.start - a.end:.3f}s at {a.end:.3f}s")

    @classmethod
    def from_segments(cls, segments: Sequence[Segment], song_id: str = "") -> "Annotation":
        """Sort segments and close small gaps by extending the earlier segment."""
        segs = sorted(segments, key=lambda s: s.start)
        out: list[Segment] = []
        for s in segs:
            if out:
                prev = out[-1]
                gap = s.start - prev.end
                if gap > GAP_TOLERANCE + 1e-9:
                    raise AnnotationError(f"gap of {gap:.3f}s at {prev.end:.3f}s")
                if gap < -1e-9:
                    raise AnnotationError(f"overlap at {s.start:.3f}s")
                if gap > 0:
                    out[-1] = Segment(prev.start, s.start, prev.label)
            out.append(s)
        return cls(tuple(out), song_id)

    @property
    def duration(self) -> float:
        return self.segments[-1].end if self.segments else 0.0

    @property
    def boundaries(self) -> np.ndarray:
        """Segment starts plus the final end time."""
        if not self.segments:
            return np.zeros(0)
        return np.array([s.start for s in self.segments] + [self.segments[-1].end])

    def label_ids(self) -> dict[str, int]:
        """Per-song label ids in order of first appearance."""
        ids: dict[str, int] = {}
        for s in self.segments:
            ids.setdefault(s.label, len(ids))
        return ids


@dataclass(frozen=True)
class TimeGrid:
    instants: np.ndarray
    kind: str = "beat"

    def __post_init__(self):
        if self.kind not in ("beat", "downbeat"):
            raise ValueError(f"unknown grid kind {self.kind!r}")
        inst = _frozen(self.instants)
        if inst.ndim != 1 or len(inst) < 2:
            raise ValueError("a time grid needs at least 2 instants")
        if np.any(np.diff(inst) <= 0):
            raise ValueError("grid instants must be strictly increasing")
        object.__setattr__(self, "instants", inst)

    def __len__(self):
        return len(self.instants)

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.instants[:-1] + self.instants[1:])


@dataclass(frozen=True)
class LabeledExample:
    song_id: str
    grid_index: int
    center_time: float
    label_id: int


@dataclass(frozen=True)
class FeatureMatrix:
    data: np.ndarray
    frame_times: np.ndarray

    def __post_init__(self):
        data = _frozen(self.data)
        times = _frozen(self.frame_times)
        if data.ndim != 2 or data.shape[0] < 1:
            raise ValueError(f"feature matrix must be 2-D with >= 1 row, got {data.shape}")
        if data.shape[0] != len(times):
            raise ValueError("rows(data) != len(frame_times)")
        if not np.all(np.isfinite(data)):
            raise ValueError("feature matrix contains non-finite values")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "frame_times", times)

    @property
    def n_frames(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class EmbeddingMatrix(FeatureMatrix):
    pass


@dataclass(frozen=True)
class StructureEstimate:
    boundaries: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        b = _frozen(self.boundaries)
        lab = _frozen(self.labels, dtype=np.int64)
        if len(b) < 2 or np.any(np.diff(b) <= 0):
            raise ValueError("estimate boundaries must be strictly increasing (>= 2)")
        if len(lab) != len(b) - 1:
            raise ValueError("need exactly one label per segment")
        object.__setattr__(self, "boundaries", b)
        object.__setattr__(self, "labels", lab)

    @classmethod
    def from_frame_labels(cls, frame_labels, grid_times, duration: float) -> "StructureEstimate":
        """Build an estimate from one label per grid interval.

        Boundaries are placed at the grid instant where the label changes;
        0 and ``duration`` are always included.
        """
        frame_labels = np.asarray(frame_labels)
        grid_times = np.asarray(grid_times, dtype=float)
        change = np.flatnonzero(frame_labels[1:] != frame_labels[:-1]) + 1
        inner = [grid_times[i] for i in change if 0 < grid_times[i] < duration]
        bounds = [0.0] + inner + [float(duration)]
        starts = [0] + [int(i) for i in change if 0 < grid_times[i] < duration]
        labels = canonical_labels(frame_labels[starts])
        return cls(np.array(bounds), labels)

    def to_annotation(self, song_id: str = "") -> Annotation:
        segs = [Segment(float(a), float(b), str(int(l)))
                for a, b, l in zip(self.boundaries[:-1], self.boundaries[1:], self.labels)]
        return Annotation(tuple(segs), song_id)


@dataclass(frozen=True)
class Song:
    """Everything needed to train on or analyze one song."""

    song_id: str
    annotation: Annotation
    beats: TimeGrid
    downbeats: TimeGrid
    features: FeatureMatrix | None = None
    audio: np.ndarray | None = field(default=None, repr=False)
    sample_rate: int = 16000
    duration: float = 0.0

    def grid(self, kind: str) -> TimeGrid:
        if kind == "beat":
            return self.beats
        if kind == "downbeat":
            return self.downbeats
        raise ValueError(f"unknown grid kind {kind!r}")


def canonical_labels(labels) -> np.ndarray:
    """Relabel integers by order of first appearance."""
    mapping: dict = {}
    return np.array([mapping.setdefault(l, len(mapping)) for l in np.asarray(labels).tolist()],
                    dtype=np.int64)


def _label_index_at(starts: np.ndarray, t: float) -> int:
    # half-open [start, end): a time on a boundary belongs to the later segment
    return int(np.searchsorted(starts, t, side="right")) - 1


def annotation_to_frame_labels(ann: Annotation, frame_period: float, duration: float) -> np.ndarray:
    """Label id for each frame at times ``k * frame_period`` in ``[0, duration)``.

    Frames past the last segment repeat the last label; frames before the
    first segment take the first label.
    """
    if frame_period <= 0 or duration <= 0:
        raise ValueError("frame_period and duration must be positive")
    if not ann.segments:
        raise AnnotationError("empty annotation")
    n = math.ceil(duration / frame_period - 1e-9)
    times = np.arange(n) * frame_period
    starts = np.array([s.start for s in ann.segments])
    idx = np.clip(np.searchsorted(starts, times, side="right") - 1, 0, len(starts) - 1)
    ids = ann.label_ids()
    seg_ids = np.array([ids[s.label] for s in ann.segments], dtype=np.int64)
    return seg_ids[idx]


def examples_from_annotation(ann: Annotation, grid: TimeGrid) -> list[LabeledExample]:
    """One example per grid interval, labeled by the segment containing its center.

    Centers outside every segment take the nearest segment's label; the
    number of such centers is reported with a warning.
    """
    if not ann.segments:
        raise AnnotationError("empty annotation")
    ids = ann.label_ids()
    starts = np.array([s.start for s in ann.segments])
    out = []
    outside = 0
    for i, c in enumerate(grid.midpoints):
        k = _label_index_at(starts, c)
        if k < 0:
            k, outside = 0, outside + 1
        elif c >= ann.segments[k].end:
            # past the last segment (gaps were closed on construction)
            outside += 1
        out.append(LabeledExample(ann.song_id, i, float(c), ids[ann.segments[k].label]))
    if outside:
        warnings.warn(f"{ann.song_id}: {outside} example centers outside the annotation",
                      stacklevel=2)
    return out
