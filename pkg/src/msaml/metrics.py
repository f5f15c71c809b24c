"""Flat segmentation metrics: boundary hit rates, pairwise frame clustering,
normalized conditional entropies, and the weighted summary score."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .core import Annotation, StructureEstimate, annotation_to_frame_labels

SUMMARY_WEIGHTS = (5 / 14, 2 / 14, 4 / 14, 3 / 14)


@dataclass(frozen=True)
class MetricsConfig:
    frame_period: float = 0.1
    trim: bool = False
    weights: tuple[float, float, float, float] = SUMMARY_WEIGHTS


@dataclass(frozen=True)
class SegmentMetrics:
    hr05f: float
    hr3f: float
    pwf: float
    sf: float
    summary: float = field(default=float("nan"))

    def as_row(self) -> tuple[float, ...]:
        return (self.hr05f, self.hr3f, self.pwf, self.sf, self.summary)


def _f(p: float, r: float) -> float:
    return 0.0 if p + r == 0 else 2 * p * r / (p + r)


def boundary_matches(ref, est, window: float) -> int:
    """Size of a maximum one-to-one matching with ``|r - e| <= window``."""
    ref = np.asarray(ref, dtype=float)
    est = np.asarray(est, dtype=float)
    hits = np.abs(ref[:, None] - est[None, :]) <= window
    if not hits.any():
        return 0
    match = maximum_bipartite_matching(csr_matrix(hits.astype(np.int8)), perm_type="column")
    return int(np.sum(match >= 0))


def hit_rate(ref, est, window: float, trim: bool = False) -> tuple[float, float, float]:
    """Boundary precision, recall and F-measure at a tolerance window."""
    ref = np.asarray(ref, dtype=float)
    est = np.asarray(est, dtype=float)
    if len(ref) == 0 or len(est) == 0:
        raise ValueError("boundary lists must be non-empty")
    if trim:
        ref, est = ref[1:-1], est[1:-1]
        if len(ref) == 0 or len(est) == 0:
            return 0.0, 0.0, 0.0
    n = boundary_matches(ref, est, window)
    p, r = n / len(est), n / len(ref)
    return p, r, _f(p, r)


def hit_rate_f(ref, est, window: float, trim: bool = False) -> float:
    return hit_rate(ref, est, window, trim)[2]


def _contingency(ref_labels, est_labels) -> np.ndarray:
    ref_labels = np.asarray(ref_labels)
    est_labels = np.asarray(est_labels)
    if ref_labels.shape != est_labels.shape:
        raise ValueError("frame label sequences differ in length")
    _, ri = np.unique(ref_labels, return_inverse=True)
    _, ei = np.unique(est_labels, return_inverse=True)
    table = np.zeros((ri.max() + 1, ei.max() + 1), dtype=np.int64)
    np.add.at(table, (ri, ei), 1)
    return table


def _pairs(n):
    return n * (n - 1) // 2


def pairwise_f(ref_labels, est_labels) -> tuple[float, float, float]:
    """Precision/recall/F over unordered frame pairs sharing a label."""
    if len(ref_labels) < 2:
        raise ValueError("need at least 2 frames")
    table = _contingency(ref_labels, est_labels)
    agree = _pairs(table).sum()
    n_ref = _pairs(table.sum(axis=1)).sum()
    n_est = _pairs(table.sum(axis=0)).sum()
    p = agree / n_est if n_est else 0.0
    r = agree / n_ref if n_ref else 0.0
    return float(p), float(r), _f(p, r)


def _cond_entropy(joint: np.ndarray) -> float:
    """H(col | row) in bits for a joint count table."""
    n = joint.sum()
    row = joint.sum(axis=1, keepdims=True)
    nz = joint > 0
    pj = joint[nz] / n
    pc = (joint / np.maximum(row, 1))[nz]
    return float(-np.sum(pj * np.log2(pc)))


def entropy_scores(ref_labels, est_labels) -> tuple[float, float, float]:
    """Over-segmentation, under-segmentation scores and their F-measure."""
    table = _contingency(ref_labels, est_labels)
    n_ref, n_est = table.shape
    s_over = 1.0 if n_est <= 1 else 1.0 - _cond_entropy(table) / np.log2(n_est)
    s_under = 1.0 if n_ref <= 1 else 1.0 - _cond_entropy(table.T) / np.log2(n_ref)
    return s_over, s_under, _f(s_over, s_under)


def summary_score(m: SegmentMetrics | tuple, weights=SUMMARY_WEIGHTS) -> float:
    vals = m.as_row()[:4] if isinstance(m, SegmentMetrics) else tuple(m)[:4]
    return float(sum(w * v for w, v in zip(weights, vals)))


def evaluate(ref: Annotation, est: StructureEstimate | Annotation,
             cfg: MetricsConfig = MetricsConfig()) -> SegmentMetrics:
    """All four metrics plus the summary score for one song.

    Frame labels are sampled over the reference duration; the estimate is
    extended or truncated to match.
    """
    if isinstance(est, StructureEstimate):
        est = est.to_annotation(ref.song_id)
    ref_b, est_b = ref.boundaries, est.boundaries
    hr05 = hit_rate_f(ref_b, est_b, 0.5, cfg.trim)
    hr3 = hit_rate_f(ref_b, est_b, 3.0, cfg.trim)
    dur = ref.duration
    rl = annotation_to_frame_labels(ref, cfg.frame_period, dur)
    el = annotation_to_frame_labels(est, cfg.frame_period, dur)
    pwf = pairwise_f(rl, el)[2]
    sf = entropy_scores(rl, el)[2]
    m = SegmentMetrics(hr05, hr3, pwf, sf)
    return SegmentMetrics(hr05, hr3, pwf, sf, summary_score(m, cfg.weights))


def mean_metrics(rows: list[SegmentMetrics], weights=SUMMARY_WEIGHTS) -> SegmentMetrics:
    if not rows:
        raise ValueError("no metric rows to average")
    arr = np.array([r.as_row()[:4] for r in rows])
    mean = arr.mean(axis=0)
    m = SegmentMetrics(*mean.tolist())
    return SegmentMetrics(*mean.tolist(), summary_score(m, weights))


def format_row(song_id: str, m: SegmentMetrics) -> str:
    return "\t".join([song_id] + [f"{v:.6f}" for v in m.as_row()])
