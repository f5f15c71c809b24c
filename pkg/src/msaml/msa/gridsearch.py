"""Exhaustive search over small integer parameter grids."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from ..metrics import MetricsConfig, evaluate, mean_metrics
from .analyzers import analyze, make_params


@dataclass
class GridSearchResult:
    best: dict
    best_score: float
    table: list  # (params dict, summary score) in evaluation order


def grid_search(algo: str, grids: dict[str, list], songs, features,
                metrics: MetricsConfig = MetricsConfig(), base: dict | None = None) -> GridSearchResult:
    """Evaluate every combination and keep the best mean summary score.

    ``songs`` and ``features`` are parallel sequences: songs provide the
    reference annotation and the analysis grid (``(annotation, grid,
    duration)`` tuples); features are the matrices fed to the analyzer.
    Ties go to the lexicographically smallest parameter tuple.
    """
    if not grids or any(len(v) == 0 for v in grids.values()):
        raise ValueError("parameter grids must be non-empty")
    names = sorted(grids)
    table = []
    for combo in itertools.product(*(grids[n] for n in names)):
        point = dict(zip(names, combo))
        params = make_params(algo, {**(base or {}), **point})
        rows = []
        for (ann, grid, duration), X in zip(songs, features):
            est = analyze(algo, X, grid, params, duration)
            rows.append(evaluate(ann, est, metrics))
        table.append((point, mean_metrics(rows, metrics.weights).summary))
    best_point, best_score = table[0]
    for point, score in table[1:]:
        key = tuple(point[n] for n in names)
        best_key = tuple(best_point[n] for n in names)
        if score > best_score or (score == best_score and key < best_key):
            best_point, best_score = point, score
    return GridSearchResult(best_point, best_score, table)
