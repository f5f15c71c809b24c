"""Uniform entry point over the three analyzers."""

from __future__ import annotations

import dataclasses

import numpy as np

from ..core import StructureEstimate
from .cnmf import CnmfParams, cnmf_analyze
from .common import estimate_from_bounds, single_segment
from .fmc2d import fmc2d_labels
from .foote import FooteParams, foote_boundary_frames
from .scluster import SclusterParams, scluster_analyze
from .ssm import build_ssm


@dataclasses.dataclass(frozen=True)
class FooteFmc2dParams(FooteParams):
    seed: int = 0


def foote_fmc2d_analyze(X, grid=None, p: FooteFmc2dParams = FooteFmc2dParams(),
                        duration: float | None = None) -> StructureEstimate:
    data = np.asarray(getattr(X, "data", X), dtype=np.float64)
    n = data.shape[0]
    if n < 2:
        return single_segment(grid, n, duration)
    bounds = foote_boundary_frames(build_ssm(data), p)
    labels = fmc2d_labels(data, [0, *bounds.tolist(), n], seed=p.seed)
    return estimate_from_bounds(bounds, labels, grid, n, duration)


ANALYZERS = {
    "scluster": (scluster_analyze, SclusterParams),
    "foote-fmc2d": (foote_fmc2d_analyze, FooteFmc2dParams),
    "cnmf": (cnmf_analyze, CnmfParams),
}


def make_params(algo: str, overrides: dict | None = None):
    """Parameter dataclass for ``algo`` with string or numeric overrides applied."""
    if algo not in ANALYZERS:
        raise ValueError(f"unknown algorithm {algo!r}; choose from {sorted(ANALYZERS)}")
    cls = ANALYZERS[algo][1]
    fields = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for k, v in (overrides or {}).items():
        if k not in fields:
            raise ValueError(f"{algo} has no parameter {k!r}")
        if isinstance(v, str):
            v = None if v.lower() in ("auto", "none") else (float(v) if "." in v else int(v))
        kwargs[k] = v
    return cls(**kwargs)


def analyze(algo: str, X, grid=None, params=None, duration: float | None = None) -> StructureEstimate:
    fn, cls = ANALYZERS[algo] if algo in ANALYZERS else (None, None)
    if fn is None:
        raise ValueError(f"unknown algorithm {algo!r}")
    if params is None or isinstance(params, dict):
        params = make_params(algo, params)
    return fn(X, grid, params, duration)
