import numpy as np
import pytest
from hypothesis import settings

from msaml.core import Annotation, Segment

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def make_ann(segs, song_id="s"):
    """``[("A", 0, 10), ("B", 10, 20)]`` -> Annotation."""
    return Annotation(tuple(Segment(float(a), float(b), lab) for lab, a, b in segs), song_id)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def block_features(sizes, labels=None, dims=16, seed=0, noise=0.0):
    """Rows repeat one template per block; blocks sharing a label share the template."""
    r = np.random.default_rng(seed)
    labels = list(range(len(sizes))) if labels is None else labels
    templates = {l: r.standard_normal(dims) * 5 for l in set(labels)}
    X = np.vstack([np.tile(templates[l], (n, 1)) for n, l in zip(sizes, labels)])
    if noise:
        X = X + noise * r.standard_normal(X.shape)
    return X


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""

    def record(name: str, ok: bool, detail: str = ""):
        line = f"{name} {'PASS' if ok else 'FAIL'}  {detail}".rstrip()
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
