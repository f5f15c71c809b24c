"""Binary PGM rendering of self-similarity matrices."""

from __future__ import annotations

from pathlib import Path

import numpy as np


def ssm_to_pgm(S) -> bytes:
    S = np.asarray(getattr(S, "S", S), dtype=np.float64)
    n = S.shape[0]
    pix = np.rint(255 * np.clip(S, 0.0, 1.0)).astype(np.uint8)
    return f"P5\n{n} {n}\n255\n".encode("ascii") + pix.tobytes()


def render_ssm(ssm, path):
    Path(path).write_bytes(ssm_to_pgm(ssm))
