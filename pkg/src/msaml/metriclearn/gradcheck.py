"""Finite-difference verification of the analytic gradients (float64)."""

from __future__ import annotations

import numpy as np

from .losses import DistanceKind, MsParams, batch_loss

STEP = 1e-5
# entries whose gradient magnitude is below this are compared absolutely
REL_FLOOR = 1e-6


def relative_error(analytic, numeric, floor: float = REL_FLOOR) -> float:
    a = np.asarray(analytic, dtype=float)
    n = np.asarray(numeric, dtype=float)
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)))


def numeric_grad(f, x: np.ndarray, idx=None, step: float = STEP) -> np.ndarray:
    """Central differences of scalar ``f()`` w.r.t. entries of ``x`` (mutated in place)."""
    flat = x.reshape(-1)
    idx = np.arange(flat.size) if idx is None else np.asarray(idx)
    out = np.empty(len(idx))
    for k, i in enumerate(idx):
        old = flat[i]
        flat[i] = old + step
        fp = f()
        flat[i] = old - step
        fm = f()
        flat[i] = old
        out[k] = (fp - fm) / (2 * step)
    return out


def probe_loss(E: np.ndarray, R: np.ndarray):
    """Linear probe ``sum(E * R)``; exact gradient ``R``."""
    return float(np.sum(E * R)), R


def _loss_fn(loss, distance, ms, labels, mined, probe):
    if loss == "probe":
        return lambda E: probe_loss(E, probe)
    return lambda E: batch_loss(E, labels, loss, distance, ms, mined)[:2]


def loss_grad_check(E: np.ndarray, labels, loss: str = "mul",
                    distance: DistanceKind = DistanceKind.EUCLIDEAN,
                    ms: MsParams = MsParams()) -> float:
    """Max relative error of dL/dE with the mining held fixed."""
    E = np.array(E, dtype=np.float64)
    _, gE, mined = batch_loss(E, labels, loss, distance, ms)
    num = numeric_grad(lambda: batch_loss(E, labels, loss, distance, ms, mined)[0], E)
    return relative_error(gE.ravel(), num)


def _kink_pattern(cache) -> tuple:
    """Sign pattern of every leaky-ReLU input in a forward cache."""
    return tuple((c[1] > 0).tobytes() for c in cache if c[0] == "lrelu")


def grad_check(net, x: np.ndarray, labels, loss: str = "mul",
               distance: DistanceKind = DistanceKind.EUCLIDEAN, ms: MsParams = MsParams(),
               n_coords: int | None = 24, seed: int = 0, return_counts: bool = False):
    """Max relative error between backprop and finite differences over parameters.

    ``n_coords`` entries are sampled per parameter tensor (all entries when
    None). Batchnorm running statistics are not touched. A probe whose +/- step
    flips the sign of any leaky-ReLU input straddles a kink where the loss has
    no derivative; such coordinates are excluded and, with ``return_counts``,
    reported as ``(worst, checked, skipped)``.
    """
    rng = np.random.default_rng(seed)
    probe = rng.standard_normal((x.shape[0], net.config.out_dim)) if loss == "probe" else None
    E, cache = net.forward(x, update_stats=False)
    mined = None
    if loss != "probe":
        _, _, mined = batch_loss(E, labels, loss, distance, ms)
    f = _loss_fn(loss, distance, ms, labels, mined, probe)
    _, gE = f(E)
    grads = net.backward(gE, cache)
    pattern = _kink_pattern(cache)

    def value():
        out, c = net.forward(x, update_stats=False)
        return f(out)[0], _kink_pattern(c) == pattern

    worst, checked, skipped = 0.0, 0, 0
    for name, p in net.params.items():
        flat = p.reshape(-1)
        if n_coords is None or n_coords >= flat.size:
            idx = np.arange(flat.size)
        else:
            idx = rng.choice(flat.size, n_coords, replace=False)
        ana, num = [], []
        for i in idx:
            old = flat[i]
            flat[i] = old + STEP
            fp, ok_p = value()
            flat[i] = old - STEP
            fm, ok_m = value()
            flat[i] = old
            if not (ok_p and ok_m):
                skipped += 1
                continue
            ana.append(grads[name].reshape(-1)[i])
            num.append((fp - fm) / (2 * STEP))
        checked += len(num)
        worst = max(worst, relative_error(ana, num))
    return (worst, checked, skipped) if return_counts else worst
