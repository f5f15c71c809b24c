"""Adam and a plateau learning-rate schedule driven by a validation score."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class Adam:
    def __init__(self, params: dict[str, np.ndarray], lr: float = 1e-3,
                 betas: tuple[float, float] = (0.9, 0.999), eps: float = 1e-8):
        self.lr = lr
        self.b1, self.b2 = betas
        self.eps = eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]):
        """Update ``params`` in place. Parameters without a gradient are skipped."""
        for k, g in grads.items():
            if not np.all(np.isfinite(g)):
                raise FloatingPointError(f"non-finite gradient for {k!r}")
        self.t += 1
        c1 = 1 - self.b1 ** self.t
        c2 = 1 - self.b2 ** self.t
        for k, g in grads.items():
            self.m[k] = self.b1 * self.m[k] + (1 - self.b1) * g
            self.v[k] = self.b2 * self.v[k] + (1 - self.b2) * g * g
            params[k] -= self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)


def adam_step(params, grads, state: Adam | None = None, lr: float = 1e-3) -> Adam:
    """Functional wrapper: one Adam update, returning the (new) state."""
    if state is None:
        state = Adam(params, lr=lr)
    state.lr = lr
    state.step(params, grads)
    return state


@dataclass
class PlateauSchedule:
    """Multiply the rate by ``factor`` after ``patience`` epochs without improvement."""

    lr: float = 1e-3
    factor: float = 0.8
    patience: int = 2
    floor: float = 1e-5
    best: float = -np.inf
    bad_epochs: int = 0
    floor_hits: int = 0
    history: list = field(default_factory=list)

    def __post_init__(self):
        if not 0 < self.factor < 1:
            raise ValueError("factor must lie in (0, 1)")

    def update(self, score: float) -> bool:
        """Record an epoch score; returns True when the score improved."""
        improved = score > self.best
        if improved:
            self.best = score
            self.bad_epochs = 0
        else:
            self.bad_epochs += 1
            if self.bad_epochs >= self.patience:
                self.bad_epochs = 0
                self.lr = max(self.lr * self.factor, self.floor)
                if self.lr <= self.floor:
                    self.floor_hits += 1
        self.history.append(self.lr)
        return improved

    @property
    def exhausted(self) -> bool:
        return self.floor_hits >= 2
