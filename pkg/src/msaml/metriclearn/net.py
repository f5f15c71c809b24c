"""Embedding network in float64 numpy with hand-written backward pass.

Backbone: pooled log-mel window (per-quarter band mean/std, 1024 values)
-> input standardization -> linear(1024, 256) -> leaky ReLU -> batchnorm.
Head: linear(256, 256) -> leaky ReLU -> batchnorm -> linear(256, 100)
-> optional L2 normalization.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass

import numpy as np

from ..features import pool_window

LEAK = 0.01
BN_EPS = 1e-5
BN_MOMENTUM = 0.1


@dataclass(frozen=True)
class NetConfig:
    in_dim: int = 1024
    hidden: int = 256
    out_dim: int = 100
    normalize: bool = True
    linear_only: bool = False  # single linear map; used for gradient verification


class EmbeddingNet:
    def __init__(self, config: NetConfig = NetConfig(), seed: int = 0):
        self.config = config
        self.training = True
        rng = np.random.default_rng(seed)
        self.params: dict[str, np.ndarray] = {}
        self.buffers: dict[str, np.ndarray] = {
            "input_mean": np.zeros(config.in_dim),
            "input_scale": np.ones(config.in_dim),
        }
        if config.linear_only:
            self._linear(rng, "fc", config.in_dim, config.out_dim)
            return
        self._linear(rng, "fc1", config.in_dim, config.hidden)
        self._batchnorm("bn1", config.hidden)
        self._linear(rng, "fc2", config.hidden, config.hidden)
        self._batchnorm("bn2", config.hidden)
        self._linear(rng, "fc3", config.hidden, config.out_dim)

    def _linear(self, rng, name, n_in, n_out):
        bound = 1.0 / np.sqrt(n_in)
        self.params[f"{name}.weight"] = rng.uniform(-bound, bound, (n_in, n_out))
        self.params[f"{name}.bias"] = rng.uniform(-bound, bound, n_out)

    def _batchnorm(self, name, n):
        self.params[f"{name}.weight"] = np.ones(n)
        self.params[f"{name}.bias"] = np.zeros(n)
        self.buffers[f"{name}.running_mean"] = np.zeros(n)
        self.buffers[f"{name}.running_var"] = np.ones(n)

    def train(self):
        self.training = True
        return self

    def eval(self):
        self.training = False
        return self

    def copy(self) -> "EmbeddingNet":
        return copy.deepcopy(self)

    def set_input_stats(self, x: np.ndarray):
        """Fix the input standardization from a sample of pooled rows."""
        self.buffers["input_mean"] = x.mean(axis=0)
        self.buffers["input_scale"] = 1.0 / np.maximum(x.std(axis=0), 1e-3)

    def state(self) -> dict[str, np.ndarray]:
        return {**self.params, **self.buffers}

    def load_state(self, tensors: dict[str, np.ndarray]):
        for k in list(self.params) + list(self.buffers):
            if k not in tensors:
                raise KeyError(f"missing tensor {k!r}")
            target = self.params if k in self.params else self.buffers
            if np.shape(tensors[k]) != np.shape(target[k]):
                raise ValueError(f"shape mismatch for {k!r}")
            target[k] = np.array(tensors[k], dtype=np.float64)

    # -- forward / backward ---------------------------------------------------

    def forward(self, x: np.ndarray, update_stats: bool = True):
        """Embed pooled backbone inputs. Returns ``(embeddings, cache)``."""
        x = np.asarray(x, dtype=np.float64)
        if not np.all(np.isfinite(x)):
            raise ValueError("non-finite network input")
        if self.training and not self.config.linear_only and x.shape[0] < 2:
            raise ValueError("batchnorm in train mode needs a batch of at least 2")
        p = self.params
        cache: list = []
        h = (x - self.buffers["input_mean"]) * self.buffers["input_scale"]
        if self.config.linear_only:
            cache.append(("linear", "fc", h))
            h = h @ p["fc.weight"] + p["fc.bias"]
        else:
            for i in (1, 2):
                cache.append(("linear", f"fc{i}", h))
                h = h @ p[f"fc{i}.weight"] + p[f"fc{i}.bias"]
                cache.append(("lrelu", h))
                h = np.where(h > 0, h, LEAK * h)
                h = self._bn_forward(f"bn{i}", h, cache, update_stats)
            cache.append(("linear", "fc3", h))
            h = h @ p["fc3.weight"] + p["fc3.bias"]
        if self.config.normalize:
            norm = np.linalg.norm(h, axis=1, keepdims=True)
            h = h / norm
            cache.append(("l2", h, norm))
        return h, cache

    def _bn_forward(self, name, h, cache, update_stats):
        gamma, beta = self.params[f"{name}.weight"], self.params[f"{name}.bias"]
        if self.training:
            mu = h.mean(axis=0)
            var = h.var(axis=0)
            if update_stats:
                n = h.shape[0]
                rm, rv = f"{name}.running_mean", f"{name}.running_var"
                self.buffers[rm] = (1 - BN_MOMENTUM) * self.buffers[rm] + BN_MOMENTUM * mu
                self.buffers[rv] = ((1 - BN_MOMENTUM) * self.buffers[rv]
                                    + BN_MOMENTUM * var * n / (n - 1))
            inv = 1.0 / np.sqrt(var + BN_EPS)
            xhat = (h - mu) * inv
            cache.append(("bn", name, xhat, inv))
        else:
            inv = 1.0 / np.sqrt(self.buffers[f"{name}.running_var"] + BN_EPS)
            xhat = (h - self.buffers[f"{name}.running_mean"]) * inv
            cache.append(("bn_eval", name, xhat, inv))
        return gamma * xhat + beta

    def backward(self, grad_out: np.ndarray, cache) -> dict[str, np.ndarray]:
        """Parameter gradients given dL/d(embeddings)."""
        g = np.asarray(grad_out, dtype=np.float64)
        grads: dict[str, np.ndarray] = {}
        p = self.params
        for item in reversed(cache):
            kind = item[0]
            if kind == "l2":
                _, y, norm = item
                g = (g - y * np.sum(y * g, axis=1, keepdims=True)) / norm
            elif kind == "linear":
                _, name, h_in = item
                grads[f"{name}.weight"] = h_in.T @ g
                grads[f"{name}.bias"] = g.sum(axis=0)
                g = g @ p[f"{name}.weight"].T
            elif kind == "lrelu":
                g = np.where(item[1] > 0, g, LEAK * g)
            elif kind == "bn":
                _, name, xhat, inv = item
                gamma = p[f"{name}.weight"]
                grads[f"{name}.weight"] = np.sum(g * xhat, axis=0)
                grads[f"{name}.bias"] = g.sum(axis=0)
                gx = g * gamma
                n = g.shape[0]
                g = inv / n * (n * gx - gx.sum(axis=0) - xhat * np.sum(gx * xhat, axis=0))
            elif kind == "bn_eval":
                _, name, xhat, inv = item
                grads[f"{name}.weight"] = np.sum(g * xhat, axis=0)
                grads[f"{name}.bias"] = g.sum(axis=0)
                g = g * p[f"{name}.weight"] * inv
        return grads

    def embed(self, x: np.ndarray, batch_size: int = 512) -> np.ndarray:
        """Eval-mode embedding of pooled inputs, in fixed-size chunks."""
        was_training = self.training
        self.eval()
        try:
            out = [self.forward(x[i:i + batch_size], update_stats=False)[0]
                   for i in range(0, len(x), batch_size)]
        finally:
            self.training = was_training
        return np.vstack(out) if out else np.zeros((0, self.config.out_dim))

    def embed_windows(self, windows) -> np.ndarray:
        """Embed raw log-mel windows (each frames x bands)."""
        return self.embed(np.stack([pool_window(w) for w in windows]))
