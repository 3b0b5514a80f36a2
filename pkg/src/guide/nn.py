"""Small float64 numerical kernel: products, ReLU, squared Frobenius loss,
Glorot initialization and Adam.

Dense matrices are plain ``numpy`` arrays; sparse ones are ``scipy.sparse``
CSR matrices. Backward rules are written out by hand per layer.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp


class NonFiniteError(FloatingPointError):
    """Raised when a loss or gradient stops being finite."""


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.shape[-1] != b.shape[0]:
        raise ValueError(f"inner dimensions differ: {a.shape} @ {b.shape}")
    return a @ b


def spmm(s: sp.spmatrix, b: np.ndarray) -> np.ndarray:
    """Sparse-times-dense product; only stored entries of ``s`` are visited."""
    if s.shape[1] != b.shape[0]:
        raise ValueError(f"inner dimensions differ: {s.shape} @ {b.shape}")
    return np.asarray(s @ b)


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def relu_backward(x: np.ndarray, upstream: np.ndarray) -> np.ndarray:
    # subgradient at 0 is 0
    return np.where(x > 0.0, upstream, 0.0)


def frobenius_sq(residual: np.ndarray):
    """Return ``(sum of squares, gradient 2 * residual)``."""
    return float(np.sum(residual * residual)), 2.0 * residual


def glorot_init(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    if rows <= 0 or cols <= 0:
        raise ValueError(f"dimensions must be positive, got ({rows}, {cols})")
    limit = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-limit, limit, size=(rows, cols))


@dataclass
class Parameter:
    value: np.ndarray
    grad: np.ndarray = field(default=None)

    def __post_init__(self):
        self.value = np.asarray(self.value, dtype=np.float64)
        if self.grad is None:
            self.grad = np.zeros_like(self.value)
        elif self.grad.shape != self.value.shape:
            raise ValueError("grad shape must match value shape")

    def zero_grad(self):
        self.grad[...] = 0.0


class Adam:
    """Adam with bias-corrected moments over a dict of named parameters."""

    def __init__(self, params: dict[str, Parameter], lr=0.001, beta1=0.9,
                 beta2=0.999, eps=1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {k: np.zeros_like(p.value) for k, p in params.items()}
        self.v = {k: np.zeros_like(p.value) for k, p in params.items()}

    def step(self):
        for name, p in self.params.items():
            if not np.all(np.isfinite(p.grad)):
                raise NonFiniteError(f"non-finite gradient in parameter {name!r} at step {self.t + 1}")
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for name, p in self.params.items():
            g = p.grad
            m, v = self.m[name], self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p.value -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)
            p.zero_grad()

    def state_arrays(self) -> dict[str, np.ndarray]:
        out = {}
        for k in self.params:
            out[f"adam.m.{k}"] = self.m[k]
            out[f"adam.v.{k}"] = self.v[k]
        return out
