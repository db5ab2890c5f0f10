"""Adam with standard bias correction over a ParameterStore."""

from __future__ import annotations

import numpy as np

from .errors import ContractError
from .tensor import ParameterStore


class Adam:
    """Keeps first/second moment buffers per parameter; updates in place.

    The very first step with gradient g moves each weight by
    -lr * g / (|g| + eps), since the bias-corrected moments are exactly
    g and g*g there.
    """

    def __init__(self, params: ParameterStore, lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        if lr <= 0:
            raise ContractError(f"lr must be positive, got {lr}")
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {name: np.zeros_like(p.data) for name, p in params.items()}
        self.v = {name: np.zeros_like(p.data) for name, p in params.items()}

    def step(self):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        bc1 = 1.0 - b1**self.t
        bc2 = 1.0 - b2**self.t
        for name, p in self.params.items():
            g = p.grad
            if g is None:
                raise ContractError(f"parameter {name!r} has no gradient buffer")
            if g.shape != p.data.shape:
                raise ContractError(f"gradient shape {g.shape} vs parameter {p.data.shape}")
            m = self.m[name]
            v = self.v[name]
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p.data -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)
