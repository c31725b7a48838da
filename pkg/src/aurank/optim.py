"""First-order optimizers operating on lists of numpy parameter arrays."""

from __future__ import annotations

import numpy as np

from .errors import ConfigError

OPTIMIZERS = ("sgd", "sgd_momentum", "adam")


class SGD:
    def __init__(self, params, lr):
        self.params = params
        self.lr = lr

    def step(self, grads):
        for p, g in zip(self.params, grads):
            p -= self.lr * g


class Momentum(SGD):
    def __init__(self, params, lr, beta=0.9):
        super().__init__(params, lr)
        self.beta = beta
        self.velocity = [np.zeros_like(p) for p in params]

    def step(self, grads):
        for p, v, g in zip(self.params, self.velocity, grads):
            v *= self.beta
            v += g
            p -= self.lr * v


class Adam(SGD):
    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        super().__init__(params, lr)
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, grads):
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for p, m, v, g in zip(self.params, self.m, self.v, grads):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def make_optimizer(name: str, params, lr: float):
    """Optimizer updating ``params`` in place."""
    if name == "sgd":
        return SGD(params, lr)
    if name == "sgd_momentum":
        return Momentum(params, lr)
    if name == "adam":
        return Adam(params, lr)
    raise ConfigError(f"unknown optimizer {name!r}; choose from {OPTIMIZERS}")
