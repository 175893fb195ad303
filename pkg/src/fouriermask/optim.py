"""In-place first-order optimizers over lists of numpy arrays."""

from __future__ import annotations

import numpy as np


class GradientDescent:
    def __init__(self, lr: float):
        self.lr = lr

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        for p, g in zip(params, grads):
            p -= self.lr * g


class Adam:
    """Adaptive moment estimation with bias-corrected moments.

    With ``per_tensor=True`` the second moment is one running scalar per
    parameter array (mean of ``g * g``) instead of one per element. The
    update then keeps the gradient's direction within each array and only
    adapts its scale. Element-wise normalization gives every Fourier
    coefficient the same step size regardless of its gradient, which
    whitens the fitted spectrum and drives global fits into saturated noise.
    """

    def __init__(
        self,
        lr: float = 1e-2,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
        per_tensor: bool = True,
    ):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.per_tensor = per_tensor
        self.t = 0
        self.m: list[np.ndarray] = []
        self.v: list = []

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        if not self.m:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros(()) if self.per_tensor else np.zeros_like(p) for p in params]
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (np.mean(g * g) if self.per_tensor else g * g)
            p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


OPTIMIZERS = ("plain-gd", "adaptive-moments", "adaptive-moments-elementwise")


def make_optimizer(name: str, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
    if name == "plain-gd":
        return GradientDescent(lr)
    if name == "adaptive-moments":
        return Adam(lr, beta1, beta2, eps, per_tensor=True)
    if name == "adaptive-moments-elementwise":
        return Adam(lr, beta1, beta2, eps, per_tensor=False)
    raise ValueError(f"unknown optimizer {name!r}; expected one of {OPTIMIZERS}")
