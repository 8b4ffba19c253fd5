"""AdamW with decoupled weight decay and the cosine learning-rate schedule."""

import math
from dataclasses import dataclass

import numpy as np

from ..errors import RangeError, ShapeError


@dataclass(frozen=True)
class LrSchedule:
    base_lr: float
    min_lr: float = 0.0
    total_steps: int = 1

    def __post_init__(self):
        if not 0.0 <= self.min_lr <= self.base_lr:
            raise RangeError(f"need 0 <= min_lr <= base_lr, got {self.min_lr}, {self.base_lr}")
        if self.total_steps < 1:
            raise RangeError(f"total_steps must be >= 1, got {self.total_steps}")


def cosine_lr(schedule, step):
    """min_lr + (base_lr - min_lr) * (1 + cos(pi * step / total)) / 2, no warmup."""
    if not 0 <= step <= schedule.total_steps:
        raise RangeError(f"step {step} outside [0, {schedule.total_steps}]")
    frac = step / schedule.total_steps
    return schedule.min_lr + 0.5 * (schedule.base_lr - schedule.min_lr) * (1.0 + math.cos(math.pi * frac))


class AdamW:
    """Bias-corrected Adam whose decay ``p <- p - lr * wd * p`` runs first."""

    def __init__(self, params, lr=1e-4, betas=(0.9, 0.999), eps=1e-8, weight_decay=0.01):
        self.params = list(params)
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.step_count = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def zero_grad(self):
        for p in self.params:
            p.zero_grad()

    def step(self, lr=None):
        lr = self.lr if lr is None else lr
        self.step_count += 1
        t = self.step_count
        c1 = 1.0 - self.beta1**t
        c2 = 1.0 - self.beta2**t
        for p, m, v in zip(self.params, self.m, self.v):
            g = p.grad
            if g.shape != p.data.shape:
                raise ShapeError(f"gradient shape {g.shape} does not match parameter {p.shape}")
            if self.weight_decay:
                p.data *= 1.0 - lr * self.weight_decay
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p.data -= lr * (m / c1) / (np.sqrt(v / c2) + self.eps)

    def hyperparameters(self):
        return {
            "betas": [self.beta1, self.beta2],
            "eps": self.eps,
            "weight_decay": self.weight_decay,
        }
