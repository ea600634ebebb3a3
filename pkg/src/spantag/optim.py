"""AdamW with decoupled weight decay over a ParamStore."""

from __future__ import annotations

import numpy as np

from .autograd import ParamStore


class NonFiniteGradientError(RuntimeError):
    """A gradient buffer contains NaN or infinity."""


class AdamW:
    """Decoupled weight decay Adam (bias-corrected moments).

    Update, all terms evaluated at the pre-step weights:

        m <- b1*m + (1-b1)*g         v <- b2*v + (1-b2)*g^2
        w <- w - lr * ( m_hat / (sqrt(v_hat) + eps) + weight_decay * w )
    """

    def __init__(
        self,
        store: ParamStore,
        lr: float = 1e-3,
        betas: tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
        weight_decay: float = 0.01,
    ):
        self.store = store
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.step_count = 0
        self.m = {name: np.zeros_like(node.value) for name, node in store.items()}
        self.v = {name: np.zeros_like(node.value) for name, node in store.items()}

    def step(self) -> None:
        """Apply one update from the current gradient buffers."""
        self.step_count += 1
        bc1 = 1.0 - self.beta1**self.step_count
        bc2 = 1.0 - self.beta2**self.step_count
        for name, node in self.store.items():
            g = node.grad
            if not np.all(np.isfinite(g)):
                raise NonFiniteGradientError(f"non-finite gradient for parameter {name!r}")
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            update = (m / bc1) / (np.sqrt(v / bc2) + self.eps)
            if self.weight_decay != 0.0:
                update = update + self.weight_decay * node.value
            node.value -= self.lr * update
