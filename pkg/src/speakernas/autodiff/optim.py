"""Adam optimizer and cosine learning-rate schedule."""

from __future__ import annotations

import math

import numpy as np

from ..errors import ConfigurationError, NumericsError


class AdamState:
    """First/second moment buffers plus the shared step counter."""

    __slots__ = ("m", "v", "step")

    def __init__(self, params):
        self.m = [np.zeros_like(p.data) for p in params]
        self.v = [np.zeros_like(p.data) for p in params]
        self.step = 0


class Adam:
    """Adam with L2 regularization folded into the gradient.

    The decay term is added to every gradient before the moment updates,
    so it participates in the adaptive scaling (classic Adam-with-L2, not
    the decoupled variant).
    """

    def __init__(self, params, lr=1e-3, betas=(0.9, 0.999), eps=1e-8,
                 weight_decay=0.0):
        self.params = list(params)
        if not self.params:
            raise ConfigurationError("optimizer needs at least one parameter")
        self.lr = float(lr)
        self.beta1, self.beta2 = betas
        self.eps = float(eps)
        self.weight_decay = float(weight_decay)
        self.state = AdamState(self.params)

    def step(self, grads=None):
        """Apply one update. ``grads`` defaults to each param's .grad."""
        if grads is None:
            grads = [p.grad for p in self.params]
        if len(grads) != len(self.params):
            raise ConfigurationError(
                f"got {len(grads)} gradients for {len(self.params)} parameters"
            )
        st = self.state
        st.step += 1
        b1, b2 = self.beta1, self.beta2
        bc1 = 1.0 - b1 ** st.step
        bc2 = 1.0 - b2 ** st.step
        for i, p in enumerate(self.params):
            g = grads[i]
            if g is None:
                continue
            if not np.all(np.isfinite(g)):
                raise NumericsError(
                    f"non-finite gradient for parameter {p.name or i}",
                    param_name=p.name or str(i),
                )
            if self.weight_decay != 0.0:
                g = g + self.weight_decay * p.data
            st.m[i] = b1 * st.m[i] + (1.0 - b1) * g
            st.v[i] = b2 * st.v[i] + (1.0 - b2) * (g * g)
            mhat = st.m[i] / bc1
            vhat = st.v[i] / bc2
            p.data = p.data - (self.lr * mhat / (np.sqrt(vhat) + self.eps)).astype(
                p.dtype
            )

    def zero_grad(self):
        for p in self.params:
            p.grad = None


def cosine_lr(lr0: float, epoch: int, total_epochs: int) -> float:
    """Half-cosine anneal from lr0 at epoch 0 toward 0 at epoch == total."""
    if total_epochs <= 0:
        raise ConfigurationError(f"total_epochs must be positive, got {total_epochs}")
    if epoch < 0 or epoch > total_epochs:
        raise ConfigurationError(
            f"epoch {epoch} outside [0, {total_epochs}]"
        )
    return lr0 * 0.5 * (1.0 + math.cos(math.pi * epoch / total_epochs))
