"""Adam with bias correction."""

import numpy as np


class Adam:
    """Adam over an ordered ``name -> Tensor`` mapping.

    ``lr_overrides`` assigns a different learning rate to selected parameter
    names (the autoencoder uses it for the pilot).
    """

    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8, lr_overrides=None):
        self.params = dict(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.lr_overrides = dict(lr_overrides or {})
        self.step_count = 0
        self.m = {k: np.zeros_like(p.value) for k, p in self.params.items()}
        self.v = {k: np.zeros_like(p.value) for k, p in self.params.items()}

    def step(self):
        self.step_count += 1
        t = self.step_count
        c1 = 1 - self.beta1 ** t
        c2 = 1 - self.beta2 ** t
        for name, p in self.params.items():
            g = p.grad
            if g is None:
                continue
            m = self.m[name] = self.beta1 * self.m[name] + (1 - self.beta1) * g
            v = self.v[name] = self.beta2 * self.v[name] + (1 - self.beta2) * g * g
            lr = self.lr_overrides.get(name, self.lr)
            if lr == 0:
                continue
            p.value = p.value - lr * (m / c1) / (np.sqrt(v / c2) + self.eps)

    def zero_grad(self):
        for p in self.params.values():
            p.zero_grad()


def adam_step(params, grads, state):
    """Functional form: set grads on ``params`` and advance ``state``."""
    for name, g in grads.items():
        params[name].grad = np.asarray(g, dtype=float)
    state.step()
    return {k: p.value for k, p in params.items()}
