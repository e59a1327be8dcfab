"""Central finite-difference verification of tape gradients."""

import numpy as np

from .tensor import backward


def finite_diff_check(loss_fn, tensors, step=1e-5, floor=1e-6):
    """Max relative error between analytic and numeric gradients.

    ``loss_fn()`` must rebuild the graph from scratch and return a scalar
    tensor; ``tensors`` are the leaves to check (parameters or inputs with
    ``requires_grad``).  For each leaf the error is the largest entry-wise
    deviation divided by the leaf's largest gradient magnitude (at least
    ``floor``, so leaves whose true gradient vanishes, such as a bias
    feeding batch normalization, are judged on an absolute scale), and the
    maximum over leaves is returned.
    """
    for t in tensors:
        t.zero_grad()
    backward(loss_fn())
    analytic = [np.zeros_like(t.value) if t.grad is None else t.grad.copy() for t in tensors]

    worst = 0.0
    for t, a in zip(tensors, analytic):
        numeric = np.zeros_like(t.value)
        flat = t.value.reshape(-1)
        num_flat = numeric.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            up = float(loss_fn().value)
            flat[i] = orig - step
            down = float(loss_fn().value)
            flat[i] = orig
            num_flat[i] = (up - down) / (2 * step)
        scale = max(np.abs(a).max(initial=0.0), np.abs(numeric).max(initial=0.0), floor)
        worst = max(worst, float(np.abs(a - numeric).max() / scale))
    for t in tensors:
        t.zero_grad()
    return worst
