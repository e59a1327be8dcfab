"""Layer primitives: explicit forward/backward pairs plus tape wrappers.

The ``*_forward``/``*_backward`` functions are plain numpy and are what the
gradient tests exercise directly; the lower-case wrappers (``dense``,
``relu``, ...) record them on the tape.
"""

import numpy as np

from ..errors import DimensionError, TrainingError
from ..quantization import quantize_codes, ste_mask
from .tensor import Tensor, as_tensor, op_result


def _same_shape(a, b, what):
    if a.shape != b.shape:
        raise DimensionError(f"{what}: shape mismatch {a.shape} vs {b.shape}")


# -- dense -----------------------------------------------------------------

def dense_forward(x, w, b):
    if x.shape[-1] != w.shape[0] or w.shape[1] != b.shape[-1]:
        raise DimensionError(f"dense: x {x.shape}, W {w.shape}, b {b.shape} do not chain")
    return x @ w + b


def dense_backward(grad_y, x, w):
    return grad_y @ w.T, x.T @ grad_y, grad_y.sum(axis=0)


def dense(x, w, b):
    x = as_tensor(x)

    def back(g):
        return dense_backward(g, x.value, w.value)

    return op_result(dense_forward(x.value, w.value, b.value), (x, w, b), back, "dense")


# -- activations -----------------------------------------------------------

def relu_forward(x):
    return np.maximum(x, 0.0)


def relu_backward(grad_y, x):
    return grad_y * (x > 0)


def tanh_forward(x):
    return np.tanh(x)


def tanh_backward(grad_y, y):
    return grad_y * (1.0 - y * y)


def relu(x):
    return op_result(relu_forward(x.value), (x,), lambda g: (relu_backward(g, x.value),), "relu")


def tanh(x):
    y = tanh_forward(x.value)
    return op_result(y, (x,), lambda g: (tanh_backward(g, y),), "tanh")


# -- batch normalization ---------------------------------------------------

def batchnorm_forward(x, gamma, beta, mean, var, eps):
    """Returns ``(y, cache)``; ``mean``/``var`` are the statistics to normalize by."""
    inv_std = 1.0 / np.sqrt(var + eps)
    x_hat = (x - mean) * inv_std
    return gamma * x_hat + beta, (x_hat, inv_std)


def batchnorm_backward(grad_y, cache, gamma, batch_stats):
    """Gradients ``(dx, dgamma, dbeta)``.

    With ``batch_stats=True`` the mean and variance are functions of ``x``
    and their contribution is included; otherwise they are constants.
    """
    x_hat, inv_std = cache
    dgamma = (grad_y * x_hat).sum(axis=0)
    dbeta = grad_y.sum(axis=0)
    dx_hat = grad_y * gamma
    if not batch_stats:
        return dx_hat * inv_std, dgamma, dbeta
    n = grad_y.shape[0]
    dx = inv_std / n * (n * dx_hat - dx_hat.sum(axis=0) - x_hat * (dx_hat * x_hat).sum(axis=0))
    return dx, dgamma, dbeta


def batchnorm(x, layer, training):
    xv = x.value
    if training:
        if xv.shape[0] < 2:
            raise TrainingError("batch normalization in training mode needs a batch of at least 2")
        mean = xv.mean(axis=0)
        var = xv.var(axis=0)
        layer.update_running(mean, xv.var(axis=0, ddof=1))
    else:
        mean, var = layer.running_mean, layer.running_var
    y, cache = batchnorm_forward(xv, layer.gamma.value, layer.beta.value, mean, var, layer.eps)

    def back(g):
        return batchnorm_backward(g, cache, layer.gamma.value, training)

    return op_result(y, (x, layer.gamma, layer.beta), back, "batchnorm")


# -- misc ------------------------------------------------------------------

def residual_add(skip, main):
    _same_shape(skip.value, main.value, "residual_add")
    return op_result(skip.value + main.value, (skip, main), lambda g: (g, g), "residual_add")


def quantize_ste(x, spec, clipped=True):
    """Forward: integer quantizer codes.  Backward: upstream gradient times the STE mask."""
    x = as_tensor(x)
    mask = ste_mask(x.value, spec, clipped)
    return op_result(quantize_codes(x.value, spec), (x,), lambda g: (g * mask,), "quantize")


def rms_normalize(x, target):
    """Rescale ``x`` so its root-mean-square over all entries equals ``target``.

    Placed in front of a scale-invariant quantizer (sign) it leaves the codes
    unchanged but removes the gradient component along ``x`` itself, which a
    pass-through surrogate would otherwise report as a change in output size.
    """
    x = as_tensor(x)
    v = x.value
    s = float(np.sqrt(np.mean(v ** 2)))
    if s == 0.0:
        # Nothing to rescale; behave as the identity.
        return op_result(v.copy(), (x,), lambda g: (g,), "rms-normalize")
    n = v.size

    def back(g):
        return ((target / s) * (g - v * (np.sum(g * v) / (n * s * s))),)

    return op_result(v * (target / s), (x,), back, "rms-normalize")


def identity_surrogate(x, spec):
    """Quantizer stand-in for gradient checks: codes are ``x / code_scale``."""
    scale = spec.code_scale
    return op_result(x.value / scale, (x,), lambda g: (g / scale,), "quantize-identity")


def mse_forward(pred, target):
    _same_shape(pred, target, "mse_loss")
    return float(np.mean((pred - target) ** 2))


def mse_backward(pred, target):
    return 2.0 * (pred - target) / pred.size


def mse_loss(pred, target):
    target = np.asarray(target.value if isinstance(target, Tensor) else target, dtype=float)
    value = mse_forward(pred.value, target)
    return op_result(np.array(value), (pred,), lambda g: (g * mse_backward(pred.value, target),), "mse")
