"""Minimal reverse-mode autodiff with the layers the estimators need."""

from .gradcheck import finite_diff_check
from .layers import BatchNormLayer, DenseLayer, NetworkModel, glorot_uniform
from .ops import (
    batchnorm,
    dense,
    identity_surrogate,
    mse_loss,
    quantize_ste,
    relu,
    residual_add,
    rms_normalize,
    tanh,
)
from .optim import Adam, adam_step
from .tensor import Tensor, backward, constant, parameter

__all__ = [
    "Adam", "BatchNormLayer", "DenseLayer", "NetworkModel", "Tensor",
    "adam_step", "backward", "batchnorm", "constant", "dense", "finite_diff_check",
    "glorot_uniform", "identity_surrogate", "mse_loss", "parameter", "quantize_ste",
    "relu", "residual_add", "rms_normalize", "tanh",
]
