"""Parameterized layers and the model base class."""

from collections import OrderedDict

import numpy as np

from . import ops
from .tensor import parameter


def glorot_uniform(rng, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


class DenseLayer:
    def __init__(self, in_width, out_width, rng, name="dense"):
        self.weights = parameter(glorot_uniform(rng, in_width, out_width), f"{name}.weights")
        self.bias = parameter(np.zeros(out_width), f"{name}.bias")
        self.name = name

    @property
    def in_width(self):
        return self.weights.value.shape[0]

    @property
    def out_width(self):
        return self.weights.value.shape[1]

    def __call__(self, x):
        return ops.dense(x, self.weights, self.bias)

    def parameters(self):
        return [(self.weights.name, self.weights), (self.bias.name, self.bias)]


class BatchNormLayer:
    """Per-feature batch normalization.

    Running statistics follow ``running = (1 - momentum) * running + momentum * batch``
    and are only touched by training-mode forward passes.
    """

    def __init__(self, width, momentum=0.1, eps=1e-5, name="bn"):
        if not 0 < momentum < 1:
            raise ValueError("momentum must lie in (0, 1)")
        if not eps > 0:
            raise ValueError("eps must be positive")
        self.gamma = parameter(np.ones(width), f"{name}.gamma")
        self.beta = parameter(np.zeros(width), f"{name}.beta")
        self.running_mean = np.zeros(width)
        self.running_var = np.ones(width)
        self.momentum = momentum
        self.eps = eps
        self.name = name

    def update_running(self, mean, var):
        m = self.momentum
        self.running_mean = (1 - m) * self.running_mean + m * mean
        self.running_var = (1 - m) * self.running_var + m * var

    def __call__(self, x, training):
        return ops.batchnorm(x, self, training)

    def parameters(self):
        return [(self.gamma.name, self.gamma), (self.beta.name, self.beta)]

    def buffers(self):
        return [(f"{self.name}.running_mean", "running_mean"), (f"{self.name}.running_var", "running_var")]


class NetworkModel:
    """Base class: subclasses set ``self.layers`` (ordered) and implement ``forward``."""

    kind = "network"

    def __init__(self):
        self.layers = []

    def forward(self, x, training=False):
        raise NotImplementedError

    def parameters(self):
        out = OrderedDict()
        for layer in self.layers:
            for name, p in layer.parameters():
                out[name] = p
        return out

    def zero_grad(self):
        for p in self.parameters().values():
            p.zero_grad()

    def parameter_count(self):
        return int(sum(p.value.size for p in self.parameters().values()))

    def state_dict(self):
        """Copies of every parameter and running statistic, keyed by name."""
        state = OrderedDict((k, p.value.copy()) for k, p in self.parameters().items())
        for layer in self.layers:
            if isinstance(layer, BatchNormLayer):
                for key, attr in layer.buffers():
                    state[key] = getattr(layer, attr).copy()
        return state

    def load_state_dict(self, state):
        params = self.parameters()
        for name, p in params.items():
            if state[name].shape != p.value.shape:
                raise ValueError(f"{name}: shape {state[name].shape} != {p.value.shape}")
            p.value = np.array(state[name], dtype=float)
        for layer in self.layers:
            if isinstance(layer, BatchNormLayer):
                for key, attr in layer.buffers():
                    setattr(layer, attr, np.array(state[key], dtype=float))

    def layer_list(self):
        out = []
        for layer in self.layers:
            if isinstance(layer, DenseLayer):
                out.append({"type": "dense", "name": layer.name, "in": layer.in_width, "out": layer.out_width})
            else:
                out.append({"type": "batchnorm", "name": layer.name, "width": int(layer.gamma.value.size),
                            "momentum": layer.momentum, "eps": layer.eps})
        return out
