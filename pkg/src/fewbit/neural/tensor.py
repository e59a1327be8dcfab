"""A small tape-based reverse-mode autodiff engine over 2-D float64 arrays.

Each :class:`Tensor` remembers its parents and a closure mapping the
upstream gradient to one gradient per parent.  :func:`backward` walks the
graph in reverse topological order and accumulates ``.grad`` on every tensor
that requires it.  Parameters are long-lived leaf tensors; everything else is
rebuilt on each forward pass.
"""

import numpy as np

from ..errors import TrainingError


def _check_finite(value, what):
    if not np.all(np.isfinite(value)):
        raise TrainingError(f"non-finite values produced by {what}")


class Tensor:
    __slots__ = ("value", "grad", "parents", "backward_fn", "requires_grad", "name")

    def __init__(self, value, parents=(), backward_fn=None, requires_grad=None, name=None):
        self.value = np.asarray(value, dtype=float)
        self.grad = None
        self.parents = tuple(parents)
        self.backward_fn = backward_fn
        if requires_grad is None:
            requires_grad = any(p.requires_grad for p in self.parents)
        self.requires_grad = bool(requires_grad)
        self.name = name

    @property
    def shape(self):
        return self.value.shape

    def zero_grad(self):
        self.grad = None

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return f"Tensor{label}(shape={self.value.shape}, requires_grad={self.requires_grad})"


def parameter(value, name=None):
    return Tensor(np.array(value, dtype=float), requires_grad=True, name=name)


def constant(value):
    return Tensor(value, requires_grad=False)


def as_tensor(x):
    return x if isinstance(x, Tensor) else constant(x)


def op_result(value, parents, backward_fn, what):
    _check_finite(value, what)
    return Tensor(value, parents, backward_fn)


def _topological(root):
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    return order


def backward(loss):
    """Accumulate ``d loss / d t`` into ``t.grad`` for every reachable tensor."""
    if loss.value.size != 1:
        raise ValueError("backward() expects a scalar loss")
    grads = {id(loss): np.ones_like(loss.value)}
    for node in reversed(_topological(loss)):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if not node.parents:
            node.grad = g if node.grad is None else node.grad + g
            continue
        if node.backward_fn is None:
            continue
        for parent, pg in zip(node.parents, node.backward_fn(g)):
            if pg is None or not parent.requires_grad:
                continue
            _check_finite(pg, f"backward of {node.name or 'op'}")
            key = id(parent)
            grads[key] = pg if key not in grads else grads[key] + pg
