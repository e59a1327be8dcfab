"""Channel realizations for the uplink training model.

Two channel laws are supported, both with identity covariance ``C_h = I_MK``:

* ``RAYLEIGH``: i.i.d. CN(0, 1) entries.
* ``LOS``: one line-of-sight path per user on a half-wavelength uniform
  linear array, ``h_k = A_k e^{j phi_k} [1, e^{j Omega_k}, ..., e^{j(M-1) Omega_k}]``
  with ``Omega_k = pi sin(theta_k)``.

Vectorization is column-major throughout (``h = vec(H)``, so ``h[k*M + m] ==
H[m, k]``); this is what makes ``(Phi kron I_M) vec(H) == vec(H Phi^T)``.
"""

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DimensionError

THETA_MAX = np.pi / 3
SPACING_WAVELENGTHS = 0.5


class ChannelKind(enum.Enum):
    RAYLEIGH = "rayleigh"
    LOS = "los"


def unit_amplitude(rng, k):
    """Default LoS amplitude law: ``A_k = 1`` for every user."""
    return np.ones(k)


@dataclass(frozen=True)
class LosUserGeometry:
    theta: np.ndarray
    phi: np.ndarray
    amplitude: np.ndarray

    @property
    def omega(self):
        return 2 * np.pi * SPACING_WAVELENGTHS * np.sin(self.theta)


@dataclass(frozen=True)
class ChannelModel:
    kind: ChannelKind
    m: int
    k: int
    # Any law with E[A^2] = 1 keeps C_h = I.
    amplitude_law: Callable = field(default=unit_amplitude, compare=False)

    def __post_init__(self):
        _check_dims(self.m, self.k)

    def sample(self, rng, batch=None):
        """Draw channel matrices, shape ``(M, K)`` or ``(batch, M, K)``."""
        if self.kind is ChannelKind.RAYLEIGH:
            return sample_rayleigh(self.m, self.k, rng, batch)
        return sample_los(self.m, self.k, rng, batch, self.amplitude_law)

    def sample_vectors(self, rng, batch):
        """Draw ``batch`` vectorized channels, shape ``(batch, M*K)``."""
        return vectorize(self.sample(rng, batch))

    def covariance(self):
        return channel_covariance(self)


def _check_dims(m, k):
    if int(m) < 1 or int(k) < 1:
        raise DimensionError(f"channel dimensions must be positive, got M={m}, K={k}")


def sample_rayleigh(m, k, rng, batch=None):
    _check_dims(m, k)
    shape = (m, k) if batch is None else (batch, m, k)
    scale = np.sqrt(0.5)
    return scale * rng.standard_normal(shape) + 1j * scale * rng.standard_normal(shape)


def los_geometry(k, rng, batch=None, amplitude_law=unit_amplitude):
    shape = (k,) if batch is None else (batch, k)
    theta = rng.uniform(-THETA_MAX, THETA_MAX, size=shape)
    phi = rng.uniform(0.0, 2 * np.pi, size=shape)
    n = int(np.prod(shape))
    amplitude = np.asarray(amplitude_law(rng, n), dtype=float).reshape(shape)
    return LosUserGeometry(theta=theta, phi=phi, amplitude=amplitude)


def steering_matrix(m, geometry):
    """Columns ``A_k e^{j phi_k} a(Omega_k)`` for the given user geometry."""
    idx = np.arange(m)
    omega = geometry.omega
    # (..., M, K)
    phase = idx[:, None] * omega[..., None, :] + geometry.phi[..., None, :]
    return geometry.amplitude[..., None, :] * np.exp(1j * phase)


def sample_los(m, k, rng, batch=None, amplitude_law=unit_amplitude):
    _check_dims(m, k)
    return steering_matrix(m, los_geometry(k, rng, batch, amplitude_law))


def channel_covariance(model):
    return np.eye(model.m * model.k)


def vectorize(h_mat):
    """Column-major vec of ``(..., M, K)`` -> ``(..., M*K)``."""
    h_mat = np.asarray(h_mat)
    m, k = h_mat.shape[-2:]
    return np.swapaxes(h_mat, -1, -2).reshape(h_mat.shape[:-2] + (m * k,))


def unvectorize(h, m, k):
    h = np.asarray(h)
    if h.shape[-1] != m * k:
        raise DimensionError(f"vector length {h.shape[-1]} != M*K = {m * k}")
    return np.swapaxes(h.reshape(h.shape[:-1] + (k, m)), -1, -2)


def real_stack(x):
    """``[Re x; Im x]`` along the last axis."""
    x = np.asarray(x)
    return np.concatenate([x.real, x.imag], axis=-1)


def complex_unstack(x):
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    if n % 2:
        raise DimensionError(f"real-stacked length must be even, got {n}")
    return x[..., : n // 2] + 1j * x[..., n // 2:]


def make_channel(kind, m, k, amplitude_law: Optional[Callable] = None):
    kind = ChannelKind(kind) if not isinstance(kind, ChannelKind) else kind
    if amplitude_law is None:
        return ChannelModel(kind, int(m), int(k))
    return ChannelModel(kind, int(m), int(k), amplitude_law)
