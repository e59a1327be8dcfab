"""Optimum uniform scalar quantizers for Gaussian inputs.

Step sizes and distortion factors are for a unit-variance input; ``sigma``
scales every threshold and reconstruction level.  Each quantizer returns both
the reconstruction values (physically scaled, used by the Bussgang/linear
estimators) and the integer codes (scale-free, fed to the neural estimators):

======== ================== ======================= ==================
bits     codes              thresholds              value
======== ================== ======================= ==================
1        +-1                0                       code * delta*sigma/2
t        -1, 0, 1           +-delta*sigma/2         code * delta*sigma
2, 3, 4  odd, |c|<=2^b-1    multiples of delta*sigma code * delta*sigma/2
inf      y / sigma          none                    y
======== ================== ======================= ==================
"""

import enum
from dataclasses import dataclass

import numpy as np

from .errors import InputError


class Resolution(enum.Enum):
    ONE_BIT = "1"
    TERNARY = "t"
    TWO_BIT = "2"
    THREE_BIT = "3"
    FOUR_BIT = "4"
    UNQUANTIZED = "inf"

    @property
    def bits(self):
        return {"1": 1, "2": 2, "3": 3, "4": 4}.get(self.value)

    @classmethod
    def parse(cls, token):
        if isinstance(token, cls):
            return token
        token = str(token).strip().lower()
        aliases = {"ternary": "t", "none": "inf", "unquantized": "inf"}
        return cls(aliases.get(token, token))


_TABLE = {
    Resolution.ONE_BIT: (np.sqrt(8 / np.pi), 1 - 2 / np.pi),
    Resolution.TERNARY: (1.224, 0.1902),
    Resolution.TWO_BIT: (0.996, 0.1188),
    Resolution.THREE_BIT: (0.586, 0.0374),
    Resolution.FOUR_BIT: (0.335, 0.0115),
    Resolution.UNQUANTIZED: (0.0, 0.0),
}


def quantizer_table(resolution):
    """``(delta, eta)`` for a unit-variance Gaussian input."""
    return _TABLE[Resolution.parse(resolution)]


@dataclass(frozen=True)
class QuantizerSpec:
    resolution: Resolution
    sigma: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "resolution", Resolution.parse(self.resolution))
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")

    @property
    def delta(self):
        return _TABLE[self.resolution][0]

    @property
    def eta(self):
        return _TABLE[self.resolution][1]

    @property
    def step(self):
        return self.delta * self.sigma

    @property
    def max_code(self):
        r = self.resolution
        if r is Resolution.UNQUANTIZED:
            return np.inf
        if r is Resolution.ONE_BIT or r is Resolution.TERNARY:
            return 1
        return 2 ** r.bits - 1

    @property
    def code_scale(self):
        """Factor mapping integer codes to reconstruction values."""
        r = self.resolution
        if r is Resolution.UNQUANTIZED:
            return self.sigma
        if r is Resolution.TERNARY:
            return self.step
        return self.step / 2

    @property
    def clip(self):
        """Half-width of the straight-through pass band."""
        r = self.resolution
        if r is Resolution.UNQUANTIZED:
            return np.inf
        if r is Resolution.ONE_BIT:
            return self.sigma
        if r is Resolution.TERNARY:
            return 1.5 * self.step
        return 2 ** (r.bits - 1) * self.step


def input_sigma(k, rho, n0):
    """Per-real-dimension standard deviation of the quantizer input."""
    return float(np.sqrt((k * rho + n0) / 2))


def quantize_codes(y, spec):
    y = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(y)):
        raise InputError("quantizer input contains non-finite values")
    r = spec.resolution
    if r is Resolution.UNQUANTIZED:
        return y / spec.sigma
    if r is Resolution.ONE_BIT:
        return np.where(y >= 0, 1.0, -1.0)
    if r is Resolution.TERNARY:
        return np.where(np.abs(y) < spec.step / 2, 0.0, np.sign(y))
    top = spec.max_code
    cell = np.floor(y / spec.step)
    # tiny negatives can underflow to -0.0 in the division
    cell = np.where(y < 0, np.minimum(cell, -1.0), cell)
    return np.clip(2 * cell + 1, -top, top)


def quantize(y, spec):
    """Quantize real samples; returns ``(values, codes)``."""
    codes = quantize_codes(y, spec)
    if spec.resolution is Resolution.UNQUANTIZED:
        return np.array(y, dtype=float), codes
    return codes * spec.code_scale, codes


def quantize_complex(y, spec):
    """Quantize real and imaginary parts independently; complex ``(values, codes)``."""
    vr, cr = quantize(np.real(y), spec)
    vi, ci = quantize(np.imag(y), spec)
    return vr + 1j * vi, cr + 1j * ci


def ste_mask(y, spec, clipped=True):
    """Surrogate derivative of the quantizer: 1 inside the pass band, else 0."""
    y = np.asarray(y, dtype=float)
    if not clipped:
        return np.ones_like(y)
    return (np.abs(y) <= spec.clip).astype(float)


def empirical_distortion(spec, n_samples, rng):
    """Monte-Carlo ``E[(y - Q(y))^2] / E[y^2]`` for ``y ~ N(0, sigma^2)``."""
    if n_samples < 100_000:
        raise ValueError("empirical_distortion needs at least 1e5 samples")
    y = spec.sigma * rng.standard_normal(int(n_samples))
    values, _ = quantize(y, spec)
    return float(np.mean((y - values) ** 2) / np.mean(y ** 2))
