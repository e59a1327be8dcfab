"""Pilot matrices, power constraints and the Kronecker-structured pilot map.

The effective map ``Phi_bar = sqrt(rho) * kron(Phi, I_M)`` is never formed
except by :func:`effective_matrix`, which exists for dense reference paths.
"""

import csv
import enum
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, InvalidSelectionError

# Rescaling only kicks in past this relative excess, so already-feasible
# pilots whose norms carry rounding noise stay bit-identical.
_PROJECT_RTOL = 1e-12
_VALIDATE_RTOL = 1e-9


class ConstraintKind(enum.Enum):
    PER_COLUMN = "per-column"
    SUM_POWER = "sum"


@dataclass(frozen=True)
class PowerConstraint:
    kind: ConstraintKind
    limit: float

    def __post_init__(self):
        if not self.limit > 0:
            raise ValueError("power limit must be strictly positive")

    @classmethod
    def per_column(cls, tau):
        return cls(ConstraintKind.PER_COLUMN, float(tau))

    @classmethod
    def sum_power(cls, tau, k):
        return cls(ConstraintKind.SUM_POWER, float(tau * k))

    @classmethod
    def for_pilot(cls, kind, tau, k):
        kind = ConstraintKind(kind)
        if kind is ConstraintKind.PER_COLUMN:
            return cls.per_column(tau)
        return cls.sum_power(tau, k)


@dataclass(frozen=True)
class PilotMatrix:
    phi: np.ndarray

    def __post_init__(self):
        phi = np.array(self.phi, dtype=complex)
        if phi.ndim != 2 or min(phi.shape) < 1:
            raise DimensionError(f"pilot must be a non-empty tau x K matrix, got shape {phi.shape}")
        if not np.all(np.isfinite(phi)):
            raise ValueError("pilot entries must be finite")
        phi.setflags(write=False)
        object.__setattr__(self, "phi", phi)

    @property
    def tau(self):
        return self.phi.shape[0]

    @property
    def k(self):
        return self.phi.shape[1]

    def gram(self):
        return self.phi.conj().T @ self.phi

    def is_orthogonal(self, rtol=1e-9):
        return np.allclose(self.gram(), self.tau * np.eye(self.k), rtol=0, atol=rtol * self.tau)


@dataclass(frozen=True)
class RealEmbedding:
    phi_re: np.ndarray
    phi_reim: np.ndarray


def dft_pilot(tau, column_indices):
    """Columns of the unnormalized tau x tau DFT matrix, ``exp(-2j pi m n / tau)``."""
    idx = [int(i) for i in column_indices]
    if not idx:
        raise InvalidSelectionError("at least one DFT column is required")
    if len(set(idx)) != len(idx):
        raise InvalidSelectionError(f"duplicate DFT column indices: {idx}")
    if any(i < 0 or i >= tau for i in idx):
        raise InvalidSelectionError(f"DFT column indices must lie in [0, {tau}), got {idx}")
    rows = np.arange(tau)[:, None]
    # Reduce the exponent mod tau so that e.g. tau=2 gives exactly +-1.
    phase = (rows * np.asarray(idx)[None, :]) % tau
    phi = np.exp(-2j * np.pi * phase / tau)
    # Snap quarter-turn values so symmetric entries are exact.
    phi.real[np.abs(phi.real) < 1e-15] = 0.0
    phi.imag[np.abs(phi.imag) < 1e-15] = 0.0
    return PilotMatrix(phi)


def spread_columns(tau, k):
    """Evenly spaced DFT column indices, the default when no search is run."""
    if k > tau:
        raise InvalidSelectionError(f"cannot pick {k} distinct columns out of {tau}")
    return [int(i * tau // k) for i in range(k)]


def random_pilot(tau, k, rng, constraint=None):
    """Complex Gaussian pilot scaled onto the constraint boundary."""
    constraint = constraint or PowerConstraint.per_column(tau)
    phi = rng.standard_normal((tau, k)) + 1j * rng.standard_normal((tau, k))
    power = np.sum(np.abs(phi) ** 2, axis=0)
    if constraint.kind is ConstraintKind.PER_COLUMN:
        scale = np.sqrt(constraint.limit / power)
    else:
        scale = np.full(k, np.sqrt(constraint.limit / power.sum()))
    return PilotMatrix(phi * scale[None, :])


def _phi(pilot):
    return pilot.phi if isinstance(pilot, PilotMatrix) else np.asarray(pilot)


def column_power(pilot):
    phi = _phi(pilot)
    return np.sum(np.abs(phi) ** 2, axis=0)


def validate_power(pilot, constraint):
    power = column_power(pilot)
    if constraint.kind is ConstraintKind.PER_COLUMN:
        return bool(np.all(power <= constraint.limit * (1 + _VALIDATE_RTOL)))
    return bool(power.sum() <= constraint.limit * (1 + _VALIDATE_RTOL))


def _projection_scale(power, constraint):
    """Multiplicative factor per column (or scalar) that enforces the constraint."""
    if constraint.kind is ConstraintKind.PER_COLUMN:
        scale = np.ones_like(power)
        over = power > constraint.limit * (1 + _PROJECT_RTOL)
        scale[over] = np.sqrt(constraint.limit / power[over])
        return scale
    total = power.sum()
    if total > constraint.limit * (1 + _PROJECT_RTOL):
        return np.full_like(power, np.sqrt(constraint.limit / total))
    return np.ones_like(power)


def project_power(pilot, constraint):
    """Rescale offending columns (or the whole matrix) onto the constraint boundary."""
    phi = _phi(pilot)
    scale = _projection_scale(column_power(phi), constraint)
    if np.all(scale == 1.0):
        return pilot if isinstance(pilot, PilotMatrix) else PilotMatrix(phi)
    return PilotMatrix(phi * scale[None, :])


def project_real_pilot(phi_re, constraint):
    """In-place projection of a stacked real pilot ``[Re Phi; Im Phi]``."""
    power = np.sum(phi_re ** 2, axis=0)
    scale = _projection_scale(power, constraint)
    if not np.all(scale == 1.0):
        phi_re *= scale[None, :]
    return phi_re


def reim_block(phi_re):
    """``[[Re, -Im], [Im, Re]]`` from the stacked ``[Re; Im]`` form."""
    tau = phi_re.shape[0] // 2
    a, b = phi_re[:tau], phi_re[tau:]
    return np.block([[a, -b], [b, a]])


def real_embedding(pilot):
    phi = _phi(pilot)
    phi_re = np.concatenate([phi.real, phi.imag], axis=0)
    return RealEmbedding(phi_re=phi_re, phi_reim=reim_block(phi_re))


def pilot_from_real(phi_re):
    phi_re = np.asarray(phi_re, dtype=float)
    if phi_re.ndim != 2 or phi_re.shape[0] % 2:
        raise DimensionError(f"stacked real pilot must be 2*tau x K, got {phi_re.shape}")
    tau = phi_re.shape[0] // 2
    return PilotMatrix(phi_re[:tau] + 1j * phi_re[tau:])


def effective_apply(pilot, rho, h):
    """``sqrt(rho) * kron(Phi, I_M) @ h`` for ``h`` of shape ``(..., M*K)``."""
    phi = _phi(pilot)
    tau, k = phi.shape
    h = np.asarray(h)
    if h.shape[-1] % k:
        raise DimensionError(f"channel length {h.shape[-1]} is not a multiple of K={k}")
    m = h.shape[-1] // k
    h_t = h.reshape(h.shape[:-1] + (k, m))
    y_t = np.sqrt(rho) * (phi @ h_t)
    return y_t.reshape(h.shape[:-1] + (tau * m,))


def effective_adjoint(pilot, rho, y):
    """``Phi_bar^H @ y`` for ``y`` of shape ``(..., tau*M)``."""
    phi = _phi(pilot)
    tau, k = phi.shape
    y = np.asarray(y)
    if y.shape[-1] % tau:
        raise DimensionError(f"observation length {y.shape[-1]} is not a multiple of tau={tau}")
    m = y.shape[-1] // tau
    y_t = y.reshape(y.shape[:-1] + (tau, m))
    h_t = np.sqrt(rho) * (phi.conj().T @ y_t)
    return h_t.reshape(y.shape[:-1] + (k * m,))


def effective_matrix(pilot, rho, m):
    """Dense ``sqrt(rho) * kron(Phi, I_M)``; reference path only."""
    return np.sqrt(rho) * np.kron(_phi(pilot), np.eye(m))


def noiseless_real(phi_re, rho, h_re, m):
    """Stacked-real noiseless observation ``(sqrt(rho) Phi^ReIm kron I_M) h^Re``.

    ``h_re`` has shape ``(batch, 2*M*K)``; returns ``(batch, 2*tau*M)``.
    """
    two_k = 2 * phi_re.shape[1]
    x = h_re.reshape(h_re.shape[0], two_k, m)
    out = np.sqrt(rho) * np.matmul(reim_block(phi_re), x)
    return out.reshape(h_re.shape[0], -1)


def write_pilot_csv(pilot, path):
    """Write ``row,col,re,im`` lines; floats use ``repr`` so they round-trip exactly."""
    phi = _phi(pilot)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["row", "col", "re", "im"])
        for r in range(phi.shape[0]):
            for c in range(phi.shape[1]):
                writer.writerow([r, c, repr(float(phi[r, c].real)), repr(float(phi[r, c].imag))])


def read_pilot_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise DimensionError(f"{path}: no pilot entries")
    tau = 1 + max(int(r["row"]) for r in rows)
    k = 1 + max(int(r["col"]) for r in rows)
    phi = np.full((tau, k), np.nan, dtype=complex)
    for r in rows:
        i, j = int(r["row"]), int(r["col"])
        if not np.isnan(phi[i, j]):
            raise DimensionError(f"{path}: duplicate entry ({i}, {j})")
        phi[i, j] = float(r["re"]) + 1j * float(r["im"])
    if np.isnan(phi).any():
        raise DimensionError(f"{path}: pilot CSV is missing entries")
    return PilotMatrix(phi)
