"""Closed-form linear channel estimators (LMMSE and Bussgang LMMSE).

Conventions
-----------
``c_h=None`` means ``C_h = I_MK``; ``c_n`` is either a scalar ``N0`` (white
noise ``N0 * I``) or a full ``M*tau x M*tau`` covariance.  Observations may
carry leading batch axes; the last axis is always the vectorized
observation of length ``M*tau``.

Linear systems are solved by Cholesky factorization.  A failed
factorization raises :class:`~fewbit.errors.NumericalError` carrying the
condition number; there is no silent pseudo-inverse fallback.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import DimensionError, NumericalError, PreconditionError
from .pilots import PilotMatrix, effective_adjoint, effective_matrix


@dataclass(frozen=True)
class EstimatorReport:
    estimate: np.ndarray
    error_cov: Optional[np.ndarray]
    total_mse: float


def _phi(pilot):
    return pilot.phi if isinstance(pilot, PilotMatrix) else np.asarray(pilot, dtype=complex)


def _cholesky(a, what):
    try:
        return scipy.linalg.cho_factor(a, lower=True, check_finite=True)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError, ValueError):
        try:
            cond = float(np.linalg.cond(a))
        except np.linalg.LinAlgError:
            cond = float("inf")
        raise NumericalError(f"{what} is not Hermitian positive definite", cond) from None


def _hpd_solve(a, b, what):
    return scipy.linalg.cho_solve(_cholesky(a, what), b, check_finite=False)


def _hpd_inverse(a, what):
    return _hpd_solve(a, np.eye(a.shape[0], dtype=a.dtype), what)


def _is_white(c_n):
    return np.ndim(c_n) == 0


def _noise_matrix(c_n, size):
    if _is_white(c_n):
        return float(c_n) * np.eye(size)
    c_n = np.asarray(c_n)
    if c_n.shape != (size, size):
        raise DimensionError(f"noise covariance must be {size}x{size}, got {c_n.shape}")
    return c_n


def _channel_matrix(c_h, size):
    if c_h is None:
        return np.eye(size)
    c_h = np.asarray(c_h)
    if c_h.shape != (size, size):
        raise DimensionError(f"channel covariance must be {size}x{size}, got {c_h.shape}")
    return c_h


def _dims(pilot, m):
    phi = _phi(pilot)
    tau, k = phi.shape
    return phi, tau, k, m


def _infer_m(pilot, y):
    tau = _phi(pilot).shape[0]
    n = np.shape(y)[-1]
    if n % tau:
        raise DimensionError(f"observation length {n} is not a multiple of tau={tau}")
    return n // tau


def cov_y(pilot, rho, m, c_h=None, c_n=1.0):
    """``Phi_bar C_h Phi_bar^H + C_n``."""
    phi, tau, k, m = _dims(pilot, m)
    if c_h is None and _is_white(c_n):
        gram = rho * (phi @ phi.conj().T) + float(c_n) * np.eye(tau)
        return np.kron(gram, np.eye(m))
    pb = effective_matrix(phi, rho, m)
    return pb @ _channel_matrix(c_h, m * k) @ pb.conj().T + _noise_matrix(c_n, m * tau)


def lmmse_estimate(y, pilot, rho, c_h=None, c_n=1.0, form="information", with_covariance=True):
    """Linear MMSE estimate of ``h`` from unquantized ``y``.

    ``form="information"`` uses ``(Phi_bar^H C_n^-1 Phi_bar + C_h^-1)^-1 Phi_bar^H C_n^-1 y``
    (an MK x MK system; with identity ``C_h`` and white noise it collapses to
    a K x K system).  ``form="covariance"`` uses
    ``C_h Phi_bar^H (Phi_bar C_h Phi_bar^H + C_n)^-1 y`` and is kept as a
    dense cross-check.
    """
    y = np.asarray(y, dtype=complex)
    phi, tau, k, m = _dims(pilot, _infer_m(pilot, y))
    mk = m * k
    if rho < 0:
        raise PreconditionError("rho must be non-negative")

    if form == "covariance":
        pb = effective_matrix(phi, rho, m)
        ch = _channel_matrix(c_h, mk)
        cy = pb @ ch @ pb.conj().T + _noise_matrix(c_n, m * tau)
        gain = ch @ pb.conj().T
        est = _hpd_solve(cy, y.reshape(-1, m * tau).T, "C_y").T @ gain.T
        err = ch - gain @ _hpd_solve(cy, gain.conj().T, "C_y") if with_covariance else None
        return EstimatorReport(est.reshape(y.shape[:-1] + (mk,)), err, _trace(err, None))
    if form != "information":
        raise ValueError(f"unknown LMMSE form {form!r}")

    if c_h is None and _is_white(c_n):
        n0 = float(c_n)
        a_k = (rho / n0) * (phi.conj().T @ phi) + np.eye(k)
        a_inv = _hpd_inverse(a_k, "Phi_bar^H C_n^-1 Phi_bar + I")
        mf = effective_adjoint(phi, rho, y) / n0
        est = (a_inv @ mf.reshape(y.shape[:-1] + (k, m))).reshape(y.shape[:-1] + (mk,))
        err = np.kron(a_inv, np.eye(m)) if with_covariance else None
        return EstimatorReport(est, err, float(m * np.trace(a_inv).real))

    pb = effective_matrix(phi, rho, m)
    cn = _noise_matrix(c_n, m * tau)
    cn_inv_pb = _hpd_solve(cn, pb, "C_n")
    info = pb.conj().T @ cn_inv_pb + _hpd_inverse(_channel_matrix(c_h, mk), "C_h")
    info = (info + info.conj().T) / 2
    rhs = (cn_inv_pb.conj().T @ y.reshape(-1, m * tau).T)
    est = _hpd_solve(info, rhs, "Phi_bar^H C_n^-1 Phi_bar + C_h^-1").T
    err = _hpd_inverse(info, "Phi_bar^H C_n^-1 Phi_bar + C_h^-1") if with_covariance else None
    total = _trace(err, None) if err is not None else float(np.trace(_hpd_inverse(info, "information")).real)
    return EstimatorReport(est.reshape(y.shape[:-1] + (mk,)), err, total)


def _trace(err, default):
    return default if err is None else float(np.trace(err).real)


def lmmse_total_mse(pilot, rho, m, c_h=None, c_n=1.0):
    """``Tr{C_eps}`` of the LMMSE estimator."""
    tau = _phi(pilot).shape[0]
    dummy = np.zeros(m * tau, dtype=complex)
    return lmmse_estimate(dummy, pilot, rho, c_h, c_n).total_mse


def arcsine_cov_r(c_y):
    """Covariance of ``(sign(Re y) + j sign(Im y)) / sqrt(2)`` for ``y ~ CN(0, C_y)``."""
    c_y = np.asarray(c_y)
    _cholesky(c_y, "C_y")
    d = 1 / np.sqrt(np.real(np.diag(c_y)))
    norm = d[:, None] * c_y * d[None, :]
    re = np.clip(np.real(norm), -1.0, 1.0)
    im = np.clip(np.imag(norm), -1.0, 1.0)
    # The normalized diagonal is 1 by construction; arcsin is ill-conditioned
    # there, so rounding in the normalization must not leak through.
    np.fill_diagonal(re, 1.0)
    np.fill_diagonal(im, 0.0)
    return (2 / np.pi) * (np.arcsin(re) + 1j * np.arcsin(im))


def approx_cov_r(c_y, eta):
    """``(1-eta) ((1-eta) C_y + eta diag(C_y))``."""
    c_y = np.asarray(c_y)
    return (1 - eta) * ((1 - eta) * c_y + eta * np.diag(np.diag(c_y)))


def blmmse_general(r, pilot, rho, c_h, c_r, eta, with_covariance=True):
    """Bussgang LMMSE ``(1-eta) C_h Phi_bar^H C_r^-1 r`` with error covariance."""
    r = np.asarray(r, dtype=complex)
    phi, tau, k, m = _dims(pilot, _infer_m(pilot, r))
    mk = m * k
    ch = _channel_matrix(c_h, mk)
    c_r = np.asarray(c_r)
    if c_r.shape != (m * tau, m * tau):
        raise DimensionError(f"C_r must be {m * tau}x{m * tau}, got {c_r.shape}")
    gain = (1 - eta) * ch @ effective_matrix(phi, rho, m).conj().T
    factor = _cholesky(c_r, "C_r")
    est = scipy.linalg.cho_solve(factor, r.reshape(-1, m * tau).T).T @ gain.T
    err = None
    total = None
    if with_covariance:
        err = ch - gain @ scipy.linalg.cho_solve(factor, gain.conj().T)
        err = (err + err.conj().T) / 2
        total = float(np.trace(err).real)
    return EstimatorReport(est.reshape(r.shape[:-1] + (mk,)), err, total)


def one_bit_scaled(codes, c_y):
    """Map complex sign codes to the optimal 1-bit reconstruction levels per entry.

    Entry ``i`` of ``y`` has per-real-dimension deviation ``sqrt(C_y[i,i]/2)``;
    the optimal 1-bit level is ``sqrt(2/pi)`` times that.
    """
    sigma = np.sqrt(np.real(np.diag(c_y)) / 2)
    return np.sqrt(2 / np.pi) * sigma * np.asarray(codes)


def blmmse_one_bit(codes, pilot, rho, c_h=None, c_n=1.0, with_covariance=True):
    """Exact-covariance 1-bit BLMMSE from complex sign codes (+-1 +- 1j).

    The arcsine-law covariance is rescaled to the same levels so that the
    Bussgang gain is exactly ``2/pi``; the result is identical to applying
    the arcsine law directly to normalized codes.
    """
    codes = np.asarray(codes, dtype=complex)
    m = _infer_m(pilot, codes)
    c_y = cov_y(pilot, rho, m, c_h, c_n)
    sd = np.sqrt(np.real(np.diag(c_y)))
    c_r = (2 / np.pi) * sd[:, None] * arcsine_cov_r(c_y) * sd[None, :]
    return blmmse_general(one_bit_scaled(codes, c_y), pilot, rho, c_h, c_r, 1 - 2 / np.pi,
                          with_covariance=with_covariance)


def blmmse_denominator(rho, n0, eta, k, tau):
    return rho * tau + n0 + rho * eta * (k - tau)


def blmmse_orthogonal(r, pilot, rho, n0, eta, k=None, tau=None):
    """Simplified BLMMSE for orthogonal pilots, identity C_h and white noise."""
    phi = _phi(pilot)
    tau = phi.shape[0] if tau is None else tau
    k = phi.shape[1] if k is None else k
    if phi.shape != (tau, k):
        raise DimensionError(f"pilot shape {phi.shape} does not match tau={tau}, K={k}")
    if not np.allclose(phi.conj().T @ phi, tau * np.eye(k), rtol=0, atol=1e-9 * tau):
        raise PreconditionError("blmmse_orthogonal requires Phi^H Phi = tau I")
    return effective_adjoint(phi, rho, r) / blmmse_denominator(rho, n0, eta, k, tau)


def snr_to_rho(snr_linear, c_h_trace, c_n_trace, k, tau):
    """Invert ``SNR = rho tau Tr{C_h} / (K Tr{C_n})``."""
    if c_h_trace <= 0 or c_n_trace <= 0:
        raise PreconditionError("covariance traces must be positive")
    return snr_linear * k * c_n_trace / (tau * c_h_trace)


def db_to_linear(snr_db):
    return 10.0 ** (np.asarray(snr_db, dtype=float) / 10.0)
