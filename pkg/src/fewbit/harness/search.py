"""DFT column-subset search for the BLMMSE baseline.

Every candidate subset is scored by the same evaluator.  The Monte-Carlo
evaluator draws one fixed set of channels and noise per cell and reuses it
for every subset, so score differences come from the pilot alone.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from ..channels import make_channel
from ..dnn import quantizer_for, rho_for
from ..errors import PreconditionError
from ..linear import blmmse_one_bit, blmmse_orthogonal
from ..pilots import dft_pilot, effective_apply
from ..quantization import Resolution, quantize_complex
from ..rng import derive_rng


@dataclass
class SearchResult:
    best: tuple
    best_mse: float
    table: list  # (columns, mse), in enumeration order

    @property
    def count(self):
        return len(self.table)

    def spread(self):
        values = [v for _, v in self.table]
        return max(values) - min(values)


def _argmin(table):
    # Lexicographically smallest subset wins ties.
    return min(table, key=lambda item: (item[1], item[0]))


def dft_exhaustive_search(tau, k, evaluator, budget=5000):
    """Score every ``k``-subset of ``tau`` DFT columns."""
    n = math.comb(tau, k)
    if n == 0:
        raise PreconditionError(f"no {k}-subsets of {tau} columns")
    if n > budget:
        raise PreconditionError(
            f"C({tau},{k}) = {n} subsets exceeds the search budget of {budget}; "
            "use randomized search (dft_search = random) instead")
    table = [(cols, float(evaluator(cols))) for cols in itertools.combinations(range(tau), k)]
    best, mse = _argmin(table)
    return SearchResult(best, mse, table)


def _sample_subsets(tau, k, n, rng):
    seen = set()
    out = []
    while len(out) < n:
        cols = tuple(sorted(int(c) for c in rng.choice(tau, size=k, replace=False)))
        if cols not in seen:
            seen.add(cols)
            out.append(cols)
    return out


def dft_random_search(tau, k, n_candidates, evaluator, rng):
    """Score ``n_candidates`` distinct uniformly drawn subsets.

    When ``n_candidates`` covers every subset the search is exhaustive.
    """
    if n_candidates < 1:
        raise PreconditionError("n_candidates must be at least 1")
    total = math.comb(tau, k)
    if n_candidates >= total:
        subsets = list(itertools.combinations(range(tau), k))
    else:
        subsets = _sample_subsets(tau, k, n_candidates, rng)
    table = [(cols, float(evaluator(cols))) for cols in subsets]
    best, mse = _argmin(table)
    return SearchResult(best, mse, table)


def blmmse_cell_estimator(pilot, rho, n0, spec):
    """``(y -> h_hat)`` for the BLMMSE baseline at one resolution."""
    r = spec.resolution
    if r is Resolution.ONE_BIT:
        return lambda y: blmmse_one_bit(quantize_complex(y, spec)[1], pilot, rho, None, n0,
                                        with_covariance=False).estimate
    eta = spec.eta
    return lambda y: blmmse_orthogonal(quantize_complex(y, spec)[0], pilot, rho, n0, eta)


class BlmmseEvaluator:
    """Fixed-seed Monte-Carlo BLMMSE score for a DFT column subset."""

    def __init__(self, m, k, tau, snr_db, bits, channel="rayleigh", n0=1.0, trials=1000, seed=0):
        self.m, self.k, self.tau = m, k, tau
        self.rho = rho_for(snr_db, n0)
        self.n0 = n0
        self.spec = quantizer_for(k, self.rho, n0, bits)
        rng = derive_rng(seed, "search", str(channel), float(snr_db), Resolution.parse(bits).value)
        self.h = make_channel(channel, m, k).sample_vectors(rng, trials)
        size = (trials, tau * m)
        self.noise = np.sqrt(n0 / 2) * (rng.standard_normal(size) + 1j * rng.standard_normal(size))

    def __call__(self, cols):
        pilot = dft_pilot(self.tau, cols)
        y = effective_apply(pilot, self.rho, self.h) + self.noise
        est = blmmse_cell_estimator(pilot, self.rho, self.n0, self.spec)(y)
        return float(np.mean(np.abs(self.h - est) ** 2))


def analytic_one_bit_evaluator(m, k, tau, snr_db, n0=1.0):
    """Exact 1-bit BLMMSE ``Tr{C_eps} / (M K)``; no sampling noise."""
    rho = rho_for(snr_db, n0)
    dummy = np.zeros(tau * m, dtype=complex)

    def evaluate(cols):
        return blmmse_one_bit(dummy, dft_pilot(tau, cols), rho, None, n0).total_mse / (m * k)

    return evaluate
