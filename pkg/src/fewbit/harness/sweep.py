"""Monte-Carlo MSE sweeps over schemes, resolutions and SNR points.

All schemes at one SNR point see the same channel and noise draws (common
random numbers), so differences between curves are not sampling noise.
Draws are generated in fixed-size chunks from streams keyed by
``(seed, "eval", channel, snr, chunk)``; the result depends only on the
config and seed, not on the number of workers.
"""

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..channels import complex_unstack, make_channel, real_stack
from ..dnn import estimate, load_regressor, quantizer_for, rho_for
from ..errors import DimensionError, PreconditionError
from ..linear import lmmse_estimate
from ..pilots import dft_pilot, effective_apply, spread_columns
from ..quantization import Resolution, quantize_codes
from ..rng import derive_rng
from .config import ANALYTIC_SCHEMES, DNN_SCHEMES
from .search import (
    BlmmseEvaluator,
    blmmse_cell_estimator,
    dft_exhaustive_search,
    dft_random_search,
)

CSV_HEADER = ("snr_db", "bits", "scheme", "channel", "tau", "m", "k", "trials", "mse", "seed")
CHUNK = 2000


@dataclass(frozen=True)
class ResultRecord:
    snr_db: float
    bits: str
    scheme: str
    channel: str
    tau: int
    m: int
    k: int
    trials: int
    mse: float
    seed: int
    stderr: float = math.nan

    def __post_init__(self):
        if self.mse < 0:
            raise ValueError("mse must be non-negative")

    def sort_key(self):
        return (self.scheme, _bits_rank(self.bits), self.snr_db, self.channel)


def _bits_rank(bits):
    order = [r.value for r in Resolution]
    return order.index(bits)


def mse_per_entry(h, h_hat):
    """``||h - h_hat||^2 / (M K)``, averaged over leading batch axes."""
    h = np.asarray(h)
    h_hat = np.asarray(h_hat)
    if h.shape != h_hat.shape:
        raise DimensionError(f"shape mismatch: {h.shape} vs {h_hat.shape}")
    return float(np.mean(np.abs(h - h_hat) ** 2))


def _per_trial(h, h_hat):
    return np.mean(np.abs(h - h_hat) ** 2, axis=-1)


def format_snr(snr_db):
    return f"{float(snr_db):g}"


def checkpoint_name(scheme, channel, tau, m, k, bits, snr_db):
    bits = Resolution.parse(bits).value
    return f"{scheme}_{channel}_t{tau}_m{m}_k{k}_b{bits}_snr{format_snr(snr_db)}.qmc"


def checkpoint_path(cfg, scheme, bits, snr_db):
    s = cfg.system
    return os.path.join(cfg.checkpoints(), checkpoint_name(scheme, cfg.channel, s.tau, s.m, s.k, bits, snr_db))


def cells(cfg):
    """``(scheme, bits)`` pairs in output order; LMMSE ignores resolution."""
    out = []
    for scheme in cfg.schemes:
        bits = ("inf",) if scheme == "lmmse" else cfg.bits
        out.extend((scheme, Resolution.parse(b).value) for b in bits)
    return sorted(set(out), key=lambda c: (c[0], _bits_rank(c[1])))


@lru_cache(maxsize=256)
def _search_cached(tau, k, m, channel, n0, snr_db, bits, mode, trials, budget, candidates, seed):
    evaluator = BlmmseEvaluator(m, k, tau, snr_db, bits, channel, n0, trials, seed)
    if mode == "auto":
        mode = "exhaustive" if math.comb(tau, k) <= budget else "random"
    if mode == "exhaustive":
        return dft_exhaustive_search(tau, k, evaluator, budget)
    rng = derive_rng(seed, "search-random", channel, float(snr_db), bits)
    return dft_random_search(tau, k, candidates, evaluator, rng)


def search_dft(cfg, bits, snr_db):
    """Run the configured DFT subset search for one cell."""
    s = cfg.system
    mode = "exhaustive" if cfg.dft_search == "none" else cfg.dft_search
    return _search_cached(s.tau, s.k, s.m, cfg.channel, float(s.n0), float(snr_db),
                          Resolution.parse(bits).value, mode, cfg.dft_search_trials,
                          cfg.dft_search_budget, cfg.dft_random_candidates, cfg.seed)


def dft_columns_for(cfg, bits, snr_db):
    """DFT column subset used by the BLMMSE baseline and the DNN-DFT scheme."""
    s = cfg.system
    if cfg.dft_columns is not None:
        return tuple(cfg.dft_columns)
    if cfg.dft_search == "none":
        return tuple(spread_columns(s.tau, s.k))
    return search_dft(cfg, bits, snr_db).best


def _dnn_estimator(cfg, scheme, bits, snr_db, rho):
    path = checkpoint_path(cfg, scheme, bits, snr_db)
    if not os.path.exists(path):
        raise PreconditionError(
            f"missing checkpoint for cell scheme={scheme} bits={bits} snr_db={format_snr(snr_db)}: {path}; "
            f"run train-{'estimator' if scheme == 'dnn-dft' else 'autoencoder'} first")
    model, pilot, _ = load_regressor(path)
    s = cfg.system
    if pilot is None:
        raise PreconditionError(f"{path}: checkpoint carries no pilot")
    if (model.config.tau, model.config.m, model.config.k) != (s.tau, s.m, s.k):
        raise PreconditionError(f"{path}: dimensions do not match the configuration")
    spec = quantizer_for(s.k, rho, s.n0, bits)

    def run(y):
        codes = quantize_codes(real_stack(y), spec)
        return complex_unstack(estimate(model, codes))

    return pilot, run


def build_estimator(cfg, scheme, bits, snr_db):
    """``(pilot, y -> h_hat)`` for one cell."""
    s = cfg.system
    rho = rho_for(snr_db, s.n0)
    if scheme in DNN_SCHEMES:
        return _dnn_estimator(cfg, scheme, bits, snr_db, rho)
    if scheme == "lmmse":
        # Any orthogonal pilot attains the same LMMSE error.
        pilot = dft_pilot(s.tau, spread_columns(s.tau, s.k))
        return pilot, lambda y: lmmse_estimate(y, pilot, rho, None, s.n0, with_covariance=False).estimate
    if scheme == "blmmse-dft":
        pilot = dft_pilot(s.tau, dft_columns_for(cfg, bits, snr_db))
        return pilot, blmmse_cell_estimator(pilot, rho, s.n0, quantizer_for(s.k, rho, s.n0, bits))
    raise ValueError(f"unknown scheme {scheme!r}")


def _run_snr(cfg, snr_db, cell_list):
    s = cfg.system
    rho = rho_for(snr_db, s.n0)
    channel = make_channel(cfg.channel, s.m, s.k)
    estimators = [build_estimator(cfg, scheme, bits, snr_db) for scheme, bits in cell_list]
    total = np.zeros(len(cell_list))
    total_sq = np.zeros(len(cell_list))
    done = 0
    chunk = 0
    while done < cfg.trials:
        n = min(CHUNK, cfg.trials - done)
        rng = derive_rng(cfg.seed, "eval", cfg.channel, float(snr_db), chunk)
        h = channel.sample_vectors(rng, n)
        size = (n, s.tau * s.m)
        noise = np.sqrt(s.n0 / 2) * (rng.standard_normal(size) + 1j * rng.standard_normal(size))
        for i, (pilot, run) in enumerate(estimators):
            err = _per_trial(h, run(effective_apply(pilot, rho, h) + noise))
            total[i] += err.sum()
            total_sq[i] += (err ** 2).sum()
        done += n
        chunk += 1
    records = []
    for i, (scheme, bits) in enumerate(cell_list):
        mean = total[i] / cfg.trials
        if cfg.trials > 1:
            var = max(total_sq[i] - cfg.trials * mean ** 2, 0.0) / (cfg.trials - 1)
            stderr = math.sqrt(var / cfg.trials)
        else:
            stderr = math.nan
        records.append(ResultRecord(float(snr_db), bits, scheme, cfg.channel, s.tau, s.m, s.k,
                                    cfg.trials, float(mean), cfg.seed, stderr))
    return records


def run_mse_sweep(cfg, schemes=None, csv_path=None):
    """Evaluate every cell of ``cfg`` (optionally restricted to ``schemes``)."""
    cell_list = [c for c in cells(cfg) if schemes is None or c[0] in schemes]
    if not cell_list:
        raise PreconditionError("no cells to evaluate")
    snrs = [float(v) for v in cfg.system.snr_db]
    if cfg.workers > 1 and len(snrs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            parts = list(pool.map(_run_snr, [cfg] * len(snrs), snrs, [cell_list] * len(snrs)))
    else:
        parts = [_run_snr(cfg, snr, cell_list) for snr in snrs]
    records = sorted((r for part in parts for r in part), key=ResultRecord.sort_key)
    if csv_path is not None:
        write_results_csv(records, csv_path)
    return records


def analytic_schemes(cfg):
    return [s for s in cfg.schemes if s in ANALYTIC_SCHEMES]


def write_results_csv(records, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in records:
            writer.writerow([format_snr(r.snr_db), r.bits, r.scheme, r.channel, r.tau, r.m, r.k,
                             r.trials, repr(r.mse), r.seed])


def read_results_csv(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        return [ResultRecord(float(row["snr_db"]), row["bits"], row["scheme"], row["channel"],
                             int(row["tau"]), int(row["m"]), int(row["k"]), int(row["trials"]),
                             float(row["mse"]), int(row["seed"])) for row in reader]

