"""Train and persist the DNN schemes, one checkpoint per (resolution, SNR) cell."""

import os

from ..autoencoder import build_autoencoder, save_autoencoder, train_autoencoder
from ..dnn import RegressorConfig, build_regressor, save_regressor, train_regressor
from ..pilots import PowerConstraint, dft_pilot, random_pilot, write_pilot_csv
from ..quantization import Resolution
from ..rng import derive_rng
from ..training import TrainConfig, write_history_csv
from .sweep import checkpoint_path, dft_columns_for, format_snr


def cell_seed(cfg, scheme, bits, snr_db):
    # Shared by both DNN schemes of a cell: same initial weights and training
    # draws, so the learned-pilot result is a paired comparison.
    del scheme
    rng = derive_rng(cfg.seed, "train-cell", cfg.channel, Resolution.parse(bits).value, float(snr_db))
    return int(rng.integers(0, 2 ** 63 - 1))


def train_config(cfg, scheme, bits, snr_db):
    return TrainConfig(
        snr_db=float(snr_db), resolution=Resolution.parse(bits).value, channel=cfg.channel,
        n0=cfg.system.n0, train_samples=cfg.train_samples, val_samples=cfg.val_samples,
        batch_size=cfg.batch_size, max_epochs=cfg.max_epochs, patience=cfg.patience, lr=cfg.lr,
        seed=cell_seed(cfg, scheme, bits, snr_db), ste_clipped=cfg.ste_clipped,
        pilot_lr=cfg.pilot_lr, constraint=cfg.constraint)


def _side_paths(path):
    stem = path[: -len(".qmc")] if path.endswith(".qmc") else path
    return stem + "_history.csv", stem + "_pilot.csv"


def _meta(cfg, scheme, bits, snr_db, tcfg, result, columns):
    return {"scheme": scheme, "bits": Resolution.parse(bits).value, "snr_db": float(snr_db),
            "channel": cfg.channel, "seed": tcfg.seed, "config_seed": cfg.seed,
            "init_dft_columns": list(columns), "best_val_mse": result.best_val_mse,
            "best_epoch": result.best_epoch}


def train_cell(cfg, scheme, bits, snr_db, log=None):
    """Train one cell and write checkpoint, history CSV and pilot CSV.

    Returns ``(checkpoint_path, TrainResult)``.
    """
    s = cfg.system
    os.makedirs(cfg.checkpoints(), exist_ok=True)
    path = checkpoint_path(cfg, scheme, bits, snr_db)
    history_path, pilot_path = _side_paths(path)
    columns = dft_columns_for(cfg, bits, snr_db)
    pilot = dft_pilot(s.tau, columns)
    tcfg = train_config(cfg, scheme, bits, snr_db)
    config = RegressorConfig(s.tau, s.m, s.k)
    if scheme == "dnn-dft":
        model = build_regressor(config, seed=tcfg.seed)
        result = train_regressor(model, pilot, tcfg, log=log)
        save_regressor(path, model, pilot, _meta(cfg, scheme, bits, snr_db, tcfg, result, columns))
    elif scheme == "dnn-learned":
        if cfg.pilot_init == "random":
            columns = ()
            constraint = PowerConstraint.for_pilot(cfg.constraint, s.tau, s.k)
            pilot = random_pilot(s.tau, s.k, derive_rng(tcfg.seed, "pilot-init"), constraint)
        model = build_autoencoder(config, pilot, tcfg)
        result = train_autoencoder(model, tcfg, log=log)
        pilot = model.extract_pilot()
        save_autoencoder(path, model, _meta(cfg, scheme, bits, snr_db, tcfg, result, columns))
    else:
        raise ValueError(f"{scheme!r} is not a trainable scheme")
    write_history_csv(result.history, history_path)
    write_pilot_csv(pilot, pilot_path)
    return path, result


def describe(scheme, bits, snr_db):
    return f"{scheme} bits={Resolution.parse(bits).value} snr_db={format_snr(snr_db)}"
