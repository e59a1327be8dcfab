"""Epoch loop shared by the regressor and the autoencoder.

Each epoch draws fresh channels and noise from streams keyed by
``(seed, "train", ..., epoch)``; the validation set comes from a separate
``"val"`` stream and is fixed for the whole run.  Reported MSEs are per
complex channel entry, ``||h - h_hat||^2 / (M K)``, i.e. twice the
real-feature mean squared error that is minimized.
"""

import csv
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import TrainingError
from .neural import Adam, backward
from .rng import derive_rng


@dataclass
class TrainConfig:
    snr_db: float = 10.0
    resolution: str = "1"
    channel: str = "rayleigh"
    n0: float = 1.0
    train_samples: int = 200_000
    val_samples: int = 10_000
    batch_size: int = 256
    max_epochs: int = 50
    patience: int = 5
    lr: float = 1e-3
    # Learning-rate halving on validation plateau; lr_patience=0 disables it.
    lr_decay: float = 0.5
    lr_patience: int = 2
    min_lr: float = 1e-5
    seed: int = 0
    ste_clipped: bool = True
    # Autoencoder only.
    pilot_lr: Optional[float] = None
    constraint: str = "per-column"
    freeze_pilot: bool = False

    def __post_init__(self):
        for name in ("train_samples", "val_samples", "batch_size", "max_epochs"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.patience < 0:
            raise ValueError("patience must be non-negative")


@dataclass
class EpochRecord:
    epoch: int
    train_mse: float
    val_mse: float
    best_val_mse: float
    lr: float
    extras: dict = field(default_factory=dict)


@dataclass
class TrainResult:
    history: list
    best_val_mse: float
    best_epoch: int

    def losses(self):
        return [(h.train_mse, h.val_mse) for h in self.history]


def train_streams(seed, epoch):
    return derive_rng(seed, "train", "channel", epoch), derive_rng(seed, "train", "noise", epoch)


def val_streams(seed):
    return derive_rng(seed, "val", "channel"), derive_rng(seed, "val", "noise")


def fit(params, batch_loss, validate, cfg, snapshot, restore, after_step=None,
        lr_overrides=None, epoch_extras=None, log=None):
    """Minibatch Adam with early stopping on validation MSE.

    ``batch_loss(rng_h, rng_n, size)`` builds the graph for one minibatch and
    returns the scalar loss tensor; ``validate()`` returns the validation MSE
    per complex entry.  The best-validation state (``snapshot()``) is
    restored before returning.
    """
    opt = Adam(params, lr=cfg.lr, lr_overrides=lr_overrides)
    n_batches = max(1, cfg.train_samples // cfg.batch_size)
    best, best_epoch, best_state = np.inf, 0, snapshot()
    since_best = since_decay = 0
    history = []
    for epoch in range(1, cfg.max_epochs + 1):
        rng_h, rng_n = train_streams(cfg.seed, epoch)
        total = 0.0
        try:
            for _ in range(n_batches):
                opt.zero_grad()
                loss = batch_loss(rng_h, rng_n, cfg.batch_size)
                backward(loss)
                opt.step()
                if after_step is not None:
                    after_step()
                total += float(loss.value)
            val = float(validate())
        except TrainingError as exc:
            raise TrainingError(f"training diverged in epoch {epoch}: {exc}") from exc
        if not np.isfinite(val):
            raise TrainingError(f"training diverged in epoch {epoch}: validation MSE is {val}")

        if val < best:
            best, best_epoch, best_state = val, epoch, snapshot()
            since_best = since_decay = 0
        else:
            since_best += 1
            since_decay += 1
        extras = epoch_extras() if epoch_extras is not None else {}
        history.append(EpochRecord(epoch, 2 * total / n_batches, val, best, opt.lr, extras))
        if log is not None:
            log(history[-1])
        if since_best > cfg.patience:
            break
        if cfg.lr_patience and since_decay >= cfg.lr_patience and opt.lr > cfg.min_lr:
            factor = max(cfg.lr_decay, cfg.min_lr / opt.lr)
            opt.lr *= factor
            opt.lr_overrides = {k: v * factor for k, v in opt.lr_overrides.items()}
            since_decay = 0
    restore(best_state)
    return TrainResult(history, best, best_epoch)


def write_history_csv(history, path):
    extra_keys = sorted({k for h in history for k in h.extras})
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["epoch", "train_mse", "val_mse"] + extra_keys)
        for h in history:
            writer.writerow([h.epoch, repr(h.train_mse), repr(h.val_mse)]
                            + [h.extras.get(k, "") for k in extra_keys])
