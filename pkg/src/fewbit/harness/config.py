"""Experiment configuration.

Config files are flat ``key = value`` text, one entry per line, ``#`` starts
a comment.  Lists are comma separated.  Unknown keys are an error so typos
do not silently fall back to defaults.  See the README for the full key
list.
"""

import configparser
from dataclasses import dataclass, field, fields, replace
from typing import Optional

from ..quantization import Resolution

SCHEMES = ("blmmse-dft", "lmmse", "dnn-dft", "dnn-learned")
ANALYTIC_SCHEMES = ("blmmse-dft", "lmmse")
DNN_SCHEMES = ("dnn-dft", "dnn-learned")


@dataclass(frozen=True)
class SystemConfig:
    m: int = 4
    k: int = 4
    tau: int = 16
    n0: float = 1.0
    snr_db: tuple = (-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)

    def __post_init__(self):
        if min(self.m, self.k, self.tau) < 1:
            raise ValueError("m, k and tau must be positive")
        if not self.n0 > 0:
            raise ValueError("n0 must be positive")
        if not self.snr_db:
            raise ValueError("snr_db must list at least one point")


@dataclass(frozen=True)
class ExperimentConfig:
    system: SystemConfig = field(default_factory=SystemConfig)
    channel: str = "rayleigh"
    schemes: tuple = ("blmmse-dft", "lmmse")
    bits: tuple = ("1", "t", "2", "3")
    trials: int = 20_000
    seed: int = 0
    out: str = "results"
    checkpoint_dir: Optional[str] = None
    # DFT column selection for the BLMMSE baseline and the DNN-DFT pilot.
    dft_search: str = "auto"  # auto | exhaustive | random | none
    dft_search_trials: int = 1000
    dft_search_budget: int = 5000
    dft_random_candidates: int = 200
    dft_columns: Optional[tuple] = None
    # Training.
    train_samples: int = 200_000
    val_samples: int = 10_000
    batch_size: int = 256
    max_epochs: int = 50
    patience: int = 5
    lr: float = 1e-3
    # Smaller pilot step: straight-through gradients are biased, and a pilot
    # that moves at the regressor's rate keeps invalidating what it learned.
    pilot_lr: Optional[float] = 1e-4
    constraint: str = "per-column"
    pilot_init: str = "dft"  # dft | random (learned-pilot scheme only)
    ste_clipped: bool = True
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        for s in self.schemes:
            if s not in SCHEMES:
                raise ValueError(f"unknown scheme {s!r}; expected one of {SCHEMES}")
        for b in self.bits:
            Resolution.parse(b)
        if self.pilot_init not in ("dft", "random"):
            raise ValueError(f"unknown pilot_init {self.pilot_init!r}")
        if self.dft_search not in ("auto", "exhaustive", "random", "none"):
            raise ValueError(f"unknown dft_search mode {self.dft_search!r}")

    @property
    def quantized_bits(self):
        return tuple(b for b in self.bits if Resolution.parse(b) is not Resolution.UNQUANTIZED)

    def checkpoints(self):
        import os

        return self.checkpoint_dir or os.path.join(self.out, "checkpoints")

    def with_overrides(self, **kw):
        sys_keys = {f.name for f in fields(SystemConfig)}
        system = replace(self.system, **{k: v for k, v in kw.items() if k in sys_keys})
        rest = {k: v for k, v in kw.items() if k not in sys_keys}
        return replace(self, system=system, **rest)


def _floats(text):
    return tuple(float(x) for x in text.split(",") if x.strip())


def _tokens(text):
    return tuple(x.strip() for x in text.split(",") if x.strip())


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt_float(text):
    return None if text.strip().lower() in ("", "none") else float(text)


_PARSERS = {
    "m": int, "k": int, "tau": int, "n0": float, "snr_db": _floats,
    "channel": str.strip, "schemes": _tokens,
    "bits": lambda t: tuple(Resolution.parse(x).value for x in _tokens(t)),
    "trials": int, "seed": int, "out": str.strip, "checkpoint_dir": str.strip,
    "dft_search": str.strip, "dft_search_trials": int, "dft_search_budget": int,
    "dft_random_candidates": int,
    "dft_columns": lambda t: tuple(int(x) for x in _tokens(t)) or None,
    "train_samples": int, "val_samples": int, "batch_size": int, "max_epochs": int,
    "patience": int, "lr": float, "pilot_lr": _opt_float, "constraint": str.strip,
    "pilot_init": str.strip,
    "ste_clipped": _bool, "workers": int,
}


def parse_config_text(text):
    """Parse flat ``key = value`` text into keyword overrides."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    parser.optionxform = str
    parser.read_string("[experiment]\n" + text)
    out = {}
    for key, raw in parser["experiment"].items():
        if key not in _PARSERS:
            raise ValueError(f"unknown config key {key!r}")
        out[key] = _PARSERS[key](raw)
    return out


def load_config(path=None, **overrides):
    kw = {}
    if path is not None:
        with open(path) as fh:
            kw.update(parse_config_text(fh.read()))
    kw.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig().with_overrides(**kw)


def parse_assignment(text):
    """``key=value`` from the command line."""
    if "=" not in text:
        raise ValueError(f"expected key=value, got {text!r}")
    return parse_config_text(text.replace("=", " = ", 1))
