"""Autoencoder that learns the pilot jointly with the regressor.

    h^Re -> noiseless layer (weights = stacked pilot) -> + noise
         -> quantizer (straight-through gradient) -> receive -> regressor

The noiseless layer computes ``(sqrt(rho) Phi^ReIm kron I_M) h^Re`` with a
reshape and a ``2 tau x 2K`` matrix product per sample, so the pilot is the
only weight matrix and the Kronecker product is never formed.
"""

from collections import OrderedDict
from dataclasses import asdict

import numpy as np

from . import neural
from .channels import make_channel, real_stack
from .dnn import (
    Regressor,
    RegressorConfig,
    build_regressor,
    estimate,
    per_entry_mse,
    quantizer_for,
    rho_for,
)
from .errors import DimensionError
from .neural import checkpoint
from .neural.tensor import constant, op_result, parameter
from .pilots import (
    ConstraintKind,
    PowerConstraint,
    noiseless_real,
    pilot_from_real,
    project_real_pilot,
    real_embedding,
    reim_block,
)
from .quantization import Resolution
from .training import TrainConfig, fit, val_streams


def noiseless_forward(pilot_param, h_re, rho, m):
    """Tape op for the noiseless layer; gradients flow to the pilot and to ``h_re``."""
    h_re = h_re if isinstance(h_re, neural.Tensor) else constant(h_re)
    phi_re = pilot_param.value
    tau, k = phi_re.shape[0] // 2, phi_re.shape[1]
    batch = h_re.value.shape[0]
    if h_re.value.shape[-1] != 2 * m * k:
        raise DimensionError(f"noiseless layer expects width {2 * m * k}, got {h_re.value.shape[-1]}")
    y = noiseless_real(phi_re, rho, h_re.value, m)
    scale = np.sqrt(rho)

    def back(g):
        g3 = g.reshape(batch, 2 * tau, m)
        x3 = h_re.value.reshape(batch, 2 * k, m)
        d_block = scale * np.einsum("btm,bkm->tk", g3, x3)
        d11, d12 = d_block[:tau, :k], d_block[:tau, k:]
        d21, d22 = d_block[tau:, :k], d_block[tau:, k:]
        d_pilot = np.concatenate([d11 + d22, d21 - d12], axis=0)
        d_h = scale * np.matmul(reim_block(phi_re).T, g3).reshape(batch, -1)
        return d_pilot, d_h

    return op_result(y, (pilot_param, h_re), back, "noiseless")


def noise_forward(y0, n0, rng):
    """Add fresh ``N(0, N0/2)`` noise per real entry; the gradient passes unchanged."""
    noise = np.sqrt(n0 / 2) * rng.standard_normal(y0.value.shape)
    return add_constant(y0, noise)


def add_constant(x, c):
    return op_result(x.value + c, (x,), lambda g: (g,), "noise")


def quantization_forward(y, spec, clipped=True, surrogate=False):
    if surrogate:
        return neural.identity_surrogate(y, spec)
    return neural.quantize_ste(y, spec, clipped)


def receive_forward(r, width):
    if r.value.shape[-1] != width:
        raise DimensionError(f"receive layer expects width {width}, got {r.value.shape[-1]}")
    return r


class PilotAutoencoder:
    kind = "autoencoder"

    def __init__(self, regressor, pilot, rho, n0, resolution, constraint, ste_clipped=True):
        c = regressor.config
        phi_re = real_embedding(pilot).phi_re
        if phi_re.shape != (2 * c.tau, c.k):
            raise DimensionError(f"pilot shape {phi_re.shape} does not match tau={c.tau}, K={c.k}")
        self.regressor = regressor
        self.pilot_param = parameter(phi_re, "pilot.phi_re")
        self.rho = rho
        self.n0 = n0
        self.quantizer = quantizer_for(c.k, rho, n0, resolution)
        self.constraint = constraint
        self.ste_clipped = ste_clipped

    @property
    def config(self):
        return self.regressor.config

    def forward(self, h_re, noise, training=False, surrogate=False):
        c = self.config
        y0 = noiseless_forward(self.pilot_param, h_re, self.rho, c.m)
        y = add_constant(y0, noise)
        if self.quantizer.resolution is Resolution.ONE_BIT and not surrogate:
            # Signs ignore scale; without this the surrogate gradient claims
            # that more pilot power makes the codes larger.
            y = neural.rms_normalize(y, self.quantizer.sigma)
        r = quantization_forward(y, self.quantizer, self.ste_clipped, surrogate)
        return self.regressor.forward(receive_forward(r, c.in_width), training)

    def parameters(self, include_pilot=True):
        out = OrderedDict()
        if include_pilot:
            out[self.pilot_param.name] = self.pilot_param
        out.update(self.regressor.parameters())
        return out

    def project(self):
        project_real_pilot(self.pilot_param.value, self.constraint)

    def extract_pilot(self):
        return pilot_from_real(self.pilot_param.value)

    def column_norms(self):
        return np.sqrt(np.sum(self.pilot_param.value ** 2, axis=0))

    def state_dict(self):
        state = self.regressor.state_dict()
        state[self.pilot_param.name] = self.pilot_param.value.copy()
        return state

    def load_state_dict(self, state):
        self.regressor.load_state_dict(state)
        self.pilot_param.value = np.array(state[self.pilot_param.name], dtype=float)


def build_autoencoder(config, pilot, cfg: TrainConfig, rng=None, seed=None):
    seed = cfg.seed if seed is None else seed
    regressor = build_regressor(config, rng, seed=seed)
    rho = rho_for(cfg.snr_db, cfg.n0)
    constraint = PowerConstraint.for_pilot(cfg.constraint, config.tau, config.k)
    return PilotAutoencoder(regressor, pilot, rho, cfg.n0, cfg.resolution, constraint, cfg.ste_clipped)


def train_autoencoder(model, cfg: TrainConfig, log=None):
    """Joint pilot/estimator training with projection after every step."""
    c = model.config
    channel = make_channel(cfg.channel, c.m, c.k)
    width = 2 * c.tau * c.m
    model.project()

    vh, vn = val_streams(cfg.seed)
    val_h = real_stack(channel.sample_vectors(vh, cfg.val_samples))
    val_noise = np.sqrt(cfg.n0 / 2) * vn.standard_normal((cfg.val_samples, width))

    def batch_loss(rng_h, rng_n, size):
        h = real_stack(channel.sample_vectors(rng_h, size))
        noise = np.sqrt(cfg.n0 / 2) * rng_n.standard_normal((size, width))
        return neural.mse_loss(model.forward(h, noise, training=True), h)

    def validate():
        return per_entry_mse(model.forward(val_h, val_noise, training=False).value, val_h)

    overrides = {}
    if cfg.pilot_lr is not None and not cfg.freeze_pilot:
        overrides[model.pilot_param.name] = cfg.pilot_lr
    after = None if cfg.freeze_pilot else model.project

    def extras():
        return {"pilot_column_norms": " ".join(f"{v:.6f}" for v in model.column_norms())}

    return fit(model.parameters(include_pilot=not cfg.freeze_pilot), batch_loss, validate, cfg,
               model.state_dict, model.load_state_dict, after_step=after, lr_overrides=overrides,
               epoch_extras=extras, log=log)


def save_autoencoder(path, model, meta=None):
    c = model.config
    meta = dict(meta or {})
    meta.update({"constraint": model.constraint.kind.value, "constraint_limit": model.constraint.limit,
                 "rho": model.rho, "n0": model.n0, "resolution": model.quantizer.resolution.value})
    header = {"kind": model.kind, "dims": asdict(c), "layers": model.regressor.layer_list(), "meta": meta}
    checkpoint.save(path, header, model.state_dict())


def load_autoencoder(path):
    header, arrays = checkpoint.load(path)
    if header.get("kind") != "autoencoder":
        raise checkpoint.CheckpointError(f"{path}: not an autoencoder checkpoint")
    meta = header["meta"]
    config = RegressorConfig(**header["dims"])
    regressor = Regressor(config, np.random.default_rng(0))
    constraint = PowerConstraint(ConstraintKind(meta["constraint"]), meta["constraint_limit"])
    model = PilotAutoencoder(regressor, pilot_from_real(arrays["pilot.phi_re"]), meta["rho"], meta["n0"],
                             meta["resolution"], constraint)
    model.load_state_dict(arrays)
    return model, meta


def estimate_with(model, codes_re):
    return estimate(model.regressor, codes_re)
