"""Feed-forward regressor used as a nonlinear MMSE channel estimator.

Architecture for ``n = 2*tau*M`` inputs and ``2*K*M`` outputs::

    x -> Dense(n) -> BN -> ReLU -> Dense(n) -> BN -> ReLU -> (+ x)
      -> Dense(n) -> Tanh -> Dense(2KM)

Inputs are real-stacked quantizer codes, outputs the real-stacked channel.
"""

from dataclasses import asdict, dataclass

import numpy as np

from . import neural
from .channels import make_channel, real_stack
from .errors import DimensionError
from .linear import db_to_linear
from .neural import BatchNormLayer, DenseLayer, NetworkModel, checkpoint
from .neural.tensor import constant
from .pilots import PilotMatrix, noiseless_real, pilot_from_real, real_embedding
from .quantization import QuantizerSpec, input_sigma, quantize_codes
from .rng import derive_rng
from .training import TrainConfig, fit, val_streams


@dataclass(frozen=True)
class RegressorConfig:
    tau: int
    m: int
    k: int
    batchnorm: bool = True
    residual: bool = True
    bn_momentum: float = 0.1
    bn_eps: float = 1e-5

    def __post_init__(self):
        if min(self.tau, self.m, self.k) < 1:
            raise DimensionError("tau, M and K must be positive")

    @property
    def in_width(self):
        return 2 * self.tau * self.m

    @property
    def out_width(self):
        return 2 * self.k * self.m

    def widths(self):
        n = self.in_width
        return [n, n, n, n, self.out_width]

    def parameter_count(self):
        n, out = self.in_width, self.out_width
        count = 3 * n * n + n * out + 3 * n + out
        if self.batchnorm:
            count += 2 * 2 * n
        return count


class Regressor(NetworkModel):
    kind = "regressor"

    def __init__(self, config, rng):
        super().__init__()
        self.config = config
        n = config.in_width
        self.dense1 = DenseLayer(n, n, rng, "dense1")
        self.dense2 = DenseLayer(n, n, rng, "dense2")
        self.dense3 = DenseLayer(n, n, rng, "dense3")
        self.out = DenseLayer(n, config.out_width, rng, "out")
        self.layers = [self.dense1, self.dense2, self.dense3, self.out]
        self.bn1 = self.bn2 = None
        if config.batchnorm:
            self.bn1 = BatchNormLayer(n, config.bn_momentum, config.bn_eps, "bn1")
            self.bn2 = BatchNormLayer(n, config.bn_momentum, config.bn_eps, "bn2")
            self.layers = [self.dense1, self.bn1, self.dense2, self.bn2, self.dense3, self.out]

    def forward(self, x, training=False):
        x = x if isinstance(x, neural.Tensor) else constant(x)
        if x.value.shape[-1] != self.config.in_width:
            raise DimensionError(f"regressor expects width {self.config.in_width}, got {x.value.shape[-1]}")
        z = self.dense1(x)
        if self.bn1 is not None:
            z = self.bn1(z, training)
        z = neural.relu(z)
        z = self.dense2(z)
        if self.bn2 is not None:
            z = self.bn2(z, training)
        z = neural.relu(z)
        if self.config.residual:
            z = neural.residual_add(x, z)
        z = neural.tanh(self.dense3(z))
        return self.out(z)


def build_regressor(config, rng=None, seed=0):
    if rng is None:
        rng = derive_rng(seed, "init", "regressor")
    return Regressor(config, rng)


def estimate(model, codes_re):
    """Eval-mode forward pass on a ``(batch, 2 tau M)`` array of codes."""
    codes_re = np.atleast_2d(np.asarray(codes_re, dtype=float))
    return model.forward(constant(codes_re), training=False).value


def quantizer_for(k, rho, n0, resolution):
    return QuantizerSpec(resolution, input_sigma(k, rho, n0))


def rho_for(snr_db, n0):
    # Identity C_h and white noise: rho = SNR * N0.
    return float(db_to_linear(snr_db) * n0)


def generate_training_pair(channel, pilot, rho, n0, spec, rng, batch=1, noise_rng=None):
    """Draw ``(codes^Re, h^Re)`` pairs, shapes ``(batch, 2 tau M)`` / ``(batch, 2 M K)``."""
    noise_rng = rng if noise_rng is None else noise_rng
    phi_re = real_embedding(pilot).phi_re
    h_re = real_stack(channel.sample_vectors(rng, batch))
    y0 = noiseless_real(phi_re, rho, h_re, channel.m)
    y = y0 + np.sqrt(n0 / 2) * noise_rng.standard_normal(y0.shape)
    return quantize_codes(y, spec), h_re


def train_regressor(model, pilot, cfg: TrainConfig, log=None):
    """Fit ``model`` on streamed pairs for a fixed pilot; returns :class:`TrainResult`."""
    c = model.config
    if not isinstance(pilot, PilotMatrix):
        pilot = PilotMatrix(pilot)
    if pilot.phi.shape != (c.tau, c.k):
        raise DimensionError(f"pilot shape {pilot.phi.shape} != ({c.tau}, {c.k})")
    channel = make_channel(cfg.channel, c.m, c.k)
    rho = rho_for(cfg.snr_db, cfg.n0)
    spec = quantizer_for(c.k, rho, cfg.n0, cfg.resolution)

    vh, vn = val_streams(cfg.seed)
    val_x, val_h = generate_training_pair(channel, pilot, rho, cfg.n0, spec, vh, cfg.val_samples, vn)

    def batch_loss(rng_h, rng_n, size):
        x, h = generate_training_pair(channel, pilot, rho, cfg.n0, spec, rng_h, size, rng_n)
        return neural.mse_loss(model.forward(constant(x), training=True), h)

    def validate():
        return per_entry_mse(estimate(model, val_x), val_h)

    return fit(model.parameters(), batch_loss, validate, cfg, model.state_dict, model.load_state_dict, log=log)


def per_entry_mse(pred_re, h_re):
    """``||h - h_hat||^2 / (M K)`` averaged over the batch, from real-stacked arrays."""
    return float(2 * np.mean((pred_re - h_re) ** 2))


def save_regressor(path, model, pilot=None, meta=None):
    header = {"kind": model.kind, "dims": asdict(model.config), "layers": model.layer_list(),
              "meta": dict(meta or {})}
    arrays = model.state_dict()
    if pilot is not None:
        arrays["pilot.phi_re"] = real_embedding(pilot).phi_re
    checkpoint.save(path, header, arrays)


def load_regressor(path):
    """Returns ``(model, pilot_or_None, meta)``."""
    header, arrays = checkpoint.load(path)
    if header.get("kind") not in ("regressor", "autoencoder"):
        raise checkpoint.CheckpointError(f"{path}: unexpected model kind {header.get('kind')!r}")
    config = RegressorConfig(**header["dims"])
    model = Regressor(config, np.random.default_rng(0))
    model.load_state_dict(arrays)
    pilot = pilot_from_real(arrays["pilot.phi_re"]) if "pilot.phi_re" in arrays else None
    return model, pilot, header.get("meta", {})
