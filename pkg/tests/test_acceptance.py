"""End-to-end acceptance checks.

Each test prints one ``criterion N: PASS|FAIL`` line with the measured
numbers, then asserts.  Criteria 6-8 train networks and take tens of
minutes on a single CPU core; they are marked ``slow``.
"""

import math
import time

import numpy as np
import pytest

from fewbit import neural
from fewbit.cli import main
from fewbit.dnn import RegressorConfig, build_regressor, load_regressor, save_regressor
from fewbit.harness.config import load_config
from fewbit.harness.search import BlmmseEvaluator, dft_exhaustive_search
from fewbit.harness.sweep import run_mse_sweep
from fewbit.harness.training_cells import train_cell
from fewbit.linear import (
    approx_cov_r,
    arcsine_cov_r,
    blmmse_denominator,
    blmmse_general,
    blmmse_orthogonal,
    cov_y,
)
from fewbit.neural import checkpoint
from fewbit.neural.tensor import parameter
from fewbit.pilots import dft_pilot
from fewbit.quantization import QuantizerSpec, empirical_distortion
from fewbit.rng import derive_rng


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'} - {detail}")
    return emit


def test_criterion_1_quantizer_distortion(report):
    start = time.perf_counter()
    rows = {"1": 1 - 2 / np.pi, "t": 0.1902, "2": 0.1188, "3": 0.0374, "4": 0.0115}
    measured = {b: empirical_distortion(QuantizerSpec(b), 1_000_000, derive_rng(0, "accept", 1, b))
                for b in rows}
    elapsed = time.perf_counter() - start
    rel = {b: abs(measured[b] - rows[b]) / rows[b] for b in rows}
    ok = all(r <= 0.05 for r in rel.values()) and elapsed < 10
    report(1, ok, " ".join(f"{b}:{measured[b]:.4f}({rel[b]:.1%})" for b in rows) + f" in {elapsed:.1f}s")
    assert ok


def test_criterion_2_lmmse_analytic(tmp_path, report):
    start = time.perf_counter()
    cfg = load_config(None, m=4, k=2, tau=8, snr_db=(0.0, 10.0, 20.0), bits=("inf",), schemes=("lmmse",),
                      trials=10_000, out=str(tmp_path), seed=2)
    records = run_mse_sweep(cfg)
    elapsed = time.perf_counter() - start
    parts, ok = [], elapsed < 30
    for r in records:
        predicted = 1 / (1 + 10 ** (r.snr_db / 10) * 8)
        z = abs(r.mse - predicted) / r.stderr
        ok &= z <= 3
        parts.append(f"{r.snr_db:g}dB {r.mse:.5f} vs {predicted:.5f} ({z:.1f} se)")
    report(2, ok, "; ".join(parts) + f" in {elapsed:.1f}s")
    assert ok


def test_criterion_3_blmmse_derivation_chain(report):
    start = time.perf_counter()
    tau, k, m = 8, 2, 2
    rng = derive_rng(0, "accept", 3)
    worst = 0.0
    for _ in range(100):
        cols = sorted(rng.choice(tau, size=k, replace=False))
        pilot = dft_pilot(tau, cols)
        rho = float(10 ** rng.uniform(-1, 2))
        n0 = float(rng.uniform(0.5, 2.0))
        eta = float(rng.uniform(0.01, 0.4))
        r = rng.standard_normal(tau * m) + 1j * rng.standard_normal(tau * m)
        c_r = approx_cov_r(cov_y(pilot, rho, m, None, n0), eta)
        general = blmmse_general(r, pilot, rho, None, c_r, eta, with_covariance=False).estimate
        simple = blmmse_orthogonal(r, pilot, rho, n0, eta)
        worst = max(worst, np.max(np.abs(general - simple)) / np.max(np.abs(simple)))
    denom = blmmse_denominator(1.0, 1.0, 0.1188, 4, 16)
    elapsed = time.perf_counter() - start
    ok = worst < 1e-9 and abs(denom - 15.5744) < 1e-9 and elapsed < 5
    report(3, ok, f"max relative gap {worst:.2e}, denominator {denom:.6f}, {elapsed:.2f}s")
    assert ok


def test_criterion_4_arcsine_law(report):
    rng = derive_rng(0, "accept", 4)
    a = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    c_y = a @ a.conj().T + 0.5 * np.eye(6)
    c_r = arcsine_cov_r(c_y)
    diag_err = np.max(np.abs(np.diag(c_r) - 1))
    scale_err = np.max(np.abs(arcsine_cov_r(7.3 * c_y) - c_r))
    off = arcsine_cov_r(np.array([[1.0, 0.5], [0.5, 1.0]], dtype=complex))[0, 1]
    off_err = abs(off - 1 / 3)
    ok = diag_err < 1e-12 and scale_err < 1e-12 and off_err < 1e-12
    report(4, ok, f"diag err {diag_err:.1e}, scale err {scale_err:.1e}, off-diagonal {off.real:.15f}")
    assert ok


def test_criterion_5_autodiff(report):
    start = time.perf_counter()
    rng = np.random.default_rng(5)
    worst = {}
    width, batch = 8, 6
    target = rng.standard_normal((batch, width))
    dense = neural.DenseLayer(width, width, rng)
    bn = neural.BatchNormLayer(width)
    bn.gamma.value = rng.uniform(0.5, 1.5, width)
    bn.beta.value = rng.standard_normal(width)
    bn.running_var[:] = rng.uniform(0.5, 2.0, width)
    x = parameter(rng.standard_normal((batch, width)))
    skip = parameter(rng.standard_normal((batch, width)))
    spec = QuantizerSpec("2", 1.3)
    cases = {
        "dense": (lambda: neural.mse_loss(dense(x), target), [x, dense.weights, dense.bias]),
        "relu": (lambda: neural.mse_loss(neural.relu(x), target), [x]),
        "tanh": (lambda: neural.mse_loss(neural.tanh(x), target), [x]),
        "batchnorm": (lambda: neural.mse_loss(neural.batchnorm(x, bn, False), target), [x, bn.gamma, bn.beta]),
        "residual": (lambda: neural.mse_loss(neural.residual_add(skip, x), target), [x, skip]),
        "quantizer": (lambda: neural.mse_loss(neural.identity_surrogate(x, spec), target), [x]),
        "mse": (lambda: neural.mse_loss(x, target), [x]),
    }
    for name, (fn, leaves) in cases.items():
        worst[name] = neural.finite_diff_check(fn, leaves)

    config = RegressorConfig(4, 2, 2)
    model = build_regressor(config, seed=5)
    for layer in (model.bn1, model.bn2):
        layer.running_mean[:] = rng.standard_normal(layer.running_mean.shape) * 0.1
        layer.running_var[:] = rng.uniform(0.5, 2.0, layer.running_var.shape)
    codes = parameter(rng.standard_normal((batch, config.in_width)))
    h = rng.standard_normal((batch, config.out_width))

    def full():
        return neural.mse_loss(model.forward(neural.identity_surrogate(codes, spec), training=False), h)

    worst["regressor"] = neural.finite_diff_check(full, [codes] + list(model.parameters().values()))
    elapsed = time.perf_counter() - start
    ok = max(worst.values()) < 1e-4 and elapsed < 60
    report(5, ok, " ".join(f"{n}:{v:.1e}" for n, v in worst.items()) + f" in {elapsed:.1f}s")
    assert ok


def _ratio_line(label, a, b):
    return f"{label} {a.mse:.5f}/{b.mse:.5f}={a.mse / b.mse:.3f}"


@pytest.mark.slow
def test_criterion_6_unquantized_regressor(tmp_path, report):
    cfg = load_config(None, m=2, k=2, tau=4, snr_db=(10.0,), bits=("inf",), schemes=("dnn-dft",),
                      trials=20_000, out=str(tmp_path), train_samples=200_000, max_epochs=30,
                      dft_search="none", seed=6)
    train_cell(cfg, "dnn-dft", "inf", 10.0)
    (rec,) = run_mse_sweep(cfg)
    optimum = 1 / (1 + 10 * 4)
    ok = rec.mse <= 1.10 * optimum
    report(6, ok, f"DNN {rec.mse:.5f} vs LMMSE {optimum:.5f} (ratio {rec.mse / optimum:.3f}, gate 1.10)")
    assert ok


@pytest.mark.slow
def test_criterion_7_rayleigh_desk_scale(tmp_path, report):
    cfg = load_config(None, m=4, k=4, tau=16, snr_db=(0.0, 10.0), bits=("1", "2"),
                      schemes=("blmmse-dft", "dnn-dft", "dnn-learned"), trials=20_000, out=str(tmp_path),
                      train_samples=200_000, max_epochs=30, dft_search="exhaustive",
                      dft_search_trials=1000, seed=7)
    for bits in cfg.bits:
        for snr in cfg.system.snr_db:
            for scheme in ("dnn-dft", "dnn-learned"):
                train_cell(cfg, scheme, bits, snr)
    records = {(r.scheme, r.bits, r.snr_db): r for r in run_mse_sweep(cfg)}
    ok, parts = True, []
    for bits in cfg.bits:
        for snr in cfg.system.snr_db:
            bl, dnn, ae = (records[(s, bits, snr)] for s in ("blmmse-dft", "dnn-dft", "dnn-learned"))
            ok &= dnn.mse <= 1.05 * bl.mse and ae.mse <= 1.02 * dnn.mse
            parts.append(f"[{bits}-bit {snr:g}dB {_ratio_line('dnn/blmmse', dnn, bl)} "
                         f"{_ratio_line('ae/dnn', ae, dnn)}]")
    report(7, ok, " ".join(parts) + " (gates 1.05, 1.02)")
    assert ok


@pytest.mark.slow
def test_criterion_8_los_superiority(tmp_path, report):
    cfg = load_config(None, m=4, k=8, tau=16, channel="los", snr_db=(30.0,), bits=("t",),
                      schemes=("blmmse-dft", "dnn-dft"), trials=20_000, out=str(tmp_path),
                      train_samples=200_000, max_epochs=30, dft_search="random",
                      dft_random_candidates=200, dft_search_trials=1000, seed=8)
    train_cell(cfg, "dnn-dft", "t", 30.0)
    bl, dnn = sorted(run_mse_sweep(cfg), key=lambda r: r.scheme)
    gap = bl.mse - dnn.mse
    se = math.hypot(bl.stderr, dnn.stderr)
    ok = gap >= 3 * se
    report(8, ok, f"BLMMSE {bl.mse:.5f} DNN {dnn.mse:.5f} gap {gap / se:.1f} standard errors "
                  f"({10 * math.log10(bl.mse / dnn.mse):.2f} dB)")
    assert ok


def test_criterion_9_dft_search(report):
    evaluator = BlmmseEvaluator(4, 4, 16, 10.0, "1", trials=500, seed=9)
    result = dft_exhaustive_search(16, 4, evaluator)
    ok = result.count == 1820 and result.spread() > 0
    report(9, ok, f"{result.count} subsets, best {list(result.best)} {result.best_mse:.4f}, "
                  f"spread {result.spread():.4f}")
    assert ok


def test_criterion_10_determinism(tmp_path, report):
    conf = tmp_path / "exp.cfg"
    conf.write_text("m = 2\nk = 2\ntau = 8\nsnr_db = -10, 0, 10, 20\nbits = 1, t, 2\n"
                    "schemes = blmmse-dft, lmmse\ntrials = 2000\ndft_search_trials = 200\n")
    outputs = []
    for run in ("a", "b"):
        out = tmp_path / run
        assert main(["simulate", "--config", str(conf), "--seed", "10", "--out", str(out)]) == 0
        files = sorted(p for p in out.rglob("*") if p.is_file())
        outputs.append({p.relative_to(out): p.read_bytes() for p in files})
    same_outputs = outputs[0] == outputs[1] and len(outputs[0]) > 2

    model = build_regressor(RegressorConfig(4, 2, 2), seed=10)
    first = tmp_path / "m1.qmc"
    second = tmp_path / "m2.qmc"
    save_regressor(str(first), model, dft_pilot(4, [0, 2]), {"note": "round trip"})
    loaded, pilot, meta = load_regressor(str(first))
    save_regressor(str(second), loaded, pilot, meta)
    _, a = checkpoint.load(str(first))
    same_arrays = all(np.array_equal(a[key], value) for key, value in loaded.state_dict().items())
    same_bytes = first.read_bytes() == second.read_bytes()
    ok = same_outputs and same_arrays and same_bytes
    report(10, ok, f"{len(outputs[0])} simulate files identical: {same_outputs}; "
                   f"checkpoint arrays exact: {same_arrays}; checkpoint bytes identical: {same_bytes}")
    assert ok
