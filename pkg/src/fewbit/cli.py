"""Command-line entry point: ``fewbit <command> [options]``."""

import argparse
import csv
import os
import sys

from .harness.config import DNN_SCHEMES, load_config, parse_assignment
from .harness.plotdata import emit_plot_data
from .harness.search import SearchResult
from .harness.sweep import (
    analytic_schemes,
    format_snr,
    read_results_csv,
    run_mse_sweep,
    search_dft,
)
from .harness.training_cells import describe, train_cell
from .quantization import Resolution


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value config file")
    common.add_argument("--seed", type=int, help="master seed (overrides the config)")
    common.add_argument("--out", help="output directory (overrides the config)")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config key; may be repeated")

    cells = argparse.ArgumentParser(add_help=False)
    cells.add_argument("--snr", type=float, action="append", help="restrict to this SNR (dB); repeatable")
    cells.add_argument("--bits", action="append", help="restrict to this resolution token; repeatable")

    p = argparse.ArgumentParser(prog="fewbit", description="Few-bit MIMO channel estimation experiments.")
    sub = p.add_subparsers(dest="command", required=True)
    sim = sub.add_parser("simulate", parents=[common],
                         help="Monte-Carlo sweep of the configured schemes; writes CSV and plot data")
    sim.add_argument("--analytic-only", action="store_true",
                     help="skip DNN schemes (no checkpoints needed)")
    sub.add_parser("train-estimator", parents=[common, cells], help="train DNN regressors on DFT pilots")
    sub.add_parser("train-autoencoder", parents=[common, cells],
                   help="jointly train pilots and regressors")
    sub.add_parser("search-dft", parents=[common, cells], help="search DFT column subsets per cell")
    ev = sub.add_parser("eval", parents=[common], help="sweep only the DNN schemes from checkpoints")
    ev.add_argument("--csv", help="output CSV (default <out>/eval.csv)")
    pd = sub.add_parser("plot-data", parents=[common], help="emit plot data from a results CSV")
    pd.add_argument("--input", help="results CSV (default <out>/results.csv)")
    return p


def _config(args):
    overrides = {}
    for item in args.set:
        overrides.update(parse_assignment(item))
    overrides["seed"] = args.seed
    overrides["out"] = args.out
    return load_config(args.config, **overrides)


def _cell_grid(cfg, args):
    bits = [Resolution.parse(b).value for b in (args.bits or cfg.bits)]
    snrs = [float(s) for s in (args.snr or cfg.system.snr_db)]
    return [(b, s) for b in bits for s in snrs]


def _log(prefix):
    def log(rec):
        print(f"{prefix} epoch {rec.epoch}: train {rec.train_mse:.6g} val {rec.val_mse:.6g} lr {rec.lr:g}",
              flush=True)
    return log


def cmd_simulate(cfg, args):
    os.makedirs(cfg.out, exist_ok=True)
    schemes = analytic_schemes(cfg) if args.analytic_only else list(cfg.schemes)
    records = run_mse_sweep(cfg, schemes=schemes, csv_path=os.path.join(cfg.out, "results.csv"))
    emit_plot_data(records, os.path.join(cfg.out, "plots"))
    _print_records(records)


def _print_records(records):
    for r in records:
        print(f"{r.scheme:12s} bits={r.bits:3s} snr={format_snr(r.snr_db):>5s} "
              f"mse={r.mse:.6g} stderr={r.stderr:.2g}")


def _train(cfg, args, scheme):
    for bits, snr in _cell_grid(cfg, args):
        label = describe(scheme, bits, snr)
        path, result = train_cell(cfg, scheme, bits, snr, log=_log(label))
        print(f"{label}: best val mse {result.best_val_mse:.6g} (epoch {result.best_epoch}) -> {path}")


def cmd_search(cfg, args):
    os.makedirs(cfg.out, exist_ok=True)
    s = cfg.system
    for bits, snr in _cell_grid(cfg, args):
        res: SearchResult = search_dft(cfg, bits, snr)
        name = f"dft_search_{cfg.channel}_t{s.tau}_m{s.m}_k{s.k}_b{bits}_snr{format_snr(snr)}.csv"
        with open(os.path.join(cfg.out, name), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["columns", "mse"])
            for cols, mse in res.table:
                w.writerow([" ".join(map(str, cols)), repr(mse)])
        print(f"bits={bits} snr={format_snr(snr)}: {res.count} subsets, best {list(res.best)} "
              f"mse {res.best_mse:.6g}, spread {res.spread():.3g}")


def cmd_eval(cfg, args):
    os.makedirs(cfg.out, exist_ok=True)
    schemes = [s for s in cfg.schemes if s in DNN_SCHEMES]
    if not schemes:
        raise SystemExit("eval: no DNN schemes in the configuration")
    records = run_mse_sweep(cfg, schemes=schemes, csv_path=args.csv or os.path.join(cfg.out, "eval.csv"))
    _print_records(records)


def cmd_plot(cfg, args):
    records = read_results_csv(args.input or os.path.join(cfg.out, "results.csv"))
    for path in emit_plot_data(records, os.path.join(cfg.out, "plots")):
        print(path)


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        cfg = _config(args)
    except (ValueError, OSError) as exc:
        print(f"fewbit: config error: {exc}", file=sys.stderr)
        return 2
    if args.command == "simulate":
        cmd_simulate(cfg, args)
    elif args.command == "train-estimator":
        _train(cfg, args, "dnn-dft")
    elif args.command == "train-autoencoder":
        _train(cfg, args, "dnn-learned")
    elif args.command == "search-dft":
        cmd_search(cfg, args)
    elif args.command == "eval":
        cmd_eval(cfg, args)
    elif args.command == "plot-data":
        cmd_plot(cfg, args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
