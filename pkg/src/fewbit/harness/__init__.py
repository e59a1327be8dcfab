"""Experiment orchestration: configs, sweeps, DFT search and plot data."""

from .config import ExperimentConfig, SystemConfig, load_config, parse_config_text
from .plotdata import emit_plot_data
from .search import (
    BlmmseEvaluator,
    SearchResult,
    analytic_one_bit_evaluator,
    dft_exhaustive_search,
    dft_random_search,
)
from .sweep import ResultRecord, mse_per_entry, read_results_csv, run_mse_sweep, write_results_csv

__all__ = [
    "BlmmseEvaluator", "ExperimentConfig", "ResultRecord", "SearchResult", "SystemConfig",
    "analytic_one_bit_evaluator", "dft_exhaustive_search", "dft_random_search", "emit_plot_data",
    "load_config", "mse_per_entry", "parse_config_text", "read_results_csv", "run_mse_sweep",
    "write_results_csv",
]
