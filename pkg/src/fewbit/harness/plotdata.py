"""Plot-ready text files: one gnuplot series per (scheme, resolution).

Each series file holds whitespace-separated ``snr_db mse stderr`` rows in
ascending SNR, preceded by ``#`` comment lines.  A ``plot.gp`` script that
draws every series on a log-scale MSE axis and the master CSV are written
alongside.
"""

import math
import os

from ..errors import PreconditionError
from .sweep import ResultRecord, format_snr, write_results_csv


def series_name(record):
    return f"{record.channel}_{record.scheme}_b{record.bits}"


def group_series(records):
    """``[(name, [records sorted by snr])]`` in (scheme, bits, channel) order."""
    groups = {}
    for r in sorted(records, key=ResultRecord.sort_key):
        groups.setdefault(series_name(r), []).append(r)
    keys = sorted(groups, key=lambda n: groups[n][0].sort_key()[:2] + (groups[n][0].channel,))
    return [(name, groups[name]) for name in keys]


def _fmt(x):
    return "nan" if math.isnan(x) else repr(float(x))


def emit_plot_data(records, path, csv_name="results.csv"):
    """Write series files, ``plot.gp`` and the master CSV into directory ``path``.

    Returns the list of written file paths.
    """
    records = list(records)
    if not records:
        raise PreconditionError("no records to plot")
    os.makedirs(path, exist_ok=True)
    written = []
    plot_lines = []
    for name, rows in group_series(records):
        fname = f"{name}.dat"
        first = rows[0]
        with open(os.path.join(path, fname), "w") as fh:
            fh.write(f"# scheme={first.scheme} bits={first.bits} channel={first.channel} "
                     f"tau={first.tau} m={first.m} k={first.k} trials={first.trials} seed={first.seed}\n")
            fh.write("# logscale y\n")
            fh.write("# snr_db mse stderr\n")
            for r in rows:
                fh.write(f"{format_snr(r.snr_db)} {_fmt(r.mse)} {_fmt(r.stderr)}\n")
        written.append(os.path.join(path, fname))
        plot_lines.append(f"'{fname}' using 1:2 with linespoints title '{first.scheme} b={first.bits}'")
    script = os.path.join(path, "plot.gp")
    with open(script, "w") as fh:
        fh.write("set logscale y\nset xlabel 'SNR (dB)'\nset ylabel 'MSE per entry'\n")
        fh.write("plot " + ", \\\n     ".join(plot_lines) + "\n")
    written.append(script)
    master = os.path.join(path, csv_name)
    write_results_csv(sorted(records, key=ResultRecord.sort_key), master)
    written.append(master)
    return written
