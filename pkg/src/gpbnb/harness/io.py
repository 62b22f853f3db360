"""
Flat-file outputs.

Trace CSV columns (frozen)::

    t, iter, x, f_x, regret, cum_regret, delta, beta, region_radius, n_new

``x`` joins the coordinates with ``;``.  Every float is written with 17
significant digits so that files round-trip exactly and are byte-stable.

Plot-data files written by :func:`emit_plot_data`:

``regret_vs_t.csv``
    optimizer, replication, seed, t, regret
``cumulative_regret_vs_t.csv``
    optimizer, replication, seed, t, cum_regret
``log_regret_vs_rate_axis.csv``
    optimizer, replication, seed, t, rate_axis, log_regret, used.
    ``rate_axis`` is ``t / (ln t)^(d/4)``.  Every step gets a row; ``used``
    is false during burn-in (``ln t <= d/4``, axis ``nan``) and for zero
    regret (log ``nan``), matching what :func:`fit_rate` would drop or floor.
``region_radius_vs_iteration.csv``
    optimizer, replication, seed, iteration, delta, n_total, n_new, region_radius
``comparison.csv``
    optimizer, seed, t, regret, cum_regret; one row per trace step, sorted by key.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from ..bnb import RegretTrace, TraceRow
from ..errors import GpBnbError, InvalidInputError

__all__ = [
    "TRACE_COLUMNS",
    "SUMMARY_COLUMNS",
    "ITERATION_COLUMNS",
    "fmt",
    "write_trace_csv",
    "read_trace_csv",
    "write_iterations_csv",
    "write_summary_csv",
    "write_metadata",
    "emit_plot_data",
]

TRACE_COLUMNS = ("t", "iter", "x", "f_x", "regret", "cum_regret", "delta", "beta", "region_radius", "n_new")
ITERATION_COLUMNS = (
    "iter", "depth", "delta", "n_total", "n_new", "region_radius", "beta", "eps",
    "n_relevant", "next_radius", "maximizer_retained", "ucb_regret", "ucb_bound",
)
SUMMARY_COLUMNS = (
    "replication", "seed", "optimizer", "terminal_reason", "n_samples", "final_regret",
    "best_regret", "cumulative_regret", "envelope_violated", "error",
)
PLOT_FILES = {
    "regret_vs_t.csv": ("optimizer", "replication", "seed", "t", "regret"),
    "cumulative_regret_vs_t.csv": ("optimizer", "replication", "seed", "t", "cum_regret"),
    "log_regret_vs_rate_axis.csv": ("optimizer", "replication", "seed", "t", "rate_axis", "log_regret", "used"),
    "region_radius_vs_iteration.csv": (
        "optimizer", "replication", "seed", "iteration", "delta", "n_total", "n_new", "region_radius",
    ),
    "comparison.csv": ("optimizer", "seed", "t", "regret", "cum_regret"),
}


class OutputError(GpBnbError, OSError):
    """A file could not be written; the message names the path."""


def fmt(v):
    """Deterministic text form: 17 significant digits for floats."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    return format(v, ".17g")


def _write(path, header, rows):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([fmt(v) if not isinstance(v, str) else v for v in row])
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from None
    return path


def write_trace_csv(trace: RegretTrace, path):
    rows = (
        (r.t, r.iteration, ";".join(fmt(c) for c in r.point), r.f_x, r.regret, r.cum_regret,
         r.delta, r.beta, r.region_radius, r.n_new)
        for r in trace.rows
    )
    return _write(path, TRACE_COLUMNS, rows)


def read_trace_csv(path, optimizer="unknown") -> RegretTrace:
    """Inverse of :func:`write_trace_csv` (iteration records are not restored)."""
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = tuple(next(reader, ()))
            if header != TRACE_COLUMNS:
                raise InvalidInputError(f"{path}: header does not match the trace schema")
            rows = []
            for line in reader:
                t, it, x, fx, reg, cum, delta, beta, rad, n_new = line
                rows.append(TraceRow(
                    int(t), int(it), tuple(float(c) for c in x.split(";")), float(fx), float(reg),
                    float(cum), float(delta), float(beta), float(rad), int(n_new),
                ))
    except OSError as exc:
        raise OutputError(f"cannot read {path}: {exc.strerror or exc}") from None
    except ValueError as exc:
        if isinstance(exc, InvalidInputError):
            raise
        raise InvalidInputError(f"{path}: malformed row ({exc})") from None
    return RegretTrace(optimizer, rows)


def write_iterations_csv(trace: RegretTrace, path):
    rows = (
        (r.iteration, r.depth, r.delta, r.n_total, r.n_new, r.region_radius, r.beta, r.eps,
         r.n_relevant, r.next_radius, r.maximizer_retained, r.ucb_regret, r.ucb_bound)
        for r in trace.iterations
    )
    return _write(path, ITERATION_COLUMNS, rows)


def write_summary_csv(summaries, path):
    rows = (
        (s.replication, s.seed, s.optimizer, s.terminal_reason or "", s.n_samples, s.final_regret,
         s.best_regret, s.cumulative_regret, s.envelope_violated, s.error or "")
        for s in summaries
    )
    return _write(path, SUMMARY_COLUMNS, rows)


def write_metadata(path, config_dict, master_seed, rng, version, extra=None):
    """Config echo plus seed, RNG id and library version; no timestamps."""
    meta = {"config": config_dict, "master_seed": master_seed, "rng": rng, "version": version}
    if extra:
        meta.update(extra)
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from None
    return path


def emit_plot_data(summaries, out_dir, dim=1):
    """Write the five plot-data CSVs described in the module docstring.

    ``summaries`` are :class:`~gpbnb.harness.runner.RunSummary` objects
    carrying their traces.  Returns the written paths keyed by file name.
    """
    out_dir = Path(out_dir)
    data = {name: [] for name in PLOT_FILES}
    for s in summaries:
        tr = s.trace
        key = (s.optimizer, s.replication, s.seed)
        for r in tr.rows:
            data["regret_vs_t.csv"].append(key + (r.t, r.regret))
            data["cumulative_regret_vs_t.csv"].append(key + (r.t, r.cum_regret))
            past = math.log(r.t) > dim / 4.0
            axis = r.t / math.log(r.t) ** (dim / 4.0) if past else math.nan
            logr = math.log(r.regret) if r.regret > 0 else math.nan
            data["log_regret_vs_rate_axis.csv"].append(key + (r.t, axis, logr, past and r.regret > 0))
            data["comparison.csv"].append((s.optimizer, s.seed, r.t, r.regret, r.cum_regret))
        for it in tr.iterations:
            data["region_radius_vs_iteration.csv"].append(
                key + (it.iteration, it.delta, it.n_total, it.n_new, it.region_radius)
            )
    data["comparison.csv"].sort(key=lambda row: (row[0], row[1], row[2]))
    return {name: _write(out_dir / name, PLOT_FILES[name], rows) for name, rows in data.items()}
