"""
Seeded batch execution of experiment configs.

Replication ``i`` uses the seed ``SeedSequence([master, i])`` reduced to a
64-bit integer, for the objective draw and anything random in it.  Each
replication is self-contained, so they may run on a thread pool; results are
folded in replication order, which keeps every output file a pure function
of the config.

Output layout under ``config.output``::

    metadata.json
    summary.csv
    traces/<optimizer>/rep_<i>.csv
    iterations/<optimizer>/rep_<i>.csv
    plots/*.csv                       (see :func:`gpbnb.harness.io.emit_plot_data`)
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import __version__
from ..baselines import LipschitzConfig, UcbBaselineConfig, lipschitz_run, plain_ucb_run
from ..bnb import ERROR, BnbConfig, RegretTrace, run
from ..lattice import DyadicLattice
from ..sampler import RNG_ALGORITHM, make_rng, sample_gp_prior, synthetic_peak
from . import io
from .config import ExperimentConfig, OptimizerSpec
from .metrics import envelope_violated, tail_increase_fraction

__all__ = [
    "derive_seed",
    "RunSummary",
    "ExperimentResult",
    "build_objective",
    "run_optimizer",
    "run_experiment",
    "compare",
]


def derive_seed(master, replication):
    return int(np.random.SeedSequence([int(master), int(replication)]).generate_state(1, np.uint64)[0])


@dataclass
class RunSummary:
    replication: int
    seed: int
    optimizer: str
    terminal_reason: str | None
    n_samples: int
    final_regret: float
    best_regret: float
    cumulative_regret: float
    envelope_violated: bool | None
    error: str | None
    trace: RegretTrace = field(repr=False)

    @property
    def iterations(self):
        """``(l, N_l, dN_l, rho_l, eps_l)`` tuples."""
        return [(it.iteration, it.n_total, it.n_new, it.region_radius, it.eps) for it in self.trace.iterations]

    @classmethod
    def from_trace(cls, replication, seed, trace, envelope=None):
        r = trace.regrets
        return cls(
            replication, seed, trace.optimizer, trace.terminal_reason, len(trace),
            float(r[-1]) if len(r) else math.nan,
            float(r.min()) if len(r) else math.nan,
            float(trace.cumulative[-1]) if len(r) else 0.0,
            envelope, trace.error, trace,
        )


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    summaries: list
    out_dir: Path | None

    @property
    def failed(self):
        return [s for s in self.summaries if s.error]

    def by_optimizer(self, name):
        return [s for s in self.summaries if s.optimizer == name]


def build_objective(config: ExperimentConfig, lattice: DyadicLattice, seed):
    spec = config.objective
    if spec.kind == "gp_draw":
        return sample_gp_prior(config.kernel, lattice, seed, jitter=config.jitter)
    dom = config.domain
    if spec.x_M is None:
        x_M = make_rng(seed).uniform(dom.lo + spec.rho0, dom.hi - spec.rho0)
    else:
        x_M = np.asarray(spec.x_M, dtype=float)
    obj = synthetic_peak(dom, x_M, spec.f_M, spec.c1, spec.c2, spec.rho0, lattice)
    obj.provenance["seed"] = int(seed)
    return obj


def run_optimizer(spec: OptimizerSpec, config: ExperimentConfig, lattice, objective) -> RegretTrace:
    if spec.name == "bnb":
        cfg = BnbConfig(lattice, config.kernel, config.alpha, config.budget, config.jitter)
        return run(cfg, objective)
    if spec.name == "plain_ucb":
        cfg = UcbBaselineConfig(lattice, config.kernel, config.alpha, config.budget, spec.resample, config.jitter)
        trace = plain_ucb_run(cfg, objective)
        if spec.resample:
            trace.optimizer = "plain_ucb_resample"
        return trace
    cfg = LipschitzConfig(lattice, spec.lipschitz_constant, config.budget)
    return lipschitz_run(cfg, objective)


def _replicate(config, lattice, optimizers, rep, check_envelope):
    seed = derive_seed(config.seed, rep)
    try:
        objective = build_objective(config, lattice, seed)
    except Exception as exc:
        msg = f"{type(exc).__name__}: {exc}"
        return [
            RunSummary.from_trace(rep, seed, RegretTrace(o.name, [], terminal_reason=ERROR, error=msg))
            for o in optimizers
        ]
    out = []
    for spec in optimizers:
        try:
            trace = run_optimizer(spec, config, lattice, objective)
        except Exception as exc:
            trace = RegretTrace(spec.name, [], terminal_reason=ERROR, error=f"{type(exc).__name__}: {exc}")
        envelope = None
        if check_envelope and spec.name != "lipschitz" and config.objective.kind == "gp_draw" and len(trace):
            envelope, _ = envelope_violated(trace, objective, config.kernel, lattice, config.alpha, config.jitter)
        out.append(RunSummary.from_trace(rep, seed, trace, envelope))
    return out


def _write_replication(out_dir, summaries):
    for s in summaries:
        name = f"rep_{s.replication:04d}.csv"
        io.write_trace_csv(s.trace, out_dir / "traces" / s.optimizer / name)
        io.write_iterations_csv(s.trace, out_dir / "iterations" / s.optimizer / name)


def run_experiment(config: ExperimentConfig, optimizers=None, out_dir=None, workers=1,
                   check_envelope=True, write=True) -> ExperimentResult:
    """Run every replication of ``config`` for each optimizer spec.

    ``optimizers`` defaults to ``[config.optimizer]``.  All optimizers in a
    replication share its objective (paired seeds).  Files go to
    ``out_dir`` (default ``config.output``) unless ``write`` is false; the
    summary is written even when a replication fails partway.
    """
    optimizers = [config.optimizer] if optimizers is None else list(optimizers)
    lattice = DyadicLattice(config.domain, config.max_depth)
    out = Path(config.output if out_dir is None else out_dir) if write else None
    summaries = []
    reps = range(config.replications)
    try:
        if workers > 1:
            with ThreadPoolExecutor(workers) as pool:
                batches = pool.map(lambda i: _replicate(config, lattice, optimizers, i, check_envelope), reps)
                for batch in batches:
                    summaries.extend(batch)
                    if out is not None:
                        _write_replication(out, batch)
        else:
            for i in reps:
                batch = _replicate(config, lattice, optimizers, i, check_envelope)
                summaries.extend(batch)
                if out is not None:
                    _write_replication(out, batch)
    finally:
        if out is not None:
            io.write_summary_csv(summaries, out / "summary.csv")
            io.write_metadata(
                out / "metadata.json", config.to_dict(), config.seed, RNG_ALGORITHM, __version__,
                {"optimizers": [o.to_dict() for o in optimizers],
                 "replication_seeds": [derive_seed(config.seed, i) for i in reps]},
            )
    if out is not None:
        io.emit_plot_data(summaries, out / "plots", config.domain.dim)
    return ExperimentResult(config, summaries, out)


COMPARE_COLUMNS = (
    "optimizer", "replications", "median_final_regret", "median_best_regret",
    "median_cumulative_regret", "median_tail_fraction",
)


def compare(config: ExperimentConfig, out_dir=None, workers=1, write=True) -> ExperimentResult:
    """Run ``config.optimizer`` and its baselines on paired seeds.

    Without listed baselines, plain UCB in unsampled-only mode is used.
    Also writes ``compare.csv`` with per-optimizer medians; the tail
    fraction is the share of cumulative regret accrued in the last quarter
    of each trace.
    """
    baselines = list(config.baselines) or [OptimizerSpec("plain_ucb")]
    result = run_experiment(config, [config.optimizer] + baselines, out_dir, workers, write=write)
    if result.out_dir is not None:
        rows = []
        names = list(dict.fromkeys(s.optimizer for s in result.summaries))
        for name in names:
            group = result.by_optimizer(name)
            tails = [tail_increase_fraction(s.trace.cumulative) for s in group]
            rows.append((
                name, len(group),
                float(np.median([s.final_regret for s in group])),
                float(np.median([s.best_regret for s in group])),
                float(np.median([s.cumulative_regret for s in group])),
                float(np.median(tails)),
            ))
        io._write(result.out_dir / "compare.csv", COMPARE_COLUMNS, rows)
    return result
