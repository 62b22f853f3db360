"""
Reference optimizers sharing the :class:`~gpbnb.bnb.RegretTrace` format.

* :func:`plain_ucb_run` maximizes ``mu + sqrt(beta_t) sigma`` over the whole
  lattice at every step and never discards anything.
* :func:`lipschitz_eliminate` discards candidates whose Lipschitz cone bound
  falls strictly below the incumbent; :func:`lipschitz_run` turns it into a
  lattice version of Piyavskii's method.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bnb import BUDGET, ERROR, RegretTrace, TraceRow, _check_support, beta_schedule
from .errors import InvalidInputError
from .gp import CandidatePredictor
from .kernels import KernelSpec
from .lattice import DyadicLattice, lattice_points

__all__ = [
    "UcbBaselineConfig",
    "LipschitzConfig",
    "plain_ucb_run",
    "lipschitz_eliminate",
    "lipschitz_upper_bound",
    "lipschitz_run",
]

EXHAUSTED = "lattice_exhausted"


@dataclass(frozen=True)
class UcbBaselineConfig:
    """GP-UCB over the full lattice.

    With ``resample=False`` (default) sampled points are excluded from the
    argmax; with ``resample=True`` they stay eligible and re-querying one adds
    no information, so the run can pin to a single point.
    """

    lattice: DyadicLattice
    kernel: KernelSpec
    alpha: float = 0.05
    budget: int = 1000
    resample: bool = False
    jitter: float | None = None

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise InvalidInputError("alpha must lie in (0, 1)")
        if int(self.budget) != self.budget or self.budget < 1:
            raise InvalidInputError("budget must be a positive integer")
        if self.kernel.dim != self.lattice.dim:
            raise InvalidInputError("kernel and lattice dimensions differ")


@dataclass(frozen=True)
class LipschitzConfig:
    lattice: DyadicLattice
    lipschitz_constant: float
    budget: int = 1000

    def __post_init__(self):
        if not self.lipschitz_constant > 0:
            raise InvalidInputError("lipschitz_constant must be positive")
        if int(self.budget) != self.budget or self.budget < 1:
            raise InvalidInputError("budget must be a positive integer")


def _row(t, point, fx, max_value, cum, beta=math.nan):
    regret = max_value - fx
    return TraceRow(
        t=t, iteration=t, point=tuple(point.tolist()), f_x=fx, regret=regret,
        cum_regret=cum + regret, delta=math.nan, beta=beta, region_radius=math.nan, n_new=1,
    )


def plain_ucb_run(config: UcbBaselineConfig, objective) -> RegretTrace:
    """Sample ``argmax mu_{t-1} + sqrt(beta_t) sigma_{t-1}`` for ``t = 1..budget``.

    Ties go to the first lattice point in lexicographic order.
    """
    lat = config.lattice
    _check_support(lat, objective)
    C = lattice_points(lat, lat.max_depth)
    pred = CandidatePredictor(config.kernel, C, jitter=config.jitter)
    sampled = np.zeros(len(C), dtype=bool)
    rows, cum = [], 0.0
    trace = RegretTrace("plain_ucb", rows, max_value=objective.max_value)
    try:
        for t in range(1, config.budget + 1):
            beta = beta_schedule(t, len(lat), config.alpha)
            ucb = pred.mean + math.sqrt(beta) * pred.std
            if not config.resample:
                if sampled.all():
                    trace.terminal_reason = EXHAUSTED
                    return trace
                ucb[sampled] = -np.inf
            k = int(np.argmax(ucb))
            fx = float(objective(C[k]))
            row = _row(t, C[k], fx, objective.max_value, cum, beta)
            rows.append(row)
            cum = row.cum_regret
            if not sampled[k]:
                pred.add(C[k], fx)
                sampled[k] = True
    except Exception as exc:
        trace.terminal_reason, trace.error = ERROR, f"{type(exc).__name__}: {exc}"
        return trace
    trace.terminal_reason = BUDGET
    return trace


def _as_rows(a):
    """Scalars and 1-d arrays are read as 1-d points; 2-d arrays as rows."""
    a = np.asarray(a, dtype=float)
    return a.reshape(-1, 1) if a.ndim < 2 else a


def lipschitz_upper_bound(sample_x, sample_f, L, candidates):
    """``min_i f(x_i) + L ||x - x_i||`` at each candidate."""
    X = _as_rows(sample_x)
    f = np.asarray(sample_f, dtype=float).reshape(-1)
    C = _as_rows(candidates)
    if X.shape[0] == 0:
        return np.full(len(C), np.inf)
    dist = np.sqrt(np.sum((C[:, None, :] - X[None, :, :]) ** 2, axis=-1))
    return np.min(f[None, :] + L * dist, axis=1)


def lipschitz_eliminate(sample_x, sample_f, L, candidates):
    """Split candidates into ``(kept, discarded)`` point arrays.

    A candidate is discarded when its cone bound is strictly below the best
    sampled value, so ties with the incumbent survive.
    """
    if not L > 0:
        raise InvalidInputError("L must be positive")
    f = np.asarray(sample_f, dtype=float).reshape(-1)
    if f.size == 0:
        raise InvalidInputError("need at least one sample")
    C = _as_rows(candidates)
    drop = lipschitz_upper_bound(sample_x, f, L, C) < f.max()
    return C[~drop], C[drop]


def lipschitz_run(config: LipschitzConfig, objective) -> RegretTrace:
    """Sample the live candidate with the largest cone bound until budget or none remain."""
    lat = config.lattice
    _check_support(lat, objective)
    C = lattice_points(lat, lat.max_depth)
    live = np.ones(len(C), dtype=bool)
    X, F = [], []
    rows, cum = [], 0.0
    trace = RegretTrace("lipschitz", rows, max_value=objective.max_value)
    for t in range(1, config.budget + 1):
        upper = lipschitz_upper_bound(np.array(X).reshape(-1, lat.dim), F, config.lipschitz_constant, C)
        if F:
            live &= ~(upper < max(F))
        if not live.any():
            trace.terminal_reason = EXHAUSTED
            return trace
        upper[~live] = -np.inf
        k = int(np.argmax(upper))
        fx = float(objective(C[k]))
        live[k] = False
        X.append(C[k])
        F.append(fx)
        row = _row(t, C[k], fx, objective.max_value, cum)
        rows.append(row)
        cum = row.cum_regret
    trace.terminal_reason = BUDGET
    return trace
