"""
Branch and bound over a dyadic lattice with GP confidence bounds.

Each iteration halves the resolution ``delta``, samples every unsampled
lattice point needed to cover the current region at that resolution, then
shrinks the region to the ball spanned by the farthest pair of points whose
UCB still exceeds the best LCB.  The confidence multiplier is
``beta_T = 2 ln(|L| T^2 / alpha)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidInputError, ResolutionExhausted
from .gp import GpPosterior, fit
from .kernels import KernelSpec
from .lattice import (
    DyadicLattice,
    Region,
    cover_indices,
    enclosing_ball,
    farthest_pair,
    lattice_points,
    region_lattice_indices,
)

__all__ = [
    "BnbConfig",
    "TraceRow",
    "IterationRecord",
    "RegretTrace",
    "OptimizerState",
    "beta_schedule",
    "relevant_mask",
    "initial_state",
    "densify",
    "shrink",
    "run",
]

# terminal reasons, in priority order
RELEVANT_EMPTY = "relevant_set_empty"
REGION_EXHAUSTED = "region_exhausted"
RESOLUTION_EXHAUSTED = "resolution_exhausted"
BUDGET = "budget"
ERROR = "error"


def beta_schedule(T, lattice_size, alpha):
    """``2 ln(|L| T^2 / alpha)``."""
    if T < 1 or lattice_size < 1 or not 0 < alpha < 1:
        raise InvalidInputError("need T >= 1, lattice_size >= 1, 0 < alpha < 1")
    return 2.0 * math.log(lattice_size * T * T / alpha)


def relevant_mask(mu, sigma, sqrt_beta):
    """Points whose UCB strictly exceeds the largest LCB."""
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if mu.size == 0:
        return np.zeros(0, dtype=bool)
    lcb_sup = np.max(mu - sqrt_beta * sigma)
    return mu + sqrt_beta * sigma > lcb_sup


@dataclass(frozen=True)
class BnbConfig:
    lattice: DyadicLattice
    kernel: KernelSpec
    alpha: float = 0.05
    budget: int = 1000
    jitter: float | None = None

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise InvalidInputError("alpha must lie in (0, 1)")
        if int(self.budget) != self.budget or self.budget < 1:
            raise InvalidInputError("budget must be a positive integer")
        if self.kernel.dim != self.lattice.dim:
            raise InvalidInputError("kernel and lattice dimensions differ")


@dataclass(frozen=True)
class TraceRow:
    t: int
    iteration: int
    point: tuple
    f_x: float
    regret: float
    cum_regret: float
    delta: float
    beta: float
    region_radius: float
    n_new: int


@dataclass(frozen=True)
class IterationRecord:
    """Per-iteration bookkeeping (``l, N_l, dN_l, rho_l, eps_l``) plus shrink diagnostics."""

    iteration: int
    depth: int
    delta: float
    n_total: int
    n_new: int
    region_radius: float
    beta: float = math.nan
    eps: float = math.nan  # max posterior std over the region's lattice points
    n_relevant: int = 0
    next_radius: float = math.nan
    maximizer_retained: bool | None = None
    ucb_regret: float = math.nan  # regret of the region's UCB maximizer
    ucb_bound: float = math.nan  # 2 sqrt(beta) sigma at that point


@dataclass
class RegretTrace:
    optimizer: str
    rows: list
    iterations: list = field(default_factory=list)
    max_value: float = math.nan
    terminal_reason: str | None = None
    error: str | None = None

    def __len__(self):
        return len(self.rows)

    @property
    def t(self):
        return np.array([r.t for r in self.rows], dtype=int)

    @property
    def points(self):
        if not self.rows:
            return np.zeros((0, 0))
        return np.array([r.point for r in self.rows], dtype=float)

    @property
    def values(self):
        return np.array([r.f_x for r in self.rows], dtype=float)

    @property
    def regrets(self):
        return np.array([r.regret for r in self.rows], dtype=float)

    @property
    def cumulative(self):
        return np.array([r.cum_regret for r in self.rows], dtype=float)

    @property
    def betas(self):
        return np.array([r.beta for r in self.rows], dtype=float)


@dataclass(frozen=True)
class OptimizerState:
    config: BnbConfig
    region: Region
    delta: float
    posterior: GpPosterior
    sampled: frozenset = frozenset()
    iteration: int = 0
    beta: float = math.nan
    rows: tuple = ()
    iterations: tuple = ()
    reason: str | None = None

    @property
    def T(self):
        return len(self.posterior)

    @property
    def cum_regret(self):
        return self.rows[-1].cum_regret if self.rows else 0.0


def initial_state(config: BnbConfig) -> OptimizerState:
    """Whole-domain region with ``delta = diam(D)``."""
    domain = config.lattice.domain
    return OptimizerState(
        config=config,
        region=Region.whole(domain),
        delta=domain.diameter,
        posterior=fit(config.kernel, jitter=config.jitter),
    )


def densify(state: OptimizerState, objective) -> OptimizerState:
    """Halve ``delta`` and sample the region's cover at the new resolution."""
    if state.reason is not None:
        return state
    cfg = state.config
    lat = cfg.lattice
    delta = state.delta / 2.0
    try:
        idx, depth = cover_indices(lat, state.region, delta)
    except ResolutionExhausted:
        return replace(state, reason=RESOLUTION_EXHAUSTED)
    remaining = cfg.budget - state.T
    if remaining <= 0:
        return replace(state, reason=BUDGET)

    flat = lat.flat_index(idx) if len(idx) else np.zeros(0, dtype=np.int64)
    fresh = np.array([f not in state.sampled for f in flat.tolist()], dtype=bool)
    idx, flat = idx[fresh], flat[fresh]
    truncated = len(idx) > remaining
    idx, flat = idx[:remaining], flat[:remaining]

    X = lat.points_from_index(idx)
    f = objective(X) if len(X) else np.zeros(0)
    posterior = state.posterior.update(X, f) if len(X) else state.posterior
    iteration = state.iteration + 1
    n_new = len(X)
    rows = list(state.rows)
    cum = state.cum_regret
    size = len(lat)
    for k in range(n_new):
        t = state.T + k + 1
        regret = objective.max_value - float(f[k])
        cum += regret
        rows.append(TraceRow(
            t=t, iteration=iteration, point=tuple(X[k].tolist()), f_x=float(f[k]),
            regret=regret, cum_regret=cum, delta=delta,
            beta=beta_schedule(t, size, cfg.alpha),
            region_radius=state.region.radius, n_new=n_new,
        ))
    record = IterationRecord(
        iteration=iteration, depth=depth, delta=delta, n_total=len(posterior),
        n_new=n_new, region_radius=state.region.radius,
    )
    return replace(
        state,
        delta=delta,
        posterior=posterior,
        sampled=state.sampled | frozenset(flat.tolist()),
        iteration=iteration,
        rows=tuple(rows),
        iterations=state.iterations + (record,),
        reason=BUDGET if truncated else None,
    )


def shrink(state: OptimizerState, objective=None):
    """Replace the region by the enclosing ball of the relevant set.

    Candidates are the finest-lattice points inside the current region.
    Returns ``(new_state, relevant_points)``.  When ``objective`` is given,
    retention of its maximizer and the UCB-maximizer regret are recorded.
    """
    if state.reason is not None:
        return state, np.zeros((0, state.config.lattice.dim))
    if state.T < 1:
        raise InvalidInputError("shrink needs at least one sample")
    cfg = state.config
    lat = cfg.lattice
    idx = region_lattice_indices(lat, state.region)
    if len(idx) == 0:
        return replace(state, region=Region.empty(lat.domain), reason=RELEVANT_EMPTY), np.zeros((0, lat.dim))
    X = lat.points_from_index(idx)
    mu, sd = state.posterior.predict(X)
    beta = beta_schedule(state.T, len(lat), cfg.alpha)
    sb = math.sqrt(beta)
    mask = relevant_mask(mu, sd, sb)
    relevant = X[mask]

    reason = None
    if len(relevant) == 0:
        region = Region.empty(lat.domain)
        reason = RELEVANT_EMPTY
    else:
        p1, p2, _ = farthest_pair(relevant)
        region = enclosing_ball(p1, p2, lat.domain)
        at_finest = bool(state.iterations) and state.iterations[-1].depth == lat.max_depth
        if at_finest:
            inside = lat.flat_index(region_lattice_indices(lat, region))
            if all(i in state.sampled for i in inside.tolist()):
                reason = REGION_EXHAUSTED

    diag = {}
    if objective is not None:
        k = int(np.argmax(mu + sb * sd))
        diag = dict(
            maximizer_retained=bool(region.contains(objective.maximizer)[0]),
            ucb_regret=float(objective.max_value - objective(X[k])),
            ucb_bound=2.0 * sb * float(sd[k]),
        )
    last = state.iterations[-1] if state.iterations else None
    if last is not None and last.iteration == state.iteration:
        record = replace(
            last, beta=beta, eps=float(sd.max()), n_relevant=int(mask.sum()),
            next_radius=region.radius, **diag,
        )
        iterations = state.iterations[:-1] + (record,)
    else:
        iterations = state.iterations
    new_state = replace(state, region=region, beta=beta, iterations=iterations, reason=reason)
    return new_state, relevant


def _check_support(lattice, objective):
    grid = lattice_points(lattice, lattice.max_depth)
    if objective.support.shape != grid.shape or not np.array_equal(objective.support, grid):
        raise InvalidInputError("objective support does not match the finest lattice")


def to_trace(state: OptimizerState, objective, name="bnb", error=None) -> RegretTrace:
    return RegretTrace(
        optimizer=name,
        rows=list(state.rows),
        iterations=list(state.iterations),
        max_value=objective.max_value,
        terminal_reason=ERROR if error else state.reason,
        error=error,
    )


def run(config: BnbConfig, objective) -> RegretTrace:
    """Alternate densify and shrink until a terminal condition.

    Errors raised mid-run are captured: the partial trace is returned with
    ``terminal_reason == "error"`` and the message in ``error``.
    """
    _check_support(config.lattice, objective)
    state = initial_state(config)
    try:
        while state.reason is None:
            state = densify(state, objective)
            if state.reason is None:
                state, _ = shrink(state, objective)
    except Exception as exc:  # partial trace is still useful
        return to_trace(state, objective, error=f"{type(exc).__name__}: {exc}")
    return to_trace(state, objective)
