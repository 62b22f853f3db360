"""
Metrics and bound-verification suites computed from regret traces.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import binomtest

from ..bnb import BnbConfig, RegretTrace, beta_schedule, run
from ..errors import InvalidInputError
from ..gp import CandidatePredictor, fit, interpolation_error_bound
from ..kernels import derivative_bound_Q
from ..lattice import BoxDomain, lattice_points
from ..sampler import sample_gp_prior

__all__ = [
    "cumulative_regret",
    "RateFit",
    "fit_rate",
    "rate_axis",
    "upper_envelope",
    "envelope_violated",
    "CoverageResult",
    "envelope_coverage",
    "VarianceBoundRow",
    "verify_variance_bound",
    "GrowthReport",
    "growth_law_report",
    "regret_bound_violations",
    "tail_increase_fraction",
]


def cumulative_regret(trace_or_regrets):
    """Prefix sums of simple regret."""
    if isinstance(trace_or_regrets, RegretTrace):
        r = trace_or_regrets.regrets
    else:
        r = np.asarray(trace_or_regrets, dtype=float)
    return np.cumsum(r)


def rate_axis(t, d):
    """``t / (ln t)^(d/4)``."""
    t = np.asarray(t, dtype=float)
    return t / np.log(t) ** (d / 4.0)


def upper_envelope(regrets):
    """Smallest non-increasing sequence dominating ``regrets`` (running max from the right)."""
    r = np.asarray(regrets, dtype=float)
    return np.maximum.accumulate(r[::-1])[::-1]


@dataclass(frozen=True)
class RateFit:
    A_hat: float
    tau_hat: float
    goodness: float  # R^2 of the log-linear fit
    n_used: int
    n_floored: int
    defined: bool = True

    @classmethod
    def undefined(cls, n_used=0):
        return cls(math.nan, math.nan, math.nan, n_used, 0, False)


def fit_rate(trace, d, t=None, min_points=10):
    """Least-squares fit of ``ln r_t = ln A - tau * t / (ln t)^(d/4)``.

    ``trace`` is a :class:`RegretTrace` or a regret array (then ``t``
    defaults to ``1..n``).  Steps with ``ln t <= d/4`` are dropped.  Zero
    regrets are floored at the smallest positive regret and counted in
    ``n_floored``; an all-zero tail gives an undefined fit.
    """
    if isinstance(trace, RegretTrace):
        r, t = trace.regrets, trace.t.astype(float)
    else:
        r = np.asarray(trace, dtype=float)
        t = np.arange(1, len(r) + 1, dtype=float) if t is None else np.asarray(t, dtype=float)
    keep = np.log(np.maximum(t, 1.0)) > d / 4.0
    r, t = r[keep], t[keep]
    if np.any(r < 0):
        raise InvalidInputError("negative regret")
    positive = r > 0
    if not positive.any():
        return RateFit.undefined(len(r))
    if positive.sum() < min_points:
        raise InvalidInputError(
            f"need at least {min_points} positive post-burn-in regrets, got {int(positive.sum())}"
        )
    floored = int((~positive).sum())
    r = np.where(positive, r, r[positive].min())
    x = rate_axis(t, d)
    y = np.log(r)
    design = np.column_stack([x, np.ones_like(x)])
    (slope, intercept), *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - (slope * x + intercept)
    ss_res = float(resid @ resid)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot > 0:
        r2 = 1.0 - ss_res / ss_tot
    else:
        r2 = 1.0 if ss_res <= 1e-20 else 0.0
    return RateFit(float(np.exp(intercept)), float(-slope), r2, len(r), floored)


def tail_increase_fraction(cumulative, quartile=0.75):
    """Share of the final cumulative regret accrued after the first ``quartile`` of steps."""
    c = np.asarray(cumulative, dtype=float)
    if len(c) == 0 or c[-1] == 0:
        return 0.0
    k = int(math.floor(quartile * len(c)))
    before = c[k - 1] if k >= 1 else 0.0
    return float((c[-1] - before) / c[-1])


def envelope_violated(trace, objective, kernel, lattice, alpha, jitter=None, tol=0.0):
    """Whether ``|f - mu_{t-1}| <= sqrt(beta_t) sigma_{t-1}`` fails anywhere on the lattice.

    Checked before every sample ``t`` of ``trace`` at every lattice point.
    A GP draw tabulated as ``chol(K + j I) z`` carries an independent nugget
    of variance ``j`` at each point, so ``j`` (from the objective's
    provenance) is added to the posterior variance.  Returns
    ``(violated, first_t)``.
    """
    C = lattice_points(lattice, lattice.max_depth)
    f = objective(C)
    nugget = float(objective.provenance.get("jitter", 0.0)) if objective.provenance.get("kind") == "gp_draw" else 0.0
    pred = CandidatePredictor(kernel, C, jitter=jitter)
    for row in trace.rows:
        sb = math.sqrt(beta_schedule(row.t, len(lattice), alpha))
        sd = np.sqrt(pred.std ** 2 + nugget)
        if np.any(np.abs(f - pred.mean) > sb * sd + tol):
            return True, row.t
        pred.add(np.asarray(row.point), row.f_x)
    return False, None


def regret_bound_violations(trace, slack=1e-8):
    """Iterations whose UCB maximizer has regret above ``2 sqrt(beta) sigma + slack``."""
    return [
        it.iteration for it in trace.iterations
        if not math.isnan(it.ucb_bound) and it.ucb_regret > it.ucb_bound + slack
    ]


@dataclass
class CoverageResult:
    replications: int
    violations: int
    exits: int  # runs where the maximizer left the region
    regret_bound_failures: int  # envelope-holding runs where r_t > 2 sqrt(beta) sigma
    ci: tuple
    seeds: list = field(default_factory=list)
    violated: list = field(default_factory=list)
    exited: list = field(default_factory=list)

    @property
    def rate(self):
        return self.violations / self.replications

    @property
    def exit_rate(self):
        return self.exits / self.replications


def _coverage_one(cfg, obj, alpha, jitter, tol):
    trace = run(cfg, obj)
    bad, _ = envelope_violated(trace, obj, cfg.kernel, cfg.lattice, alpha, jitter=jitter, tol=tol)
    exited = any(it.maximizer_retained is False for it in trace.iterations)
    return bad, exited, bool(not bad and regret_bound_violations(trace))


def envelope_coverage(kernel, lattice, alpha, replications, seeds=None, budget=10**6,
                      jitter=None, tol=0.0, objectives=None, workers=1):
    """Run branch and bound on ``replications`` objectives and tally envelope violations.

    By default the objectives are GP draws from the same kernel the
    optimizer uses, one per seed; ``objectives`` overrides them.  Also
    records how often the true maximizer was dropped from the region.
    """
    if replications < 1:
        raise InvalidInputError("replications must be at least 1")
    if objectives is None:
        seeds = list(range(replications)) if seeds is None else list(seeds)[:replications]
        if len(seeds) < replications:
            raise InvalidInputError("not enough seeds")
        objectives = [sample_gp_prior(kernel, lattice, s, jitter=jitter) for s in seeds]
    else:
        objectives = list(objectives)[:replications]
        seeds = [o.provenance.get("seed") for o in objectives]
        if len(objectives) < replications:
            raise InvalidInputError("not enough objectives")
    cfg = BnbConfig(lattice, kernel, alpha=alpha, budget=budget, jitter=jitter)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(lambda o: _coverage_one(cfg, o, alpha, jitter, tol), objectives))
    else:
        results = [_coverage_one(cfg, o, alpha, jitter, tol) for o in objectives]
    violated = [r[0] for r in results]
    exited = [r[1] for r in results]
    k = int(sum(violated))
    ci = binomtest(k, replications).proportion_ci(confidence_level=0.95)
    return CoverageResult(
        replications, k, int(sum(exited)), int(sum(r[2] for r in results)),
        (ci.low, ci.high), seeds, violated, exited,
    )


@dataclass(frozen=True)
class VarianceBoundRow:
    delta: float
    n_samples: int
    n_probes: int
    measured: float
    bound: float
    decay: float  # previous measured / this measured

    @property
    def ratio(self):
        return self.measured / self.bound if self.bound > 0 else math.inf


def _grid(domain, per_axis):
    axes = [np.linspace(lo, hi, n + 1) for lo, hi, n in zip(domain.lower, domain.upper, per_axis)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _max_std(gp, probes, chunk=20000):
    best = 0.0
    for start in range(0, len(probes), chunk):
        _, sd = gp.predict(probes[start:start + chunk])
        best = max(best, float(sd.max()))
    return best


def verify_variance_bound(kernel, domain: BoxDomain, deltas, probe_factor=10, jitter=None):
    """Measure ``sup sigma_T`` on uniform delta-covers against ``Q delta^2 / 4``.

    For each ``delta`` the samples form a grid whose cells have diameter at
    most ``delta``; the supremum is taken over a grid ``probe_factor`` times
    denser per axis.
    """
    deltas = [float(v) for v in deltas]
    if any(v <= 0 for v in deltas):
        raise InvalidInputError("deltas must be positive")
    Q = derivative_bound_Q(kernel)
    rows, prev = [], math.nan
    d = domain.dim
    for delta in deltas:
        per_axis = [max(1, math.ceil(w * math.sqrt(d) / delta - 1e-9)) for w in domain.widths]
        X = _grid(domain, per_axis)
        P = _grid(domain, [probe_factor * n for n in per_axis])
        gp = fit(kernel, X, np.zeros(len(X)), jitter=jitter)
        measured = _max_std(gp, P)
        rows.append(VarianceBoundRow(
            delta, len(X), len(P), measured, interpolation_error_bound(delta, Q),
            prev / measured if measured > 0 else math.inf,
        ))
        prev = measured
    return rows


@dataclass(frozen=True)
class GrowthReport:
    iterations: np.ndarray
    n_total: np.ndarray
    n_new: np.ndarray
    ratio: np.ndarray  # dN_l / (ln N_l)^(d/4)
    tail_constant: float


def growth_law_report(trace, d, tail=0.5):
    """Per-iteration ``dN_l / (ln N_l)^(d/4)``; ``tail_constant`` is its max over the last ``tail`` share."""
    its = [it for it in trace.iterations if it.n_total > 1]
    ell = np.array([it.iteration for it in its], dtype=int)
    N = np.array([it.n_total for it in its], dtype=float)
    dN = np.array([it.n_new for it in its], dtype=float)
    ratio = dN / np.log(N) ** (d / 4.0) if len(N) else np.zeros(0)
    start = int(math.floor((1 - tail) * len(ratio)))
    const = float(ratio[start:].max()) if len(ratio[start:]) else math.nan
    return GrowthReport(ell, N.astype(int), dN.astype(int), ratio, const)
