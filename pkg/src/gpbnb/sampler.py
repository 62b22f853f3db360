"""
Tabulated objectives with known maxima.

Objectives are pre-computed on the finest lattice so that a GP draw is
self-consistent across every refinement depth the optimizer visits.  Random
draws use numpy's Philox counter-based generator keyed by the seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import InvalidInputError, SingularGramError
from .gp import DEFAULT_JITTER, MAX_JITTER
from .kernels import gram_matrix
from .lattice import BoxDomain, DyadicLattice, lattice_points

__all__ = [
    "RNG_ALGORITHM",
    "TabulatedObjective",
    "make_rng",
    "sample_gp_prior",
    "synthetic_peak",
    "verify_peak_condition",
    "estimate_peak_constants",
]

RNG_ALGORITHM = "numpy.random.Philox"


def make_rng(seed):
    """Counter-based generator; identical seeds give identical streams everywhere."""
    return np.random.Generator(np.random.Philox(key=int(seed)))


@dataclass(frozen=True, eq=False)
class TabulatedObjective:
    """A function known only on ``support``.

    ``max_value`` is the maximum over the whole domain used for regret.  For
    GP draws it is the largest tabulated value; for synthetic peaks it is the
    peak height ``f_M``, attained at ``maximizer`` whether or not that point
    is on the lattice.
    """

    support: np.ndarray
    values: np.ndarray
    max_value: float
    maximizer: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        support = np.array(self.support, dtype=float)
        values = np.array(self.values, dtype=float).reshape(-1)
        if support.ndim != 2 or len(support) != len(values) or len(values) == 0:
            raise InvalidInputError("support must be (n, d) with one value per point")
        for arr in (support, values):
            arr.setflags(write=False)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "maximizer", np.asarray(self.maximizer, dtype=float).reshape(-1))
        object.__setattr__(self, "_lookup", {p.tobytes(): i for i, p in enumerate(support)})

    @property
    def argmax_index(self):
        return int(np.argmax(self.values))

    @property
    def dim(self):
        return self.support.shape[1]

    @property
    def top2_gap(self):
        if len(self.values) < 2:
            return np.inf
        top = np.partition(self.values, -2)[-2:]
        return float(top[1] - top[0])

    def index(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        try:
            return np.array([self._lookup[np.ascontiguousarray(x).tobytes()] for x in X], dtype=np.int64)
        except KeyError:
            raise InvalidInputError("objective queried off its support") from None

    def __call__(self, X):
        out = self.values[self.index(X)]
        return float(out[0]) if np.ndim(X) <= 1 else out

    def regret(self, X):
        return self.max_value - self(X)


def sample_gp_prior(kernel, support, seed, jitter=None):
    """Draw ``f ~ N(0, K)`` on ``support`` as ``chol(K + jitter I) @ z``.

    ``support`` is a point array or a :class:`DyadicLattice` (its finest grid).
    """
    if isinstance(support, DyadicLattice):
        support = lattice_points(support, support.max_depth)
    X = np.asarray(support, dtype=float)
    if X.ndim != 2 or len(X) == 0:
        raise InvalidInputError("support must be a nonempty (n, d) array")
    s = kernel.signal_variance
    j = DEFAULT_JITTER * s if jitter is None else jitter
    K = gram_matrix(kernel, X)
    n = len(X)
    while True:
        try:
            chol = sla.cholesky(K + j * np.eye(n), lower=True, check_finite=False)
            break
        except np.linalg.LinAlgError:
            j *= 10.0
            if j > MAX_JITTER * s * (1 + 1e-9):
                raise SingularGramError("prior covariance not factorizable") from None
    z = make_rng(seed).standard_normal(n)
    values = chol @ z
    i = int(np.argmax(values))
    return TabulatedObjective(
        X, values, float(values[i]), X[i],
        {"kind": "gp_draw", "seed": int(seed), "rng": RNG_ALGORITHM, "jitter": j,
         "kernel": kernel.to_dict()},
    )


def synthetic_peak(domain: BoxDomain, x_M, f_M, c1, c2, rho0, support, curvature=None):
    """Tabulate ``f(x) = f_M - c ||x - x_M||^2`` with ``c2 < c < c1``.

    ``c`` defaults to ``(c1 + c2) / 2``.  Requires ``B(x_M, rho0)`` inside the
    domain.
    """
    x_M = np.asarray(x_M, dtype=float).reshape(-1)
    if not 0 < c2 < c1:
        raise InvalidInputError("need 0 < c2 < c1")
    if not rho0 > 0:
        raise InvalidInputError("rho0 must be positive")
    if x_M.size != domain.dim:
        raise InvalidInputError("x_M dimension does not match domain")
    if np.any(x_M - rho0 < domain.lo) or np.any(x_M + rho0 > domain.hi):
        raise InvalidInputError("B(x_M, rho0) is not contained in the domain")
    c = 0.5 * (c1 + c2) if curvature is None else float(curvature)
    if not c2 < c < c1:
        raise InvalidInputError("curvature must lie strictly between c2 and c1")
    if isinstance(support, DyadicLattice):
        support = lattice_points(support, support.max_depth)
    X = np.asarray(support, dtype=float)
    values = f_M - c * np.sum((X - x_M) ** 2, axis=1)
    return TabulatedObjective(
        X, values, float(f_M), x_M,
        {"kind": "synthetic_peak", "x_M": x_M.tolist(), "f_M": float(f_M), "c1": float(c1),
         "c2": float(c2), "curvature": c, "rho0": float(rho0)},
    )


def verify_peak_condition(obj, x_M, c1, c2, rho0, domain=None, grad_threshold=1e-8):
    """Check the local quadratic envelope around ``x_M`` on the support.

    Interior maximizers need ``f_M - c1 r^2 < f(x) <= f_M - c2 r^2`` at every
    support point with ``0 < r <= rho0``.  When ``domain`` is given and
    ``x_M`` lies on its boundary, instead require a one-sided difference
    quotient of at least ``grad_threshold`` along each inward normal.
    """
    x_M = np.asarray(x_M, dtype=float).reshape(-1)
    f_M = obj.max_value
    X, f = obj.support, obj.values
    if domain is not None and np.any(domain.on_boundary(x_M)):
        for axis in np.flatnonzero(domain.on_boundary(x_M)):
            inward = 1.0 if abs(x_M[axis] - domain.lo[axis]) <= 1e-12 else -1.0
            others = np.all(np.delete(np.abs(X - x_M), axis, axis=1) <= 1e-12, axis=1)
            step = (X[:, axis] - x_M[axis]) * inward
            line = np.flatnonzero(others & (step > 0))
            if len(line) == 0:
                return False
            k = line[np.argmin(step[line])]
            if (f_M - f[k]) / step[k] < grad_threshold:
                return False
        return True
    r2 = np.sum((X - x_M) ** 2, axis=1)
    ball = (r2 > 0) & (r2 <= rho0 * rho0 * (1 + 1e-12))
    gap = f_M - f[ball]
    return bool(np.all(gap < c1 * r2[ball]) and np.all(gap >= c2 * r2[ball]))


def estimate_peak_constants(obj, x_M, rho0, margin=0.1):
    """Envelope constants ``(c1, c2)`` from ``(f_M - f) / r^2`` on the support ball.

    Returns the extreme ratios widened by ``margin``; ``c2 <= 0`` means no
    quadratic upper envelope exists at this scale.
    """
    x_M = np.asarray(x_M, dtype=float).reshape(-1)
    r2 = np.sum((obj.support - x_M) ** 2, axis=1)
    ball = (r2 > 0) & (r2 <= rho0 * rho0)
    if not np.any(ball):
        raise InvalidInputError("no support points within rho0 of x_M")
    ratio = (obj.max_value - obj.values[ball]) / r2[ball]
    return float(ratio.max() * (1 + margin)), float(ratio.min() * (1 - margin))
