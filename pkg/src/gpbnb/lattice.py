"""
Box domains, nested dyadic lattices and the region geometry of the shrink step.

Lattice points are addressed by integer multi-indices at the finest depth
``max_depth``; a depth-``m`` index ``k`` maps to ``k * 2**(max_depth - m)``.
Coordinates are ``lower + (upper - lower) * k / 2**m``; since the divisor is a
power of two, a point has bitwise-identical coordinates at every depth that
contains it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, ResolutionExhausted

__all__ = [
    "BoxDomain",
    "DyadicLattice",
    "Region",
    "LatticeReport",
    "lattice_points",
    "cover_depth",
    "cover_points",
    "covering_number",
    "farthest_pair",
    "enclosing_ball",
    "check_lattice_conditions",
]

_TOL = 1e-12


@dataclass(frozen=True)
class BoxDomain:
    lower: tuple
    upper: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lower))
        hi = tuple(float(v) for v in np.atleast_1d(self.upper))
        if len(lo) != len(hi) or not lo:
            raise InvalidInputError("lower and upper must have the same nonzero length")
        if not all(a < b for a, b in zip(lo, hi)):
            raise InvalidInputError("need lower < upper in every coordinate")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def unit(cls, dim=1):
        return cls((0.0,) * dim, (1.0,) * dim)

    @property
    def dim(self):
        return len(self.lower)

    @property
    def lo(self):
        return np.asarray(self.lower)

    @property
    def hi(self):
        return np.asarray(self.upper)

    @property
    def widths(self):
        return self.hi - self.lo

    @property
    def diameter(self):
        return float(np.linalg.norm(self.widths))

    @property
    def center(self):
        return 0.5 * (self.lo + self.hi)

    def contains(self, X, tol=_TOL):
        X = np.atleast_2d(X)
        return np.all((X >= self.lo - tol) & (X <= self.hi + tol), axis=1)

    def on_boundary(self, x, tol=_TOL):
        """Boolean per coordinate: is ``x`` on the lower or upper face."""
        x = np.asarray(x, dtype=float)
        return (np.abs(x - self.lo) <= tol) | (np.abs(x - self.hi) <= tol)

    def to_dict(self):
        return {"lower": list(self.lower), "upper": list(self.upper)}


@dataclass(frozen=True)
class DyadicLattice:
    """Points ``lower + (upper - lower) * k / 2**max_depth``, ``0 <= k_i <= 2**max_depth``."""

    domain: BoxDomain
    max_depth: int

    def __post_init__(self):
        if int(self.max_depth) != self.max_depth or self.max_depth < 0:
            raise InvalidInputError("max_depth must be a nonnegative integer")
        object.__setattr__(self, "max_depth", int(self.max_depth))

    @property
    def dim(self):
        return self.domain.dim

    @property
    def side(self):
        """Number of points per axis at the finest depth."""
        return 2**self.max_depth + 1

    def __len__(self):
        return self.side**self.dim

    def size(self, depth=None):
        depth = self.max_depth if depth is None else depth
        return (2**depth + 1) ** self.dim

    def cell_diameter(self, depth):
        return float(np.linalg.norm(self.domain.widths / 2**depth))

    def points_from_index(self, idx):
        """Coordinates of finest-depth multi-indices (rows of ``idx``)."""
        idx = np.atleast_2d(idx)
        return self.domain.lo + self.domain.widths * (idx / 2**self.max_depth)

    def index_of(self, X):
        """Finest-depth multi-indices of lattice points; raises if off-lattice."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        idx = np.rint((X - self.domain.lo) / self.domain.widths * 2**self.max_depth).astype(np.int64)
        if np.any(idx < 0) or np.any(idx >= self.side) or not np.array_equal(self.points_from_index(idx), X):
            raise InvalidInputError("point is not on the lattice")
        return idx

    def flat_index(self, idx):
        """Lexicographic position of finest multi-indices within the full grid."""
        return np.ravel_multi_index(tuple(np.atleast_2d(idx).T), (self.side,) * self.dim)

    def indices(self, depth=None):
        """All finest multi-indices of the depth-``depth`` sublattice, lexicographic."""
        depth = self.max_depth if depth is None else depth
        if not 0 <= depth <= self.max_depth:
            raise ResolutionExhausted(depth, self.max_depth)
        step = 2 ** (self.max_depth - depth)
        axis = np.arange(0, 2**depth + 1) * step
        grids = np.meshgrid(*([axis] * self.dim), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    def to_dict(self):
        return {"domain": self.domain.to_dict(), "max_depth": self.max_depth}


def lattice_points(lat: DyadicLattice, depth: int) -> np.ndarray:
    """The ``(2**depth + 1)**d`` grid, lexicographic by multi-index."""
    return lat.points_from_index(lat.indices(depth))


@dataclass(frozen=True)
class Region:
    """Ball ``B(center, radius)`` intersected with ``domain``."""

    center: np.ndarray
    radius: float
    domain: BoxDomain
    terminal: bool = field(default=False, compare=False)

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float).reshape(-1)
        if c.size != self.domain.dim:
            raise InvalidInputError("center dimension does not match domain")
        c.setflags(write=False)
        object.__setattr__(self, "center", c)
        if not self.radius >= 0:
            raise InvalidInputError("radius must be nonnegative")
        object.__setattr__(self, "radius", float(self.radius))

    @classmethod
    def whole(cls, domain):
        """The ball circumscribing the box; its intersection with the box is the box."""
        return cls(domain.center, domain.diameter / 2.0, domain)

    @classmethod
    def empty(cls, domain):
        return cls(domain.center, 0.0, domain, terminal=True)

    def contains(self, X, tol=_TOL):
        if self.terminal:
            return np.zeros(len(np.atleast_2d(X)), dtype=bool)
        X = np.atleast_2d(X)
        dist = np.linalg.norm(X - self.center, axis=1)
        inside = dist <= self.radius * (1 + tol) + tol
        return inside & self.domain.contains(X, tol)

    def __repr__(self):
        return f"Region(center={self.center.tolist()}, radius={self.radius:.6g}, terminal={self.terminal})"


def _indices_in_ball(lat, depth, center, radius):
    """Finest indices of depth-``depth`` lattice points within ``radius`` of ``center``."""
    step = 2 ** (lat.max_depth - depth)
    n = 2**depth
    scale = n / lat.domain.widths
    rel = (center - lat.domain.lo) * scale
    reach = radius * scale
    axes = []
    for i in range(lat.dim):
        lo = max(0, int(math.floor(rel[i] - reach[i])) - 1)
        hi = min(n, int(math.ceil(rel[i] + reach[i])) + 1)
        if lo > hi:
            return np.zeros((0, lat.dim), dtype=np.int64)
        axes.append(np.arange(lo, hi + 1, dtype=np.int64) * step)
    grids = np.meshgrid(*axes, indexing="ij")
    idx = np.stack([g.ravel() for g in grids], axis=1)
    X = lat.points_from_index(idx)
    keep = np.linalg.norm(X - center, axis=1) <= radius * (1 + _TOL) + _TOL
    return idx[keep]


def cover_depth(lat: DyadicLattice, delta: float) -> int:
    """Smallest depth whose cell diameter is at most ``delta``."""
    if not delta > 0:
        raise InvalidInputError("delta must be positive")
    ratio = lat.domain.diameter / delta
    depth = max(0, math.ceil(math.log2(ratio) - 1e-12)) if ratio > 1 else 0
    while lat.cell_diameter(depth) > delta * (1 + _TOL):
        depth += 1
    while depth > 0 and lat.cell_diameter(depth - 1) <= delta * (1 + _TOL):
        depth -= 1
    return depth


def cover_indices(lat, region, delta):
    """Finest indices and depth of the cover used by :func:`cover_points`."""
    depth = cover_depth(lat, delta)
    if depth > lat.max_depth:
        raise ResolutionExhausted(depth, lat.max_depth)
    if region.terminal:
        return np.zeros((0, lat.dim), dtype=np.int64), depth
    reach = region.radius + lat.cell_diameter(depth)
    return _indices_in_ball(lat, depth, region.center, reach), depth


def cover_points(lat: DyadicLattice, region: Region, delta: float) -> np.ndarray:
    """Lattice points whose cells of diameter ``<= delta`` cover ``region``.

    Uses the coarsest depth with small enough cells and keeps the points
    within one cell diameter of the ball, so every cell meeting the region
    has all its vertices returned.
    """
    idx, _ = cover_indices(lat, region, delta)
    return lat.points_from_index(idx)


def region_lattice_indices(lat, region):
    """Finest-depth lattice points in ``region`` (i.e. ``R`` intersected with ``L``)."""
    if region.terminal:
        return np.zeros((0, lat.dim), dtype=np.int64)
    return _indices_in_ball(lat, lat.max_depth, region.center, region.radius)


def covering_number(rho: float, delta: float, d: int) -> int:
    """Grid upper bound ``ceil(rho sqrt(d) / delta)**d`` on the delta-covering number of ``B(0, rho)``."""
    if not (rho > 0 and delta > 0) or d < 1:
        raise InvalidInputError("need rho > 0, delta > 0, d >= 1")
    per_axis = max(1, math.ceil(rho * math.sqrt(d) / delta - 1e-12))
    return per_axis**d


def farthest_pair(points):
    """Exact diameter pair by exhaustive scan.

    Returns ``(p1, p2, distance)`` with ``p1 <= p2`` lexicographically, the
    lexicographically smallest such pair among ties; ``None`` for an empty set.
    """
    P = np.atleast_2d(np.asarray(points, dtype=float))
    if P.size == 0:
        return None
    order = np.lexsort(P.T[::-1])
    P = P[order]
    n = len(P)
    if n == 1:
        return P[0].copy(), P[0].copy(), 0.0
    best, best_ij = -1.0, (0, 0)
    chunk = max(1, 4_000_000 // n)
    for start in range(0, n, chunk):
        block = P[start:start + chunk]
        d2 = np.sum((block[:, None, :] - P[None, :, :]) ** 2, axis=-1)
        rows = np.arange(start, start + len(block))
        # each unordered pair once, as i < j
        mask = np.arange(n)[None, :] <= rows[:, None]
        d2[mask] = -1.0
        m = d2.max()
        if m > best:
            flat = int(np.argmax(d2))
            best, best_ij = m, (start + flat // n, flat % n)
    i, j = best_ij
    return P[i].copy(), P[j].copy(), float(np.sqrt(best))


def enclosing_ball(p1, p2, domain: BoxDomain) -> Region:
    """Ball centred at the midpoint with radius ``||p1 - p2||``, clipped to ``domain``."""
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    return Region(0.5 * (p1 + p2), float(np.linalg.norm(p1 - p2)), domain)


@dataclass(frozen=True)
class LatticeReport:
    nesting_ok: bool
    nesting_depths_checked: int
    fineness_ok: bool
    required_depth: int
    max_depth: int
    condition: str = "2^(ceil(-log2(rho0/diam(D)))+1) L ∩ L != ∅"

    @property
    def ok(self):
        return self.nesting_ok and self.fineness_ok


def check_lattice_conditions(lat: DyadicLattice, rho0: float) -> LatticeReport:
    """Check dyadic nesting and that the lattice resolves balls of radius ``rho0``."""
    if not rho0 > 0:
        raise InvalidInputError("rho0 must be positive")
    top = min(3, lat.max_depth)
    nesting = True
    for depth in range(top):
        coarse = {tuple(p) for p in lattice_points(lat, depth)}
        fine = {tuple(p) for p in lattice_points(lat, depth + 1)}
        nesting &= coarse <= fine
    required = math.ceil(-math.log2(rho0 / lat.domain.diameter) - 1e-12) + 1
    return LatticeReport(nesting, top, lat.max_depth >= required, required, lat.max_depth)
