"""
Stationary covariance kernels.

A kernel has the anisotropic form

    k(x, x') = s * g(-(x - x')^T D (x - x')),

with ``D = diag(1 / (2 l_i^2))`` so that the squared-exponential member reads
``s * exp(-sum_i (x_i - x'_i)^2 / (2 l_i^2))``.  Matérn kernels use the scaled
distance ``r = sqrt(2 q)`` with ``q = (x - x')^T D (x - x')``.

Besides evaluation this module provides the derivative constants ``L`` and
``Q`` that bound gradients and second derivatives of RKHS members; ``Q`` feeds
the posterior variance bound ``sup sigma <= Q delta^2 / 4``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import InvalidInputError, UnsupportedKernelError

__all__ = [
    "KernelSpec",
    "DerivativeBounds",
    "eval_kernel",
    "kernel_matrix",
    "gram_matrix",
    "derivative_bound_L",
    "derivative_bound_Q",
    "derivative_bounds",
]

SQUARED_EXPONENTIAL = "se"
MATERN = "matern"

_FAMILY_ALIASES = {
    "se": SQUARED_EXPONENTIAL,
    "squared_exponential": SQUARED_EXPONENTIAL,
    "squaredexponential": SQUARED_EXPONENTIAL,
    "rbf": SQUARED_EXPONENTIAL,
    "matern": MATERN,
}
_SUPPORTED_NU = (Fraction(5, 2), Fraction(7, 2))


def _parse_nu(nu):
    if isinstance(nu, str):
        nu = Fraction(nu)
    else:
        nu = Fraction(nu).limit_denominator(1000)
    if nu < 2:
        raise UnsupportedKernelError(f"Matérn order nu={nu} < 2 lacks a finite Q")
    if nu not in _SUPPORTED_NU:
        raise UnsupportedKernelError(f"Matérn order nu={nu} not in {{5/2, 7/2}}")
    return nu


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family, per-coordinate lengthscales and signal variance.

    Parameters
    ----------
    family : str
        ``"se"`` (squared exponential) or ``"matern"``.
    lengthscales : sequence of float
        One positive lengthscale per input dimension.
    signal_variance : float
        Value of ``k(x, x)``.
    nu : float or str, optional
        Matérn smoothness; only ``5/2`` and ``7/2`` are accepted.
    """

    family: str
    lengthscales: tuple
    signal_variance: float = 1.0
    nu: Fraction | None = None

    def __post_init__(self):
        family = _FAMILY_ALIASES.get(str(self.family).lower())
        if family is None:
            raise UnsupportedKernelError(f"unknown kernel family {self.family!r}")
        object.__setattr__(self, "family", family)

        ls = tuple(float(v) for v in np.atleast_1d(self.lengthscales))
        if not ls or not all(math.isfinite(v) and v > 0 for v in ls):
            raise InvalidInputError("lengthscales must be finite and positive")
        object.__setattr__(self, "lengthscales", ls)

        s = float(self.signal_variance)
        if not (math.isfinite(s) and s > 0):
            raise InvalidInputError("signal_variance must be finite and positive")
        object.__setattr__(self, "signal_variance", s)

        if family == MATERN:
            if self.nu is None:
                raise UnsupportedKernelError("Matérn kernel requires nu")
            object.__setattr__(self, "nu", _parse_nu(self.nu))
        else:
            object.__setattr__(self, "nu", None)

    @classmethod
    def se(cls, lengthscale, dim=1, signal_variance=1.0):
        """Isotropic squared-exponential kernel."""
        return cls(SQUARED_EXPONENTIAL, (lengthscale,) * dim, signal_variance)

    @classmethod
    def matern(cls, lengthscale, nu="5/2", dim=1, signal_variance=1.0):
        return cls(MATERN, (lengthscale,) * dim, signal_variance, nu)

    @property
    def dim(self):
        return len(self.lengthscales)

    @property
    def anisotropy(self):
        """Diagonal of D, ``1 / (2 l_i^2)``."""
        return 1.0 / (2.0 * np.asarray(self.lengthscales) ** 2)

    def to_dict(self):
        out = {
            "family": self.family,
            "lengthscales": list(self.lengthscales),
            "signal_variance": self.signal_variance,
        }
        if self.nu is not None:
            out["nu"] = str(self.nu)
        return out

    def profile(self, q):
        """Evaluate ``s * g(-q)`` for an array of scaled squared distances."""
        q = np.asarray(q, dtype=float)
        if self.family == SQUARED_EXPONENTIAL:
            return self.signal_variance * np.exp(-q)
        r = np.sqrt(2.0 * q)
        if self.nu == Fraction(5, 2):
            a = math.sqrt(5.0) * r
            poly = 1.0 + a + a * a / 3.0
        else:
            a = math.sqrt(7.0) * r
            poly = 1.0 + a + 2.0 * a * a / 5.0 + a * a * a / 15.0
        return self.signal_variance * poly * np.exp(-a)

    def __call__(self, x, y):
        return eval_kernel(self, x, y)


def _as_points(X, dim):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1) if X.size == dim else X.reshape(-1, 1)
    if X.ndim != 2 or X.shape[1] != dim:
        raise InvalidInputError(
            f"points have shape {np.shape(X)}, expected (n, {dim})"
        )
    return X


def scaled_sqdist(kernel, X, Y):
    """Matrix of ``(x - y)^T D (x - y)`` for all pairs of rows."""
    X = _as_points(X, kernel.dim)
    Y = _as_points(Y, kernel.dim)
    q = np.zeros((X.shape[0], Y.shape[0]))
    for i, d_ii in enumerate(kernel.anisotropy):
        diff = X[:, i, None] - Y[None, :, i]
        q += d_ii * (diff * diff)
    return q


def kernel_matrix(kernel, X, Y):
    """Cross-covariance matrix ``[k(x_i, y_j)]``."""
    return kernel.profile(scaled_sqdist(kernel, X, Y))


def eval_kernel(kernel, x, y):
    """Covariance between two single points."""
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if x.size != kernel.dim or y.size != kernel.dim:
        raise InvalidInputError(
            f"points of dimension {x.size} and {y.size} for a {kernel.dim}-d kernel"
        )
    return float(kernel_matrix(kernel, x[None, :], y[None, :])[0, 0])


def gram_matrix(kernel, points):
    X = _as_points(points, kernel.dim)
    if X.shape[0] == 0:
        raise InvalidInputError("gram_matrix needs at least one point")
    K = kernel_matrix(kernel, X, X)
    # exact symmetry regardless of summation order
    return 0.5 * (K + K.T)


@dataclass(frozen=True)
class DerivativeBounds:
    L: float
    Q: float


def _unit_constants(kernel):
    """Return ``(-g''(0), g''''(0))`` for the unit-lengthscale 1-d profile."""
    if kernel.family == SQUARED_EXPONENTIAL:
        return 1.0, 3.0
    nu = float(kernel.nu)
    return nu / (nu - 1.0), 3.0 * nu * nu / ((nu - 1.0) * (nu - 2.0))


def derivative_bound_L(kernel):
    """Gradient constant: ``L^2 = d_x d_x' k(x, x')`` at ``x = x'``.

    The mixed derivative equals ``-g''(0) / l^2`` per coordinate; the largest
    coordinate is returned.
    """
    second, _ = _unit_constants(kernel)
    lmin = min(kernel.lengthscales)
    return math.sqrt(kernel.signal_variance * second) / lmin


def derivative_bound_Q(kernel):
    """Second-derivative constant: ``Q^2 = g''''(0) / l^4``, max over coordinates."""
    _, fourth = _unit_constants(kernel)
    lmin = min(kernel.lengthscales)
    return math.sqrt(kernel.signal_variance * fourth) / lmin**2


def derivative_bounds(kernel):
    return DerivativeBounds(derivative_bound_L(kernel), derivative_bound_Q(kernel))
