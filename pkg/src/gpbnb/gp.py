"""
Exact noise-free Gaussian-process posterior.

The posterior is stored as the Cholesky factor of ``K + jitter * I``.  The
jitter starts at ``1e-10 * signal_variance`` and is multiplied by ten on
factorization failure, up to ``1e-6 * signal_variance``.

Two independent routes to the posterior standard deviation are provided:
:meth:`GpPosterior.predict_std` (triangular solve against the factor) and
:meth:`GpPosterior.residual_norm` (norm of the kernel section's component
orthogonal to the span of the observed sections, via a general LU solve).
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla

from .errors import InvalidInputError, SingularGramError
from .kernels import KernelSpec, _as_points, gram_matrix, kernel_matrix

__all__ = [
    "GpPosterior",
    "Interpolant",
    "CandidatePredictor",
    "fit",
    "interpolation_error_bound",
    "DEFAULT_JITTER",
    "MAX_JITTER",
    "DUPLICATE_TOL",
]

DEFAULT_JITTER = 1e-10
MAX_JITTER = 1e-6
DUPLICATE_TOL = 1e-12


def _check_distinct(A, B=None):
    """Raise if any two rows (within A, or between A and B) coincide."""
    if B is None:
        if len(A) < 2:
            return
        d2 = np.sum((A[:, None, :] - A[None, :, :]) ** 2, axis=-1)
        d2[np.diag_indices_from(d2)] = np.inf
    else:
        if len(A) == 0 or len(B) == 0:
            return
        d2 = np.sum((A[:, None, :] - B[None, :, :]) ** 2, axis=-1)
    if np.min(d2) <= DUPLICATE_TOL**2:
        i, j = np.unravel_index(np.argmin(d2), d2.shape)
        raise InvalidInputError(f"duplicate sample location {A[i].tolist()}")


def _factorize(K, jitter, signal_variance):
    """Cholesky of ``K + jitter I`` with tenfold escalation.

    ``jitter=0`` tries the exact matrix first, then continues from the default.
    """
    n = K.shape[0]
    j = jitter
    while j <= MAX_JITTER * signal_variance * (1 + 1e-9):
        try:
            return sla.cholesky(K + j * np.eye(n), lower=True, check_finite=False), j
        except np.linalg.LinAlgError:
            j = j * 10.0 if j > 0 else DEFAULT_JITTER * signal_variance
    raise SingularGramError(
        f"Gram matrix of {n} points not factorizable with jitter <= {MAX_JITTER}"
    )


class GpPosterior:
    """Posterior of a zero-mean GP conditioned on exact observations.

    Instances are immutable; :meth:`update` returns a new posterior.
    """

    def __init__(self, kernel, points, values, chol, jitter):
        self.kernel = kernel
        self.points = points
        self.values = values
        self.chol = chol
        self.jitter = jitter
        if len(values):
            self.weights = sla.cho_solve((chol, True), values, check_finite=False)
        else:
            self.weights = np.zeros(0)
        for arr in (self.points, self.values, self.chol, self.weights):
            arr.setflags(write=False)

    def __len__(self):
        return len(self.values)

    def __repr__(self):
        return f"GpPosterior(T={len(self)}, jitter={self.jitter:.1e}, kernel={self.kernel})"

    def update(self, new_points, new_values):
        """Condition on additional observations.

        The factor is extended block-wise; if the Schur complement cannot be
        factorized at the current jitter the whole union is refit.
        """
        B = _as_points(new_points, self.kernel.dim) if np.size(new_points) else np.zeros((0, self.kernel.dim))
        fb = np.asarray(new_values, dtype=float).reshape(-1)
        if len(B) != len(fb):
            raise InvalidInputError("new_points and new_values differ in length")
        if len(B) == 0:
            return self
        if not (np.all(np.isfinite(B)) and np.all(np.isfinite(fb))):
            raise InvalidInputError("points and values must be finite")
        _check_distinct(B)
        _check_distinct(B, self.points)
        if len(self) == 0:
            return fit(self.kernel, B, fb, self.jitter)

        points = np.vstack([self.points, B])
        values = np.concatenate([self.values, fb])
        K12 = kernel_matrix(self.kernel, self.points, B)
        K22 = gram_matrix(self.kernel, B) + self.jitter * np.eye(len(B))
        L21t = sla.solve_triangular(self.chol, K12, lower=True, check_finite=False)
        try:
            L22 = sla.cholesky(K22 - L21t.T @ L21t, lower=True, check_finite=False)
        except np.linalg.LinAlgError:
            return fit(self.kernel, points, values, self.jitter)
        T, m = len(self), len(B)
        chol = np.zeros((T + m, T + m))
        chol[:T, :T] = self.chol
        chol[T:, :T] = L21t.T
        chol[T:, T:] = L22
        return GpPosterior(self.kernel, points, values, chol, self.jitter)

    def _cross(self, X):
        X = _as_points(X, self.kernel.dim)
        return X, kernel_matrix(self.kernel, X, self.points)

    def predict(self, X):
        """Posterior mean and standard deviation at the rows of ``X``."""
        X, Ks = self._cross(X)
        s = self.kernel.signal_variance
        if len(self) == 0:
            return np.zeros(len(X)), np.full(len(X), np.sqrt(s))
        mu = Ks @ self.weights
        V = sla.solve_triangular(self.chol, Ks.T, lower=True, check_finite=False)
        var = s - np.einsum("ij,ij->j", V, V)
        return mu, np.sqrt(np.maximum(var, 0.0))

    def predict_mean(self, x):
        mu, _ = self.predict(x)
        return mu[0] if np.ndim(x) <= 1 and len(mu) == 1 else mu

    def predict_std(self, x):
        _, sd = self.predict(x)
        return sd[0] if np.ndim(x) <= 1 and len(sd) == 1 else sd

    def residual_norm(self, x):
        """Norm of ``(1 - P) k(x, .)`` in the RKHS of ``K + jitter I``.

        With ``c = K^{-1} k(x)`` the residual has coefficients ``[1, -c]`` on
        the sections ``[k(x, .), k(x_1, .), ...]``, giving
        ``k(x, x) - 2 c^T k + c^T K c``.  Computed with a general solver so it
        shares nothing with the Cholesky route.
        """
        X, Ks = self._cross(x)
        s = self.kernel.signal_variance
        if len(self) == 0:
            out = np.full(len(X), np.sqrt(s))
        else:
            K = gram_matrix(self.kernel, self.points) + self.jitter * np.eye(len(self))
            C = np.linalg.solve(K, Ks.T)
            sq = s - 2.0 * np.einsum("ij,ji->i", Ks, C) + np.einsum("ji,jk,ki->i", C, K, C)
            out = np.sqrt(np.maximum(sq, 0.0))
        return out[0] if np.ndim(x) <= 1 and len(out) == 1 else out

    def project(self, h_values):
        """Minimum-norm interpolant of ``h_values`` at the sampled points."""
        h = np.asarray(h_values, dtype=float).reshape(-1)
        if len(h) != len(self):
            raise InvalidInputError(f"need {len(self)} values, got {len(h)}")
        if len(self) == 0:
            return Interpolant(self.kernel, self.points, np.zeros(0), 0.0)
        w = sla.cho_solve((self.chol, True), h, check_finite=False)
        return Interpolant(self.kernel, self.points, w, float(np.sqrt(max(h @ w, 0.0))))


class Interpolant:
    """``x -> sum_i w_i k(x_i, x)``, callable on single points or row arrays."""

    def __init__(self, kernel, centers, weights, norm):
        self.kernel = kernel
        self.centers = centers
        self.weights = weights
        self.norm = norm  # RKHS norm, sqrt(h^T K^{-1} h)

    def __call__(self, x):
        X = _as_points(x, self.kernel.dim)
        if len(self.weights) == 0:
            out = np.zeros(len(X))
        else:
            out = kernel_matrix(self.kernel, X, self.centers) @ self.weights
        return out[0] if np.ndim(x) <= 1 and len(out) == 1 else out


def fit(kernel: KernelSpec, points=None, values=None, jitter=None) -> GpPosterior:
    """Condition the zero-mean prior on exact observations ``values`` at ``points``.

    ``values`` defaults to zeros, which is enough for variances and
    :meth:`GpPosterior.project`.

    Raises :class:`InvalidInputError` on duplicate points and
    :class:`SingularGramError` if jitter escalation is exhausted.
    """
    if jitter is None:
        jitter = DEFAULT_JITTER * kernel.signal_variance
    if points is None or np.size(points) == 0:
        X = np.zeros((0, kernel.dim))
    else:
        X = _as_points(points, kernel.dim).copy()
    if values is None:
        f = np.zeros(len(X))
    else:
        f = np.asarray(values, dtype=float).reshape(-1).copy()
    if len(X) != len(f):
        raise InvalidInputError(f"{len(X)} points but {len(f)} values")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(f))):
        raise InvalidInputError("points and values must be finite")
    if len(X) == 0:
        return GpPosterior(kernel, X, f, np.zeros((0, 0)), jitter)
    _check_distinct(X)
    chol, used = _factorize(gram_matrix(kernel, X), jitter, kernel.signal_variance)
    return GpPosterior(kernel, X, f, chol, used)


def interpolation_error_bound(delta, Q):
    """Certified ``sup sigma <= Q delta^2 / 4`` for a delta-cover."""
    if delta < 0 or Q < 0:
        raise InvalidInputError("delta and Q must be nonnegative")
    return Q * delta * delta / 4.0


class CandidatePredictor:
    """Posterior mean/std on a fixed candidate set, updated one sample at a time.

    Keeps ``V = L^{-1} k(X, C)`` and ``z = L^{-1} f`` so each added observation
    costs ``O(T |C|)``; mean is ``V^T z`` and variance ``s - sum(V^2)``.  Falls
    back to a full recomputation when the posterior had to be refit.
    """

    def __init__(self, kernel, candidates, jitter=None):
        self.candidates = _as_points(candidates, kernel.dim)
        self.gp = fit(kernel, jitter=jitter)
        n = len(self.candidates)
        self._V = np.zeros((0, n))
        self._z = np.zeros(0)

    def _recompute(self):
        gp = self.gp
        Kc = kernel_matrix(gp.kernel, gp.points, self.candidates)
        self._V = sla.solve_triangular(gp.chol, Kc, lower=True, check_finite=False)
        self._z = sla.solve_triangular(gp.chol, gp.values, lower=True, check_finite=False)

    def add(self, x, fx):
        old = self.gp
        new = old.update(np.atleast_2d(x), [fx])
        self.gp = new
        T = len(old)
        if len(old) == 0 or new.jitter != old.jitter or not np.array_equal(new.chol[:T, :T], old.chol):
            self._recompute()
            return
        row = new.chol[T]
        kc = kernel_matrix(new.kernel, new.points[T:], self.candidates)[0]
        v = (kc - row[:T] @ self._V) / row[T]
        zt = (new.values[T] - row[:T] @ self._z) / row[T]
        self._V = np.vstack([self._V, v])
        self._z = np.append(self._z, zt)

    @property
    def mean(self):
        if len(self._z) == 0:
            return np.zeros(len(self.candidates))
        return self._V.T @ self._z

    @property
    def std(self):
        s = self.gp.kernel.signal_variance
        return np.sqrt(np.maximum(s - np.einsum("ij,ij->j", self._V, self._V), 0.0))
