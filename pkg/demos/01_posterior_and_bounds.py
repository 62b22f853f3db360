"""Noise-free GP posterior, kernel derivative constants and the sup-variance bound.

Fits a squared-exponential GP to a few exact observations, prints the
posterior at probe points, then checks how the largest posterior standard
deviation over a delta-cover compares with ``Q delta^2 / 4``.
"""

import numpy as np

from gpbnb import BoxDomain, KernelSpec, derivative_bounds, fit
from gpbnb.harness.metrics import verify_variance_bound

kernel = KernelSpec.se(0.5)
X = np.array([[0.0], [0.3], [0.7], [1.0]])
gp = fit(kernel, X, np.sin(6 * X[:, 0]))

probes = np.linspace(0, 1, 6)[:, None]
mu, sd = gp.predict(probes)
print("x      mean      std       residual_norm")
for x, m, s in zip(probes[:, 0], mu, sd):
    print(f"{x:.2f}  {m:+.5f}  {s:.3e}  {gp.residual_norm([x]):.3e}")

b = derivative_bounds(kernel)
print(f"\nL = {b.L:.6f}, Q = {b.Q:.6f}")

print("\ndelta   samples  measured sup std   Q delta^2/4   ratio")
for row in verify_variance_bound(kernel, BoxDomain.unit(1), [0.2, 0.1, 0.05]):
    print(f"{row.delta:<7} {row.n_samples:<8} {row.measured:.3e}          {row.bound:.3e}     {row.ratio:.4f}")
