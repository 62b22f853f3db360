"""Regret decay on synthetic quadratic peaks and the fitted rate.

Runs branch and bound on peaks ``f_M - c ||x - x_M||^2`` with random centres,
takes the median running-max regret envelope and fits
``ln r = ln A - tau t / (ln t)^(d/4)``.
"""

import numpy as np

from gpbnb.harness.config import parse_config
from gpbnb.harness.metrics import fit_rate, upper_envelope
from gpbnb.harness.runner import run_experiment

config = parse_config({
    "domain": {"lower": [0.0], "upper": [1.0]},
    "kernel": {"family": "se", "lengthscales": [0.2]},
    "objective": {"kind": "synthetic_peak", "c1": 2.0, "c2": 1.0, "rho0": 0.1},
    "optimizer": {"name": "bnb"},
    "alpha": 0.1, "budget": 400, "max_depth": 10, "replications": 20,
    "output": "unused", "seed": 11,
})
result = run_experiment(config, check_envelope=False, write=False)

traces = [s.trace for s in result.summaries]
n = max(len(tr) for tr in traces)
env = np.array([np.pad(upper_envelope(tr.regrets), (0, n - len(tr)), mode="edge") for tr in traces])
median = np.median(env, axis=0)
fit = fit_rate(median, 1)

print(f"runs: {len(traces)}, samples per run: {min(map(len, traces))}-{n}")
print(f"median envelope: r_1 = {median[0]:.3e}, r_{n} = {median[-1]:.3e}")
print(f"fit: A_hat = {fit.A_hat:.3e}, tau_hat = {fit.tau_hat:.4f}, R^2 = {fit.goodness:.3f}, points = {fit.n_used}")
