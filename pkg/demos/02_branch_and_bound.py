"""One branch and bound run on a GP sample path, iteration by iteration.

Each iteration halves the cover spacing inside the current region and then
shrinks the region to the ball that holds every point whose UCB beats the
best LCB.  The printout shows the region collapsing onto the maximizer.
"""

from gpbnb import BnbConfig, BoxDomain, DyadicLattice, KernelSpec, run, sample_gp_prior

lattice = DyadicLattice(BoxDomain.unit(1), 9)
kernel = KernelSpec.se(0.2)
objective = sample_gp_prior(kernel, lattice, seed=3)

trace = run(BnbConfig(lattice, kernel, alpha=0.1, budget=400), objective)

print("iter  depth  delta      N_l   dN_l  radius    relevant  next radius")
for it in trace.iterations:
    print(f"{it.iteration:<5} {it.depth:<6} {it.delta:<10.5f} {it.n_total:<5} {it.n_new:<5} "
          f"{it.region_radius:<9.5f} {it.n_relevant:<9} {it.next_radius:.5f}")

print(f"\nstopped: {trace.terminal_reason} after {len(trace)} samples")
print(f"true maximizer {objective.maximizer[0]:.6f}, best sampled {trace.points[trace.regrets.argmin(), 0]:.6f}")
print(f"best regret {trace.regrets.min():.3e}, cumulative regret {trace.cumulative[-1]:.4f}")
