"""Integrate functions against the natural measure on the Sierpinski gasket.

Two routes to the same integral: the quasi-Monte-Carlo average over address
nodes, and an ergodic Monte-Carlo average along a random symbol orbit.  The
gasket barycenter has a closed form (the fixed point of the stationarity
equation), which makes a convenient accuracy reference.
"""

import numpy as np

from fractalips import SelfSimilarMeasure, integrate_mc, integrate_qmc, preset
from fractalips.geometry import fixed_point_centroid
from fractalips.quadrature import stationary_mean

meas = SelfSimilarMeasure.uniform(preset("sg"))
anchor = fixed_point_centroid(meas.ifs)
ref = stationary_mean(meas)
print(f"exact barycenter (stationarity fixed point): {ref}")

print("\nQMC convergence for phi(x) = exp(-|x1 - x2|):")
phi = lambda x: np.exp(-np.abs(x[:, 0] - x[:, 1]))
prev = None
for m in range(2, 11, 2):
    val = integrate_qmc(meas, phi, m, anchor=anchor)
    gap = "" if prev is None else f"  change {abs(val - prev):.2e}"
    print(f"  level {m:2d}: {val:.10f}{gap}")
    prev = val

print("\nMonte-Carlo barycenter estimates (M = 1e5, 5 seeds):")
for seed in range(5):
    est = integrate_mc(meas, lambda x: x, 10**5, tail=40, seed=seed)
    print(f"  seed {seed}: {np.round(est, 6)}  |err| = {np.abs(est - ref).max():.2e}")

print("\nweights always sum to one:",
      integrate_qmc(meas, lambda x: np.ones(len(x)), 8))
