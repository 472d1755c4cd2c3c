"""How fast do the discrete systems approach their continuum limit?

Three diagnostics on the gasket, all fit to C * lambda^(alpha m):
piecewise-constant projection errors of a Lipschitz function, its fractal
modulus of continuity, and the level-to-level trajectory discrepancies of the
Kuramoto system discretizing fixed data.
"""

import numpy as np

from fractalips import SelfSimilarMeasure, builtin_kernels, preset
from fractalips.analysis import (
    lipschitz_norm_estimate,
    modulus_profile,
    projection_error,
    rate_fit,
)
from fractalips.experiments import kuramoto_refinement_errors

meas = SelfSimilarMeasure.uniform(preset("sg"))
phi = lambda x: np.exp(-np.abs(x[:, 0] - x[:, 1]))
levels = np.arange(2, 8)

errors = np.array([projection_error(meas, phi, m, 2.0, 3) for m in levels])
mls, omega = modulus_profile(meas, phi, levels, 2.0, max_ell=9, sublevel=2)
rep = lipschitz_norm_estimate(mls, omega, lam=0.5)
fit = rate_fit(errors, 0.5, levels=levels, k=3, lip_norm=rep.lip_norm)

print("level   projection error   modulus omega_2   bound")
for m, e, o, b in zip(levels, errors, omega, fit.bound):
    print(f"  {m}     {e:.6f}           {o:.6f}          {b:.6f}")
print(f"\nfitted alpha (projection): {fit.fitted_alpha:.3f}")
print(f"fitted alpha (modulus):    {rep.fitted_alpha:.3f}")
print(f"estimated Lipschitz norm:  {rep.lip_norm:.4f}")
print(f"errors below the projection bound: {fit.below_bound}")

print("\nKuramoto level-to-level errors (T = 1):")
lv, errs, _ = kuramoto_refinement_errors(
    meas, builtin_kernels(2)["expdist"], [2, 3, 4], T=1.0, dt=2e-3, seed=11
)
for m, e in zip(lv, errs):
    print(f"  ||u^{m} - u^{m + 1}|| = {e:.5f}")
print(f"  fitted alpha: {rate_fit(errs, 0.5, levels=lv).fitted_alpha:.3f}")
