"""Reusable experiment pipelines behind the CLI and the acceptance suite.

Each pipeline builds its data from explicit seeds only (random fields are
low-order trigonometric polynomials with seeded coefficients, so they are
Lipschitz and consistent across refinement levels).
"""

from __future__ import annotations

import numpy as np

from .analysis import traj_error
from .dynamics import (
    assemble_deterministic,
    integrate_ips,
    kuramoto_model,
    project_initial,
    project_kernel,
    sample_bernoulli,
)
from .quadrature import SelfSimilarMeasure
from .transfer import coarsen


def random_trig_field(seed, dimension: int, n_modes: int = 3,
                      amplitude: float = 1.0, offset: float = 0.0):
    """A seeded random Lipschitz function: a short sum of plane waves.

    Sampling the field once (rather than white noise per cell) keeps its
    level-m projections consistent under coarsening, which is what the
    refinement benchmarks require.
    """
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    amps = rng.uniform(-1.0, 1.0, size=n_modes) * (amplitude / n_modes)
    freqs = rng.uniform(0.5, 2.0, size=(n_modes, dimension))
    shifts = rng.uniform(0.0, 2.0 * np.pi, size=n_modes)

    def f(x):
        xa = np.asarray(x, dtype=np.float64)
        if dimension == 1:
            xa = xa[..., None]
        acc = np.full(xa.shape[:-1], float(offset))
        for a, w, s in zip(amps, freqs, shifts):
            acc = acc + a * np.sin(2.0 * np.pi * (xa @ w) + s)
        return acc

    return f


def kuramoto_refinement_errors(
    meas: SelfSimilarMeasure,
    kernel,
    levels,
    coupling_strength: float = 1.0,
    T: float = 1.0,
    dt: float = 1e-3,
    seed: int = 0,
    sublevel: int = 2,
    output_stride: int = 10,
):
    """The continuum-limit self-convergence series e_m = ||u^m - u^(m+1)||.

    Frequencies and initial phases come from seeded random Lipschitz fields
    projected once at the finest level and coarsened to every coarser level,
    so all systems discretize one and the same pair of data functions.
    """
    levels = sorted(int(m) for m in levels)
    finest = levels[-1] + 1
    d = meas.ifs.dimension
    omega_fn = random_trig_field((seed, 1), d)
    phase_fn = random_trig_field((seed, 2), d, offset=0.5)
    omega_fine = project_initial(meas, omega_fn, finest, sublevel)
    phase_fine = project_initial(meas, phase_fn, finest, sublevel)

    needed = sorted(set(levels) | {m + 1 for m in levels})
    trajs = {}
    for m in needed:
        km = project_kernel(meas, kernel, m, sublevel)
        coupling = assemble_deterministic(km, meas)
        model = kuramoto_model(coupling_strength, coarsen(omega_fine, m, meas.p))
        init = coarsen(phase_fine, m, meas.p)
        trajs[m] = integrate_ips(model, coupling, init, T, dt, output_stride)
    errors = np.array(
        [traj_error(trajs[m], trajs[m + 1], meas).max_error for m in levels]
    )
    return np.array(levels), errors, trajs


def bernoulli_gap_medians(
    meas: SelfSimilarMeasure,
    kernel,
    levels,
    seeds,
    coupling_strength: float = 1.0,
    T: float = 1.0,
    dt: float = 1e-3,
    field_seed: int = 0,
    sublevel: int = 2,
    output_stride: int = 10,
):
    """Median over seeds of ||u^m - u_random^m|| per level.

    The deterministic and W-random systems share the projected kernel, data,
    and time grid; only the Bernoulli edge draws differ across seeds.
    """
    levels = sorted(int(m) for m in levels)
    seeds = tuple(int(s) for s in seeds)
    d = meas.ifs.dimension
    omega_fn = random_trig_field((field_seed, 1), d)
    phase_fn = random_trig_field((field_seed, 2), d, offset=0.5)
    medians = []
    per_seed = np.empty((len(levels), len(seeds)))
    for li, m in enumerate(levels):
        km = project_kernel(meas, kernel, m, sublevel)
        coupling = assemble_deterministic(km, meas)
        model = kuramoto_model(coupling_strength, project_initial(meas, omega_fn, m, sublevel))
        init = project_initial(meas, phase_fn, m, sublevel)
        base = integrate_ips(model, coupling, init, T, dt, output_stride)
        for si, seed in enumerate(seeds):
            graph = sample_bernoulli(km, meas, seed)
            t = integrate_ips(model, graph, init, T, dt, output_stride)
            per_seed[li, si] = traj_error(base, t, meas).max_error
        medians.append(float(np.median(per_seed[li])))
    return np.array(levels), np.array(medians), per_seed


def uniform_phase_sampler(rng, cell_index: int, n: int):
    """i.i.d. uniform phases within each coarse cell (the mean-field setup)."""
    return rng.random((n, 1))
