"""Verification machinery: discrepancy norms, moduli of continuity,
convergence-rate fits, and empirical-measure distances.

The fractal L^p modulus replaces Euclidean translations by the sibling-cell
vectors tau_ij scaled to level l; pairs (x, x + tau) are produced by cylinder
matching, which under-approximates the admissible set and therefore yields a
lower-bound estimator feeding an empirical rate fit.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist
from scipy.stats import wasserstein_distance

from .dynamics import (
    Trajectory,
    assemble_deterministic,
    integrate_ips,
    project_kernel,
)
from .geometry import (
    attractor_points,
    common_contraction_ratio,
    has_common_linear_part,
)
from .quadrature import (
    SelfSimilarMeasure,
    check_eval_budget,
    evaluate_on_points,
    pairwise_sum,
)
from .symbolic import Word, check_level_size, level_weights
from .transfer import PiecewiseConstantField


def field_lp_norm(
    field: PiecewiseConstantField, meas: SelfSimilarMeasure, p: float = 2.0
) -> float:
    """L^p(K, nu) norm of a piecewise-constant field (Euclidean norm over
    state components)."""
    masses = meas.weights(field.level)
    mag = (
        np.abs(field.values[:, 0])
        if field.state_dim == 1
        else np.linalg.norm(field.values, axis=1)
    )
    return float(pairwise_sum(masses * mag**p)) ** (1.0 / p)


@dataclass(frozen=True)
class TrajectoryError:
    """Per-time L^2(K, nu) discrepancy between two trajectories."""

    times: np.ndarray
    errors: np.ndarray
    max_error: float


def traj_error(
    coarse: Trajectory, fine: Trajectory, meas: SelfSimilarMeasure
) -> TrajectoryError:
    """sup over the shared time grid of || refine(u^m) - u^m' ||_{L^2(K, nu)}."""
    if fine.level < coarse.level:
        raise ValueError("the second trajectory must be at least as fine")
    if coarse.k != fine.k:
        raise ValueError("alphabet sizes differ")
    if coarse.times.shape != fine.times.shape or not np.array_equal(
        coarse.times, fine.times
    ):
        raise ValueError("time grids do not match")
    if coarse.state_dim != fine.state_dim:
        raise ValueError("state dimensions differ")
    delta = fine.level - coarse.level
    cvals = np.repeat(coarse.values, coarse.k**delta, axis=1)
    diff = cvals - fine.values
    masses = meas.weights(fine.level)
    sq = np.sum(diff * diff, axis=2)  # (T, n_fine)
    errs = np.sqrt(np.maximum(pairwise_sum(masses[None, :] * sq, axis=1), 0.0))
    return TrajectoryError(coarse.times, errs, float(errs.max()))


def projection_error(
    meas: SelfSimilarMeasure,
    phi,
    m: int,
    p_exponent: float = 2.0,
    sublevel: int = 3,
    anchor=None,
) -> float:
    """|| phi - phi^m ||_{L^p(K, nu)} with phi^m the level-m cell averages.

    Both phi and its projection are evaluated on the same level-(m+sublevel)
    QMC nodes, so a field that is already piecewise constant at level m comes
    out exactly zero.
    """
    if sublevel < 2:
        raise ValueError("sublevel must be >= 2")
    k = meas.k
    n = check_level_size(k, m + sublevel)
    check_eval_budget(n)
    pts = attractor_points(meas.ifs, m + sublevel, anchor)
    vals = evaluate_on_points(phi, pts)
    if vals.ndim == 1:
        vals = vals[:, None]
    blocks = vals.reshape(k**m, k**sublevel, vals.shape[1])
    if meas.natural:
        means = pairwise_sum(blocks, axis=1) / k**sublevel
    else:
        q = level_weights(meas.p, sublevel)
        means = np.einsum("wus,u->ws", blocks, q)
    resid = blocks - means[:, None, :]
    mag = np.linalg.norm(resid, axis=2) if vals.shape[1] > 1 else np.abs(resid[:, :, 0])
    if meas.natural:
        total = pairwise_sum(mag.reshape(-1) ** p_exponent) / n
    else:
        w_full = meas.weights(m + sublevel).reshape(k**m, k**sublevel)
        total = pairwise_sum(pairwise_sum(w_full * mag**p_exponent, axis=1))
    return float(total) ** (1.0 / p_exponent)


def _modulus_single_level(
    meas: SelfSimilarMeasure, phi, ell: int, p_exponent: float, sublevel: int, anchor
) -> float:
    """max over ordered sibling pairs of the matched-pair L^p difference at
    translation scale A^ell tau_ij."""
    k = meas.k
    L = ell + 1 + sublevel
    n = check_level_size(k, L)
    check_eval_budget(n)
    pts = attractor_points(meas.ifs, ell + 1 + sublevel, anchor)
    vals = evaluate_on_points(phi, pts)
    if vals.ndim > 1:
        raise ValueError("the modulus is defined for scalar-valued functions")
    blocks = vals.reshape(k**ell, k, k**sublevel)
    if not meas.natural:
        w_full = meas.weights(L).reshape(k**ell, k, k**sublevel)
    best = 0.0
    for i in range(k):
        for j in range(k):
            if i == j:
                continue
            # x in K_{w i u}  <->  x + tau in K_{w j u}; same (w, u) indices
            diff = np.abs(blocks[:, j, :] - blocks[:, i, :])
            if meas.natural:
                term = pairwise_sum(diff.reshape(-1) ** p_exponent) / n
            else:
                term = pairwise_sum(
                    pairwise_sum(w_full[:, i, :] * diff**p_exponent, axis=1)
                )
            best = max(best, float(term) ** (1.0 / p_exponent))
    return best


def modulus_profile(
    meas: SelfSimilarMeasure,
    phi,
    levels,
    p_exponent: float = 2.0,
    max_ell: int | None = None,
    sublevel: int = 2,
    anchor=None,
):
    """omega_p(phi, m) for each requested m, sharing per-level work.

    Returns (levels, omega) with omega[m] = max over l in [m, max_ell] of the
    matched-pair difference norm; nonincreasing in m by construction.
    """
    levels = sorted(int(m) for m in levels)
    if max_ell is None:
        max_ell = levels[-1] + 2
    if max_ell < levels[-1]:
        raise ValueError("max_ell must be >= the largest requested level")
    if not has_common_linear_part(meas.ifs):
        raise ValueError(
            "the fractal modulus requires an IFS with a common linear part"
        )
    common_contraction_ratio(meas.ifs)
    singles = {
        ell: _modulus_single_level(meas, phi, ell, p_exponent, sublevel, anchor)
        for ell in range(levels[0], max_ell + 1)
    }
    omega = []
    for m in levels:
        omega.append(max(singles[ell] for ell in range(m, max_ell + 1)))
    return np.array(levels), np.array(omega)


def modulus_of_continuity(
    meas: SelfSimilarMeasure,
    phi,
    m: int,
    p_exponent: float = 2.0,
    max_ell: int | None = None,
    sublevel: int = 2,
    anchor=None,
) -> float:
    """The level-m L^p modulus of continuity (finite truncation of the sup
    over translation scales)."""
    _, omega = modulus_profile(
        meas, phi, [m], p_exponent, max_ell, sublevel, anchor
    )
    return float(omega[0])


@dataclass(frozen=True)
class ModulusReport:
    """Fitted decay of the modulus: omega_p(phi, m) ~ C lambda^(alpha m)."""

    levels: np.ndarray
    omega: np.ndarray
    p: float
    lam: float
    fitted_alpha: float
    lip_norm: float
    omega_shifted: np.ndarray | None = None  # tau = lambda^(l+1) scaling


def lipschitz_norm_estimate(
    levels, omega, lam: float, p_exponent: float = 2.0, omega_shifted=None
) -> ModulusReport:
    """Least-squares decay exponent of log omega against m log lambda, and
    the generalized Lipschitz norm sup_m lambda^(-alpha m) omega(m) at the
    fitted alpha."""
    levels = np.asarray(levels, dtype=np.float64)
    omega = np.asarray(omega, dtype=np.float64)
    keep = omega > 0
    if np.count_nonzero(keep) < 3:
        raise ValueError("need at least 3 levels with positive omega to fit")
    if not np.all(keep):
        warnings.warn("dropping non-positive omega values from the fit")
    x = levels[keep] * np.log(lam)
    y = np.log(omega[keep])
    alpha = float(np.polyfit(x, y, 1)[0])
    lip = float(np.max(omega[keep] * lam ** (-alpha * levels[keep])))
    return ModulusReport(
        levels=levels,
        omega=omega,
        p=p_exponent,
        lam=lam,
        fitted_alpha=alpha,
        lip_norm=lip,
        omega_shifted=None if omega_shifted is None else np.asarray(omega_shifted),
    )


def lp_projection_bound(
    k: int, lam: float, alpha: float, lip_norm: float, m, p_exponent: float = 2.0
):
    """The piecewise-constant projection error bound
    k^(1/p-1) (k-1)^(1/p) / (1 - lambda^alpha) * lip * lambda^(alpha m)."""
    m = np.asarray(m, dtype=np.float64)
    pref = k ** (1.0 / p_exponent - 1.0) * (k - 1.0) ** (1.0 / p_exponent)
    return pref / (1.0 - lam**alpha) * lip_norm * lam ** (alpha * m)


@dataclass(frozen=True)
class RateFit:
    """Least-squares decay exponent of a level-indexed error sequence."""

    levels: np.ndarray
    errors: np.ndarray
    lam: float
    fitted_alpha: float
    alpha_capped: float  # min(alpha, 1): the Lipschitz scale tops out at 1
    capped: bool
    bound: np.ndarray | None = None
    below_bound: bool | None = None
    floor_replaced: int = 0


def rate_fit(
    errors,
    lam: float,
    levels=None,
    k: int | None = None,
    p_exponent: float = 2.0,
    lip_norm: float | None = None,
) -> RateFit:
    """Fit errors ~ C lambda^(alpha m) and optionally compare against the
    projection bound evaluated with an estimated Lipschitz norm.

    Levels 0 and 1 are discarded from the fit (prefactor-dominated range);
    non-positive errors are replaced by a quadrature floor with a warning.
    Fitted alpha above 1 is reported verbatim with a cap note.
    """
    errors = np.asarray(errors, dtype=np.float64)
    if levels is None:
        levels = np.arange(2, 2 + len(errors))
    levels = np.asarray(levels, dtype=np.float64)
    if len(errors) != len(levels):
        raise ValueError("errors and levels must have equal length")
    keep = levels >= 2
    if np.count_nonzero(keep) < 3:
        raise ValueError("need at least 3 levels m >= 2 to fit a rate")
    errs = errors.copy()
    floor = 1e-15 * max(1.0, float(np.max(np.abs(errs))) if errs.size else 1.0)
    bad = errs <= 0
    if np.any(bad):
        warnings.warn(
            f"replacing {int(bad.sum())} non-positive errors by the quadrature "
            f"floor {floor:.3g}"
        )
        errs[bad] = floor
    x = levels[keep] * np.log(lam)
    y = np.log(errs[keep])
    alpha = float(np.polyfit(x, y, 1)[0])
    capped = alpha > 1.0 + 1e-9
    alpha_capped = min(alpha, 1.0)
    bound = None
    below = None
    if k is not None and lip_norm is not None:
        bound = lp_projection_bound(k, lam, alpha_capped, lip_norm, levels, p_exponent)
        below = bool(np.all(errs <= bound))
    return RateFit(
        levels=levels,
        errors=errs,
        lam=lam,
        fitted_alpha=alpha,
        alpha_capped=alpha_capped,
        capped=capped,
        bound=bound,
        below_bound=below,
        floor_replaced=int(bad.sum()),
    )


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Weighted atoms forming a probability measure on state space."""

    atoms: np.ndarray  # (n, s)
    weights: np.ndarray  # (n,)

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.atoms, dtype=np.float64))
        if a.ndim != 2:
            raise ValueError("atoms must be (n, s)")
        w = np.asarray(self.weights, dtype=np.float64)
        if w.shape != (a.shape[0],):
            raise ValueError("weights must match the atom count")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        if abs(float(w.sum()) - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1")
        a.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "atoms", a)
        object.__setattr__(self, "weights", w)

    @property
    def state_dim(self) -> int:
        return self.atoms.shape[1]


def local_empirical_measure(
    traj: Trajectory, w: Word, t: float
) -> EmpiricalMeasure:
    """Equal-mass atoms at the states of all fine-level descendants of the
    coarse cell K_w at time t (weights k^-l, a probability measure)."""
    if w.k != traj.k:
        raise ValueError("alphabet sizes differ")
    ell = traj.level - len(w)
    if ell < 0:
        raise ValueError("word is longer than the trajectory level")
    ti = np.flatnonzero(np.isclose(traj.times, t, rtol=0.0, atol=1e-12))
    if len(ti) != 1:
        raise ValueError(f"time {t} is not on the trajectory grid")
    n = traj.k**ell
    start = w.index * n
    atoms = traj.values[ti[0], start : start + n]
    return EmpiricalMeasure(atoms, np.full(n, 1.0 / n))


def bl_distance_proxy(a: EmpiricalMeasure, b: EmpiricalMeasure) -> float:
    """1-Wasserstein distance, an upper bound for the bounded-Lipschitz
    distance (test functions with Lipschitz constant <= 1).

    Scalar states: sorted quantile coupling (arbitrary weights).  Vector
    states: exact assignment for equal atom counts <= 512 with uniform
    weights; anything else is unsupported.
    """
    if a.state_dim != b.state_dim:
        raise ValueError("state dimensions differ")
    if a.state_dim == 1:
        return float(
            wasserstein_distance(
                a.atoms[:, 0], b.atoms[:, 0], a.weights, b.weights
            )
        )
    na, nb = len(a.weights), len(b.weights)
    uniform = np.allclose(a.weights, 1.0 / na, atol=1e-12) and np.allclose(
        b.weights, 1.0 / nb, atol=1e-12
    )
    if na != nb or na > 512 or not uniform:
        raise ValueError(
            "vector-state transport needs equal uniform atom counts <= 512"
        )
    cost = cdist(a.atoms, b.atoms)
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].mean())


@dataclass(frozen=True)
class VlasovConvergenceTable:
    """nu-integrated W1 proxies between successive local-refinement levels."""

    times: np.ndarray
    ell_pairs: tuple
    seeds: tuple
    distances: np.ndarray  # (n_seeds, n_pairs, n_times)


def vlasov_self_convergence(
    meas: SelfSimilarMeasure,
    model_builder,
    kernel,
    init_sampler,
    m: int,
    ells,
    T: float,
    dt: float,
    seeds,
    sublevel: int = 2,
    output_stride: int = 10,
) -> VlasovConvergenceTable:
    """Empirical-measure self-convergence across local refinement levels.

    For each seed and each l, the level-(m+l) system starts from states drawn
    i.i.d. within every coarse cell by ``init_sampler(rng, coarse_index, n)``;
    ``model_builder(level)`` supplies the model.  The reported distance at
    time t is the nu-weighted sum over coarse cells of the W1 proxy between
    the local empirical measures at successive l.
    """
    ells = sorted(int(e) for e in ells)
    if len(ells) < 2:
        raise ValueError("need at least two refinement levels")
    if any(e < 1 for e in ells):
        raise ValueError("refinement levels must be >= 1")
    seeds = tuple(int(s) for s in seeds)
    if not seeds:
        raise ValueError("need at least one seed")
    k = meas.k
    coarse_masses = meas.weights(m)
    kms = {
        ell: project_kernel(meas, kernel, m + ell, sublevel) for ell in ells
    }
    couplings = {ell: assemble_deterministic(kms[ell], meas) for ell in ells}

    times = None
    all_rows = []
    for seed in seeds:
        trajs = {}
        for ell in ells:
            rng = np.random.Generator(
                np.random.Philox(np.random.SeedSequence(entropy=(seed, ell)))
            )
            n_fine = k**ell
            blocks = [
                np.asarray(init_sampler(rng, ci, n_fine), dtype=np.float64).reshape(
                    n_fine, -1
                )
                for ci in range(k**m)
            ]
            init = PiecewiseConstantField(k, m + ell, np.vstack(blocks))
            model = model_builder(m + ell)
            if model.state_dim != 1:
                raise ValueError(
                    "the self-convergence table currently handles scalar states"
                )
            trajs[ell] = integrate_ips(
                model, couplings[ell], init, T, dt, output_stride
            )
        times = trajs[ells[0]].times
        row = []
        for lo, hi in zip(ells[:-1], ells[1:]):
            tl, th = trajs[lo], trajs[hi]
            per_time = np.empty(len(times))
            for ti in range(len(times)):
                acc = np.empty(k**m)
                for ci in range(k**m):
                    lo_block = tl.values[ti, ci * k**lo : (ci + 1) * k**lo, 0]
                    hi_block = th.values[ti, ci * k**hi : (ci + 1) * k**hi, 0]
                    acc[ci] = wasserstein_distance(lo_block, hi_block)
                per_time[ti] = float(pairwise_sum(coarse_masses * acc))
            row.append(per_time)
        all_rows.append(row)
    dists = np.array(all_rows)  # (n_seeds, n_pairs, n_times)
    return VlasovConvergenceTable(
        times=times,
        ell_pairs=tuple(zip(ells[:-1], ells[1:])),
        seeds=seeds,
        distances=dists,
    )
