"""Integration against self-similar measures.

Two routes: quasi-Monte-Carlo over the level-m address nodes x_w = f_w(x0)
(measure-weighted, so a constant integrates to exactly its value), and a
Monte-Carlo estimator driven by the ergodic average along a random symbol
sequence.  Cell averages are QMC on a sub-attractor and feed the Galerkin
projections.

Callables are evaluated on point arrays of shape (N, d), or (N,) when d = 1,
and may return (N,) scalars or (N, s) vectors.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import BudgetExceededError
from .geometry import (
    IFS,
    attractor_points,
    compose,
    default_anchor,
    fixed_point,
    has_common_linear_part,
    natural_probability_weights,
)
from .symbolic import ProbabilityVector, Word, check_level_size, level_weights

# Budget on pointwise function evaluations (env override for large runs).
DEFAULT_EVAL_BUDGET = 1 << 27
EVAL_BUDGET_ENV = "FRACTALIPS_MAX_EVALS"


def eval_budget() -> int:
    raw = os.environ.get(EVAL_BUDGET_ENV)
    if raw is None:
        return DEFAULT_EVAL_BUDGET
    try:
        return int(raw)
    except ValueError as exc:
        raise ValueError(f"{EVAL_BUDGET_ENV}={raw!r} is not an integer") from exc


def check_eval_budget(n: int) -> None:
    budget = eval_budget()
    if n > budget:
        raise BudgetExceededError(
            f"{n} function evaluations exceed the budget {budget} "
            f"(override with {EVAL_BUDGET_ENV})"
        )


def pairwise_sum(x: np.ndarray, axis: int = 0) -> np.ndarray:
    """Sum with a fixed pairwise (binary tree) reduction order.

    Zero-pads to the next power of two and folds halves, so the result is
    bit-stable for a given length regardless of any outer partitioning.
    """
    x = np.asarray(x, dtype=np.float64)
    x = np.moveaxis(x, axis, 0)
    n = x.shape[0]
    if n == 0:
        return np.zeros(x.shape[1:], dtype=np.float64)
    size = 1 << (n - 1).bit_length()
    if size != n:
        pad = np.zeros((size - n,) + x.shape[1:], dtype=np.float64)
        x = np.concatenate([x, pad], axis=0)
    while size > 1:
        half = size // 2
        x = x[:half] + x[half:size]
        size = half
    return x[0]


def evaluate_on_points(phi, pts: np.ndarray) -> np.ndarray:
    """Evaluate phi on an (N, d) point array; returns (N,) or (N, s).

    Points are passed as (N,) when d == 1.  Falls back to a per-point loop
    if the callable does not broadcast.
    """
    n, d = pts.shape
    arg = pts[:, 0] if d == 1 else pts
    try:
        vals = np.asarray(phi(arg), dtype=np.float64)
    except Exception:
        vals = None
    if vals is not None and vals.ndim >= 1 and vals.shape[0] == n and vals.ndim <= 2:
        return vals
    rows = [np.asarray(phi(a), dtype=np.float64) for a in arg]
    return np.array(rows, dtype=np.float64)


@dataclass(frozen=True)
class SelfSimilarMeasure:
    """An IFS together with a probability vector p.

    Cylinder masses are the Bernoulli products nu(K_w) = p_{w_1} ... p_{w_n},
    which realizes the stationary (self-similar) measure exactly on cells.
    The ``natural`` flag is set when p is uniform.
    """

    ifs: IFS
    p: ProbabilityVector
    natural: bool = False

    def __post_init__(self):
        if self.p.k != self.ifs.k:
            raise ValueError("probability vector length must equal the map count")
        object.__setattr__(self, "natural", self.p.is_uniform)

    @classmethod
    def uniform(cls, ifs: IFS) -> "SelfSimilarMeasure":
        return cls(ifs, ProbabilityVector.uniform(ifs.k))

    @classmethod
    def natural_measure(cls, ifs: IFS) -> "SelfSimilarMeasure":
        """p_i = r_i**s; coincides with uniform for equal-ratio systems."""
        return cls(ifs, ProbabilityVector(tuple(natural_probability_weights(ifs))))

    @property
    def k(self) -> int:
        return self.ifs.k

    def weights(self, m: int, cap: int | None = None) -> np.ndarray:
        return level_weights(self.p, m, cap)

    def cylinder_mass(self, w: Word):
        from .symbolic import cylinder_measure

        return cylinder_measure(self.p, w)

    def anchor(self) -> np.ndarray:
        return default_anchor(self.ifs)


@dataclass(frozen=True)
class QuadratureConfig:
    """Which integration route to use and at what resolution."""

    method: str = "qmc"
    level_or_samples: int = 10
    seed: int | None = None
    tail: int = 40
    anchor: np.ndarray | None = None

    def __post_init__(self):
        if self.method not in ("qmc", "mc"):
            raise ValueError(f"method must be 'qmc' or 'mc', got {self.method!r}")
        if self.level_or_samples < 1:
            raise ValueError("level_or_samples must be >= 1")


def _measure_mean(vals: np.ndarray, meas: SelfSimilarMeasure, m: int):
    """Reduce node values to the measure-weighted average over level m.

    The uniform case divides a pairwise sum by the node count, so constants
    (with short mantissas) come out exactly.
    """
    if meas.natural:
        n = meas.k**m
        if vals.ndim == 1:
            return float(pairwise_sum(vals)) / n
        return pairwise_sum(vals, axis=0) / n
    w = meas.weights(m)
    if vals.ndim == 1:
        return float(pairwise_sum(w * vals))
    return pairwise_sum(w[:, None] * vals)


def integrate_qmc(meas: SelfSimilarMeasure, phi, m: int, anchor=None):
    """sum_{|w|=m} nu(K_w) phi(f_w(anchor)).

    For the natural measure this is the uniform average over the level-m
    address nodes; a constant integrates exactly.  The anchor-induced bias is
    of order ratio**m * |anchor - mean(nu)| for affine integrands, so the
    fixed-point centroid is a good anchor for moment computations.
    """
    pts = attractor_points(meas.ifs, m, anchor)
    check_eval_budget(len(pts))
    vals = evaluate_on_points(phi, pts)
    return _measure_mean(vals, meas, m)


def _mc_window_points(ifs: IFS, symbols: np.ndarray, M: int, tail: int) -> np.ndarray:
    """(M, k, d) array: row j, slot i = f_{s_{j+1} .. s_{j+tail}}(p_i).

    p_i is the fixed point of f_i, so each entry is the exact projection of
    the word (window, i, i, i, ...); only the window length truncates the
    ergodic suffix.
    """
    k, d = ifs.k, ifs.dimension
    fps = np.array([fixed_point(f) for f in ifs.maps])  # (k, d)
    ts = np.array([f.translation for f in ifs.maps])  # (k, d)
    if has_common_linear_part(ifs) and np.allclose(
        ifs.maps[0].matrix, ifs.maps[0].ratio * np.eye(d), atol=1e-14
    ):
        # homothety fast path: f_w is r^tail * x + T with T a geometric
        # convolution of the window translations
        r = ifs.maps[0].ratio
        T = np.zeros((M, d))
        for l in range(tail - 1, -1, -1):
            T = r * T + ts[symbols[l : l + M] - 1]
        return (r**tail) * fps[None, :, :] + T[:, None, :]
    As = np.array([f.matrix for f in ifs.maps])  # (k, d, d)
    S = np.broadcast_to(fps[None, :, :], (M, k, d)).copy()
    for l in range(tail - 1, -1, -1):
        sel = symbols[l : l + M] - 1
        S = np.einsum("jab,jib->jia", As[sel], S) + ts[sel][:, None, :]
    return S


def integrate_mc(
    meas: SelfSimilarMeasure, phi, M: int, tail: int = 40, seed: int = 0
):
    """Ergodic Monte-Carlo estimate of the integral of phi.

    Draws a symbol string of length M + tail i.i.d. from p, slides a window
    of depth ``tail`` along it, and closes each window with every constant
    tail (i, i, ...) evaluated exactly at the fixed point of f_i:

        S_M = (1/(M k)) sum_j sum_i phi(f_{window_j}(fixed point of f_i))

    Deterministic for a given seed (counter-based Philox streams).  The
    window truncation error is of order ratio**tail * Lip(phi) * diam(K).
    """
    if M < 1:
        raise ValueError("need M >= 1")
    if tail < 1:
        raise ValueError("need tail >= 1")
    k = meas.k
    check_eval_budget(M * k)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    if meas.natural:
        symbols = rng.integers(1, k + 1, size=M + tail)
    else:
        symbols = rng.choice(np.arange(1, k + 1), size=M + tail, p=meas.p.as_array())
    pts = _mc_window_points(meas.ifs, symbols, M, tail)  # (M, k, d)
    flat = pts.reshape(M * k, meas.ifs.dimension)
    vals = evaluate_on_points(phi, flat)
    if vals.ndim == 1:
        return float(pairwise_sum(vals)) / (M * k)
    return pairwise_sum(vals, axis=0) / (M * k)


def cell_average(meas: SelfSimilarMeasure, phi, w: Word, sublevel: int, anchor=None):
    """The nu-average of phi over the cell K_w, via QMC on the sub-attractor.

    Equals integrate_qmc of phi o f_w at level ``sublevel`` under the same
    measure: the sub-cylinder weights already sum to one.
    """
    check_level_size(meas.k, len(w) + sublevel)
    if anchor is None:
        anchor = meas.anchor()
    sub = attractor_points(meas.ifs, sublevel, anchor)
    check_eval_budget(len(sub))
    fw = compose(meas.ifs, w)
    pts = fw(sub)
    vals = evaluate_on_points(phi, pts)
    return _measure_mean(vals, meas, sublevel)


def stationary_mean(meas: SelfSimilarMeasure) -> np.ndarray:
    """The exact mean of the stationary measure.

    Stationarity gives b = sum_i p_i f_i(b), a linear fixed-point equation
    solved directly: (I - sum p_i A_i) b = sum p_i t_i.
    """
    d = meas.ifs.dimension
    parr = meas.p.as_array()
    A = sum(p * f.matrix for p, f in zip(parr, meas.ifs.maps))
    t = sum(p * f.translation for p, f in zip(parr, meas.ifs.maps))
    return np.linalg.solve(np.eye(d) - A, t)


def stationarity_residual(meas: SelfSimilarMeasure, m: int) -> float:
    """Floating-point defect of nu(K_w) = p_{w_1} nu(K_{w_2..w_m}) over level m.

    Zero in exact arithmetic by the Bernoulli product formula; the returned
    value is pure rounding noise.
    """
    if m < 1:
        raise ValueError("need m >= 1")
    from .symbolic import level_symbol_array

    sym = level_symbol_array(meas.k, m)
    parr = meas.p.as_array()
    P = parr[sym - 1]  # (k^m, m)
    lhs = P[:, 0].copy()
    for col in range(1, m):
        lhs = lhs * P[:, col]
    if m == 1:
        rhs = P[:, 0]
    else:
        rest = P[:, 1].copy()
        for col in range(2, m):
            rest = rest * P[:, col]
        rhs = P[:, 0] * rest
    return float(np.max(np.abs(lhs - rhs)))
