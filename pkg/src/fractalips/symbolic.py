"""Finite words over a k-letter alphabet and Bernoulli cylinder measures.

Level-m words are the addressing scheme for everything downstream: cells of a
self-similar partition, piecewise-constant coefficients, and kernel matrix
rows/columns all use the same lexicographic order.  A word of length m is
equivalently a base-k integer (first symbol most significant), so child/parent
navigation is plain integer arithmetic: child j of index i is ``i*k + (j-1)``.

Symbols are 1-based in the public interface; the integer encoding is 0-based.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import BudgetExceededError

# Cap on k**m for any full-level enumeration, to prevent memory exhaustion.
DEFAULT_ENUMERATION_CAP = 1 << 24


def check_level_size(k: int, m: int, cap: int | None = None) -> int:
    """Return k**m after checking it against the enumeration cap."""
    if cap is None:
        cap = DEFAULT_ENUMERATION_CAP
    n = k**m
    if n > cap:
        raise BudgetExceededError(
            f"level size k^m = {k}^{m} = {n} exceeds the cap {cap}"
        )
    return n


@dataclass(frozen=True)
class Word:
    """A finite word over the alphabet {1, ..., k}.

    The empty word addresses the root cell (the whole attractor).
    """

    k: int
    symbols: tuple[int, ...] = ()

    def __post_init__(self):
        if self.k < 2:
            raise ValueError(f"alphabet size must be >= 2, got {self.k}")
        syms = tuple(int(s) for s in self.symbols)
        object.__setattr__(self, "symbols", syms)
        for s in syms:
            if not 1 <= s <= self.k:
                raise ValueError(f"symbol {s} outside alphabet [1, {self.k}]")

    def __len__(self) -> int:
        return len(self.symbols)

    def __iter__(self):
        return iter(self.symbols)

    @property
    def level(self) -> int:
        return len(self.symbols)

    @property
    def index(self) -> int:
        """Base-k integer encoding; integer order equals lexicographic order."""
        idx = 0
        for s in self.symbols:
            idx = idx * self.k + (s - 1)
        return idx

    @classmethod
    def from_index(cls, k: int, level: int, index: int) -> "Word":
        if not 0 <= index < k**level:
            raise ValueError(f"index {index} out of range for level {level}")
        digits = []
        for _ in range(level):
            index, r = divmod(index, k)
            digits.append(r + 1)
        return cls(k, tuple(reversed(digits)))

    def child(self, s: int) -> "Word":
        return Word(self.k, self.symbols + (s,))

    def parent(self) -> "Word":
        if not self.symbols:
            raise ValueError("the empty word has no parent")
        return Word(self.k, self.symbols[:-1])

    def concat(self, other: "Word") -> "Word":
        if other.k != self.k:
            raise ValueError("alphabet sizes differ")
        return Word(self.k, self.symbols + other.symbols)


def enumerate_level(k: int, m: int, cap: int | None = None) -> list[Word]:
    """All words of length m in lexicographic order (exactly k**m of them).

    This ordering is the canonical index map shared by every coefficient
    array in the package.
    """
    if k < 2:
        raise ValueError(f"alphabet size must be >= 2, got {k}")
    if m < 0:
        raise ValueError(f"level must be >= 0, got {m}")
    n = check_level_size(k, m, cap)
    return [Word.from_index(k, m, i) for i in range(n)]


def level_symbol_array(k: int, m: int, cap: int | None = None) -> np.ndarray:
    """(k**m, m) array of 1-based symbols, row i = word with index i.

    Vectorized companion of :func:`enumerate_level` for bulk arithmetic.
    """
    n = check_level_size(k, m, cap)
    if m == 0:
        return np.zeros((1, 0), dtype=np.int64)
    place = k ** np.arange(m - 1, -1, -1, dtype=np.int64)
    return (np.arange(n, dtype=np.int64)[:, None] // place[None, :]) % k + 1


def shift(w: Word) -> Word:
    """Drop the first symbol (the one-sided shift on finite words)."""
    if len(w) == 0:
        raise ValueError("cannot shift the empty word")
    return Word(w.k, w.symbols[1:])


def word_metric(w: Word, v: Word) -> float:
    """k**(-L) where L is the length of the longest common prefix.

    An ultrametric on truncated symbol sequences; returns 1.0 when the first
    symbols already differ.
    """
    if len(w) == 0 or len(v) == 0:
        raise ValueError("word_metric requires nonempty prefixes")
    if w.k != v.k:
        raise ValueError("alphabet sizes differ")
    common = 0
    for a, b in zip(w.symbols, v.symbols):
        if a != b:
            break
        common += 1
    return float(w.k) ** (-common)


@dataclass(frozen=True)
class ProbabilityVector:
    """Strictly positive weights summing to one.

    Weights may be exact :class:`fractions.Fraction` values, in which case all
    cylinder measures derived from them are exact rationals.
    """

    weights: tuple = field(default=())

    def __post_init__(self):
        ws = tuple(self.weights)
        object.__setattr__(self, "weights", ws)
        if len(ws) < 2:
            raise ValueError("need at least two weights")
        for w in ws:
            if not w > 0:
                raise ValueError(f"weights must be positive, got {w}")
        total = sum(ws)
        if abs(float(total) - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {float(total)}, not 1")

    @property
    def k(self) -> int:
        return len(self.weights)

    @classmethod
    def uniform(cls, k: int, exact: bool = False) -> "ProbabilityVector":
        if exact:
            return cls(tuple(Fraction(1, k) for _ in range(k)))
        return cls(tuple(1.0 / k for _ in range(k)))

    @property
    def is_uniform(self) -> bool:
        return all(abs(float(w) - 1.0 / self.k) <= 1e-15 for w in self.weights)

    def as_array(self) -> np.ndarray:
        return np.array([float(w) for w in self.weights], dtype=np.float64)


def _weight_seq(p) -> Sequence:
    if isinstance(p, ProbabilityVector):
        return p.weights
    return tuple(p)


def cylinder_measure(p, w: Word):
    """Bernoulli measure of the cylinder [w]: the product of the symbol weights.

    Exact when the weights are rationals; the empty word has measure 1.
    """
    ws = _weight_seq(p)
    if len(w) and max(w.symbols) > len(ws):
        raise ValueError("word symbols exceed the probability vector length")
    out = 1
    for s in w.symbols:
        out = out * ws[s - 1]
    return out


def level_weights(p, m: int, cap: int | None = None) -> np.ndarray:
    """All k**m cylinder measures at level m, in lexicographic order.

    Built as an m-fold Kronecker power, so the first symbol is the most
    significant index digit, matching :func:`enumerate_level`.
    """
    if isinstance(p, ProbabilityVector):
        arr = p.as_array()
    else:
        arr = np.asarray([float(x) for x in p], dtype=np.float64)
    check_level_size(len(arr), m, cap)
    out = np.ones(1, dtype=np.float64)
    for _ in range(m):
        out = np.kron(out, arr)
    return out


def similarity_dimension_from_ratios(ratios: Sequence[float]) -> float:
    """Solve sum(r_i**s) = 1 for s > 0."""
    ratios = [float(r) for r in ratios]
    if any(not 0 < r < 1 for r in ratios):
        raise ValueError("ratios must lie in (0, 1)")
    if len(set(ratios)) == 1:
        return math.log(len(ratios)) / math.log(1.0 / ratios[0])
    from scipy.optimize import brentq

    def h(s):
        return sum(r**s for r in ratios) - 1.0

    # sum r^s is decreasing in s; bracket the root
    hi = 1.0
    while h(hi) > 0:
        hi *= 2.0
    return brentq(h, 1e-12, hi, xtol=1e-14)
