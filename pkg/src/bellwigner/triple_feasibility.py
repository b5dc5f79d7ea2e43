"""Triple joint laws consistent with three pairwise marginals.

Twelve pair probabilities constrain the eight values of
``P(Z1, Z2, Z3)`` through a 0/1 incidence matrix of rank 7.  The
remaining freedom is the single parameter ``t = P(+,+,+)``; every other
entry is affine in ``t`` with slope +1 or -1.  Whether a genuine
(nonnegative) triple law exists is therefore an interval question.

Arithmetic is generic: float marginals give float results, and
:class:`fractions.Fraction` marginals keep every step exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from .quantum_model import PairDistribution

__all__ = [
    "TRIPLE_OUTCOMES",
    "MARGINAL_LAYOUT",
    "INCIDENCE",
    "REDUCER",
    "REDUCED_INCIDENCE",
    "FREE_INDEX",
    "InconsistentMarginalsError",
    "PairLabelError",
    "MarginalVector",
    "TripleDistribution",
    "ReductionResult",
    "TripleFamily",
    "FeasibilityInterval",
    "build_system",
    "row_reduce",
    "matrix_rank",
    "reduce_system",
    "solution_family",
    "feasibility_interval",
    "best_triple",
    "interval_batch",
]

#: Order of the eight triple outcomes (z1, z2, z3).
TRIPLE_OUTCOMES: tuple[tuple[int, int, int], ...] = (
    (-1, -1, -1), (-1, -1, 1), (-1, 1, -1), (-1, 1, 1),
    (1, -1, -1), (1, -1, 1), (1, 1, -1), (1, 1, 1),
)

#: (pair, outcome) addressed by each entry of a marginal vector.
MARGINAL_LAYOUT: tuple[tuple[tuple[int, int], tuple[int, int]], ...] = (
    ((1, 2), (-1, -1)), ((1, 2), (1, 1)),
    ((1, 3), (-1, -1)), ((1, 3), (1, 1)),
    ((2, 3), (-1, -1)), ((2, 3), (1, 1)),
    ((1, 2), (-1, 1)), ((1, 2), (1, -1)),
    ((1, 3), (-1, 1)), ((1, 3), (1, -1)),
    ((2, 3), (-1, 1)), ((2, 3), (1, -1)),
)

INCIDENCE = np.array([
    [1, 1, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 1, 1],
    [1, 0, 1, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 1, 0, 1],
    [1, 0, 0, 0, 1, 0, 0, 0],
    [0, 0, 0, 1, 0, 0, 0, 1],
    [0, 0, 1, 1, 0, 0, 0, 0],
    [0, 0, 0, 0, 1, 1, 0, 0],
    [0, 1, 0, 1, 0, 0, 0, 0],
    [0, 0, 0, 0, 1, 0, 1, 0],
    [0, 1, 0, 0, 0, 1, 0, 0],
    [0, 0, 1, 0, 0, 0, 1, 0],
], dtype=np.int64)

REDUCER = np.array([
    [0, 0, 0, 0, 1, 1, 0, -1, -1, 0, 1, 0],
    [0, 0, 0, 0, 0, -1, 0, 0, 1, 0, 0, 0],
    [0, 0, 0, 0, 0, -1, 0, 1, 1, -1, -1, 1],
    [0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, -1, 0, 1, 1, 0, -1, 0],
    [0, 0, 0, 0, 0, 1, 0, 0, -1, 0, 1, 0],
    [0, 0, 0, 0, 0, 1, 0, -1, -1, 1, 1, 0],
    [1, 0, 0, 0, -1, 0, 0, 1, 0, 0, -1, 0],
    [0, 1, 0, 0, 0, -1, 0, 1, 1, -1, -1, 0],
    [0, 0, 1, 0, -1, 0, 0, 0, 0, 1, 0, -1],
    [0, 0, 0, 1, 0, -1, 0, 0, 1, 0, -1, 0],
    [0, 0, 0, 0, 0, 0, 1, -1, -1, 1, 1, -1],
], dtype=np.int64)

REDUCED_INCIDENCE = np.array([
    [1, 0, 0, 0, 0, 0, 0, 1],
    [0, 1, 0, 0, 0, 0, 0, -1],
    [0, 0, 1, 0, 0, 0, 0, -1],
    [0, 0, 0, 1, 0, 0, 0, 1],
    [0, 0, 0, 0, 1, 0, 0, -1],
    [0, 0, 0, 0, 0, 1, 0, 1],
    [0, 0, 0, 0, 0, 0, 1, 1],
] + [[0] * 8] * 5, dtype=np.int64)

#: Index of the free parameter t = P(+,+,+) in :data:`TRIPLE_OUTCOMES`.
FREE_INDEX = 7

_RANK = 7
_CONSISTENCY_TOL = 1e-6
_NONEMPTY_TOL = 1e-12


class PairLabelError(ValueError):
    """Pair distributions passed in the wrong slots."""


class InconsistentMarginalsError(ValueError):
    """The twelve marginals admit no triple solution, even a signed one."""

    def __init__(self, residual):
        super().__init__(f"pairwise marginals are inconsistent (residual {float(residual):.3g})")
        self.residual = residual


@dataclass(frozen=True)
class MarginalVector:
    """The twelve pair probabilities in :data:`MARGINAL_LAYOUT` order."""

    b: tuple

    def __post_init__(self):
        if len(self.b) != 12:
            raise ValueError("a marginal vector has twelve entries")
        object.__setattr__(self, "b", tuple(self.b))

    @classmethod
    def from_pairs(cls, d12: PairDistribution, d13: PairDistribution, d23: PairDistribution):
        by_pair = {(1, 2): d12, (1, 3): d13, (2, 3): d23}
        return cls(tuple(by_pair[pair][outcome] for pair, outcome in MARGINAL_LAYOUT))

    def pair_entries(self, pair: tuple[int, int]) -> dict[tuple[int, int], object]:
        return {o: v for (p, o), v in zip(MARGINAL_LAYOUT, self.b) if p == pair}


@dataclass(frozen=True)
class TripleDistribution:
    """Eight signed values over :data:`TRIPLE_OUTCOMES`; may be a quasi-distribution."""

    q: tuple

    def __post_init__(self):
        if len(self.q) != 8:
            raise ValueError("a triple distribution has eight entries")
        object.__setattr__(self, "q", tuple(self.q))

    @property
    def quasi(self) -> bool:
        return any(v < 0 for v in self.q)

    def __getitem__(self, outcome: tuple[int, int, int]):
        return self.q[TRIPLE_OUTCOMES.index(tuple(outcome))]

    def total(self):
        return sum(self.q)

    def min_entry(self):
        return min(self.q)

    def marginal(self, pair: tuple[int, int]) -> PairDistribution:
        """Sum out the third variable."""
        j, k = pair
        cells = {}
        for z, v in zip(TRIPLE_OUTCOMES, self.q):
            key = (z[j - 1], z[k - 1])
            cells[key] = cells.get(key, 0) + v
        return PairDistribution.from_mapping(cells, pair)


@dataclass(frozen=True)
class ReductionResult:
    reduced_matrix: np.ndarray
    reduced_rhs: tuple
    rank: int
    consistency_residual: object


@dataclass(frozen=True)
class FeasibilityInterval:
    """Range of ``t = P(+,+,+)`` for which every triple entry is nonnegative."""

    lo: object
    hi: object

    @property
    def nonempty(self) -> bool:
        return self.lo <= self.hi + _NONEMPTY_TOL

    @property
    def midpoint(self):
        return (self.lo + self.hi) / 2


@dataclass(frozen=True)
class TripleFamily:
    """Affine family ``q_i(t) = offsets[i] + slopes[i] * t`` solving the marginal system."""

    offsets: tuple
    slopes: tuple

    def __call__(self, t) -> TripleDistribution:
        return TripleDistribution(tuple(c + s * t for c, s in zip(self.offsets, self.slopes)))

    def min_entry(self, t):
        return min(c + s * t for c, s in zip(self.offsets, self.slopes))


def build_system(d12: PairDistribution, d13: PairDistribution, d23: PairDistribution):
    """Return the incidence matrix and the marginal vector for three pair laws."""
    for d, label in ((d12, (1, 2)), (d13, (1, 3)), (d23, (2, 3))):
        if d.pair != label:
            raise PairLabelError(f"expected a distribution for pair {label}, got {d.pair}")
    return INCIDENCE.copy(), MarginalVector.from_pairs(d12, d13, d23)


def row_reduce(matrix) -> tuple[list[list[Fraction]], list[list[Fraction]], int]:
    """Exact reduced row echelon form.

    Returns ``(rref, transform, rank)`` with ``transform @ matrix == rref``.
    """
    rows = [[Fraction(int(v)) if not isinstance(v, Fraction) else v for v in row] for row in matrix]
    n_rows, n_cols = len(rows), len(rows[0])
    transform = [[Fraction(int(i == j)) for j in range(n_rows)] for i in range(n_rows)]
    pivot_row = 0
    for col in range(n_cols):
        pivot = next((r for r in range(pivot_row, n_rows) if rows[r][col] != 0), None)
        if pivot is None:
            continue
        rows[pivot_row], rows[pivot] = rows[pivot], rows[pivot_row]
        transform[pivot_row], transform[pivot] = transform[pivot], transform[pivot_row]
        scale = rows[pivot_row][col]
        rows[pivot_row] = [v / scale for v in rows[pivot_row]]
        transform[pivot_row] = [v / scale for v in transform[pivot_row]]
        for r in range(n_rows):
            factor = rows[r][col]
            if r == pivot_row or factor == 0:
                continue
            rows[r] = [a - factor * b for a, b in zip(rows[r], rows[pivot_row])]
            transform[r] = [a - factor * b for a, b in zip(transform[r], transform[pivot_row])]
        pivot_row += 1
        if pivot_row == n_rows:
            break
    return rows, transform, pivot_row


def matrix_rank(matrix) -> int:
    return row_reduce(matrix)[2]


@lru_cache(maxsize=32)
def _cached_rank(rows: tuple) -> int:
    return matrix_rank(rows)


def _apply(matrix: np.ndarray, vector: Sequence) -> tuple:
    return tuple(sum(int(a) * v for a, v in zip(row, vector) if a) for row in matrix)


def reduce_system(A, B: MarginalVector) -> ReductionResult:
    """Left-multiply ``[A | B]`` by the fixed reducer and check the dependent rows.

    Raises :class:`InconsistentMarginalsError` when the last five reduced
    right-hand sides are not (numerically) zero.
    """
    A = np.asarray(A, dtype=np.int64)
    reduced = REDUCER @ A
    rhs = _apply(REDUCER, B.b)
    residual = max(abs(v) for v in rhs[_RANK:])
    if residual > _CONSISTENCY_TOL:
        raise InconsistentMarginalsError(residual)
    return ReductionResult(reduced, rhs, _cached_rank(tuple(map(tuple, A.tolist()))), residual)


def solution_family(B: MarginalVector) -> TripleFamily:
    """All signed triple laws reproducing ``B``, parametrised by ``t = P(+,+,+)``."""
    result = reduce_system(INCIDENCE, B)
    zero = result.reduced_rhs[0] * 0
    offsets = tuple(result.reduced_rhs[:_RANK]) + (zero,)
    slopes = tuple(-int(result.reduced_matrix[i, FREE_INDEX]) for i in range(_RANK)) + (1,)
    return TripleFamily(offsets, slopes)


def feasibility_interval(family: TripleFamily) -> FeasibilityInterval:
    """Intersect the eight half-lines ``{t : q_i(t) >= 0}``."""
    lower = [-c / s for c, s in zip(family.offsets, family.slopes) if s > 0]
    upper = [-c / s for c, s in zip(family.offsets, family.slopes) if s < 0]
    return FeasibilityInterval(max(lower), min(upper))


def _breakpoints(family: TripleFamily) -> list:
    lines = list(zip(family.offsets, family.slopes))
    points = []
    for i, (c1, s1) in enumerate(lines):
        for c2, s2 in lines[i + 1:]:
            if s1 != s2:
                points.append((c2 - c1) / (s1 - s2))
    return points


def best_triple(family: TripleFamily, interval: FeasibilityInterval | None = None) -> tuple[object, TripleDistribution]:
    """A representative triple law and the parameter that produced it.

    Feasible families give the interval midpoint.  Otherwise ``t`` maximises
    the smallest entry; that maximum of a concave piecewise-linear function
    sits on one of its breakpoints, so those are searched exhaustively.
    """
    if interval is None:
        interval = feasibility_interval(family)
    if interval.nonempty:
        t = interval.midpoint
    else:
        candidates = sorted(_breakpoints(family))
        t = max(candidates, key=lambda c: (family.min_entry(c), -c))
    return t, family(t)


def interval_batch(B: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorised feasibility interval for marginal vectors stacked on the last axis.

    Returns ``(lo, hi, residual)`` arrays with the batch shape of ``B``.
    """
    B = np.asarray(B, dtype=float)
    rhs = B @ REDUCER.T.astype(float)
    residual = np.abs(rhs[..., _RANK:]).max(axis=-1)
    slopes = np.append(-REDUCED_INCIDENCE[:_RANK, FREE_INDEX], 1)
    offsets = np.concatenate([rhs[..., :_RANK], np.zeros(B.shape[:-1] + (1,))], axis=-1)
    bounds = -offsets / slopes
    lo = np.where(slopes > 0, bounds, -np.inf).max(axis=-1)
    hi = np.where(slopes < 0, bounds, np.inf).min(axis=-1)
    return lo, hi, residual
