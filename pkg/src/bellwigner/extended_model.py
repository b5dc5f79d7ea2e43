"""Three-valued outcomes: ``Z = 0`` records a missed detection.

With ``Z_j`` in ``{-1, 0, +1}`` the Bell bound
``1 +/- E(Z_j Z_l) >= |E(Z_j Z_k) +/- E(Z_k Z_l)|`` holds pointwise and so
for every genuine distribution on the 27 cells.  This module builds such
distributions from per-configuration conditionals, evaluates the bound,
and enumerates the whole grid ``{k/D}`` of the 27-cell simplex.

The enumeration works in integers: for a tuple of counts summing to ``D``
the quantity ``D * (1 - E13 - |E12 - E23|)`` is an integer, so no
rounding can misplace a boundary-zero case.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping

import numba
import numpy as np

from .quantum_model import OUTCOMES, PAIRS

__all__ = [
    "CELLS",
    "FULL_MODE_LIMIT",
    "ExtendedTripleDistribution",
    "ExtendedCounts",
    "Histogram",
    "EnumerationResult",
    "EnumerationRefused",
    "extended_expected_product",
    "conditional_expected_product",
    "tower_expected_product",
    "compose_from_conditionals",
    "recover_conditionals",
    "bell_margin_extended",
    "detection_sum_margin",
    "composition_count",
    "iter_compositions",
    "enumerate_simplex",
    "extended_estimates",
]

#: The 27 outcomes ``(z1, z2, z3)`` in lexicographic order.
CELLS: tuple[tuple[int, int, int], ...] = tuple(itertools.product((-1, 0, 1), repeat=3))

#: Largest denominator accepted in full enumeration mode.
FULL_MODE_LIMIT = 10

_N_CELLS = len(CELLS)
_CELL_INDEX = {c: i for i, c in enumerate(CELLS)}
# z_j * z_k per cell, columns (1,2), (1,3), (2,3)
_PRODUCTS = np.array([[c[0] * c[1], c[0] * c[2], c[1] * c[2]] for c in CELLS], dtype=np.int64)


def _is_exact(values) -> bool:
    return all(isinstance(v, (int, Fraction)) for v in values)


@dataclass(frozen=True)
class ExtendedTripleDistribution:
    """Probabilities over :data:`CELLS` (floats or Fractions)."""

    p: tuple

    def __post_init__(self):
        if len(self.p) != _N_CELLS:
            raise ValueError("an extended distribution has 27 entries")
        object.__setattr__(self, "p", tuple(self.p))

    @classmethod
    def from_mapping(cls, probs: Mapping[tuple[int, int, int], object]) -> "ExtendedTripleDistribution":
        unknown = set(probs) - set(CELLS)
        if unknown:
            raise ValueError(f"cells outside {{-1,0,1}}^3: {sorted(unknown)}")
        return cls(tuple(probs.get(c, 0) for c in CELLS))

    @classmethod
    def point_mass(cls, cell) -> "ExtendedTripleDistribution":
        return cls.from_mapping({tuple(cell): 1})

    def __getitem__(self, cell):
        return self.p[_CELL_INDEX[tuple(cell)]]

    def total(self):
        return sum(self.p)

    def marginal(self, index: int, value: int):
        """``P(Z_index = value)``."""
        return sum(p for c, p in zip(CELLS, self.p) if c[index - 1] == value)


def _pair_column(pair) -> int:
    try:
        return PAIRS.index(tuple(sorted(pair)))
    except ValueError:
        raise ValueError(f"pair must be two distinct indices from 1..3, got {pair!r}") from None


def extended_expected_product(d: ExtendedTripleDistribution, pair):
    """``E[Z_j Z_k]``; cells with a zero in either position contribute nothing."""
    col = _pair_column(pair)
    return sum(int(_PRODUCTS[i, col]) * p for i, p in enumerate(d.p) if _PRODUCTS[i, col])


def _third(pair) -> int:
    return ({1, 2, 3} - set(pair)).pop()


def conditional_expected_product(d: ExtendedTripleDistribution, pair, given: int):
    """``E[Z_j Z_k | Z_l = given]`` with ``l`` the index not in ``pair``."""
    l = _third(pair)
    mass = d.marginal(l, given)
    if mass == 0:
        raise ZeroDivisionError(f"P(Z_{l} = {given}) is zero")
    j, k = pair
    num = sum(c[j - 1] * c[k - 1] * p for c, p in zip(CELLS, d.p) if c[l - 1] == given)
    return num / mass


def tower_expected_product(d: ExtendedTripleDistribution, pair):
    """``sum_z E[Z_j Z_k | Z_l = z] * P(Z_l = z)`` over values with positive mass."""
    l = _third(pair)
    total = 0
    for z in (-1, 0, 1):
        mass = d.marginal(l, z)
        if mass:
            total += conditional_expected_product(d, pair, z) * mass
    return total


def compose_from_conditionals(cond: Mapping[tuple[int, int], Mapping], config_probs) -> ExtendedTripleDistribution:
    """Joint law from per-configuration conditionals and configuration weights.

    ``cond[(j, k)]`` maps ``(z_j, z_k)`` in ``{-1,+1}**2`` to
    ``P(z_j, z_k | Z_l = 0)``; ``config_probs`` are ``P(Z_l = 0)`` for the
    configurations in :data:`PAIRS` order.  Each configuration's mass lands
    on cells ``(z_j, z_k, 0)``; cells with three detections get nothing and
    whatever weight is left over goes to ``(0, 0, 0)``.
    """
    config_probs = tuple(config_probs)
    if len(config_probs) != 3 or any(w < 0 for w in config_probs):
        raise ValueError("config_probs must be three nonnegative weights")
    exact = _is_exact(config_probs)
    remainder = 1 - sum(config_probs)
    if remainder < (0 if exact else -1e-12):
        raise ValueError("configuration probabilities sum to more than 1")
    cells: dict[tuple[int, int, int], object] = {}
    for pair, weight in zip(PAIRS, config_probs):
        table = cond[pair]
        total = sum(table.get(o, 0) for o in OUTCOMES)
        exact_table = _is_exact(table.values())
        if set(table) - set(OUTCOMES) or any(v < 0 for v in table.values()) \
                or ((total != 1) if exact_table else abs(total - 1) > 1e-12):
            raise ValueError(f"conditional table for {pair} is not a distribution on {{-1,+1}}^2")
        l = _third(pair)
        for (zj, zk), v in table.items():
            cell = [0, 0, 0]
            cell[pair[0] - 1], cell[pair[1] - 1], cell[l - 1] = zj, zk, 0
            cells[tuple(cell)] = v * weight
    cells[(0, 0, 0)] = max(remainder, 0 * remainder)
    return ExtendedTripleDistribution.from_mapping(cells)


def recover_conditionals(d: ExtendedTripleDistribution) -> dict[tuple[int, int], dict]:
    """Invert :func:`compose_from_conditionals` for configurations with positive weight."""
    out = {}
    for pair in PAIRS:
        l = _third(pair)
        block = {}
        for zj, zk in OUTCOMES:
            cell = [0, 0, 0]
            cell[pair[0] - 1], cell[pair[1] - 1], cell[l - 1] = zj, zk, 0
            block[(zj, zk)] = d[tuple(cell)]
        weight = sum(block.values())
        if weight:
            out[pair] = {o: v / weight for o, v in block.items()}
    return out


def bell_margin_extended(d: ExtendedTripleDistribution, sign="-", order=(1, 2, 3)):
    """``(1 +/- E_jl) - |E_jk +/- E_kl|`` for a genuine distribution."""
    if any(p < 0 for p in d.p):
        raise ValueError("negative entries: use the triple feasibility tools for quasi-distributions")
    s = {"-": -1, "+": 1, -1: -1, 1: 1}[sign]
    j, k, l = order
    e_jl = extended_expected_product(d, (j, l))
    e_jk = extended_expected_product(d, (j, k))
    e_kl = extended_expected_product(d, (k, l))
    return (1 + s * e_jl) - abs(e_jk + s * e_kl)


def detection_sum_margin(p1_0, p2_0, p3_0):
    """``1 - (P(Z1=0) + P(Z2=0) + P(Z3=0))``."""
    for v in (p1_0, p2_0, p3_0):
        if not 0 <= v <= 1:
            raise ValueError(f"{v} is not a probability")
    return 1 - (p1_0 + p2_0 + p3_0)


# --------------------------------------------------------------------------
# simplex enumeration


class EnumerationRefused(ValueError):
    """Full enumeration requested beyond :data:`FULL_MODE_LIMIT`."""


def composition_count(total: int, parts: int = _N_CELLS) -> int:
    """Number of nonnegative integer ``parts``-tuples summing to ``total``."""
    return math.comb(total + parts - 1, parts - 1)


def iter_compositions(total: int, parts: int = _N_CELLS):
    """Nonnegative ``parts``-tuples summing to ``total`` in ascending lexicographic order."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in iter_compositions(total - first, parts - 1):
            yield (first,) + rest


@numba.njit(nogil=True, cache=True)
def _enumerate_tail(first, total, w12, w13, w23, hist):
    """Visit every composition whose first coordinate is ``first``.

    ``hist[m + 2*total]`` counts tuples with margin numerator ``m``.
    Returns the number of tuples visited.
    """
    m = w12.shape[0]
    last = m - 1
    rem = total - first
    s12 = first * w12[0]
    s13 = first * w13[0]
    s23 = first * w23[0]
    # inner cells 1..last; start at (0, ..., 0, rem)
    a = np.zeros(m, dtype=np.int64)
    a[last] = rem
    s12 += rem * w12[last]
    s13 += rem * w13[last]
    s23 += rem * w23[last]
    r = last if rem > 0 else 0
    visited = 0
    while True:
        margin = total - s13 - abs(s12 - s23)
        hist[margin + 2 * total] += 1
        visited += 1
        if r <= 1:
            break
        v = a[r]
        a[r] = 0
        a[r - 1] += 1
        a[last] = v - 1
        s12 += w12[r - 1] - v * w12[r] + (v - 1) * w12[last]
        s13 += w13[r - 1] - v * w13[r] + (v - 1) * w13[last]
        s23 += w23[r - 1] - v * w23[r] + (v - 1) * w23[last]
        r = last if v > 1 else r - 1
    return visited


def _enumerate_python(first, total, hist, consumer):
    visited = 0
    for rest in iter_compositions(total - first, _N_CELLS - 1):
        counts = (first,) + rest
        s = np.asarray(counts, dtype=np.int64) @ _PRODUCTS
        margin = total - int(s[1]) - abs(int(s[0]) - int(s[2]))
        hist[margin + 2 * total] += 1
        visited += 1
        if consumer is not None:
            consumer(counts, margin)
    return visited


@dataclass(frozen=True)
class Histogram:
    """Counts of Bell-expression values in left-closed bins ``[lo + i*w, lo + (i+1)*w)``."""

    bin_width: Fraction
    lo: Fraction
    bins: dict[int, int]
    min_value: Fraction | None
    max_value: Fraction | None

    @property
    def total(self) -> int:
        return sum(self.bins.values())

    def rows(self) -> list[tuple[Fraction, Fraction, int]]:
        """``(bin_lo, bin_hi, count)`` for every bin from the first to the last occupied one."""
        if not self.bins:
            return []
        first, last = min(self.bins), max(self.bins)
        return [(self.lo + i * self.bin_width, self.lo + (i + 1) * self.bin_width, self.bins.get(i, 0))
                for i in range(first, last + 1)]

    def to_csv(self) -> str:
        lines = ["bin_lo,bin_hi,count"]
        for lo, hi, count in self.rows():
            lines.append(f"{_fmt_fraction(lo)},{_fmt_fraction(hi)},{count}")
        return "\n".join(lines) + "\n"


def _fmt_fraction(x: Fraction) -> str:
    return f"{float(x):.12g}"


@dataclass(frozen=True)
class EnumerationResult:
    tuples: int
    denominator: int
    min_margin_numerator: int
    max_margin_numerator: int
    margin_counts: dict[int, int] = field(repr=False)
    histogram: Histogram = field(repr=False)

    @property
    def min_margin(self) -> Fraction:
        return Fraction(self.min_margin_numerator, self.denominator)

    @property
    def violations(self) -> int:
        return sum(c for m, c in self.margin_counts.items() if m < 0)

    def summary_csv(self) -> str:
        return ("tuples,min_margin_numerator,denominator\n"
                f"{self.tuples},{self.min_margin_numerator},{self.denominator}\n")


def _build_histogram(margin_counts: dict[int, int], denominator: int,
                     bin_width: Fraction, lo: Fraction) -> Histogram:
    bins: dict[int, int] = {}
    for m, count in margin_counts.items():
        index = math.floor((Fraction(m, denominator) - lo) / bin_width)
        bins[index] = bins.get(index, 0) + count
    values = [Fraction(m, denominator) for m in margin_counts]
    return Histogram(bin_width, lo, dict(sorted(bins.items())),
                     min(values) if values else None, max(values) if values else None)


def _sample_compositions(total: int, count: int, seed: int) -> np.ndarray:
    """Uniform random compositions via sorted distinct cut points (stars and bars)."""
    from .experiment_sim import make_rng

    rng = make_rng(seed)
    slots = total + _N_CELLS - 1
    out = np.empty((count, _N_CELLS), dtype=np.int64)
    for i in range(count):
        bars = np.sort(rng.choice(slots, size=_N_CELLS - 1, replace=False))
        edges = np.concatenate(([-1], bars, [slots]))
        out[i] = np.diff(edges) - 1
    return out


def enumerate_simplex(denominator: int, mode: str = "full", sample_count: int = 0, seed: int = 0,
                      threads: int = 1, consumer: Callable | None = None,
                      bin_width=Fraction(1, 10), lo=Fraction(-2)) -> EnumerationResult:
    """Evaluate ``1 - E13 - |E12 - E23|`` on 27-cell distributions with entries ``k/denominator``.

    ``mode="full"`` visits every composition of ``denominator`` into 27 parts
    (``C(denominator + 26, 26)`` of them), split by first coordinate into
    independent sub-enumerations that ``threads`` workers share.
    ``mode="sample"`` draws ``sample_count`` uniform compositions.  A
    ``consumer(counts, margin_numerator)`` callback forces the slow Python
    path and is meant for small denominators.
    """
    if denominator < 1:
        raise ValueError("denominator must be at least 1")
    bin_width, lo = Fraction(bin_width), Fraction(lo)
    hist = np.zeros(4 * denominator + 1, dtype=np.int64)
    if mode == "full":
        if denominator > FULL_MODE_LIMIT:
            raise EnumerationRefused(
                f"full enumeration at denominator {denominator} would visit "
                f"{composition_count(denominator):,} tuples; the limit is denominator {FULL_MODE_LIMIT}"
            )
        firsts = range(denominator + 1)
        if consumer is not None:
            tuples = sum(_enumerate_python(f, denominator, hist, consumer) for f in firsts)
        else:
            w12, w13, w23 = (np.ascontiguousarray(_PRODUCTS[:, c]) for c in range(3))
            parts = [np.zeros_like(hist) for _ in firsts]

            def run(f):
                return _enumerate_tail(f, denominator, w12, w13, w23, parts[f])

            if threads > 1:
                with ThreadPoolExecutor(max_workers=threads) as pool:
                    tuples = sum(pool.map(run, firsts))
            else:
                tuples = sum(map(run, firsts))
            for part in parts:
                hist += part
    elif mode == "sample":
        if sample_count < 1:
            raise ValueError("sample mode needs a positive sample_count")
        samples = _sample_compositions(denominator, sample_count, seed)
        s = samples @ _PRODUCTS
        margins = denominator - s[:, 1] - np.abs(s[:, 0] - s[:, 2])
        np.add.at(hist, margins + 2 * denominator, 1)
        tuples = sample_count
        if consumer is not None:
            for counts, margin in zip(samples, margins):
                consumer(tuple(int(c) for c in counts), int(margin))
    else:
        raise ValueError(f"mode must be 'full' or 'sample', got {mode!r}")
    margin_counts = {int(i) - 2 * denominator: int(c) for i, c in enumerate(hist) if c}
    return EnumerationResult(
        tuples=int(tuples),
        denominator=denominator,
        min_margin_numerator=min(margin_counts),
        max_margin_numerator=max(margin_counts),
        margin_counts=margin_counts,
        histogram=_build_histogram(margin_counts, denominator, bin_width, lo),
    )


# --------------------------------------------------------------------------
# estimators with missed detections

_EXT_OUTCOMES: tuple[tuple[int, int], ...] = tuple(itertools.product((-1, 0, 1), repeat=2))


@dataclass(frozen=True)
class ExtendedCounts:
    """Counts per configuration over ``{-1,0,+1}**2``; ``n`` has shape ``(3, 3, 3)``.

    Index ``n[c, a + 1, b + 1]`` for configuration ``PAIRS[c]`` and outcome ``(a, b)``.
    """

    n: np.ndarray

    def __post_init__(self):
        n = np.array(self.n, dtype=np.int64).reshape(3, 3, 3)
        if (n < 0).any():
            raise ValueError("counts must be nonnegative")
        n.setflags(write=False)
        object.__setattr__(self, "n", n)

    @classmethod
    def from_mapping(cls, counts: Mapping) -> "ExtendedCounts":
        n = np.zeros((3, 3, 3), dtype=np.int64)
        for (pair, (a, b)), value in counts.items():
            n[PAIRS.index(tuple(pair)), a + 1, b + 1] = value
        return cls(n)

    @property
    def N(self) -> int:
        return int(self.n.sum())

    def config_total(self, pair) -> int:
        return int(self.n[_pair_column(pair)].sum())

    def correlation_sum(self, pair) -> int:
        block = self.n[_pair_column(pair)]
        return int(block[0, 0] - block[0, 2] - block[2, 0] + block[2, 2])


def extended_estimates(ec: ExtendedCounts, pair) -> tuple[Fraction, Fraction, Fraction]:
    """``(conditional, configuration, global)`` estimates for one configuration.

    conditional = S / n_jk, configuration = n_jk / N, global = S / N, so
    ``conditional * configuration == global`` exactly.
    """
    n_jk = ec.config_total(pair)
    if n_jk == 0:
        raise ZeroDivisionError(f"configuration {tuple(pair)} has no trials")
    s = ec.correlation_sum(pair)
    return Fraction(s, n_jk), Fraction(n_jk, ec.N), Fraction(s, ec.N)
