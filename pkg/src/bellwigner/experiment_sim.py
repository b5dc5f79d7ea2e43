"""Counting experiments over the three apparatus configurations.

Each trial measures one pair ``(j, k)``.  Counts ``n[(j,k)][(a,b)]`` are
turned into probability and correlation estimates either over the grand
total ``N`` or over the configuration's own total ``n_jk``.  All
estimators return :class:`fractions.Fraction` so identities between them
hold exactly.

Random numbers come from numpy's Philox4x64 counter-based generator keyed
by the 64-bit seed, so a seed fixes the count table.
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .quantum_model import OUTCOMES, PAIRS, AngleConfig, pair_distribution

__all__ = [
    "MAX_TRIALS",
    "Normalization",
    "Assignment",
    "EmptyConfigurationError",
    "CountTable",
    "TrialConfig",
    "PairEstimate",
    "make_rng",
    "simulate_counts",
    "estimate_pair",
    "estimator_bell_check",
    "estimator_bell_check_batch",
    "configuration_probabilities",
    "estimated_bell_margin",
    "difference_estimates",
]

MAX_TRIALS = 2 ** 48
_CSV_HEADER = ("config", "zj", "zk", "count")


class Normalization(str, enum.Enum):
    GLOBAL_N = "global_N"
    PER_CONFIG_N = "per_config_n"


class EmptyConfigurationError(ZeroDivisionError):
    """An estimator's denominator is zero."""


def _config_index(pair) -> int:
    try:
        return PAIRS.index(tuple(pair))
    except ValueError:
        raise ValueError(f"configuration must be one of {PAIRS}, got {pair!r}") from None


def _config_label(pair) -> str:
    return f"{pair[0]}{pair[1]}"


@dataclass(frozen=True)
class CountTable:
    """Counts per configuration and outcome.

    ``n`` has shape ``(3, 4)``: rows follow :data:`PAIRS`, columns follow
    :data:`OUTCOMES`.
    """

    n: np.ndarray

    def __post_init__(self):
        n = np.array(self.n, dtype=np.int64).reshape(3, 4)
        if (n < 0).any():
            raise ValueError("counts must be nonnegative")
        n.setflags(write=False)
        object.__setattr__(self, "n", n)

    @classmethod
    def from_mapping(cls, counts: dict) -> "CountTable":
        """Build from ``{(pair, (a, b)): count}``; missing cells are zero."""
        n = np.zeros((3, 4), dtype=np.int64)
        for (pair, outcome), value in counts.items():
            n[_config_index(pair), OUTCOMES.index(tuple(outcome))] = value
        return cls(n)

    @property
    def N(self) -> int:
        return int(self.n.sum())

    def count(self, pair, outcome) -> int:
        return int(self.n[_config_index(pair), OUTCOMES.index(tuple(outcome))])

    def config_total(self, pair) -> int:
        return int(self.n[_config_index(pair)].sum())

    def correlation_sum(self, pair) -> int:
        """``n^{--} - n^{-+} - n^{+-} + n^{++}`` for one configuration."""
        mm, mp, pm, pp = (int(v) for v in self.n[_config_index(pair)])
        return mm - mp - pm + pp

    def __add__(self, other: "CountTable") -> "CountTable":
        return CountTable(self.n + other.n)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(_CSV_HEADER)
        for pair in PAIRS:
            for outcome in OUTCOMES:
                writer.writerow((_config_label(pair), outcome[0], outcome[1], self.count(pair, outcome)))
        writer.writerow(("TOTAL", "", "", self.N))
        return buf.getvalue()

    def write_csv(self, path) -> None:
        Path(path).write_text(self.to_csv(), encoding="utf-8")

    @classmethod
    def from_csv(cls, text: str) -> "CountTable":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or tuple(rows[0]) != _CSV_HEADER:
            raise ValueError("count table CSV must start with header config,zj,zk,count")
        counts, total = {}, None
        labels = {_config_label(p): p for p in PAIRS}
        for row in rows[1:]:
            if row[0] == "TOTAL":
                total = int(row[3])
                continue
            counts[(labels[row[0]], (int(row[1]), int(row[2])))] = int(row[3])
        table = cls.from_mapping(counts)
        if total is not None and total != table.N:
            raise ValueError(f"TOTAL row says {total} but the cells sum to {table.N}")
        return table


class Assignment(str, enum.Enum):
    EQUAL_SPLIT = "equal_split"
    RANDOM_UNIFORM = "random_uniform"
    WEIGHTED = "weighted"


@dataclass(frozen=True)
class TrialConfig:
    """How many trials, how they are spread over configurations, and the seed.

    ``weights`` (for :attr:`Assignment.WEIGHTED`) are ``(w12, w13, w23)``.
    """

    angles: AngleConfig
    n_trials: int
    assignment: Assignment = Assignment.EQUAL_SPLIT
    seed: int = 0
    weights: tuple[float, float, float] | None = None

    def __post_init__(self):
        object.__setattr__(self, "assignment", Assignment(self.assignment))
        if not 1 <= self.n_trials <= MAX_TRIALS:
            raise ValueError(f"n_trials must be in [1, 2**48], got {self.n_trials}")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.assignment is Assignment.WEIGHTED:
            if self.weights is None or len(self.weights) != 3:
                raise ValueError("weighted assignment needs three weights")
            if min(self.weights) < 0 or abs(sum(self.weights) - 1) > 1e-12:
                raise ValueError("weights must be nonnegative and sum to 1")


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def _config_sizes(tc: TrialConfig, rng: np.random.Generator) -> np.ndarray:
    if tc.assignment is Assignment.EQUAL_SPLIT:
        base, extra = divmod(tc.n_trials, 3)
        return np.array([base + (i < extra) for i in range(3)], dtype=np.int64)
    weights = (1 / 3, 1 / 3, 1 / 3) if tc.assignment is Assignment.RANDOM_UNIFORM else tc.weights
    return rng.multinomial(tc.n_trials, np.asarray(weights, dtype=float))


def simulate_counts(tc: TrialConfig) -> CountTable:
    """Draw a count table: configurations first, then outcomes per configuration."""
    rng = make_rng(tc.seed)
    sizes = _config_sizes(tc, rng)
    n = np.zeros((3, 4), dtype=np.int64)
    for i, pair in enumerate(PAIRS):
        probs = np.asarray(pair_distribution(tc.angles, pair).p, dtype=float)
        n[i] = rng.multinomial(int(sizes[i]), probs / probs.sum())
    return CountTable(n)


@dataclass(frozen=True)
class PairEstimate:
    pair: tuple[int, int]
    normalization: Normalization
    probabilities: dict
    expected_product: Fraction


def _denominator(ct: CountTable, pair, normalization: Normalization) -> int:
    if normalization is Normalization.GLOBAL_N:
        denom = ct.N
    else:
        denom = ct.config_total(pair)
    if denom == 0:
        what = "the table" if normalization is Normalization.GLOBAL_N else f"configuration {pair}"
        raise EmptyConfigurationError(f"no trials in {what}; {normalization.value} estimate undefined")
    return denom


def estimate_pair(ct: CountTable, pair, normalization=Normalization.PER_CONFIG_N) -> PairEstimate:
    normalization = Normalization(normalization)
    pair = PAIRS[_config_index(pair)]
    denom = _denominator(ct, pair, normalization)
    probs = {o: Fraction(ct.count(pair, o), denom) for o in OUTCOMES}
    return PairEstimate(pair, normalization, probs, Fraction(ct.correlation_sum(pair), denom))


def estimator_bell_check(ct: CountTable) -> tuple[int, int, int]:
    """``(N, rhs_plus, rhs_minus)`` with ``rhs = S13 +/- (S12 - S23)`` in exact integers.

    ``S_jk`` is the configuration's correlation sum.  ``N >= rhs`` for every
    table because ``|S_jk| <= n_jk``.
    """
    s12, s13, s23 = (ct.correlation_sum(p) for p in PAIRS)
    return ct.N, s13 + (s12 - s23), s13 - (s12 - s23)


def estimator_bell_check_batch(counts: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """:func:`estimator_bell_check` for a stack of ``(..., 3, 4)`` int64 tables."""
    counts = np.asarray(counts, dtype=np.int64)
    s = counts @ np.array([1, -1, -1, 1], dtype=np.int64)
    s12, s13, s23 = s[..., 0], s[..., 1], s[..., 2]
    return counts.sum(axis=(-2, -1)), s13 + (s12 - s23), s13 - (s12 - s23)


def configuration_probabilities(ct: CountTable) -> tuple[Fraction, Fraction, Fraction]:
    """``n_jk / N`` for the configurations in :data:`PAIRS` order."""
    if ct.N == 0:
        raise EmptyConfigurationError("N = 0; configuration probabilities undefined")
    return tuple(Fraction(ct.config_total(p), ct.N) for p in PAIRS)


def estimated_bell_margin(ct: CountTable, normalization=Normalization.PER_CONFIG_N) -> Fraction:
    """``1 - E13 - |E12 - E23|`` from estimated correlations."""
    e = {p: estimate_pair(ct, p, normalization).expected_product for p in PAIRS}
    return 1 - e[(1, 3)] - abs(e[(1, 2)] - e[(2, 3)])


def difference_estimates(ct: CountTable, first=(1, 2), second=(2, 3)) -> dict[str, Fraction]:
    """Candidate estimates of ``E[Z_a Z_b - Z_c Z_d]`` under each normalization.

    The per-configuration counts can be divided by ``n_first``, ``n_second``,
    their sum, or ``N``; ``per_config_difference`` is the difference of the
    two per-configuration estimates.  These disagree whenever
    ``n_first != n_second``.
    """
    s1, s2 = ct.correlation_sum(first), ct.correlation_sum(second)
    n1, n2 = ct.config_total(first), ct.config_total(second)
    out = {}
    if n1:
        out["over_n_first"] = Fraction(s1 - s2, n1)
    if n2:
        out["over_n_second"] = Fraction(s1 - s2, n2)
    if n1 + n2:
        out["pooled"] = Fraction(s1 - s2, n1 + n2)
    if ct.N:
        out["global_N"] = Fraction(s1 - s2, ct.N)
    if n1 and n2:
        out["per_config_difference"] = Fraction(s1, n1) - Fraction(s2, n2)
    return out
