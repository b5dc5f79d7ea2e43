"""Closed-form pair probabilities for the three-apparatus experiment.

Each apparatus ``j`` is rotated by an angle ``theta_j``.  A pair of
apparatuses ``(j, k)`` yields outcomes ``(z_j, z_k)`` in ``{-1, +1}**2``
with probability ``sin(d)**2 / 2`` on agreement and ``cos(d)**2 / 2`` on
disagreement, where ``d`` is the effective angle difference after the
particle convention and correlation sign have been applied.

Everything here is a pure function of immutable inputs.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

__all__ = [
    "Convention",
    "Correlation",
    "AngleConfig",
    "PairDistribution",
    "HiddenVariableModel",
    "UndefinedConditionalError",
    "OUTCOMES",
    "PAIRS",
    "pair_distribution",
    "single_marginal",
    "conditional_pair",
    "agreement_probability",
    "expected_product",
    "covariance",
    "conditional_expectation",
    "induced_pair_distribution",
    "lambda_expectation",
]

#: Outcome order used by every 4-vector in this package: (-,-), (-,+), (+,-), (+,+).
OUTCOMES: tuple[tuple[int, int], ...] = ((-1, -1), (-1, 1), (1, -1), (1, 1))

#: The three apparatus pairs, in the order (1,2), (1,3), (2,3).
PAIRS: tuple[tuple[int, int], ...] = ((1, 2), (1, 3), (2, 3))


class UndefinedConditionalError(ValueError):
    """Conditioning on an outcome that has zero probability."""


class Convention(str, enum.Enum):
    """How an apparatus angle maps to the angle entering the probabilities."""

    PHOTON = "photon"      # vartheta = theta
    ELECTRON = "electron"  # vartheta = theta / 2


class Correlation(str, enum.Enum):
    NEGATIVE = "negative"
    POSITIVE = "positive"  # every difference d becomes pi/2 - d


@dataclass(frozen=True)
class AngleConfig:
    """Apparatus angles (radians) plus the particle/correlation conventions."""

    theta1: float = 0.0
    theta2: float = 0.0
    theta3: float = 0.0
    convention: Convention = Convention.PHOTON
    correlation: Correlation = Correlation.NEGATIVE

    def __post_init__(self):
        for name in ("theta1", "theta2", "theta3"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        object.__setattr__(self, "convention", Convention(self.convention))
        object.__setattr__(self, "correlation", Correlation(self.correlation))

    @classmethod
    def from_degrees(cls, theta1=0.0, theta2=0.0, theta3=0.0, **kwargs) -> "AngleConfig":
        return cls(math.radians(theta1), math.radians(theta2), math.radians(theta3), **kwargs)

    def theta(self, j: int) -> float:
        return (self.theta1, self.theta2, self.theta3)[_check_index(j) - 1]

    def vartheta(self, j: int) -> float:
        """Angle of apparatus ``j`` after the particle convention."""
        th = self.theta(j)
        if self.convention is Convention.ELECTRON:
            return th / 2
        return th

    def difference(self, j: int, k: int) -> float:
        """Effective difference ``vartheta_k - vartheta_j`` entering the probabilities."""
        delta = self.vartheta(k) - self.vartheta(j)
        if self.correlation is Correlation.POSITIVE:
            delta = math.pi / 2 - delta
        return delta


@dataclass(frozen=True)
class PairDistribution:
    """Joint law of ``(Z_j, Z_k)`` over ``{-1,+1}**2``.

    ``p`` holds the four probabilities in :data:`OUTCOMES` order.  Entries
    may be floats or :class:`fractions.Fraction` for exact work.
    """

    p: tuple
    pair: tuple[int, int]

    def __post_init__(self):
        if len(self.p) != 4:
            raise ValueError("a pair distribution has exactly four entries")
        j, k = self.pair
        _check_index(j)
        _check_index(k)
        if j == k:
            raise ValueError("pair must involve two distinct apparatuses")
        object.__setattr__(self, "p", tuple(self.p))
        object.__setattr__(self, "pair", (j, k))

    @classmethod
    def from_mapping(cls, probs: Mapping[tuple[int, int], object], pair: tuple[int, int]):
        return cls(tuple(probs.get(o, 0) for o in OUTCOMES), pair)

    def __getitem__(self, outcome: tuple[int, int]):
        return self.p[OUTCOMES.index(_outcome(outcome))]

    def as_dict(self) -> dict[tuple[int, int], object]:
        return dict(zip(OUTCOMES, self.p))

    def total(self):
        return sum(self.p)

    def swapped(self) -> "PairDistribution":
        """The same law seen as ``(Z_k, Z_j)``."""
        pmm, pmp, ppm, ppp = self.p
        return PairDistribution((pmm, ppm, pmp, ppp), (self.pair[1], self.pair[0]))

    def prob(self, values: Mapping[int, int]):
        """Probability of ``{Z_j = values[j], Z_k = values[k]}`` keyed by apparatus index."""
        j, k = self.pair
        return self[(values[j], values[k])]


def _check_index(j: int) -> int:
    if j not in (1, 2, 3):
        raise ValueError(f"apparatus index must be 1, 2 or 3, got {j!r}")
    return j


def _outcome(outcome) -> tuple[int, int]:
    a, b = outcome
    if a not in (-1, 1) or b not in (-1, 1):
        raise ValueError(f"outcomes must be -1 or +1, got {outcome!r}")
    return (a, b)


def pair_distribution(config: AngleConfig, pair: tuple[int, int]) -> PairDistribution:
    """Quantum joint probabilities for apparatus pair ``(j, k)``."""
    j, k = pair
    if j == k:
        raise ValueError("no self-pair distribution is defined (j == k)")
    delta = config.difference(j, k)
    agree = math.sin(delta) ** 2 / 2
    disagree = math.cos(delta) ** 2 / 2
    return PairDistribution((agree, disagree, disagree, agree), (j, k))


def single_marginal(d: PairDistribution, side: str, z: int):
    """``P(Z = z)`` for the ``"first"`` or ``"second"`` variable of the pair."""
    if z not in (-1, 1):
        raise ValueError("z must be -1 or +1")
    if side == "first":
        return d[(z, -1)] + d[(z, 1)]
    if side == "second":
        return d[(-1, z)] + d[(1, z)]
    raise ValueError("side must be 'first' or 'second'")


def conditional_pair(d: PairDistribution, given_second: int) -> dict[int, object]:
    """``P(Z_j = . | Z_k = given_second)`` as a map ``z_j -> probability``."""
    marginal = single_marginal(d, "second", given_second)
    if marginal == 0:
        raise UndefinedConditionalError(
            f"P(Z_{d.pair[1]} = {given_second:+d}) is zero; the conditional is undefined"
        )
    return {zj: d[(zj, given_second)] / marginal for zj in (-1, 1)}


def agreement_probability(d: PairDistribution):
    return d[(-1, -1)] + d[(1, 1)]


def expected_product(d: PairDistribution):
    """``E[Z_j Z_k]``; for the quantum law this is ``-cos(2 * delta)``."""
    return sum(zj * zk * p for (zj, zk), p in zip(OUTCOMES, d.p))


def covariance(d: PairDistribution):
    mean_j = sum(z * single_marginal(d, "first", z) for z in (-1, 1))
    mean_k = sum(z * single_marginal(d, "second", z) for z in (-1, 1))
    return expected_product(d) - mean_j * mean_k


def conditional_expectation(d: PairDistribution, given_second: int):
    """``E[Z_j | Z_k = given_second]``."""
    cond = conditional_pair(d, given_second)
    return cond[1] - cond[-1]


@dataclass(frozen=True)
class HiddenVariableModel:
    """A finite hidden-state model.

    ``weights[i]`` is the probability of hidden state ``i`` and
    ``outcomes[j][i]`` the value of ``Z_j`` in that state, for ``j`` in 1..3.
    Use :class:`~fractions.Fraction` weights for exact arithmetic.
    """

    weights: tuple
    outcomes: Mapping[int, Sequence[int]]

    def __post_init__(self):
        weights = tuple(self.weights)
        if not weights:
            raise ValueError("a hidden-variable model needs at least one state")
        if any(w < 0 for w in weights):
            raise ValueError("weights must be nonnegative")
        total = sum(weights)
        exact = all(isinstance(w, (int, Fraction)) for w in weights)
        if (total != 1) if exact else abs(total - 1) > 1e-12:
            raise ValueError(f"weights must sum to 1, got {total}")
        outcomes = {}
        for j, values in dict(self.outcomes).items():
            values = tuple(values)
            if len(values) != len(weights):
                raise ValueError(f"outcomes for apparatus {j} do not match the number of states")
            if any(v not in (-1, 1) for v in values):
                raise ValueError("hidden-variable outcomes must be -1 or +1")
            outcomes[_check_index(j)] = values
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "outcomes", outcomes)


def induced_pair_distribution(h: HiddenVariableModel, pair: tuple[int, int]) -> PairDistribution:
    """Pair law obtained by summing state weights over each outcome cell."""
    j, k = pair
    cells = {o: 0 for o in OUTCOMES}
    for w, u, v in zip(h.weights, h.outcomes[j], h.outcomes[k]):
        cells[(u, v)] += w
    return PairDistribution.from_mapping(cells, (j, k))


def lambda_expectation(h: HiddenVariableModel, pair: tuple[int, int]):
    """``E[Z_j Z_k]`` summed directly over hidden states."""
    j, k = pair
    return sum(w * u * v for w, u, v in zip(h.weights, h.outcomes[j], h.outcomes[k]))
