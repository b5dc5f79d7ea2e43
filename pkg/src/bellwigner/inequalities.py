"""Wigner and Bell margins, and angle-grid scans of where they fail.

A *margin* is ``lhs - rhs`` of an inequality: negative means violated.
Float grids use :data:`VIOLATION_TOL`; cells within it of zero count as
satisfied because every inequality here is non-strict.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .quantum_model import (
    AngleConfig,
    Convention,
    Correlation,
    PairDistribution,
    agreement_probability,
    expected_product,
    pair_distribution,
)
from .triple_feasibility import MARGINAL_LAYOUT, TRIPLE_OUTCOMES, PairLabelError, interval_batch

__all__ = [
    "VIOLATION_TOL",
    "Arrangement",
    "WIGNER_FIRST",
    "WIGNER_SECOND",
    "all_arrangements",
    "wigner_margin",
    "wigner_from_triple",
    "bell_margin",
    "bell_margin_angles",
    "generalized_q_margin",
    "bell_wigner_decomposition",
    "grid_size",
    "ViolationMap",
    "scan_grid",
]

VIOLATION_TOL = 1e-9
_E_TOL = 1e-12


@dataclass(frozen=True)
class Arrangement:
    """Variable order ``(j, k, l)`` and chosen outcomes ``(z_j, z_k, z_l)``.

    The Wigner margin for it is
    ``P_jk(z_j, z_k) + P_kl(-z_k, z_l) - P_jl(z_j, z_l)``.
    """

    perm: tuple[int, int, int]
    signs: tuple[int, int, int] = (1, 1, 1)

    def __post_init__(self):
        if sorted(self.perm) != [1, 2, 3]:
            raise ValueError(f"perm must be a permutation of (1, 2, 3), got {self.perm}")
        if any(s not in (-1, 1) for s in self.signs) or len(self.signs) != 3:
            raise ValueError("signs must be three values in {-1, +1}")
        object.__setattr__(self, "perm", tuple(self.perm))
        object.__setattr__(self, "signs", tuple(self.signs))

    def terms(self) -> tuple[tuple[dict, int], ...]:
        """The three ``({apparatus: value}, coefficient)`` terms of the margin."""
        j, k, l = self.perm
        zj, zk, zl = self.signs
        return (({j: zj, k: zk}, 1), ({k: -zk, l: zl}, 1), ({j: zj, l: zl}, -1))


# cos^2(t3)/2 + sin^2(t2 - t3)/2 - sin^2(t2)/2
WIGNER_FIRST = Arrangement((1, 3, 2), (1, -1, 1))
# cos^2(t3 - t2)/2 + sin^2(t2)/2 - sin^2(t3)/2
WIGNER_SECOND = Arrangement((1, 2, 3), (1, 1, 1))


def all_arrangements() -> Iterator[Arrangement]:
    for perm in itertools.permutations((1, 2, 3)):
        for signs in itertools.product((-1, 1), repeat=3):
            yield Arrangement(perm, signs)


def wigner_margin(d_jk: PairDistribution, d_kl: PairDistribution, d_jl: PairDistribution,
                  a: Arrangement):
    """Wigner margin from three pair laws; the laws may be in either orientation."""
    total = 0
    for d, (values, coeff) in zip((d_jk, d_kl, d_jl), a.terms()):
        if set(d.pair) != set(values):
            raise PairLabelError(
                f"arrangement {a.perm} needs pair {tuple(sorted(values))}, got {d.pair}"
            )
        total += coeff * d.prob(values)
    return total


def wigner_from_triple(q, a: Arrangement):
    """``q(z_j, z_k, -z_l) + q(-z_j, -z_k, z_l)`` for a triple law ``q``.

    Equals :func:`wigner_margin` on the marginals of ``q``.
    """
    j, k, l = a.perm
    zj, zk, zl = a.signs

    def entry(values: dict[int, int]):
        return q[(values[1], values[2], values[3])]

    return entry({j: zj, k: zk, l: -zl}) + entry({j: -zj, k: -zk, l: zl})


def _sign(sign) -> int:
    if sign in ("-", -1):
        return -1
    if sign in ("+", 1):
        return 1
    raise ValueError(f"sign must be '+' or '-', got {sign!r}")


def bell_margin(E12, E23, E13, sign="-"):
    """``(1 -/+ E13) - |E12 -/+ E23|``; the ``"-"`` form is the usual Bell inequality."""
    for name, e in (("E12", E12), ("E23", E23), ("E13", E13)):
        if not -1 - _E_TOL <= e <= 1 + _E_TOL:
            raise ValueError(f"{name}={e} is not an expected product of +/-1 variables")
    s = _sign(sign)
    return (1 + s * E13) - abs(E12 + s * E23)


def bell_margin_angles(theta2: float, theta3: float,
                       convention: Convention | str = Convention.PHOTON,
                       correlation: Correlation | str = Correlation.NEGATIVE,
                       sign="-") -> float:
    """Bell margin from quantum expectations with ``theta1 = 0``.

    For photons with negative correlation and ``sign="-"`` this is
    ``1 + cos(2*t3) - |cos(2*(t2 - t3)) - cos(2*t2)|``.
    """
    cfg = AngleConfig(0.0, theta2, theta3, convention, correlation)
    e = {pair: expected_product(pair_distribution(cfg, pair)) for pair in ((1, 2), (2, 3), (1, 3))}
    return bell_margin(e[(1, 2)], e[(2, 3)], e[(1, 3)], sign)


def _product_values(indices: Sequence[int]) -> np.ndarray:
    return np.array([math.prod(z[i - 1] for i in indices) for z in TRIPLE_OUTCOMES], dtype=float)


def generalized_q_margin(Q, pair_choice=((1, 2), (2, 3)), sign="-"):
    """Both sides of the Bell bound written with ``|Q|`` for an arbitrary signed ``Q``.

    ``Q`` has a trailing axis of eight values over the triple outcomes.
    ``pair_choice`` names the two variables as products of ``Z`` indices;
    the default ``Z1*Z2`` and ``Z2*Z3`` gives Bell's substitution.  Returns
    ``(lhs, rhs)`` with

        lhs = sum |Q| +/- sum X*Y*|Q|,   rhs = |sum X*Q +/- sum Y*Q|

    and ``lhs >= rhs`` for every ``Q``.
    """
    Q = np.asarray(Q, dtype=float)
    if Q.shape[-1] != 8:
        raise ValueError("Q must have eight entries along its last axis")
    s = _sign(sign)
    x = _product_values(pair_choice[0])
    y = _product_values(pair_choice[1])
    absq = np.abs(Q)
    lhs = absq.sum(axis=-1) + s * (absq @ (x * y))
    rhs = np.abs(Q @ x + s * (Q @ y))
    return lhs, rhs


def bell_wigner_decomposition(d12: PairDistribution, d23: PairDistribution, d13: PairDistribution):
    """Split the Bell ``"-"`` inequality into its two Wigner halves.

    ``1 - E13 - (E12 - E23) == 2 * w_a`` and ``1 - E13 + (E12 - E23) == 2 * w_b``.
    """
    c12, c23, c13 = (agreement_probability(d) for d in (d12, d23, d13))
    w_a = c23 - c12 + 1 - c13
    w_b = c12 - c23 + 1 - c13
    return w_a, w_b


def grid_size(theta_step: float) -> int:
    if not theta_step > 0:
        raise ValueError("theta_step must be positive")
    # tolerance keeps pi / (pi / n) == n from rounding up to n + 1
    return math.ceil(math.pi / theta_step - 1e-9)


@dataclass(frozen=True)
class ViolationMap:
    """Per-cell margins over ``(theta2, theta3)`` in ``[0, pi)**2`` with ``theta1 = 0``.

    Axis 0 is ``theta2`` and axis 1 is ``theta3``.  ``bell_margin`` is the
    ``"-"`` Bell form; ``bell_margin_plus`` the ``"+"`` form and
    ``bell_margin_min`` the smaller of the two.  ``wigner_min`` is the least
    margin over all 48 Wigner arrangements.
    """

    theta_step: float
    thetas: np.ndarray
    convention: Convention
    correlation: Correlation
    bell_margin: np.ndarray
    bell_margin_plus: np.ndarray
    wigner1_margin: np.ndarray
    wigner2_margin: np.ndarray
    wigner_min: np.ndarray
    t_lo: np.ndarray
    t_hi: np.ndarray
    residual: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return len(self.thetas)

    @property
    def bell_margin_min(self) -> np.ndarray:
        return np.minimum(self.bell_margin, self.bell_margin_plus)

    @property
    def feasible(self) -> np.ndarray:
        return self.t_lo <= self.t_hi + 1e-12

    def cell(self, i: int, j: int) -> dict:
        return {
            "theta2": float(self.thetas[i]),
            "theta3": float(self.thetas[j]),
            "bell_margin": float(self.bell_margin[i, j]),
            "bell_margin_plus": float(self.bell_margin_plus[i, j]),
            "wigner1_margin": float(self.wigner1_margin[i, j]),
            "wigner2_margin": float(self.wigner2_margin[i, j]),
            "wigner_min": float(self.wigner_min[i, j]),
            "feasible_interval_lo": float(self.t_lo[i, j]),
            "feasible_interval_hi": float(self.t_hi[i, j]),
            "feasible": bool(self.feasible[i, j]),
        }

    def union_disagreement(self, tol: float = VIOLATION_TOL) -> np.ndarray:
        """Cells where ``bell < 0`` differs from ``wigner1 < 0 or wigner2 < 0``.

        Boundary cells (any of the three margins within ``tol`` of zero) are
        never flagged.
        """
        margins = (self.bell_margin, self.wigner1_margin, self.wigner2_margin)
        boundary = np.logical_or.reduce([np.abs(m) <= tol for m in margins])
        bell = self.bell_margin < -tol
        wigner = (self.wigner1_margin < -tol) | (self.wigner2_margin < -tol)
        return (bell != wigner) & ~boundary


def _agreements(theta2, theta3, convention: Convention, correlation: Correlation):
    """Agreement/disagreement probability arrays for the pairs (1,2), (1,3), (2,3)."""
    angles = {1: np.zeros_like(theta2), 2: theta2, 3: theta3}
    if convention is Convention.ELECTRON:
        angles = {j: a / 2 for j, a in angles.items()}
    out = {}
    for j, k in ((1, 2), (1, 3), (2, 3)):
        delta = angles[k] - angles[j]
        if correlation is Correlation.POSITIVE:
            delta = np.pi / 2 - delta
        out[(j, k)] = (np.sin(delta) ** 2 / 2, np.cos(delta) ** 2 / 2)
    return out


def _pair_prob(tables, values: dict[int, int]):
    (a, za), (b, zb) = sorted(values.items())
    agree, disagree = tables[(a, b)]
    return agree if za == zb else disagree


def _arrangement_margin(tables, a: Arrangement):
    return sum(coeff * _pair_prob(tables, values) for values, coeff in a.terms())


def _scan_rows(thetas: np.ndarray, rows: slice, convention, correlation) -> dict[str, np.ndarray]:
    t2, t3 = np.meshgrid(thetas[rows], thetas, indexing="ij")
    tables = _agreements(t2, t3, convention, correlation)
    e = {pair: 2 * (agree - disagree) for pair, (agree, disagree) in tables.items()}
    bell = (1 - e[(1, 3)]) - np.abs(e[(1, 2)] - e[(2, 3)])
    bell_plus = (1 + e[(1, 3)]) - np.abs(e[(1, 2)] + e[(2, 3)])
    wmin = np.minimum.reduce([_arrangement_margin(tables, a) for a in all_arrangements()])
    b = np.stack([_pair_prob(tables, dict(zip(pair, outcome)))
                  for pair, outcome in MARGINAL_LAYOUT], axis=-1)
    lo, hi, residual = interval_batch(b)
    return {
        "bell_margin": bell,
        "bell_margin_plus": bell_plus,
        "wigner1_margin": _arrangement_margin(tables, WIGNER_FIRST),
        "wigner2_margin": _arrangement_margin(tables, WIGNER_SECOND),
        "wigner_min": wmin,
        "t_lo": lo,
        "t_hi": hi,
        "residual": residual,
    }


def scan_grid(theta_step: float,
              convention: Convention | str = Convention.PHOTON,
              correlation: Correlation | str = Correlation.NEGATIVE,
              threads: int = 1) -> ViolationMap:
    """Evaluate every margin and the feasibility interval on an ``n x n`` grid.

    Cell ``(i, j)`` sits at ``theta2 = i * step``, ``theta3 = j * step`` with
    ``n = ceil(pi / step)``.  Rows are split across ``threads`` workers; each
    worker fills its own slice, so the result does not depend on ``threads``.
    """
    n = grid_size(theta_step)
    convention = Convention(convention)
    correlation = Correlation(correlation)
    thetas = np.arange(n) * theta_step
    threads = max(1, int(threads))
    bounds = np.linspace(0, n, min(threads, n) + 1).astype(int)
    chunks = [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:])]
    if len(chunks) == 1:
        parts = [_scan_rows(thetas, chunks[0], convention, correlation)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda rows: _scan_rows(thetas, rows, convention, correlation), chunks))
    fields = {name: np.concatenate([p[name] for p in parts], axis=0) for name in parts[0]}
    return ViolationMap(theta_step, thetas, convention, correlation, **fields)
