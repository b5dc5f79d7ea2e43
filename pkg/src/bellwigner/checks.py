"""Randomized self-checks runnable from the command line.

Each suite draws seeded random inputs, tests one family of identities or
inequalities, and reports a :class:`CheckResult` per property.  These are
the same properties the test-suite covers, packaged so an installed tool
can verify itself without pytest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from . import experiment_sim as ex
from . import extended_model as xm
from . import inequalities as ie
from . import quantum_model as qm
from . import triple_feasibility as tf

__all__ = ["CheckResult", "SUITES", "run_suite"]


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        tail = f"  ({self.detail})" if self.detail else ""
        return f"{status} {self.suite}.{self.name}{tail}"


def _rng(seed: int) -> np.random.Generator:
    return ex.make_rng(seed)


def _random_config(rng, convention=None, correlation=None) -> qm.AngleConfig:
    th = rng.uniform(-2 * math.pi, 2 * math.pi, 3)
    conventions, correlations = list(qm.Convention), list(qm.Correlation)
    return qm.AngleConfig(*th,
                          convention=convention or conventions[rng.integers(2)],
                          correlation=correlation or correlations[rng.integers(2)])


def _random_fraction_simplex(rng, size: int, denominator: int = 60) -> list[Fraction]:
    cuts = np.sort(rng.integers(0, denominator + 1, size - 1))
    parts = np.diff(np.concatenate(([0], cuts, [denominator])))
    return [Fraction(int(p), denominator) for p in parts]


def _quantum(seed: int, n: int = 2000):
    rng = _rng(seed)
    worst_e = worst_m = worst_sym = 0.0
    for _ in range(n):
        cfg = _random_config(rng)
        for pair in qm.PAIRS:
            d = qm.pair_distribution(cfg, pair)
            delta = cfg.difference(*pair)
            worst_e = max(worst_e, abs(qm.expected_product(d) + math.cos(2 * delta)))
            for side in ("first", "second"):
                for z in (-1, 1):
                    worst_m = max(worst_m, abs(qm.single_marginal(d, side, z) - 0.5))
            pmm, pmp, ppm, ppp = d.p
            worst_sym = max(worst_sym, abs(pmm - ppp), abs(pmp - ppm), abs(d.total() - 1))
    yield "expectation_is_minus_cos", worst_e <= 1e-12, f"max error {worst_e:.2e}"
    yield "marginals_are_half", worst_m <= 1e-12, f"max error {worst_m:.2e}"
    yield "pair_symmetries", worst_sym <= 1e-12, f"max error {worst_sym:.2e}"

    rng = _rng(seed + 1)
    mismatches = 0
    for _ in range(200):
        states = int(rng.integers(1, 9))
        weights = _random_fraction_simplex(rng, states)
        outcomes = {j: [int(v) for v in rng.choice((-1, 1), states)] for j in (1, 2, 3)}
        h = qm.HiddenVariableModel(weights, outcomes)
        for pair in qm.PAIRS:
            if qm.lambda_expectation(h, pair) != qm.expected_product(qm.induced_pair_distribution(h, pair)):
                mismatches += 1
    yield "hidden_variable_reduction", mismatches == 0, f"{mismatches} mismatches"


def _inequalities(seed: int, n: int = 500):
    rng = _rng(seed)
    worst = math.inf
    decomposition = 0
    for _ in range(n):
        q = tf.TripleDistribution(rng.dirichlet(np.ones(8)))
        for a in ie.all_arrangements():
            worst = min(worst, ie.wigner_from_triple(q, a))
        d12, d13, d23 = (q.marginal(p) for p in qm.PAIRS)
        e12, e13, e23 = (qm.expected_product(d) for d in (d12, d13, d23))
        w_a, w_b = ie.bell_wigner_decomposition(d12, d23, d13)
        bell = ie.bell_margin(e12, e23, e13)
        if abs(bell - 2 * min(w_a, w_b)) > 1e-12:
            decomposition += 1
        worst = min(worst, bell, ie.bell_margin(e12, e23, e13, "+"))
    yield "genuine_laws_satisfy_all_margins", worst >= -1e-12, f"min margin {worst:.3g}"
    yield "bell_is_twice_min_wigner", decomposition == 0, f"{decomposition} mismatches"

    Q = rng.normal(size=(20000, 8))
    worst_q = math.inf
    for sign in ("-", "+"):
        lhs, rhs = ie.generalized_q_margin(Q, sign=sign)
        worst_q = min(worst_q, float((lhs - rhs).min()))
    yield "signed_vectors_satisfy_abs_bound", worst_q >= -1e-12, f"min lhs-rhs {worst_q:.3g}"

    vm = ie.scan_grid(math.pi / 90)
    bad = int(vm.union_disagreement().sum())
    yield "bell_region_is_wigner_union", bad == 0, f"{bad} cells disagree on a 90x90 grid"


def _feasibility(seed: int, n: int = 300):
    rng = _rng(seed)
    rank_ok = tf.matrix_rank(tf.INCIDENCE.tolist()) == 7
    reduced_ok = np.array_equal(tf.REDUCER @ tf.INCIDENCE, tf.REDUCED_INCIDENCE)
    yield "incidence_rank_is_seven", rank_ok
    yield "reducer_gives_reduced_matrix", reduced_ok
    worst_res = worst_fit = 0.0
    agree_bad = 0
    for _ in range(n):
        cfg = _random_config(rng)
        B = tf.MarginalVector.from_pairs(*(qm.pair_distribution(cfg, p) for p in qm.PAIRS))
        family = tf.solution_family(B)
        worst_res = max(worst_res, tf.reduce_system(tf.INCIDENCE, B).consistency_residual)
        t = rng.uniform(-1, 1)
        fitted = tf.INCIDENCE @ np.array(family(t).q, dtype=float)
        worst_fit = max(worst_fit, float(np.abs(fitted - np.array(B.b)).max()))
        feasible = tf.feasibility_interval(family).nonempty
        e = {p: qm.expected_product(qm.pair_distribution(cfg, p)) for p in qm.PAIRS}
        bell = min(ie.bell_margin(e[(1, 2)], e[(2, 3)], e[(1, 3)], s) for s in "-+")
        if abs(bell) > 1e-9 and feasible != (bell >= 0):
            agree_bad += 1
    yield "dependent_rows_vanish", worst_res <= 1e-10, f"max residual {worst_res:.2e}"
    yield "family_reproduces_marginals", worst_fit <= 1e-10, f"max error {worst_fit:.2e}"
    yield "feasible_iff_bell_holds", agree_bad == 0, f"{agree_bad} mismatches"


def _experiment(seed: int, n: int = 100):
    rng = _rng(seed)
    tables = rng.integers(0, 1000, size=(20000, 3, 4))
    N, plus, minus = ex.estimator_bell_check_batch(tables)
    random_bad = int(((N < plus) | (N < minus)).sum())
    yield "estimator_bound_random_tables", random_bad == 0, f"{random_bad} violations"

    sim_bad = detect_bad = 0
    assignments = list(ex.Assignment)
    for i in range(n):
        assignment = assignments[i % 3]
        weights = tuple(rng.dirichlet(np.ones(3))) if assignment is ex.Assignment.WEIGHTED else None
        if weights is not None:
            weights = weights[:2] + (1 - weights[0] - weights[1],)
        tc = ex.TrialConfig(_random_config(rng), int(rng.integers(1, 5000)), assignment,
                            int(rng.integers(0, 2 ** 63)), weights)
        ct = ex.simulate_counts(tc)
        N, plus, minus = ex.estimator_bell_check(ct)
        sim_bad += N < plus or N < minus
        detect_bad += xm.detection_sum_margin(*ex.configuration_probabilities(ct)) < 0
    yield "estimator_bound_simulated", sim_bad == 0, f"{sim_bad} violations"
    yield "detection_sum_nonnegative", detect_bad == 0, f"{detect_bad} violations"


def _extended(seed: int, n: int = 300):
    rng = _rng(seed)
    tower_err = 0.0
    recover_bad = 0
    for _ in range(n):
        cond = {}
        for pair in qm.PAIRS:
            cond[pair] = dict(zip(qm.OUTCOMES, _random_fraction_simplex(rng, 4)))
        probs = _random_fraction_simplex(rng, 4)[:3]
        d = xm.compose_from_conditionals(cond, probs)
        for pair in qm.PAIRS:
            tower_err = max(tower_err, abs(float(xm.extended_expected_product(d, pair)
                                                 - xm.tower_expected_product(d, pair))))
        recovered = xm.recover_conditionals(d)
        recover_bad += any(recovered[p] != cond[p] for p, w in zip(qm.PAIRS, probs) if w)
    yield "tower_law", tower_err <= 1e-12, f"max error {tower_err:.2e}"
    yield "composition_round_trip", recover_bad == 0, f"{recover_bad} mismatches"

    samples = rng.dirichlet(np.ones(27), size=5000)
    worst = min(xm.bell_margin_extended(xm.ExtendedTripleDistribution(tuple(s)), sign)
                for s in samples for sign in "-+")
    yield "extended_bell_random", worst >= -1e-12, f"min margin {worst:.3g}"

    result = xm.enumerate_simplex(4)
    ok = result.tuples == xm.composition_count(4) and result.min_margin_numerator >= 0 \
        and result.histogram.total == result.tuples
    yield "extended_bell_enumeration_d4", ok, f"{result.tuples} tuples, min {result.min_margin}"


SUITES: dict[str, Callable] = {
    "quantum": _quantum,
    "inequalities": _inequalities,
    "feasibility": _feasibility,
    "experiment": _experiment,
    "extended": _extended,
}


def run_suite(name: str, seed: int = 0) -> list[CheckResult]:
    """Run one suite, or every suite for ``name == "all"``."""
    names = list(SUITES) if name == "all" else [name]
    results = []
    for suite in names:
        if suite not in SUITES:
            raise KeyError(f"unknown suite {suite!r}")
        for item in SUITES[suite](seed):
            check, passed, *detail = item
            results.append(CheckResult(suite, check, bool(passed), detail[0] if detail else ""))
    return results
