"""``bellwigner`` command-line tool.

Exit codes: 0 success, 1 usage error, 2 numerical inconsistency, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

from . import __version__
from . import experiment_sim as ex
from . import extended_model as xm
from . import inequalities as ie
from . import quantum_model as qm
from . import report
from . import triple_feasibility as tf
from .checks import SUITES, run_suite

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _assignment(text: str):
    if text in ("equal", "random"):
        return (ex.Assignment.EQUAL_SPLIT if text == "equal" else ex.Assignment.RANDOM_UNIFORM), None
    if text.startswith("weighted:"):
        try:
            weights = tuple(float(w) for w in text.split(":", 1)[1].split(","))
        except ValueError:
            raise argparse.ArgumentTypeError("weights must be numbers") from None
        if len(weights) != 3 or min(weights) < 0 or sum(weights) <= 0:
            raise argparse.ArgumentTypeError("weighted needs three nonnegative weights w12,w13,w23")
        total = sum(weights)
        return ex.Assignment.WEIGHTED, tuple(w / total for w in weights)
    raise argparse.ArgumentTypeError("expected equal, random or weighted:w12,w13,w23")


def _mode(text: str):
    if text == "full":
        return "full", 0
    if text.startswith("sample:"):
        return "sample", _positive_int(text.split(":", 1)[1])
    raise argparse.ArgumentTypeError("expected full or sample:<count>")


def _add_physics(p: argparse.ArgumentParser) -> None:
    p.add_argument("--convention", choices=[c.value for c in qm.Convention], default="photon")
    p.add_argument("--correlation", choices=[c.value for c in qm.Correlation], default="negative")


def _add_angles(p: argparse.ArgumentParser) -> None:
    p.add_argument("--theta2-deg", type=float, required=True)
    p.add_argument("--theta3-deg", type=float, required=True)
    _add_physics(p)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bellwigner", description="Bell and Wigner inequalities for three apparatuses.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    scan = sub.add_parser("scan", help="margins and feasibility over a (theta2, theta3) grid")
    scan.add_argument("--step-deg", type=float, default=180 / 361)
    _add_physics(scan)
    scan.add_argument("--out", type=Path)
    scan.add_argument("--pgm", type=Path)
    scan.add_argument("--channel", choices=[c.value for c in report.Channel], default="bell")
    scan.add_argument("--threads", type=_positive_int, default=1)

    solve = sub.add_parser("solve", help="triple-law family and feasibility interval at one angle pair")
    _add_angles(solve)
    solve.add_argument("--out", type=Path)

    sim = sub.add_parser("simulate", help="seeded count table for one angle pair")
    _add_angles(sim)
    sim.add_argument("--n", type=_positive_int, required=True)
    sim.add_argument("--seed", type=_u64, default=0)
    sim.add_argument("--assignment", type=_assignment, default=_assignment("equal"))
    sim.add_argument("--out", type=Path)

    enum_ = sub.add_parser("enumerate", help="Bell expression over the 27-cell simplex grid")
    enum_.add_argument("--denominator", type=_positive_int, required=True)
    enum_.add_argument("--mode", type=_mode, default=("full", 0))
    enum_.add_argument("--seed", type=_u64, default=0)
    enum_.add_argument("--threads", type=_positive_int, default=1)
    enum_.add_argument("--out", type=Path)

    check = sub.add_parser("check", help="run randomized property suites")
    check.add_argument("--suite", choices=["all", *SUITES], default="all")
    check.add_argument("--seed", type=_u64, default=0)
    return parser


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding="utf-8")


def _angles(args) -> qm.AngleConfig:
    return qm.AngleConfig.from_degrees(0.0, args.theta2_deg, args.theta3_deg,
                                       convention=args.convention, correlation=args.correlation)


def _cmd_scan(args) -> int:
    if not args.step_deg > 0 or not math.isfinite(args.step_deg):
        raise UsageError("--step-deg must be positive")
    vm = ie.scan_grid(math.radians(args.step_deg), args.convention, args.correlation, args.threads)
    worst = float(vm.residual.max())
    if worst > 1e-6:
        print(f"marginal consistency residual {worst:.3g} exceeds tolerance", file=sys.stderr)
        return EXIT_NUMERIC
    sr = report.scan_result(vm, __version__)
    if args.out is None:
        sys.stdout.write(report.scan_csv(sr))
    else:
        report.write_scan_csv(sr, args.out)
    if args.pgm is not None:
        report.write_pgm(vm, args.channel, args.pgm)
    return EXIT_OK


def _cmd_solve(args) -> int:
    cfg = _angles(args)
    B = tf.MarginalVector.from_pairs(*(qm.pair_distribution(cfg, p) for p in qm.PAIRS))
    try:
        reduction = tf.reduce_system(tf.INCIDENCE, B)
    except tf.InconsistentMarginalsError as err:
        print(f"inconsistent marginals: residual {err.residual:.3g}", file=sys.stderr)
        return EXIT_NUMERIC
    family = tf.solution_family(B)
    interval = tf.feasibility_interval(family)
    t, q = tf.best_triple(family, interval)
    lines = [
        f"theta_deg,0,{report.fmt(args.theta2_deg)},{report.fmt(args.theta3_deg)}",
        f"rank,{reduction.rank}",
        f"residual,{report.fmt(reduction.consistency_residual)}",
        f"t_lo,{report.fmt(interval.lo)}",
        f"t_hi,{report.fmt(interval.hi)}",
        f"feasible,{int(interval.nonempty)}",
        f"t,{report.fmt(t)}",
        f"min_entry,{report.fmt(q.min_entry())}",
        "outcome,q,offset,slope",
    ]
    for z, value, c, s in zip(tf.TRIPLE_OUTCOMES, q.q, family.offsets, family.slopes):
        label = "".join("+" if v > 0 else "-" for v in z)
        lines.append(f"{label},{report.fmt(value)},{report.fmt(c)},{s}")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def _cmd_simulate(args) -> int:
    assignment, weights = args.assignment
    tc = ex.TrialConfig(_angles(args), args.n, assignment, args.seed, weights)
    ct = ex.simulate_counts(tc)
    _emit(ct.to_csv(), args.out)
    N, plus, minus = ex.estimator_bell_check(ct)
    print(f"estimator check: N={N} >= {plus} and >= {minus}: {N >= plus and N >= minus}", file=sys.stderr)
    for norm in ex.Normalization:
        try:
            margin = ex.estimated_bell_margin(ct, norm)
        except ex.EmptyConfigurationError as err:
            print(f"{norm.value} bell margin: undefined ({err})", file=sys.stderr)
        else:
            print(f"{norm.value} bell margin: {report.fmt(margin)}", file=sys.stderr)
    return EXIT_OK


def _cmd_enumerate(args) -> int:
    mode, count = args.mode
    try:
        result = xm.enumerate_simplex(args.denominator, mode, count, args.seed, args.threads)
    except xm.EnumerationRefused as err:
        raise UsageError(str(err)) from None
    sys.stdout.write(result.summary_csv())
    if args.out is not None:
        args.out.write_text(result.histogram.to_csv(), encoding="utf-8")
    if result.min_margin_numerator < 0:
        print(f"{result.violations} tuples violate the bound", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def _cmd_check(args) -> int:
    results = run_suite(args.suite, args.seed)
    for r in results:
        print(r.line())
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_NUMERIC


_COMMANDS = {
    "scan": _cmd_scan,
    "solve": _cmd_solve,
    "simulate": _cmd_simulate,
    "enumerate": _cmd_enumerate,
    "check": _cmd_check,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except UsageError as err:
        parser.print_usage(sys.stderr)
        print(f"bellwigner: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as err:
        print(f"bellwigner: I/O error: {err}", file=sys.stderr)
        return EXIT_IO


def main() -> None:
    sys.exit(run())
