"""Command-line entry points.

Three subcommands: ``analyze`` reports the full diagnostic record of one
triplet as JSON, ``sweep`` tabulates a named family over an angle grid as
CSV or JSON, and ``verify`` runs fast self-checks of the numerical core.

Exit codes: 0 success, 1 verification failure, 2 bad arguments or malformed
input, 3 solver non-convergence, 4 unwritable output path.
"""

import argparse
import json
import sys

import numpy as np

from .analytic import detect_graded_symmetries, symmetrize
from .errors import InvalidInputError, NumericError, PreconditionError
from .experiment import FAMILIES, family_triplet, sweep
from .geometry import fermat_torricelli, ft_oracle
from .incompatibility import GAMMA, analyze
from .conic import SolveStatus
from .parent import build_parent, verify_parent
from .qubit import Triplet, worst_case_error
from .solver import solve_bloch_form, solve_povm_form

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_USAGE = 2
EXIT_SOLVER = 3
EXIT_WRITE = 4

_TOL_DEFAULT = 1e-9


def _fail(message: str) -> None:
    print(f"tripletmur: {message}", file=sys.stderr)


def _sig(x) -> float:
    """Round to 12 significant digits for stable, readable output."""
    return float(f"{float(x):.12g}")


def _vec(v) -> list:
    return [_sig(x) for x in np.asarray(v, dtype=float)]


def _cell(x) -> str:
    return "" if x is None else f"{float(x):.12g}"


def _parse_vector(text: str, name: str) -> np.ndarray:
    parts = text.split(",")
    if len(parts) != 3:
        raise InvalidInputError(f"{name} must be three comma-separated numbers, got {text!r}")
    try:
        return np.array([float(p) for p in parts])
    except ValueError:
        raise InvalidInputError(f"{name} must be numeric, got {text!r}")


def _emit(text: str, out) -> int:
    if out is None:
        sys.stdout.write(text)
        return EXIT_OK
    try:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        _fail(f"cannot write {out}: {exc}")
        return EXIT_WRITE
    return EXIT_OK


def cmd_analyze(args) -> int:
    try:
        m1 = _parse_vector(args.m1, "--m1")
        m2 = _parse_vector(args.m2, "--m2")
        m3 = _parse_vector(args.m3, "--m3")
        t = Triplet.from_vectors(m1, m2, m3)
    except (InvalidInputError, PreconditionError) as exc:
        _fail(str(exc))
        return EXIT_USAGE

    report = analyze(t)
    try:
        solution = solve_bloch_form(t, tol=args.tol)
    except PreconditionError as exc:
        _fail(str(exc))
        return EXIT_USAGE
    except NumericError as exc:
        _fail(f"solver failed: {exc}")
        return EXIT_SOLVER
    if solution.status is not SolveStatus.OPTIMAL:
        _fail(f"solver did not converge: status {solution.status.value}")
        return EXIT_SOLVER
    try:
        design = build_parent(solution.approximators)
    except PreconditionError as exc:
        _fail(f"solver output is not realizable: {exc}")
        return EXIT_SOLVER

    doc = {
        "input": {"m1": _vec(m1), "m2": _vec(m2), "m3": _vec(m3)},
        "gamma_matrix_row_products": [_vec(row) for row in GAMMA @ GAMMA.T],
        "p_vectors": [_vec(p) for p in report.p],
        "ft_point": _vec(report.ft_point),
        "lhs": _sig(report.lhs),
        "delta": _sig(report.delta),
        "lower_bound": _sig(report.lower_bound),
        "attainable": bool(report.attainable),
        "jointly_measurable": bool(report.jointly_measurable),
        "exact_value": _sig(solution.value),
        "optimal_n": [_vec(row) for row in solution.approximators.bloch_vectors()],
        "parent": {
            "probabilities": [_sig(w) for w in design.probabilities],
            "directions": [None if u is None else _vec(u) for u in design.directions],
            "post_processing": {
                f"{k},{mu:+d}": _vec(design.post.table[(k, mu)])
                for (k, mu) in design.parent.labels
            },
        },
        "worst_state": _vec(solution.worst_state.r),
    }
    return _emit(json.dumps(doc, indent=2) + "\n", args.out)


_SWEEP_FIELDS = (
    "gamma_deg",
    "lower_bound",
    "attainable",
    "exact",
    "analytic",
    "mc_estimate",
    "mc_stderr",
    "jointly_measurable",
)


def _sweep_record(row) -> dict:
    return {
        "gamma_deg": row.gamma_deg,
        "lower_bound": row.lower_bound,
        "attainable": int(row.attainable),
        "exact": row.exact,
        "analytic": row.analytic,
        "mc_estimate": row.mc_estimate,
        "mc_stderr": row.mc_stderr,
        "jointly_measurable": int(row.jointly_measurable),
    }


def cmd_sweep(args) -> int:
    if args.steps < 2:
        _fail("--steps must be at least 2")
        return EXIT_USAGE
    if args.shots < 0:
        _fail("--shots must be nonnegative")
        return EXIT_USAGE
    grid = np.linspace(args.gamma_start, args.gamma_end, args.steps)
    try:
        rows = sweep(args.family, grid, shots=args.shots, seed=args.seed)
    except (InvalidInputError, PreconditionError) as exc:
        _fail(str(exc))
        return EXIT_USAGE

    records = [_sweep_record(row) for row in rows]
    if args.format == "json":
        doc = [
            {key: (_sig(val) if isinstance(val, float) else val) for key, val in rec.items()}
            for rec in records
        ]
        text = json.dumps(doc, indent=2) + "\n"
    else:
        lines = [",".join(_SWEEP_FIELDS)]
        for rec in records:
            lines.append(",".join(_cell(rec[key]) for key in _SWEEP_FIELDS))
        text = "\n".join(lines) + "\n"
    return _emit(text, args.out)


def _random_ideal(rng) -> Triplet:
    vectors = []
    for _ in range(3):
        direction = rng.normal(size=3)
        direction /= np.linalg.norm(direction)
        vectors.append(rng.uniform(0.3, 1.0) * direction)
    return Triplet.from_vectors(*vectors)


def _verify_ft(seed: int, tol: float) -> tuple[int, list]:
    rng = np.random.default_rng(seed)
    point_sets = [rng.uniform(-1.0, 1.0, size=(4, 3)) for _ in range(20)]
    # vertex-degenerate: three symmetric points plus their centroid, whose
    # minimizer sits exactly on the fourth vertex
    arms = np.array(
        [[1.0, 0.0, 0.0], [-0.5, np.sqrt(3.0) / 2.0, 0.0], [-0.5, -np.sqrt(3.0) / 2.0, 0.0]]
    )
    point_sets.append(np.vstack([arms, np.zeros(3)]))
    repeated = rng.uniform(-1.0, 1.0, size=(4, 3))
    repeated[3] = repeated[0]
    point_sets.append(repeated)

    failures = []
    for index, pts in enumerate(point_sets):
        res = fermat_torricelli(pts)
        ref = ft_oracle(pts)
        ref_total = float(np.sum(np.linalg.norm(pts - ref, axis=1)))
        scale = max(1.0, ref_total)
        if abs(res.total_distance - ref_total) > 1e-6 * scale:
            failures.append(
                f"ft[{index}]: objective {res.total_distance:.12g} vs oracle {ref_total:.12g}"
            )
    return len(point_sets), failures


def _verify_solver(seed: int, tol: float) -> tuple[int, list]:
    rng = np.random.default_rng(seed)
    cases = [
        ("m_o(20)", family_triplet("m_o", 20.0)),
        ("m_perp(50)", family_triplet("m_perp", 50.0)),
        ("m_y(80)", family_triplet("m_y", 80.0)),
    ]
    cases += [(f"random[{i}]", _random_ideal(rng)) for i in range(5)]

    failures = []
    for name, t in cases:
        povm = solve_povm_form(t, tol=tol)
        bloch = solve_bloch_form(t, tol=tol)
        if povm.status is not SolveStatus.OPTIMAL or bloch.status is not SolveStatus.OPTIMAL:
            failures.append(f"solver {name}: did not converge")
            continue
        if abs(povm.value - bloch.value) > 1e-5:
            failures.append(
                f"solver {name}: formulations disagree "
                f"({povm.value:.12g} vs {bloch.value:.12g})"
            )
        bound = analyze(t).lower_bound
        if bloch.value < bound - 1e-7:
            failures.append(f"solver {name}: value {bloch.value:.12g} below bound {bound:.12g}")
    return len(cases), failures


def _verify_parent(seed: int, tol: float) -> tuple[int, list]:
    failures = []
    count = 0
    for family in FAMILIES:
        for gamma in (15.0, 45.0, 75.0):
            count += 1
            name = f"parent {family}({gamma:g})"
            t = family_triplet(family, gamma)
            sol = solve_bloch_form(t, tol=tol)
            if sol.status is not SolveStatus.OPTIMAL:
                failures.append(f"{name}: solver did not converge")
                continue
            design = build_parent(sol.approximators)
            rep = verify_parent(design, sol.approximators)
            if rep.max_residual > 1e-9:
                failures.append(f"{name}: residual {rep.max_residual:.3g}")
            a_total = sum(e.a for e in design.parent.effects)
            b_total = np.sum([e.b for e in design.parent.effects], axis=0)
            if abs(a_total - 2.0) > 1e-10 or np.max(np.abs(b_total)) > 1e-10:
                failures.append(f"{name}: completeness violated")
    return count, failures


def _verify_symmetry(seed: int, tol: float) -> tuple[int, list]:
    cases = (("m_perp", 30.0), ("m_perp", 60.0), ("m_y", 40.0), ("m_y", 80.0))
    failures = []
    for family, gamma in cases:
        name = f"symmetry {family}({gamma:g})"
        t = family_triplet(family, gamma)
        syms = detect_graded_symmetries(t)
        if not syms:
            failures.append(f"{name}: no symmetry detected")
            continue
        sol = solve_bloch_form(t, tol=tol)
        if sol.status is not SolveStatus.OPTIMAL:
            failures.append(f"{name}: solver did not converge")
            continue
        averaged = symmetrize(sol.approximators, syms)
        before = worst_case_error(t, sol.approximators).value
        after = worst_case_error(t, averaged).value
        if abs(after - before) > 1e-6:
            failures.append(f"{name}: symmetrization moved objective by {after - before:.3g}")
        if analyze(averaged).lhs > 4.0 + 1e-7:
            failures.append(f"{name}: averaged triplet lost joint measurability")
    return len(cases), failures


_SUITES = {
    "ft": _verify_ft,
    "solver": _verify_solver,
    "parent": _verify_parent,
    "symmetry": _verify_symmetry,
}


def cmd_verify(args) -> int:
    if args.cases is None:
        names = list(_SUITES)
    else:
        names = [part.strip() for part in args.cases.split(",") if part.strip()]
        unknown = [name for name in names if name not in _SUITES]
        if unknown or not names:
            _fail(f"unknown cases {unknown}; choose from {', '.join(_SUITES)}")
            return EXIT_USAGE

    results = {}
    for name in names:
        results[name] = _SUITES[name](args.seed, args.tol)
    passed = all(not failures for _, failures in results.values())

    if args.json:
        doc = {
            "passed": passed,
            "suites": {
                name: {"cases": count, "failures": failures}
                for name, (count, failures) in results.items()
            },
        }
        print(json.dumps(doc, indent=2))
    else:
        for name, (count, failures) in results.items():
            if failures:
                print(f"FAIL {name}: {len(failures)} failure(s) in {count} case(s)")
                for message in failures:
                    print(f"  {message}")
            else:
                print(f"ok {name}: {count} case(s)")
        print("all checks passed" if passed else "verification failed")
    return EXIT_OK if passed else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tripletmur",
        description="Exact incompatibility of qubit observable triplets.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    pa = sub.add_parser("analyze", help="full diagnostic record of one triplet as JSON")
    pa.add_argument("--m1", required=True, help="Bloch vector as 'x,y,z'")
    pa.add_argument("--m2", required=True, help="Bloch vector as 'x,y,z'")
    pa.add_argument("--m3", required=True, help="Bloch vector as 'x,y,z'")
    pa.add_argument("--tol", type=float, default=_TOL_DEFAULT, help="solver tolerance")
    pa.add_argument("--out", default=None, help="output file (default stdout)")
    pa.set_defaults(func=cmd_analyze)

    ps = sub.add_parser("sweep", help="tabulate a named family over an angle grid")
    ps.add_argument("--family", required=True, choices=tuple(FAMILIES))
    ps.add_argument("--gamma-start", type=float, required=True, help="first angle in degrees")
    ps.add_argument("--gamma-end", type=float, required=True, help="last angle in degrees")
    ps.add_argument("--steps", type=int, required=True, help="number of grid points (>= 2)")
    ps.add_argument("--shots", type=int, default=0, help="shots per point, 0 disables sampling")
    ps.add_argument("--seed", type=int, default=7, help="base seed for the sampler")
    ps.add_argument("--format", choices=("csv", "json"), default="csv")
    ps.add_argument("--out", default=None, help="output file (default stdout)")
    ps.set_defaults(func=cmd_sweep)

    pv = sub.add_parser("verify", help="run fast self-checks of the numerical core")
    pv.add_argument("--cases", default=None, help="comma-separated subset of: " + ",".join(_SUITES))
    pv.add_argument("--seed", type=int, default=7)
    pv.add_argument("--tol", type=float, default=_TOL_DEFAULT, help="solver tolerance")
    pv.add_argument("--json", action="store_true", help="machine-readable report")
    pv.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
