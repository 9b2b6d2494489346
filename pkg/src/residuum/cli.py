"""Command-line front end: analyze, eval, verify, grouping.

Each command parses a problem file, runs the exact engine, and emits a
report either as aligned text or as JSON (``--json``).  JSON reports carry
``"schema": 1``, print every number at a fixed precision, and sort all keys,
so byte-identical inputs produce byte-identical output.

Exit status: 0 only when the run is certified (all stable collections
compatible, convergence rule known) and, for ``verify``, the oracle agrees
within tolerance; 1 otherwise; 2 for malformed problem files or usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass

import mpmath
from mpmath import mpf

from .arrangement import (
    Arrangement,
    Polyhedron,
    compatibility_audit,
    enumerate_flags,
    jacobian,
)
from .dsl import ProblemError, ProblemSpec, format_expr, load_problem
from .exact_linalg import minor_profile
from .oracle import (
    DEFAULT_BOX,
    DEFAULT_TOL,
    BudgetExceeded,
    NonDecaying,
    PoleOnArc,
    quad_integral,
    semicircle_check,
)
from .residue_engine import (
    EmptyStableSet,
    EngineOptions,
    canonical_grouping,
    evaluate_integral,
    grothendieck_residue,
    points_of_grouping,
)
from .symfun import AffineForm, working_precision

VALUE_DIGITS = 24
BOUND_DIGITS = 17
_DIAGNOSTIC_RADII = (10.0, 30.0, 90.0)


def _fmt(x) -> str:
    return mpmath.nstr(mpf(x), BOUND_DIGITS)


def _cplx(z) -> dict:
    z = mpmath.mpc(z)
    return {
        "re": mpmath.nstr(z.real, VALUE_DIGITS),
        "im": mpmath.nstr(z.imag, VALUE_DIGITS),
    }


def _cplx_text(z) -> str:
    d = _cplx(z)
    return f"{d['re']} + {d['im']}i"


@dataclass(frozen=True)
class Report:
    """One command's findings, already formatted for serialization."""

    command: str
    problem: dict
    passed: bool
    stability_table: tuple = ()
    violations: tuple = ()
    value: dict | None = None
    contributions: tuple = ()
    certificate: dict | None = None
    oracle: dict | None = None
    grouping: dict | None = None
    diagnostics: tuple = ()
    warnings: tuple = ()
    notes: tuple = ()

    def to_json_dict(self) -> dict:
        out = {
            "schema": 1,
            "command": self.command,
            "passed": self.passed,
            "problem": self.problem,
        }
        if self.stability_table:
            out["stability_table"] = list(self.stability_table)
        if self.violations:
            out["violations"] = list(self.violations)
        if self.value is not None:
            out["value"] = self.value
        if self.contributions:
            out["contributions"] = list(self.contributions)
        if self.certificate is not None:
            out["certificate"] = self.certificate
        if self.oracle is not None:
            out["oracle"] = self.oracle
        if self.grouping is not None:
            out["grouping"] = self.grouping
        if self.diagnostics:
            out["diagnostics"] = list(self.diagnostics)
        if self.warnings:
            out["warnings"] = list(self.warnings)
        if self.notes:
            out["notes"] = list(self.notes)
        return out

    def to_text(self) -> str:
        lines: list[str] = []
        p = self.problem
        lines.append(
            f"problem: {p['dim']} variable(s), "
            f"{len(p['hyperplanes'])} hyperplane(s), cone det {p['cone_det']}"
        )
        for h in p["hyperplanes"]:
            mult = f"^{h['multiplicity']}" if h["multiplicity"] != 1 else ""
            lines.append(
                f"  {h['name']}{mult}: f = ({', '.join(h['f'])}), "
                f"s = {h['s']['re']} + {h['s']['im']}i"
            )
        if p.get("numerator"):
            lines.append(f"  numerator: {p['numerator']}")
        if self.stability_table:
            lines.append("")
            lines.append(
                f"{'flag':<12}{'stable':<9}{'compatible':<12}p-minors"
            )
            for row in self.stability_table:
                pm = ", ".join(row["p"])
                lines.append(
                    f"{row['flag']:<12}"
                    f"{'yes' if row['stable'] else 'no':<9}"
                    f"{'yes' if row['compatible'] else 'no':<12}{pm}"
                )
        for v in self.violations:
            qs = ", ".join(f"q[{k}] = {val}" for k, val in v["positive_q"].items())
            lines.append(f"violation: stable collection {v['flag']} has {qs}")
        if self.value is not None:
            lines.append("")
            lines.append(f"value: {self.value['re']} + {self.value['im']}i")
        for c in self.contributions:
            lines.append(
                f"  residue {c['flag']}: {c['value']['re']} + {c['value']['im']}i"
            )
        if self.certificate is not None:
            status = "CERTIFIED" if self.certificate["certified"] else "NOT CERTIFIED"
            lines.append(
                f"certificate: {status} "
                f"(convergence: {self.certificate['convergence']}, "
                f"all compatible: {'yes' if self.certificate['all_compatible'] else 'no'})"
            )
        if self.oracle is not None:
            if "error" in self.oracle:
                lines.append(f"oracle: unavailable ({self.oracle['error']})")
            else:
                lines.append(
                    f"oracle: estimate {self.oracle['estimate']['re']} + "
                    f"{self.oracle['estimate']['im']}i "
                    f"(error bound {self.oracle['error_bound']}, "
                    f"tail {self.oracle['tail_estimate']}, "
                    f"{self.oracle['nodes_per_axis']} nodes/axis)"
                )
                verdict = "PASS" if self.oracle["within_tolerance"] else "FAIL"
                lines.append(
                    f"  |value - estimate| = {self.oracle['difference']} "
                    f"vs tolerance {self.oracle['tolerance']}: {verdict}"
                )
        if self.grouping is not None:
            lines.append(f"grouping: {self.grouping['label']}")
            for entry in self.grouping["points"]:
                coords = ", ".join(
                    f"{c['re']} + {c['im']}i" for c in entry["point"]
                )
                lines.append(
                    f"  point ({coords}): residue "
                    f"{entry['residue']['re']} + {entry['residue']['im']}i"
                )
        for d in self.diagnostics:
            trend = "vanish" if d["trending_to_zero"] else "do not vanish"
            lines.append(
                f"diagnostic: arcs after the {d['after']} residue {trend} "
                f"(|integral| {d['magnitudes'][0]} -> {d['magnitudes'][-1]} "
                f"over radii {d['radii'][0]} -> {d['radii'][-1]})"
            )
        for w in self.warnings:
            lines.append(f"warning: {w}")
        for n in self.notes:
            lines.append(f"note: {n}")
        lines.append("result: " + ("PASS" if self.passed else "FAIL"))
        return "\n".join(lines) + "\n"


def _problem_dict(spec: ProblemSpec, arr: Arrangement, poly: Polyhedron) -> dict:
    hps = []
    for k, (h, m) in enumerate(zip(arr.hyperplanes, arr.multiplicities)):
        hps.append(
            {
                "name": f"H{k + 1}",
                "f": [str(x) for x in h.f],
                "s": _cplx(h.s),
                "multiplicity": m,
            }
        )
    params = {n: format_expr(e) for n, e in spec.parameters}
    return {
        "variables": list(spec.variables),
        "dim": arr.dim,
        "cone": [[str(x) for x in v] for v in spec.cone],
        "cone_det": str(poly.det()),
        "hyperplanes": hps,
        "parameters": params,
        "numerator": (
            format_expr(spec.numerator) if spec.numerator is not None else "1"
        ),
    }


def _stability_rows(arr: Arrangement, poly: Polyhedron, with_jacobian: bool):
    rows = []
    for flag in enumerate_flags(arr, arr.dim):
        mat = jacobian(arr, flag.indices, poly)
        prof = minor_profile(mat)
        row = {
            "flag": flag.label(),
            "stable": prof.stable,
            "compatible": prof.compatible,
            "in_bruhat_cell": prof.in_bruhat_cell,
            "p": [str(x) for x in prof.p],
            "q": {f"({j},{l})": str(v) for (j, l), v in prof.q},
            "r": {f"({j},{l})": str(v) for (j, l), v in prof.r_minors},
        }
        if with_jacobian:
            row["jacobian"] = [[str(x) for x in r] for r in mat.entries]
        rows.append(row)
    return tuple(rows)


def _violation_rows(audit) -> tuple:
    return tuple(
        {
            "flag": v.flag.label(),
            "positive_q": {f"({j},{l})": str(val) for (j, l), val in v.positive_q},
        }
        for v in audit.violations
    )


def cmd_analyze(spec: ProblemSpec) -> Report:
    arr = spec.arrangement()
    poly = spec.polyhedron()
    audit = compatibility_audit(arr, poly)
    return Report(
        command="analyze",
        problem=_problem_dict(spec, arr, poly),
        passed=audit.all_compatible,
        stability_table=_stability_rows(arr, poly, with_jacobian=True),
        violations=_violation_rows(audit),
        certificate={
            "certified": audit.all_compatible,
            "all_compatible": audit.all_compatible,
            "convergence": "NotChecked",
            "warnings": [],
        },
    )


def _eval_parts(spec: ProblemSpec, options: EngineOptions):
    arr = spec.arrangement()
    poly = spec.polyhedron()
    result = evaluate_integral(arr, poly, options)
    contributions = tuple(
        {"flag": flag.label(), "value": _cplx(val)}
        for flag, val in sorted(
            result.flag_contributions.items(), key=lambda kv: kv[0].indices
        )
    )
    certificate = {
        "certified": result.certificate.certified,
        "all_compatible": result.certificate.all_compatible,
        "convergence": result.certificate.convergence.value,
        "warnings": list(result.certificate.warnings),
    }
    return arr, poly, result, contributions, certificate


def cmd_eval(spec: ProblemSpec, options: EngineOptions | None = None) -> Report:
    opts = options or EngineOptions()
    arr, poly, result, contributions, certificate = _eval_parts(spec, opts)
    return Report(
        command="eval",
        problem=_problem_dict(spec, arr, poly),
        passed=result.certificate.certified,
        stability_table=_stability_rows(arr, poly, with_jacobian=False),
        value=_cplx(result.value),
        contributions=contributions,
        certificate=certificate,
        warnings=tuple(result.certificate.warnings),
    )


def _chart_forms(arr: Arrangement, poly: Polyhedron) -> list[AffineForm]:
    m = poly.basis_matrix()
    subs = [
        AffineForm.make(list(m.entries[k]), 0) for k in range(arr.dim)
    ]
    return [h.defining_form().compose(subs) for h in arr.hyperplanes]


def _divergence_diagnostics(arr: Arrangement, poly: Polyhedron) -> tuple:
    """Arc checks for the contour steps the residue formula would close.

    Only meaningful in one or two variables: integrate out the first chart
    variable by residues, then probe the remaining one-variable integrands
    on expanding upper semicircular arcs.  Arcs that do not vanish witness
    that the closed contour drops a nonzero boundary term.
    """
    entries = []
    if arr.dim == 1:
        candidates = [("the integrand's", arr.integrand_in(poly))]
    elif arr.dim == 2:
        integrand = arr.integrand_in(poly)
        forms = _chart_forms(arr, poly)
        sample = mpf("0.37109375")
        candidates = []
        for j, g in enumerate(forms):
            if mpmath.fabs(g.coeffs[0]) < mpf("1e-30"):
                continue
            pole = g.solve_for(0)
            if mpmath.im(pole.evaluate([0, sample])) <= 0:
                continue
            candidates.append(
                (f"H{j + 1}", integrand.residue_1d(0, pole))
            )
    else:
        return ()
    for label, func in candidates:
        if func.is_zero():
            continue
        try:
            diag = semicircle_check(func, _DIAGNOSTIC_RADII)
        except (PoleOnArc, ValueError):
            continue
        entries.append(
            {
                "after": label,
                "radii": [_fmt(x) for x in diag.sampled_radii],
                "magnitudes": [_fmt(x) for x in diag.magnitudes],
                "peak_magnitudes": [_fmt(x) for x in diag.peak_magnitudes],
                "trending_to_zero": diag.trending_to_zero,
            }
        )
    return tuple(entries)


def cmd_verify(
    spec: ProblemSpec,
    options: EngineOptions | None = None,
    box: float = DEFAULT_BOX,
    tol: float = DEFAULT_TOL,
) -> Report:
    opts = options or EngineOptions()
    arr, poly, result, contributions, certificate = _eval_parts(spec, opts)
    notes: list[str] = []
    oracle: dict
    within = False
    try:
        quad = quad_integral(arr, box=box, tol=tol)
        diff = mpmath.fabs(result.value - quad.estimate)
        bound = mpf(tol) * max(mpf(1), mpmath.fabs(result.value))
        within = bool(diff <= bound)
        oracle = {
            "estimate": _cplx(quad.estimate),
            "error_bound": _fmt(quad.error_bound),
            "tail_estimate": _fmt(quad.tail_estimate),
            "box_halfwidth": _fmt(quad.box_halfwidth),
            "nodes_per_axis": quad.nodes_per_axis,
            "difference": _fmt(diff),
            "tolerance": _fmt(tol),
            "within_tolerance": within,
        }
    except (NonDecaying, BudgetExceeded, ValueError) as exc:
        oracle = {"error": str(exc)}
        notes.append(f"numerical verification unavailable: {exc}")
    passed = result.certificate.certified and within
    diagnostics: tuple = ()
    if not result.certificate.all_compatible:
        diagnostics = _divergence_diagnostics(arr, poly)
        if any(not d["trending_to_zero"] for d in diagnostics):
            notes.append(
                "a second-stage arc integral does not vanish, so closing "
                "the contour drops a boundary term; the stable-flag sum "
                "does not represent this integral"
            )
    return Report(
        command="verify",
        problem=_problem_dict(spec, arr, poly),
        passed=passed,
        stability_table=_stability_rows(arr, poly, with_jacobian=False),
        value=_cplx(result.value),
        contributions=contributions,
        certificate=certificate,
        oracle=oracle,
        diagnostics=diagnostics,
        warnings=tuple(result.certificate.warnings),
        notes=tuple(notes),
    )


def cmd_grouping(spec: ProblemSpec, options: EngineOptions | None = None) -> Report:
    opts = options or EngineOptions()
    arr = spec.arrangement()
    poly = spec.polyhedron()
    with working_precision(opts.precision):
        try:
            grouping = canonical_grouping(arr, poly)
        except EmptyStableSet as exc:
            return Report(
                command="grouping",
                problem=_problem_dict(spec, arr, poly),
                passed=False,
                notes=(f"no canonical grouping: {exc}",),
            )
        entries = []
        for point, flags in points_of_grouping(arr, grouping):
            res = grothendieck_residue(arr, grouping, point, poly)
            entries.append(
                {
                    "point": [_cplx(c) for c in point],
                    "flags": [f.label() for f in flags],
                    "residue": _cplx(res),
                }
            )
    return Report(
        command="grouping",
        problem=_problem_dict(spec, arr, poly),
        passed=True,
        grouping={
            "label": grouping.label(arr),
            "groups": [
                sorted(f"H{i + 1}" for i in g) for g in grouping.groups
            ],
            "points": entries,
        },
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="residuum",
        description=(
            "Evaluate integrals of rational-exponential functions with "
            "affine polar hyperplanes by iterated residues, and verify "
            "the answers numerically."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("file", help="problem file")
    common.add_argument(
        "--precision",
        type=int,
        default=128,
        help="working precision in bits (default 128)",
    )
    common.add_argument(
        "--box",
        type=float,
        default=DEFAULT_BOX,
        help="oracle window half-width (verify only)",
    )
    common.add_argument(
        "--tol",
        type=float,
        default=DEFAULT_TOL,
        help="oracle tolerance and verify comparison tolerance",
    )
    common.add_argument(
        "--json", action="store_true", help="emit a JSON report"
    )
    sub.add_parser(
        "analyze",
        parents=[common],
        help="flag stability and compatibility table",
    )
    sub.add_parser("eval", parents=[common], help="evaluate by residues")
    sub.add_parser(
        "verify",
        parents=[common],
        help="evaluate and compare against numerical quadrature",
    )
    sub.add_parser(
        "grouping",
        parents=[common],
        help="canonical divisor grouping and local residues",
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = load_problem(args.file)
    except OSError as exc:
        print(f"{args.file}: {exc}", file=sys.stderr)
        return 2
    except ProblemError as exc:
        print(f"{args.file}: {exc}", file=sys.stderr)
        return 2
    options = EngineOptions(precision=args.precision)
    try:
        with working_precision(args.precision):
            if args.command == "analyze":
                report = cmd_analyze(spec)
            elif args.command == "eval":
                report = cmd_eval(spec, options)
            elif args.command == "verify":
                report = cmd_verify(spec, options, box=args.box, tol=args.tol)
            else:
                report = cmd_grouping(spec, options)
            payload = report.to_json_dict() if args.json else None
    except ProblemError as exc:
        print(f"{args.file}: {exc}", file=sys.stderr)
        return 2
    if args.json:
        print(json.dumps(payload, sort_keys=True, indent=2))
    else:
        print(report.to_text(), end="")
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
