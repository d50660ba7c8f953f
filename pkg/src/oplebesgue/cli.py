"""Command line front end: JSON problems in, machine-readable reports out.

Exit codes: 0 success, 1 selftest failure, 2 input or schema error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from .core import DEFAULT_TOL, PsdMatrix, Tolerances, range_projection
from .forms import form_decompose, form_parallel_sum
from .functionals import Functional, functional_decompose, functional_parallel_sum
from .lebesgue import (
    Method,
    SINGULARITY_RTOL,
    arlinskii_step,
    auxiliary_space,
    decompose,
    is_absolutely_continuous,
    is_singular,
)
from .parallel import parallel_sum
from . import selftest as selftest_suite
from .serialize import (
    FormPairProblem,
    OperatorPairProblem,
    ProblemFile,
    Report,
    SchemaError,
    matrix_to_json,
    parse_problem_text,
    render_report,
)

EXIT_OK = 0
EXIT_SELFTEST_FAILED = 1
EXIT_INPUT = 2
EXIT_NUMERICAL = 3


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol-rank", type=float, metavar="X",
                        help="override the relative rank cutoff")
    common.add_argument("--iter-tol", type=float, metavar="X",
                        help="override the iteration stopping tolerance")
    common.add_argument("--max-iter", type=int, metavar="N",
                        help="override the iteration cap")
    common.add_argument("--output", metavar="PATH",
                        help="write the JSON report to PATH")
    common.add_argument("--json", action="store_true",
                        help="print the full JSON report to stdout")

    parser = argparse.ArgumentParser(
        prog="oplebesgue",
        description="Parallel sums and Lebesgue decompositions of PSD operators, "
        "forms, and functionals.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("psum", parents=[common], help="parallel sum of the pair")
    p.add_argument("file", help="problem file (JSON)")

    p = sub.add_parser("decompose", parents=[common],
                       help="Lebesgue decomposition of the pair")
    p.add_argument("file", help="problem file (JSON)")
    p.add_argument("--method", choices=[m.value for m in Method], default="direct")
    p.add_argument("--cross-check", action="store_true",
                   help="run all three methods and report their max discrepancy")

    p = sub.add_parser("check", parents=[common],
                       help="absolute-continuity and singularity predicates")
    p.add_argument("file", help="problem file (JSON)")

    sub.add_parser("selftest", parents=[common], help="run the bundled fixture suite")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    started = time.perf_counter()
    try:
        if args.command == "selftest":
            report, code = _cmd_selftest(args)
        else:
            problem, tol, digest = _load_problem(args)
            runner = {"psum": _cmd_psum, "decompose": _cmd_decompose, "check": _cmd_check}
            report, code = runner[args.command](args, problem, tol, digest)
        report = dataclasses.replace(report, wall_time_ms=(time.perf_counter() - started) * 1000.0)
        _emit_report(report, args)
    except SchemaError as exc:
        return _emit_error(EXIT_INPUT, "schema", exc)
    except OSError as exc:
        return _emit_error(EXIT_INPUT, "input", exc)
    except Exception as exc:
        return _emit_error(EXIT_NUMERICAL, "numerical", exc)
    return code


def entry_point():
    raise SystemExit(main())


def _emit_error(code: int, category: str, exc: Exception) -> int:
    body = {"error": {"exit_code": code, "category": category,
                      "type": type(exc).__name__, "message": str(exc)}}
    print(json.dumps(body, sort_keys=True), file=sys.stderr)
    return code


def _emit_report(report: Report, args) -> None:
    rendered = render_report(report)
    if getattr(args, "output", None):
        Path(args.output).write_text(rendered, encoding="utf-8")
    if getattr(args, "json", False):
        sys.stdout.write(rendered)
        return
    header = report.command if report.method is None else f"{report.command} ({report.method})"
    print(header if report.kind is None else f"{header} on {report.kind}")
    for key in sorted(report.diagnostics):
        print(f"  {key}: {report.diagnostics[key]}")


def _cli_tolerances(args, base: Tolerances) -> Tolerances:
    updates = {}
    if args.tol_rank is not None:
        updates["rank_rtol"] = args.tol_rank
    if args.iter_tol is not None:
        updates["iter_tol"] = args.iter_tol
    if args.max_iter is not None:
        updates["max_iter"] = args.max_iter
    if not updates:
        return base
    try:
        return dataclasses.replace(base, **updates)
    except ValueError as exc:
        raise SchemaError(str(exc), "$(flags)") from exc


def _load_problem(args) -> tuple[ProblemFile, Tolerances, str]:
    raw = Path(args.file).read_bytes()
    digest = hashlib.sha256(raw).hexdigest()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise SchemaError(f"input is not UTF-8: {exc}") from exc
    problem = parse_problem_text(text)
    return problem, _cli_tolerances(args, problem.tolerances), digest


def _block_diag(functional: Functional, tol: Tolerances) -> PsdMatrix:
    dims = functional.algebra.block_dims
    total = sum(dims)
    out = np.zeros((total, total), dtype=np.complex128)
    offset = 0
    for rho, n in zip(functional.densities, dims):
        out[offset : offset + n, offset : offset + n] = rho.entries
        offset += n
    return PsdMatrix(out, tol)


def _matrix_pair(problem: ProblemFile, tol: Tolerances) -> tuple[PsdMatrix, PsdMatrix]:
    """Reference and target matrices backing the diagnostics for every kind."""
    p = problem.problem
    if isinstance(p, OperatorPairProblem):
        return p.a, p.b
    if isinstance(p, FormPairProblem):
        return p.w.gram, p.t.gram
    return _block_diag(p.v, tol), _block_diag(p.w, tol)


def _min_eig(diff: np.ndarray) -> float:
    if diff.shape[0] == 0:
        return 0.0
    return float(np.linalg.eigvalsh(diff)[0])


def _cmd_psum(args, problem, tol, digest):
    p = problem.problem
    a_mat, b_mat = _matrix_pair(problem, tol)
    if isinstance(p, OperatorPairProblem):
        summed = parallel_sum(p.a, p.b, tol)
        result = {"parallel_sum": matrix_to_json(summed.entries)}
        summed_mat = summed
    elif isinstance(p, FormPairProblem):
        summed_form = form_parallel_sum(p.t, p.w, tol)
        result = {
            "basis": list(p.t.basis_labels),
            "parallel_sum": matrix_to_json(summed_form.gram.entries),
        }
        summed_mat = parallel_sum(a_mat, b_mat, tol)
    else:
        summed_fn = functional_parallel_sum(p.w, p.v, tol)
        result = {
            "block_dims": list(p.algebra.block_dims),
            "parallel_sum": [matrix_to_json(rho.entries) for rho in summed_fn.densities],
        }
        summed_mat = _block_diag(summed_fn, tol)
    diagnostics = {
        "singularity_norm": summed_mat.norm,
        "min_eig_first_minus_sum": _min_eig(a_mat.entries - summed_mat.entries),
        "min_eig_second_minus_sum": _min_eig(b_mat.entries - summed_mat.entries),
    }
    report = Report("psum", digest, problem.kind, None, result, diagnostics, 0.0)
    return report, EXIT_OK


def _decomposition_views(problem, tol, method):
    """Run the decomposition for the problem's kind.

    Returns the result payload, matrix-level (ac, sing) for diagnostics, and
    the decomposition metadata.
    """
    p = problem.problem
    if isinstance(p, OperatorPairProblem):
        dec = decompose(p.a, p.b, method, tol)
        result = {
            "ac": matrix_to_json(dec.ac.entries),
            "sing": matrix_to_json(dec.sing.entries),
        }
        return result, dec.ac, dec.sing, dec
    if isinstance(p, FormPairProblem):
        dec = form_decompose(p.t, p.w, method, tol)
        result = {
            "basis": list(p.t.basis_labels),
            "ac": matrix_to_json(dec.ac.gram.entries),
            "sing": matrix_to_json(dec.sing.gram.entries),
        }
        return result, dec.ac.gram, dec.sing.gram, dec
    dec = functional_decompose(p.w, p.v, method, tol)
    result = {
        "block_dims": list(p.algebra.block_dims),
        "ac": [matrix_to_json(rho.entries) for rho in dec.ac.densities],
        "sing": [matrix_to_json(rho.entries) for rho in dec.sing.densities],
    }
    return result, _block_diag(dec.ac, tol), _block_diag(dec.sing, tol), dec


def _cmd_decompose(args, problem, tol, digest):
    a_mat, b_mat = _matrix_pair(problem, tol)
    result, ac_mat, sing_mat, meta = _decomposition_views(problem, tol, args.method)
    proj = range_projection(a_mat, tol).entries
    diagnostics = {
        "sum_residual": float(
            np.linalg.norm(b_mat.entries - ac_mat.entries - sing_mat.entries)
        ),
        "singularity_norm": parallel_sum(a_mat, sing_mat, tol).norm,
        "range_leak": float(
            np.linalg.norm(ac_mat.entries - proj @ ac_mat.entries @ proj)
        ),
        "iterations": meta.iterations,
        "stopping_residual": meta.residual,
        "converged": meta.converged,
    }
    if args.cross_check:
        sings = {}
        flags = []
        for name in (m.value for m in Method):
            _, _, other_sing, other_meta = _decomposition_views(problem, tol, name)
            sings[name] = other_sing.entries
            flags.append(other_meta.converged)
        names = sorted(sings)
        diagnostics["cross_method_max_discrepancy"] = max(
            float(np.linalg.norm(sings[x] - sings[y]))
            for i, x in enumerate(names)
            for y in names[i + 1 :]
        )
        diagnostics["cross_method_all_converged"] = all(flags)
    report = Report("decompose", digest, problem.kind, args.method, result, diagnostics, 0.0)
    return report, EXIT_OK


def _cmd_check(args, problem, tol, digest):
    a_mat, b_mat = _matrix_pair(problem, tol)
    proj = range_projection(a_mat, tol).entries
    range_residual = float(
        np.linalg.norm(proj @ b_mat.entries @ proj - b_mat.entries)
    )
    summed = parallel_sum(a_mat, b_mat, tol)
    aux = auxiliary_space(a_mat, b_mat, tol)
    j = aux.embed
    factored = j @ parallel_sum(aux.a_tilde, aux.b_tilde, tol).entries @ j.conj().T
    recursion_residual = 0.0
    if aux.rank:
        eye = np.eye(aux.rank)
        current = aux.b_tilde
        for _ in range(3):
            nxt = arlinskii_step(current, aux.a_tilde, tol)
            predicted = np.linalg.solve(
                eye - aux.b_tilde.entries + current.entries,
                current.entries @ current.entries,
            )
            recursion_residual = max(
                recursion_residual, float(np.linalg.norm(nxt.entries - predicted))
            )
            current = nxt
    result = {
        "absolutely_continuous": is_absolutely_continuous(b_mat, a_mat, tol),
        "singular": is_singular(a_mat, b_mat, tol),
    }
    diagnostics = {
        "range_residual": range_residual,
        "range_threshold": tol.recon_tol * (1.0 + b_mat.norm),
        "parallel_norm": summed.norm,
        "singularity_threshold": SINGULARITY_RTOL * (1.0 + a_mat.norm + b_mat.norm),
        "factored_parallel_sum_residual": float(np.linalg.norm(factored - summed.entries)),
        "contraction_recursion_residual": recursion_residual,
    }
    report = Report("check", digest, problem.kind, None, result, diagnostics, 0.0)
    return report, EXIT_OK


def _cmd_selftest(args):
    raw = selftest_suite.fixtures_bytes()
    digest = hashlib.sha256(raw).hexdigest()
    tol = _cli_tolerances(args, DEFAULT_TOL)
    outcomes = selftest_suite.run_all(tol)
    failures = [o for o in outcomes if not o.ok]
    result = {
        "total": len(outcomes),
        "passed": len(outcomes) - len(failures),
        "failed": len(failures),
        "failures": [{"name": o.name, "detail": o.detail} for o in failures],
    }
    diagnostics = {"all_passed": not failures}
    report = Report("selftest", digest, None, None, result, diagnostics, 0.0)
    return report, EXIT_OK if not failures else EXIT_SELFTEST_FAILED
