"""Command-line front end.

Every verb reads one JSON document (a file path, ``-`` for stdin, or inline
JSON) and writes one JSON report. Rationals are strings such as "-3/4",
matrices are row-major lists of rows. Accepted documents:

    pencil      {"J1": [[...]], "J2": [[...]]}
    algebra     {"matrices": [[[...]], ...]}            (p matrices, q x q)
    spec        {"real_divisors": [["a", l], ...],
                 "complex_divisors": [["mu", "nu", n], ...],
                 "minimal_indices": [k, ...], "common_kernel_dim": c}
    verify      {"algebra": {...}, "metric": {"diagonal": [...]} | {"full": [[...]]}}
    dual (D-1)  {"q": q, "d": d}

Exit codes: 0 success, 2 malformed input, 3 exact factorization needs
irrational numbers (retry with --mode numeric), 4 internal failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .algebra import MetricData, TwoStepAlgebra, dualize, from_pencil, nilsoliton_residual
from .arith import scalar_to_json
from .canonical import CanonicalSpec, synthesize
from .classifier import case3_to_case2, classify
from .errors import (
    InternalInvariantViolation,
    NilradError,
    NotCertified,
    NotConverged,
    Unsupported,
)
from .invariants import CASE1, CASE2, CASE3, PencilInvariants, SkewPencil, compute_invariants, transform_invariants
from .linalg import matrix_to_json
from .nilsoliton import (
    SL2State,
    assemble_case1_metric,
    case2_nice_algebra,
    construct_dual_heisenberg,
    degeneration_witness,
    nice_basis_certificate,
    sl2_minimize,
)
from .pre_einstein import case1_pre_einstein, solve_pre_einstein

VERBS = ("invariants", "classify", "preeinstein", "nilsoliton", "verify", "dual", "synth", "witness", "sample")

EXIT_OK, EXIT_INPUT, EXIT_UNSUPPORTED, EXIT_INTERNAL = 0, 2, 3, 4


class InputError(Exception):
    pass


@dataclass
class Command:
    verb: str
    document: object = None
    mode: str = "exact"
    tol: float = 1e-8
    max_iter: int = 500
    seed: int = 0
    q: int = 7
    count: int = 100
    jobs: int = 1
    output: str | None = None


# ---------------------------------------------------------------------------
# input

def read_document(source: str | None):
    if source is None:
        raise InputError("this verb needs an input document")
    if source == "-":
        text = sys.stdin.read()
    elif Path(source).is_file():
        text = Path(source).read_text()
    else:
        text = source
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"not JSON and not a file: {exc}") from None


def as_pencil(doc) -> SkewPencil:
    if not isinstance(doc, dict):
        raise InputError("expected a JSON object")
    if "pencil" in doc:
        return as_pencil(doc["pencil"])
    if "J1" in doc and "J2" in doc:
        return SkewPencil.from_json(doc)
    if "matrices" in doc:
        alg = TwoStepAlgebra.from_json(doc)
        if alg.p != 2:
            raise InputError(f"expected a two-dimensional center, got p = {alg.p}")
        return SkewPencil(alg.J[0], alg.J[1])
    if any(k in doc for k in ("real_divisors", "complex_divisors", "minimal_indices")):
        return synthesize(CanonicalSpec.from_json(doc))
    raise InputError("document is neither a pencil, an algebra nor a spec")


def as_algebra(doc) -> TwoStepAlgebra:
    if isinstance(doc, dict) and "matrices" in doc:
        return TwoStepAlgebra.from_json(doc)
    if isinstance(doc, dict) and "algebra" in doc:
        return as_algebra(doc["algebra"])
    return from_pencil(as_pencil(doc))


def is_spec(doc) -> bool:
    return isinstance(doc, dict) and any(
        k in doc for k in ("real_divisors", "complex_divisors", "minimal_indices")
    )


def as_invariants(doc, cmd: Command) -> PencilInvariants:
    if is_spec(doc):
        return PencilInvariants.from_json(doc)
    return compute_invariants(as_pencil(doc), cmd.mode, cmd.tol)


def input_variables(inv: PencilInvariants):
    """Invariants expressed in the pencil's own variables, if no root
    is sent to infinity by undoing the variable change."""
    (w11, w12), (w21, w22) = inv.variable_change
    det = w11 * w22 - w12 * w21
    back = ((w22 / det, -w12 / det), (-w21 / det, w11 / det))
    try:
        out = transform_invariants(inv, back)
    except ZeroDivisionError:
        return None
    data = out.to_json()
    del data["variable_change"]
    return data


# ---------------------------------------------------------------------------
# verbs

def run_invariants(cmd: Command) -> dict:
    inv = compute_invariants(as_pencil(cmd.document), cmd.mode, cmd.tol)
    report = inv.to_json()
    report["q"] = inv.q
    report["input_variables"] = input_variables(inv)
    return report


def run_classify(cmd: Command) -> dict:
    inv = as_invariants(cmd.document, cmd)
    report = classify(inv).to_json()
    report["case_tag"] = inv.case_tag
    if inv.case_tag == CASE3:
        report["complexified_verdict"] = classify(case3_to_case2(inv)).to_json()
    return report


def run_preeinstein(cmd: Command) -> dict:
    doc = cmd.document
    report = {}
    alg = as_algebra(doc)
    report["solved"] = solve_pre_einstein(alg).to_json()
    if alg.p == 2:
        inv = as_invariants(doc, cmd)
        if inv.case_tag in (CASE1, CASE3) and not inv.common_kernel_dim and is_spec(doc):
            closed = case1_pre_einstein(inv)
            report["closed_form"] = closed.to_json()
            report["agree"] = [list(e) for e in closed.eigenvalues] == [list(e) for e in solve_pre_einstein(alg).eigenvalues]
    return report


def nilsoliton_report(inv: PencilInvariants, cmd: Command, algebra: TwoStepAlgebra | None = None) -> dict:
    verdict = classify(inv)
    report = {"case_tag": inv.case_tag, "verdict": verdict.to_json()}
    if inv.case_tag == CASE3:
        report["complexified_verdict"] = classify(case3_to_case2(inv)).to_json()
    if not verdict.is_einstein:
        report["certificate"] = None
        return report
    if inv.case_tag == CASE2:
        sol = cert = None
        if algebra is not None:
            try:
                sol, cert = nice_basis_certificate(algebra, cmd.tol)
                report["basis"] = "input"
            except NilradError:
                cert = None
        if cert is None:
            algebra = case2_nice_algebra(inv)
            if inv.common_kernel_dim:
                from .canonical import subsingular_pencil
                from .classifier import subsingular_groups
                g1, g2, _ = subsingular_groups(inv)
                algebra = from_pencil(subsingular_pencil(g1, g2, inv.minimal_indices, inv.common_kernel_dim))
            sol, cert = nice_basis_certificate(algebra, cmd.tol)
            report["basis"] = "canonical"
        report["algebra"] = algebra.to_json()
        report["nice_basis"] = sol.to_json()
    else:
        state = sl2_minimize(inv, tol=min(cmd.tol, 1e-10), max_iter=cmd.max_iter)
        if not isinstance(state, SL2State):
            raise NotConverged("optimizer found no critical point for an Einstein pencil")
        cert = assemble_case1_metric(inv, state, cmd.tol)
        report["basis"] = "canonical"
        report["algebra"] = from_pencil(synthesize(CanonicalSpec.from_invariants(inv))).to_json()
        report["sl2"] = {"S": state.S.tolist(), "grad_norm": state.grad_norm, "iterations": state.iterations}
    if cert is None or not cert.certified(cmd.tol):
        raise NotCertified("nilsoliton residual above tolerance")
    report["certificate"] = cert.to_json()
    return report


def run_nilsoliton(cmd: Command) -> dict:
    doc = cmd.document
    algebra = None
    if not is_spec(doc):
        algebra = as_algebra(doc)
        if not algebra.exact:
            algebra = None
    inv = as_invariants(doc, cmd)
    return nilsoliton_report(inv, cmd, algebra)


def run_verify(cmd: Command) -> dict:
    doc = cmd.document
    if not isinstance(doc, dict) or "algebra" not in doc or "metric" not in doc:
        raise InputError("verify expects {\"algebra\": ..., \"metric\": ...}")
    alg = as_algebra(doc["algebra"])
    g = MetricData.from_json(doc["metric"])
    exact = cmd.mode == "exact" and alg.exact and g.exact
    cert = nilsoliton_residual(alg, g, exact=exact)
    report = cert.to_json()
    report["certified"] = cert.certified(cmd.tol)
    return report


def run_dual(cmd: Command) -> dict:
    doc = cmd.document
    if isinstance(doc, dict) and "d" in doc and "q" in doc and "matrices" not in doc:
        res = construct_dual_heisenberg(int(doc["q"]), int(doc["d"]))
        return {
            "algebra": {"q": res.algebra.q, "p": res.algebra.p,
                        "matrices": [M.tolist() for M in res.algebra.J]},
            "r_squared": [scalar_to_json(v) for v in res.r_squared],
            "c": scalar_to_json(res.c),
            "lambdas": [scalar_to_json(v) for v in res.lambdas],
            "certificate": res.certificate.to_json(),
        }
    dual = dualize(as_algebra(doc))
    return dual.to_json()


def run_synth(cmd: Command) -> dict:
    if not is_spec(cmd.document):
        raise InputError("synth expects a spec document")
    return synthesize(CanonicalSpec.from_json(cmd.document)).to_json()


def run_witness(cmd: Command) -> dict:
    inv = as_invariants(cmd.document, cmd)
    w = degeneration_witness(inv)
    report = {
        "root": scalar_to_json(w.root),
        "multiplicity": w.multiplicity,
        "limit": {"J1": matrix_to_json(w.J1), "J2": matrix_to_json(w.J2)},
    }
    if w.limit_invariants is not None:
        report["limit_invariants"] = w.limit_invariants.to_json()
        report["invariants_differ"] = w.limit_invariants.key() != inv.key()
    state = sl2_minimize(inv, tol=min(cmd.tol, 1e-10), max_iter=cmd.max_iter)
    report["optimizer"] = "critical_point" if isinstance(state, SL2State) else "no_minimum"
    return report


def random_pencil(q: int, seed: int, index: int) -> SkewPencil:
    """Skew pencil with upper-triangular entries uniform in {-5..5}."""
    rng = np.random.default_rng([seed, index])
    while True:
        mats = []
        for _ in range(2):
            M = np.full((q, q), Fraction(0), dtype=object)
            for i in range(q):
                for j in range(i + 1, q):
                    v = Fraction(int(rng.integers(-5, 6)))
                    M[i, j], M[j, i] = v, -v
            mats.append(M)
        try:
            return SkewPencil(*mats)
        except NilradError:
            continue


def sample_trial(args: tuple) -> dict:
    q, seed, index, tol, max_iter = args
    p = random_pencil(q, seed, index)
    try:
        inv = compute_invariants(p, "exact")
    except Unsupported:
        inv = compute_invariants(p, "numeric", 1e-9)
    verdict = classify(inv)
    out = {"case_tag": inv.case_tag, "is_einstein": verdict.is_einstein, "type": None,
           "minimal_indices": list(inv.minimal_indices)}
    if verdict.is_einstein:
        cmd = Command("nilsoliton", tol=tol, max_iter=max_iter)
        try:
            rep = nilsoliton_report(inv, cmd, from_pencil(p) if inv.case_tag == CASE2 else None)
            et = rep["certificate"].get("eigenvalue_type")
            if et is not None:
                out["type"] = [et["eigenvalues"], et["multiplicities"]]
        except NilradError:
            pass
    return out


def run_sample(cmd: Command) -> dict:
    args = [(cmd.q, cmd.seed, i, cmd.tol, cmd.max_iter) for i in range(cmd.count)]
    if cmd.jobs > 1:
        with ProcessPoolExecutor(cmd.jobs) as pool:
            trials = list(pool.map(sample_trial, args))
    else:
        trials = [sample_trial(a) for a in args]
    n = len(trials)
    cases: dict = {}
    types: dict = {}
    for t in trials:
        cases[t["case_tag"]] = cases.get(t["case_tag"], 0) + 1
        if t["type"] is not None:
            key = json.dumps(t["type"])
            types[key] = types.get(key, 0) + 1
    target = json.dumps([[1, 2], [cmd.q, 2]])
    return {
        "q": cmd.q,
        "count": n,
        "seed": cmd.seed,
        "fraction_einstein": sum(t["is_einstein"] for t in trials) / n if n else 0.0,
        "fraction_type_1_2_q_2": types.get(target, 0) / n if n else 0.0,
        "case_counts": cases,
        "eigenvalue_types": [{"type": json.loads(k), "count": v} for k, v in sorted(types.items(), key=lambda kv: -kv[1])],
    }


DISPATCH = {
    "invariants": run_invariants,
    "classify": run_classify,
    "preeinstein": run_preeinstein,
    "nilsoliton": run_nilsoliton,
    "verify": run_verify,
    "dual": run_dual,
    "synth": run_synth,
    "witness": run_witness,
    "sample": run_sample,
}


def execute(cmd: Command) -> tuple[int, dict]:
    """Run one command; returns (exit code, JSON-ready report)."""
    try:
        if cmd.verb != "sample" and not isinstance(cmd.document, (dict, list)):
            raise InputError("input document must be a JSON object")
        return EXIT_OK, DISPATCH[cmd.verb](cmd)
    except Unsupported as exc:
        return EXIT_UNSUPPORTED, {"error": "Unsupported", "message": str(exc), "hint": "--mode numeric"}
    except (InternalInvariantViolation, NotConverged, NotCertified) as exc:
        return EXIT_INTERNAL, {"error": type(exc).__name__, "message": str(exc)}
    except (InputError, NilradError, ValueError, KeyError, TypeError, IndexError, ZeroDivisionError) as exc:
        return EXIT_INPUT, {"error": type(exc).__name__, "message": str(exc)}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nilrad", description="Einstein nilradicals of type (2, q)")
    ap.add_argument("verb", choices=VERBS)
    ap.add_argument("input", nargs="?", help="JSON file, '-' for stdin, or inline JSON")
    ap.add_argument("--mode", choices=("exact", "numeric"), default="exact")
    ap.add_argument("--tol", type=float, default=1e-8)
    ap.add_argument("--max-iter", type=int, default=500)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--q", type=int, default=7, help="sample: dimension of b")
    ap.add_argument("--count", type=int, default=100, help="sample: number of trials")
    ap.add_argument("--jobs", type=int, default=1, help="sample: worker processes")
    ap.add_argument("--output", help="write the report here instead of stdout")
    return ap


def parse_command(argv=None) -> Command:
    args = build_parser().parse_args(argv)
    if args.tol <= 0 or args.max_iter < 1 or args.q < 3 or args.count < 1 or args.jobs < 1:
        raise InputError("--tol, --max-iter, --q, --count and --jobs must be positive (q >= 3)")
    doc = None if args.verb == "sample" else read_document(args.input)
    return Command(args.verb, doc, args.mode, args.tol, args.max_iter, args.seed,
                   args.q, args.count, args.jobs, args.output)


def main(argv=None) -> int:
    try:
        cmd = parse_command(argv)
    except InputError as exc:
        print(json.dumps({"error": "InputError", "message": str(exc)}), file=sys.stderr)
        return EXIT_INPUT
    code, report = execute(cmd)
    text = json.dumps(report, indent=2)
    if code != EXIT_OK:
        print(text, file=sys.stderr)
        return code
    if cmd.output:
        Path(cmd.output).write_text(text + "\n")
    else:
        print(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
