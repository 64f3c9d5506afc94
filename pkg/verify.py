#!/usr/bin/env python3
from __future__ import annotations

import logging
import math
import os
from dataclasses import asdict, dataclass, fields, replace
from typing import Any, Callable, Iterable, Mapping, Optional, Sequence

import numpy as np
from tqdm import tqdm

from blocktri import (
    check_td_pair_axioms,
    dual_entries,
    entries_recursive,
    max_entry_difference,
    oracle_entries,
    spectrum_report,
)
from construct import build_w0, build_w1, check_dagger_relation, check_tridiagonal_relations, fit_aw_constants
from overlaps import (
    check_qdiff,
    check_recurrence,
    eigenvalue_root_check,
    n2_closed_form,
    n2_rational,
    overlap_F,
    weights_and_orthogonality,
)
from params import GenericityTolerances, ModelParams, derive, require_valid
from spectral import biorthogonality_residual, eigen_indices, eigenbasis, eigenvalue_ratios, eigenvalues, norm_coeffs

logging.basicConfig(level=logging.INFO, format='%(levelname)s: %(message)s')

PROFILE_ENV = "TDPAIR_TOLERANCE_PROFILE"

Finding = dict[str, Any]


@dataclass(frozen=True)
class CheckTolerances:
    tridiagonal: float = 1e-10
    dagger: float = 1e-12
    eigen: float = 1e-11
    condition: float = 1e12
    ratio: float = 1e-12
    biorthogonality: float = 1e-10
    recursion: float = 1e-9
    band: float = 1e-10
    spectrum: float = 1e-9
    trace: float = 1e-10
    dual: float = 1e-10
    recurrence: float = 1e-9
    qdiff: float = 1e-9
    orthogonality: float = 1e-8
    closed_form: float = 1e-9
    parity: float = 1e-11
    aw_leonard: float = 1e-10
    aw_non_leonard: float = 1e-3
    roots: float = 1e-9


# lower bounds scale the other way
LOWER_BOUNDS = {"aw_non_leonard"}
PROFILE_SCALES = {"default": 1.0, "strict": 0.1, "loose": 100.0}


def tolerances_for(profile: str | None = None, overrides: Mapping[str, float] | None = None) -> CheckTolerances:
    """
    Tolerances of a named profile with optional per-check overrides.
    The profile defaults to $TDPAIR_TOLERANCE_PROFILE, then "default".
    """
    profile = profile or os.environ.get(PROFILE_ENV) or "default"
    if profile not in PROFILE_SCALES:
        raise ValueError(f"unknown tolerance profile {profile!r}, expected one of {sorted(PROFILE_SCALES)}")
    scale = PROFILE_SCALES[profile]
    base = CheckTolerances()
    scaled = {
        f.name: getattr(base, f.name) / scale if f.name in LOWER_BOUNDS else getattr(base, f.name) * scale
        for f in fields(CheckTolerances)
    }
    for name, value in (overrides or {}).items():
        if name not in scaled:
            raise ValueError(f"unknown tolerance {name!r}")
        scaled[name] = float(value)
    return CheckTolerances(**scaled)


def _finding(check: str, N: int, metric: str, value: float, tolerance: float, comparison: str = "<=",
             detail: str = "") -> Finding:
    value = float(value)
    if comparison == "<=":
        passed = value <= tolerance
    else:
        passed = value >= tolerance
    return {
        "check": check,
        "N": N,
        "metric": metric,
        "value": value,
        "tolerance": tolerance,
        "comparison": comparison,
        "status": "pass" if passed else "fail",
        "detail": detail,
    }


def _skipped(check: str, N: int, metric: str, detail: str) -> Finding:
    return {"check": check, "N": N, "metric": metric, "value": None, "tolerance": None,
            "comparison": None, "status": "skipped", "detail": detail}


def check_tridiagonal(params: ModelParams, tol: CheckTolerances, gen: GenericityTolerances) -> list[Finding]:
    w0, w1 = build_w0(params, gen), build_w1(params, gen)
    first, second = check_tridiagonal_relations(w0, w1, derive(params, gen))
    return [
        _finding("tridiagonal", params.N, "relative residual (A, A*)", first.relative, tol.tridiagonal),
        _finding("tridiagonal", params.N, "relative residual (A*, A)", second.relative, tol.tridiagonal),
    ]


def check_dagger(params: ModelParams, tol: CheckTolerances, gen: GenericityTolerances) -> list[Finding]:
    if not params.is_imaginary_regime():
        return [_skipped("dagger", params.N, "W0^dagger vs W1(alpha*=alpha)", "needs alpha, alpha*, phi imaginary")]
    result = check_dagger_relation(params, gen)
    return [_finding("dagger", params.N, "W0^dagger vs W1(alpha*=alpha)", result.relative, tol.dagger)]


def check_eigenbasis(params: ModelParams, tol: CheckTolerances, gen: GenericityTolerances) -> list[Finding]:
    findings = []
    for kind, build in (("psi", build_w0), ("phi", build_w1)):
        w = build(params, gen)
        basis = eigenbasis(params, kind, tol=gen)
        image = w @ basis.vectors
        residual = np.linalg.norm(image - basis.vectors * basis.eigenvalues[None, :], axis=0)
        relative = residual / np.linalg.norm(basis.vectors, axis=0)
        findings.append(_finding("eigenbasis", params.N, f"{kind} eigen-residual", relative.max(), tol.eigen))
        findings.append(_finding("eigenbasis", params.N, f"{kind} condition number",
                                 basis.condition_number(), tol.condition))
    return findings


def check_multiplicity(params: ModelParams, tol: CheckTolerances, gen: GenericityTolerances) -> list[Finding]:
    counts = [0] * (params.N + 1)
    for idx in eigen_indices(params.N):
        counts[idx.level] += 1
    mismatches = sum(count != math.comb(params.N, n) for n, count in enumerate(counts))
    mismatches += int(sum(counts) != 2 ** params.N)
    findings = [_finding("multiplicity", params.N, "level size mismatches", mismatches, 0)]
    for dual in (False, True):
        values = eigenvalues(params, dual=dual)
        gaps = [abs(values[i] - values[j]) for i in range(len(values)) for j in range(i)]
        findings.append(_finding("multiplicity", params.N, f"min eigenvalue gap ({'dual' if dual else 'direct'})",
                                 min(gaps, default=math.inf), gen.guard, comparison=">="))
    return findings


def check_ratio(params: ModelParams, tol: CheckTolerances, gen: GenericityTolerances) -> list[Finding]:
    if params.N < 3:
        return [_skipped("ratio", params.N, "eigenvalue ratio deviation", "needs N >= 3")]
    q = derive(params, gen).q
    expected = q + 1 / q + 1
    findings = []
    for dual in (False, True):
        ratios = eigenvalue_ratios(eigenvalues(params, dual=dual))
        deviation = np.max(np.abs(ratios - expected)) / abs(expected)
        label = "dual" if dual else "direct"
        findings.append(_finding("ratio", params.N, f"eigenvalue ratio deviation ({label})", deviation, tol.ratio))
    return findings


def check_biorthogonality(params: ModelParams, tol: CheckTolerances, gen: GenericityTolerances) -> list[Finding]:
    return [
        _finding("biorthogonality", params.N, "psi family", biorthogonality_residual(params, False, gen),
                 tol.biorthogonality),
        _finding("biorthogonality", params.N, "phi family", biorthogonality_residual(params, True, gen),
                 tol.biorthogonality),
    ]


def check_recursion(params: ModelParams, tol: CheckTolerances, gen: GenericityTolerances) -> list[Finding]:
    difference = max_entry_difference(entries_recursive(params, gen), oracle_entries(params, gen))
    return [_finding("recursion", params.N, "recursion vs basis change", difference, tol.recursion)]


def check_band(params: ModelParams, tol: CheckTolerances, gen: GenericityTolerances) -> list[Finding]:
    oracle = oracle_entries(params, gen)
    dual = dual_entries(params, via="basis_change", tol=gen)
    return [
        _finding("band", params.N, "off-band magnitude (W1 in psi basis)", oracle.off_band, tol.band),
        _finding("band", params.N, "off-band magnitude (W0 in phi basis)", dual.off_band, tol.band),
    ]


def check_spectrum(params: ModelParams, tol: CheckTolerances, gen: GenericityTolerances) -> list[Finding]:
    report = spectrum_report(entries_recursive(params, gen), params)
    mismatches = sum(m != e for m, e in zip(report.multiplicities, report.expected))
    return [
        _finding("spectrum", params.N, "annihilating polynomial", report.annihilator, tol.spectrum),
        _finding("spectrum", params.N, "multiplicity mismatches", mismatches, 0,
                 detail=f"{report.multiplicities} vs {report.expected}"),
        _finding("spectrum", params.N, "trace deviation", report.trace_error, tol.trace),
    ]


def check_dual(params: ModelParams, tol: CheckTolerances, gen: GenericityTolerances) -> list[Finding]:
    difference = max_entry_difference(dual_entries(params, "substitution", gen),
                                      dual_entries(params, "basis_change", gen))
    return [_finding("dual", params.N, "substitution vs basis change", difference, tol.dual)]


def check_axioms(params: ModelParams, tol: CheckTolerances, gen: GenericityTolerances) -> list[Finding]:
    report = check_td_pair_axioms(params, gen)
    findings = [
        _finding("axioms", params.N, "psi basis condition number", report.condition_psi, tol.condition),
        _finding("axioms", params.N, "phi basis condition number", report.condition_phi, tol.condition),
        _finding("axioms", params.N, "W1 off-band magnitude", report.w1_off_band, tol.band),
        _finding("axioms", params.N, "W0 off-band magnitude", report.w0_off_band, tol.band),
        _finding("axioms", params.N, "shape vector defects", 0 if report.shape_ok else 1, 0,
                 detail=str(report.shape)),
    ]
    if report.irreducible is None:
        findings.append(_skipped("axioms", params.N, "algebra dimension deficit", "; ".join(report.notes)))
    else:
        findings.append(_finding("axioms", params.N, "algebra dimension deficit",
                                 4 ** params.N - report.algebra_dim, 0))
    return findings


def check_overlap_recurrence(params: ModelParams, tol: CheckTolerances, gen: GenericityTolerances) -> list[Finding]:
    table = overlap_F(params, gen)
    report = check_recurrence(params, table, entries_recursive(params, gen))
    return [
        _finding("recurrence", params.N, "recurrence relative residual", report.max_relative, tol.recurrence),
        _finding("recurrence", params.N, "U recursion vs pairing", table.u_mismatch, tol.recurrence),
    ]


def check_overlap_qdiff(params: ModelParams, tol: CheckTolerances, gen: GenericityTolerances) -> list[Finding]:
    table = overlap_F(params, gen)
    report = check_qdiff(params, table, dual_entries(params, "substitution", gen))
    return [_finding("qdiff", params.N, "q-difference relative residual", report.max_relative, tol.qdiff)]


def check_orthogonality(params: ModelParams, tol: CheckTolerances, gen: GenericityTolerances) -> list[Finding]:
    if not params.is_imaginary_regime():
        return [_skipped("orthogonality", params.N, "Gram deviation", "needs alpha, alpha*, phi imaginary")]
    table = overlap_F(params, gen)
    report = weights_and_orthogonality(params, table, norm_coeffs(params, tol=gen))
    finding = _finding("orthogonality", params.N, "Gram deviation", report.deviation, tol.orthogonality,
                       detail=f"off-diagonal {report.off_diagonal:.3e}, diagonal {report.diagonal_deviation:.3e}, "
                              f"weight |Im|/|w| up to {report.weight_imaginary:.3e}")
    return [finding]


def check_closed_form(params: ModelParams, tol: CheckTolerances, gen: GenericityTolerances) -> list[Finding]:
    table = overlap_F(params, gen)
    blocks = entries_recursive(params, gen)
    transfer = blocks.assemble().T
    findings = []
    for s in (0, 2):
        closed = n2_closed_form(params, s, gen).as_vector()
        deviation = np.max(np.abs(closed - table.column(s, 1))) / max(1.0, np.max(np.abs(closed)))
        findings.append(_finding("closed_form", 2, f"closed form vs overlaps (s={s})", deviation, tol.closed_form))

    # s = 1 is a double eigenvalue: the closed form lies on the line through both columns
    closed = n2_closed_form(params, 1, gen)
    vector = closed.as_vector()
    lam = table.lambda_tilde[1]
    recurrence = np.max(np.abs(lam * vector - transfer @ vector)) / max(1.0, np.max(np.abs(vector)))
    columns = np.column_stack([table.column(1, 1), table.column(1, 2)])
    coefficients, *_ = np.linalg.lstsq(columns, vector, rcond=None)
    collinear = np.linalg.norm(columns @ coefficients - vector) / np.linalg.norm(vector)
    findings.append(_finding("closed_form", 2, "closed form recurrence (s=1)", recurrence, tol.closed_form))
    findings.append(_finding("closed_form", 2, "closed form on overlap line (s=1)",
                             max(collinear, abs(coefficients.sum() - 1)), tol.closed_form))

    mirrored = replace(params, alpha_star=-complex(params.alpha_star))
    parity = 0.0
    for lam in table.lambda_tilde:
        first = _closed_at(params, lam, gen)
        second = _closed_at(mirrored, lam, gen)
        parity = max(parity, np.max(np.abs(first - second)) / max(1.0, np.max(np.abs(first))))
    findings.append(_finding("closed_form", 2, "alpha* parity", parity, tol.parity))
    return findings


def _closed_at(params: ModelParams, lam: complex, gen: GenericityTolerances) -> np.ndarray:
    return n2_rational(params, lam, gen).as_vector()


def check_aw(params: ModelParams, tol: CheckTolerances, gen: GenericityTolerances) -> list[Finding]:
    fit = fit_aw_constants(build_w0(params, gen), build_w1(params, gen), derive(params, gen).q)
    if params.N == 1:
        return [_finding("aw", 1, "Askey-Wilson fit residual", fit.relative_residual, tol.aw_leonard)]
    return [_finding("aw", params.N, "Askey-Wilson fit residual", fit.relative_residual, tol.aw_non_leonard,
                     comparison=">=")]


def check_roots(params: ModelParams, tol: CheckTolerances, gen: GenericityTolerances) -> list[Finding]:
    report = eigenvalue_root_check(params, gen)
    return [_finding("roots", params.N, "root vs dual eigenvalue", report.max_error, tol.roots)]


# name -> (check, sizes it runs at; None means the requested N)
CHECKS: dict[str, tuple[Callable[..., list[Finding]], Optional[Sequence[int]]]] = {
    "tridiagonal": (check_tridiagonal, None),
    "dagger": (check_dagger, None),
    "eigenbasis": (check_eigenbasis, None),
    "multiplicity": (check_multiplicity, None),
    "ratio": (check_ratio, None),
    "biorthogonality": (check_biorthogonality, None),
    "recursion": (check_recursion, None),
    "band": (check_band, None),
    "spectrum": (check_spectrum, None),
    "dual": (check_dual, None),
    "axioms": (check_axioms, None),
    "recurrence": (check_overlap_recurrence, None),
    "qdiff": (check_overlap_qdiff, None),
    "orthogonality": (check_orthogonality, None),
    "closed_form": (check_closed_form, (2,)),
    "aw": (check_aw, (1, 2)),
    "roots": (check_roots, (1, 2)),
}


def run_suites(params: ModelParams, checks: Iterable[str] | None = None, tolerances: CheckTolerances | None = None,
               genericity: GenericityTolerances | None = None, sweep: bool = False,
               verbose: bool = False) -> list[Finding]:
    """
    Runs the named checks (all by default) and returns a list of findings:
      - checks with fixed sizes run at those sizes with the same alpha, alpha*, phi, theta
      - the others run at params.N, or at every N = 1..params.N when sweep is set
    A check that raises is reported with status "error".
    """
    tolerances = tolerances or tolerances_for()
    genericity = genericity or GenericityTolerances()
    require_valid(params, genericity)
    names = list(checks) if checks else list(CHECKS)
    unknown = [name for name in names if name not in CHECKS]
    if unknown:
        raise ValueError(f"unknown check(s): {', '.join(unknown)}")

    tasks = []
    for name in names:
        _, sizes = CHECKS[name]
        if sizes is None:
            sizes = range(1, params.N + 1) if sweep else (params.N,)
        tasks.extend((name, size) for size in sizes)
    logging.debug(f"Running {len(tasks)} check task(s): {tasks}")

    findings = []
    for name, size in tqdm(tasks, desc="Checks", unit="check", disable=not verbose):
        check, _ = CHECKS[name]
        try:
            findings.extend(check(params.with_size(size), tolerances, genericity))
        except Exception as e:
            logging.error(f"Check {name} failed at N = {size}: {e}")
            findings.append({"check": name, "N": size, "metric": "error", "value": None, "tolerance": None,
                             "comparison": None, "status": "error", "detail": str(e)})
    failed = [f for f in findings if f["status"] in ("fail", "error")]
    if failed:
        logging.warning(f"{len(failed)} of {len(findings)} finding(s) breach their tolerance.")
    else:
        logging.info(f"All {len(findings)} finding(s) within tolerance.")
    return findings


def breached(findings: Iterable[Finding]) -> bool:
    return any(f["status"] in ("fail", "error") for f in findings)


def tolerances_dict(tolerances: CheckTolerances) -> dict[str, float]:
    return asdict(tolerances)
