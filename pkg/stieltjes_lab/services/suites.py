"""Verification suites behind ``stieltjes_cli check`` and ``verify-all``.

A suite never raises on a failed inequality: it records it in a CheckReport and
the caller maps ``report.ok`` onto the exit status.  Input-side problems that
make a suite inapplicable (wrong origin, unbounded Z) are listed as skipped by
``verify_all``; numerical failures propagate.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from stieltjes_lab.app.config_loader import Tolerances
from stieltjes_lab.app.errors import HypothesisViolated, InputError, NotAnOperator, NotSectorial, ViolationError
from stieltjes_lab.app.families import (
    FamilyHandle,
    FamilyKind,
    StieltjesConstruction,
    closed_form_from_cayley,
    construction_rs_handle,
    form_domain_constancy,
    from_rs,
    invert_construction,
    kernel_check,
    lambda_to_z,
    lower_bound_constant,
    neg_inv_q0,
    phi_branch,
    q0,
    q0_cayley_form,
    q0_operator_part_form,
    r0,
    r0_cayley_form,
    r0_operator_part_form,
    resolvent_limits,
    sector_check,
    to_rs,
    transform_equivalences,
)
from stieltjes_lab.app.grid_jobs import parallel_map
from stieltjes_lab.app.integral_rep import (
    IntegralRepresentation,
    inverse_stieltjes_rep,
    reconstruction_error,
    stieltjes_rep,
)
from stieltjes_lab.app.linrel import form_value, inverse, negate, relation_distance, to_operator
from stieltjes_lab.app.numerics import opnorm
from stieltjes_lab.app.reports import CheckReport
from stieltjes_lab.app.rs_functions import RSFunctionHandle, class_angle_at, rs_membership, schur_frobenius_check

log = logging.getLogger(__name__)

SUITES = ("rs", "sector", "kernel", "equiv", "forms", "identities", "rep", "limits")
CHECK_SUITES = ("rs", "sector", "kernel", "equiv")
REP_TOL = 1e-9
MOMENT_TOL = 1e-10


@dataclass(frozen=True)
class SuiteOptions:
    tolerances: Tolerances = Tolerances()
    samples: int = 64
    seed: int = 0
    workers: int = 1


def rs_function_of(family: FamilyHandle) -> RSFunctionHandle:
    """The RS(M) function a family is built on, when it has one."""
    if family.rs is not None:
        return family.rs
    cons = family.construction
    if family.kind is FamilyKind.STIELTJES and cons.bounded and np.allclose(cons.Z, np.eye(cons.dim_m)):
        return construction_rs_handle(cons)
    raise HypothesisViolated("family has no RS origin (needs a system, a rule, or a Stieltjes construction with Z = I)")


def _relative(residual: float, value: np.ndarray) -> float:
    return residual / max(1.0, opnorm(value))


# ---------------------------------------------------------------------------
# suites


def rs_suite(family: FamilyHandle, grid: Sequence[complex], options: SuiteOptions = SuiteOptions()) -> CheckReport:
    omega = rs_function_of(family)
    points = [lambda_to_z(lam) for lam in grid]
    tol = options.tolerances.kernel_tol
    report = rs_membership(
        omega,
        points,
        tol,
        evaluate=lambda fn, pts: parallel_map(fn, pts, options.workers),
    )
    report.name = "rs"
    for z in points:
        if abs(z) < 1.0 and z.imag != 0.0:
            try:
                alpha = class_angle_at(omega, z, options.tolerances.angle_tol)
                report.record("class_angle", alpha, True, point=z)
            except ViolationError as exc:
                report.record("class_angle", float(exc.details.get("norm", math.nan)), False, point=z)
        if omega.system is not None:
            residual = schur_frobenius_check(omega.system, z, options.tolerances.cond_limit)
            report.record("schur_frobenius", residual, residual <= options.tolerances.identity_tol, point=z)
    return report


def _sector_at(family: FamilyHandle, lam: complex, options: SuiteOptions, index: int) -> CheckReport:
    tol = options.tolerances.angle_tol
    sector = sector_check(family, lam, options.samples, options.seed + index, tol)
    report = sector.report
    report.notes["phi"] = sector.phi
    if lam.imag != 0.0:
        try:
            bound = lower_bound_constant(family, lam, options.tolerances.psd_tol)
            report.record("lower_bound", bound.value, True, point=lam)
        except ViolationError as exc:
            report.record("lower_bound", float(exc.details.get("value", 0.0)), False, point=lam)
        except NotAnOperator:
            report.skip("value is multivalued; no lower bound", point=lam)
    return report


def sector_suite(family: FamilyHandle, grid: Sequence[complex], options: SuiteOptions = SuiteOptions()) -> CheckReport:
    parts = parallel_map(lambda item: _sector_at(family, item[1], options, item[0]), list(enumerate(grid)), options.workers)
    report = CheckReport("sector", options.tolerances.angle_tol)
    for part in parts:
        report.extend(part)
    return report


def kernel_suite(family: FamilyHandle, grid: Sequence[complex], options: SuiteOptions = SuiteOptions()) -> CheckReport:
    report = kernel_check(family, grid, options.tolerances.kernel_tol)
    report.name = "kernel"
    return report


def _duality_at(family: FamilyHandle, lam: complex) -> float:
    mirror = FamilyKind.INVERSE_STIELTJES if family.kind is FamilyKind.STIELTJES else FamilyKind.STIELTJES
    return relation_distance(from_rs(family.rs, mirror, lam), negate(inverse(family.relation(lam))))


def equiv_suite(family: FamilyHandle, grid: Sequence[complex], options: SuiteOptions = SuiteOptions()) -> CheckReport:
    tol = options.tolerances.angle_tol
    report = transform_equivalences(family, grid, tol)
    report.name = "equiv"
    if family.rs is not None:
        for lam, distance in zip(grid, parallel_map(lambda lam: _duality_at(family, lam), grid, options.workers)):
            report.record("duality", distance, distance <= options.tolerances.identity_tol, point=lam)
    return report


def forms_suite(family: FamilyHandle, grid: Sequence[complex], options: SuiteOptions = SuiteOptions()) -> CheckReport:
    """Form-domain constancy and closed-form extraction at nonreal points."""
    report = form_domain_constancy(family, grid, options.tolerances.kernel_tol)
    report.name = "forms"
    for lam in grid:
        if lam.imag == 0.0:
            continue
        R = family.relation(lam)
        phi, _ = phi_branch(family.kind, lam)
        try:
            closed = closed_form_from_cayley(R, rotation=phi, tol=options.tolerances.rank_rtol)
        except NotSectorial as exc:
            report.record("closed_form", math.inf, False, point=lam, reason=exc.message)
            continue
        basis = closed.domain_basis.basis
        worst, scale_ = 0.0, 1.0
        for a in range(basis.shape[1]):
            for b in range(basis.shape[1]):
                u, v = basis[:, a], basis[:, b]
                expected = form_value(R, u, v)
                scale_ = max(scale_, abs(expected))
                worst = max(worst, abs(closed.form(u, v) - expected))
        report.record("closed_form", worst, worst <= 1e-8 * scale_, point=lam, alpha=closed.alpha)
    return report


def _construction_identities(cons: StieltjesConstruction, lam: complex) -> list[tuple[str, float]]:
    value_q = q0(cons, lam)
    value_r = r0(cons, lam)
    out = [
        ("q0_cayley", _relative(opnorm(q0_cayley_form(cons, lam) - value_q), value_q)),
        ("r0_cayley", _relative(opnorm(r0_cayley_form(cons, lam) - value_r), value_r)),
    ]
    eye = np.eye(cons.dim_m, dtype=complex)
    checks: list[tuple[str, Callable[[], float]]] = [
        ("neg_inv_q0", lambda: opnorm(neg_inv_q0(cons, lam, tol=math.inf) @ value_q + eye)),
        ("q0_operator_part", lambda: _relative(opnorm(q0_operator_part_form(cons, lam, tol=math.inf) - value_q), value_q)),
        (
            "r0_operator_part",
            lambda: _relative(
                opnorm(r0_operator_part_form(cons, lam, tol=math.inf) - r0(invert_construction(cons), lam)), value_r
            ),
        ),
        (
            "rs_handle",
            lambda: _relative(
                opnorm(to_operator(from_rs(construction_rs_handle(cons), FamilyKind.STIELTJES, lam)) - value_q), value_q
            ),
        ),
    ]
    for name, fn in checks:
        out.append((name, fn()))
    return out


def _rs_identities(family: FamilyHandle, lam: complex) -> list[tuple[str, float]]:
    z = lambda_to_z(lam)
    value = family.rs(z)
    return [("round_trip", _relative(opnorm(to_rs(family, z) - value), value))]


def identities_suite(family: FamilyHandle, grid: Sequence[complex], options: SuiteOptions = SuiteOptions()) -> CheckReport:
    tol = options.tolerances.identity_tol
    report = CheckReport("identities", tol)
    if family.construction is not None:
        cons = family.construction
        eye = np.eye(cons.dim_m, dtype=complex)
        anchor_q = opnorm(q0(cons, -1.0) - eye)
        anchor_r = opnorm(r0(cons, -1.0) + eye)
        report.record("q0_anchor", anchor_q, anchor_q <= 1e-12, point=-1.0)
        report.record("r0_anchor", anchor_r, anchor_r <= 1e-12, point=-1.0)
        rows = parallel_map(lambda lam: _construction_identities(cons, lam), grid, options.workers)
    else:
        rows = parallel_map(lambda lam: _rs_identities(family, lam), grid, options.workers)
    for lam, row in zip(grid, rows):
        for name, residual in row:
            report.record(name, residual, residual <= tol, point=lam)
    return report


def representation_for(
    family: FamilyHandle, tolerances: Tolerances = Tolerances()
) -> tuple[IntegralRepresentation, StieltjesConstruction]:
    """Integral representation of a construction family and the construction it is read from.

    The inverse kind Z* R0(A_hat) Z is represented through A_hat^{-1}.
    """
    if family.construction is None:
        raise HypothesisViolated("integral representations need a construction origin")
    if family.kind is FamilyKind.STIELTJES:
        return stieltjes_rep(family.construction, tolerances.psd_tol, tolerances.cluster_tol), family.construction
    source = invert_construction(family.construction)
    return inverse_stieltjes_rep(source, tolerances.psd_tol, tolerances.cluster_tol), source


def check_representation(rep: IntegralRepresentation, source: StieltjesConstruction, grid: Sequence[complex]) -> CheckReport:
    """Reconstruction error over the grid and the moment identity, relative to ||Gamma||."""
    report = CheckReport("rep", REP_TOL)
    error = reconstruction_error(rep, source, grid)
    scale_ = max(1.0, opnorm(rep.gamma))
    report.record("reconstruction", error, error <= REP_TOL * scale_)
    moment = float(rep.notes.get("moment_residual", 0.0))
    report.record("moment", moment, moment <= MOMENT_TOL * scale_)
    report.notes["atoms"] = len(rep.atoms)
    return report


def rep_suite(family: FamilyHandle, grid: Sequence[complex], options: SuiteOptions = SuiteOptions()) -> CheckReport:
    rep, source = representation_for(family, options.tolerances)
    return check_representation(rep, source, grid)


def limits_suite(family: FamilyHandle, grid: Sequence[complex], options: SuiteOptions = SuiteOptions()) -> CheckReport:
    limits = resolvent_limits(family)
    report = limits.report
    report.name = "limits"
    return report


SUITE_RUNNERS: dict[str, Callable[[FamilyHandle, Sequence[complex], SuiteOptions], CheckReport]] = {
    "rs": rs_suite,
    "sector": sector_suite,
    "kernel": kernel_suite,
    "equiv": equiv_suite,
    "forms": forms_suite,
    "identities": identities_suite,
    "rep": rep_suite,
    "limits": limits_suite,
}


def run_suite(
    name: str, family: FamilyHandle, grid: Sequence[complex], options: Optional[SuiteOptions] = None
) -> CheckReport:
    try:
        runner = SUITE_RUNNERS[name]
    except KeyError:
        raise InputError(f"unknown suite {name!r}", known=list(SUITES)) from None
    report = runner(family, grid, options or SuiteOptions())
    log.info("suite %s: %d checks, %d violations", name, len(report.entries), len(report.violations))
    return report


def verify_all(
    family: FamilyHandle, grid: Sequence[complex], options: Optional[SuiteOptions] = None
) -> CheckReport:
    """Every suite in turn; inapplicable ones are skipped, violated identities are recorded."""
    options = options or SuiteOptions()
    report = CheckReport("verify_all", options.tolerances.identity_tol)
    for name in SUITES:
        try:
            part = run_suite(name, family, grid, options)
        except InputError as exc:
            log.info("suite %s skipped: %s", name, exc.message)
            report.skip(exc.message, suite=name, error=exc.__class__.__name__)
            continue
        except ViolationError as exc:
            report.record(f"{name}.error", 0.0, False, error=exc.__class__.__name__, message=exc.message)
            continue
        report.merge(part, name)
        report.notes[name] = {"ok": part.ok, "checks": len(part.entries), "notes": part.notes}
    return report


__all__ = [
    "SUITES",
    "CHECK_SUITES",
    "SuiteOptions",
    "rs_function_of",
    "rs_suite",
    "sector_suite",
    "kernel_suite",
    "equiv_suite",
    "forms_suite",
    "identities_suite",
    "representation_for",
    "check_representation",
    "rep_suite",
    "limits_suite",
    "run_suite",
    "verify_all",
]
