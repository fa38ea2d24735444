import numpy as np
import pytest

from stieltjes_lab.app.errors import HypothesisViolated, InputError
from stieltjes_lab.app.families import FamilyKind, construction_family, make_construction, neg_h_over_lambda, rs_family
from stieltjes_lab.app.rs_functions import constant_handle, system_handle
from stieltjes_lab.services.suites import (
    SUITES,
    SuiteOptions,
    check_representation,
    representation_for,
    rs_function_of,
    run_suite,
    verify_all,
)


@pytest.fixture
def options():
    return SuiteOptions(samples=16, seed=3, workers=2)


@pytest.mark.parametrize("kind", list(FamilyKind))
def test_rs_suite_on_system(system, lambdas, options, kind):
    report = run_suite("rs", rs_family(system_handle(system), kind), lambdas, options)
    assert report.name == "rs"
    assert report.ok, report.violations
    assert any(entry["check"] == "schur_frobenius" for entry in report.entries)


def test_rs_suite_flags_constant_outside_the_ball(lambdas, options):
    report = run_suite("rs", rs_family(constant_handle(3.0 * np.eye(2))), lambdas, options)
    assert not report.ok


def test_sector_suite_on_negative_h_over_lambda(lambdas, options):
    report = run_suite("sector", neg_h_over_lambda(np.diag([1.0, 3.0])), lambdas, options)
    assert report.ok, report.violations
    assert sum(entry["check"] == "lower_bound" for entry in report.entries) == len(lambdas)


def test_kernel_suite(system, lambdas, options):
    assert run_suite("kernel", rs_family(system_handle(system)), lambdas, options).ok


def test_identities_suite_on_constructions(diagonal_construction, multivalued_construction, lambdas, options):
    for cons in (diagonal_construction, multivalued_construction):
        report = run_suite("identities", construction_family(cons), lambdas, options)
        assert report.ok, report.violations
        checks = {entry["check"] for entry in report.entries}
        assert {"q0_anchor", "r0_anchor", "q0_cayley", "neg_inv_q0", "rs_handle"} <= checks


def test_identities_suite_on_system(system, lambdas, options):
    report = run_suite("identities", rs_family(system_handle(system)), lambdas, options)
    assert report.ok
    assert {entry["check"] for entry in report.entries} == {"round_trip"}


@pytest.mark.parametrize("kind", list(FamilyKind))
def test_rep_suite(diagonal_construction, lambdas, options, kind):
    report = run_suite("rep", construction_family(diagonal_construction, kind), lambdas, options)
    assert report.ok, report.violations
    assert report.notes["atoms"] == 2


def test_representation_needs_construction(system):
    with pytest.raises(HypothesisViolated):
        representation_for(rs_family(system_handle(system)))


def test_check_representation_reports_reconstruction(multivalued_construction, lambdas):
    rep, source = representation_for(construction_family(multivalued_construction, FamilyKind.INVERSE_STIELTJES))
    report = check_representation(rep, source, lambdas)
    assert report.ok
    assert report.worst("reconstruction") < 1e-9


def test_rs_function_of_needs_identity_z(diagonal_construction):
    cons = make_construction(diagonal_construction.A_hat, diagonal_construction.V, 2.0 * np.eye(2))
    with pytest.raises(HypothesisViolated):
        rs_function_of(construction_family(cons))
    with pytest.raises(HypothesisViolated):
        rs_function_of(construction_family(diagonal_construction, FamilyKind.INVERSE_STIELTJES))
    assert rs_function_of(construction_family(diagonal_construction)) is not None


def test_unknown_suite(system, lambdas):
    with pytest.raises(InputError):
        run_suite("everything", rs_family(system_handle(system)), lambdas)


def test_verify_all_skips_inapplicable_suites(system, lambdas, options):
    report = verify_all(rs_family(system_handle(system)), lambdas, options)
    assert any(item.get("suite") == "rep" for item in report.skipped)
    assert "rep" not in report.notes
    assert {"rs", "kernel", "identities"} <= set(report.notes)
    assert all(entry["check"].split(".")[0] in SUITES for entry in report.entries)


def test_verify_all_on_construction(diagonal_construction, lambdas, options):
    report = verify_all(construction_family(diagonal_construction), lambdas, options)
    assert report.notes["rep"]["ok"]
    assert report.notes["identities"]["ok"]
