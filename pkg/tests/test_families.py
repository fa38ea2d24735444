import math

import numpy as np
import pytest

from stieltjes_lab.app.errors import (
    BadPoint,
    BoundViolated,
    GridDegenerate,
    HypothesisViolated,
    IllConditioned,
    InputError,
    NotSectorial,
)
from stieltjes_lab.app.families import (
    ClosedFormRepresentation,
    FamilyHandle,
    FamilyKind,
    check_lambda,
    closed_form_from_cayley,
    construction_family,
    construction_rs_handle,
    family_kernel,
    form_domain_constancy,
    form_family,
    from_rs,
    graph_from_omega,
    kernel_check,
    lambda_to_z,
    lower_bound_constant,
    m01,
    m01_criterion,
    m01_limit_minus_infinity,
    m02_criterion,
    make_construction,
    monotone_form_limits,
    neg_h_over_lambda,
    neg_inv_q0,
    phi_branch,
    q0,
    q0_cayley_form,
    q0_operator_part_form,
    r0,
    r0_cayley_form,
    r0_operator_part_form,
    resolvent_limits,
    rs_family,
    sector_check,
    to_rs,
    transform_equivalences,
    z_to_lambda,
)
from stieltjes_lab.app.linrel import from_operator, inverse, negate, parts, relations_equal, to_operator
from stieltjes_lab.app.numerics import Subspace, full_space
from stieltjes_lab.app.rs_functions import constant_handle, system_handle


def diagonal_q0(lam):
    return np.eye(2) + 0.36 * (1 + lam) * np.diag([1 / (0.5 - lam), 1 / (2.0 - lam)])


# ---------------------------------------------------------------------------
# points and kinds


def test_lambda_z_round_trip(lambdas):
    for lam in lambdas:
        assert z_to_lambda(lambda_to_z(lam)) == pytest.approx(lam)
    assert lambda_to_z(-1.0) == 0


def test_positive_axis_is_excluded():
    for lam in (0.0, 0.5, 3.0):
        with pytest.raises(BadPoint):
            check_lambda(lam)
    assert check_lambda(-0.5) == -0.5


def test_kind_aliases():
    assert FamilyKind.parse("inverse-stieltjes") is FamilyKind.INVERSE_STIELTJES
    assert FamilyKind.parse("S") is FamilyKind.STIELTJES
    with pytest.raises(InputError):
        FamilyKind.parse("nevanlinna")


def test_phi_branch_on_negative_axis():
    assert phi_branch(FamilyKind.STIELTJES, -2.0) == (0.0, 0.0)
    assert phi_branch(FamilyKind.INVERSE_STIELTJES, -2.0) == (math.pi, 0.0)
    phi, bound = phi_branch(FamilyKind.STIELTJES, 1j)
    assert bound == pytest.approx(math.pi / 4)
    assert phi == pytest.approx(-math.pi / 4)


def test_family_needs_one_origin():
    with pytest.raises(InputError):
        FamilyHandle(FamilyKind.STIELTJES)


# ---------------------------------------------------------------------------
# explicit constructions


def test_q0_of_diagonal_construction(diagonal_construction, lambdas):
    for lam in lambdas:
        np.testing.assert_allclose(q0(diagonal_construction, lam), diagonal_q0(lam), atol=1e-12)
    np.testing.assert_allclose(q0(diagonal_construction, -1.0), np.eye(2), atol=0)


def test_zero_relation_gives_minus_identity_over_lambda():
    cons = make_construction(from_operator(np.zeros((2, 2))), np.eye(2))
    np.testing.assert_allclose(q0(cons, -2.0), 0.5 * np.eye(2), atol=1e-12)
    np.testing.assert_allclose(r0(cons, -2.0), -2.0 * np.eye(2), atol=1e-12)


def test_r0_mirrors_q0(diagonal_construction, lambdas):
    for lam in lambdas:
        np.testing.assert_allclose(r0(diagonal_construction, lam), -q0(diagonal_construction, 1 / lam), atol=1e-12)


@pytest.mark.parametrize("name", ["diagonal_construction", "multivalued_construction"])
def test_cayley_forms_agree(request, name, lambdas):
    cons = request.getfixturevalue(name)
    for lam in lambdas:
        np.testing.assert_allclose(q0_cayley_form(cons, lam), q0(cons, lam), atol=1e-10)
        np.testing.assert_allclose(r0_cayley_form(cons, lam), r0(cons, lam), atol=1e-10)


@pytest.mark.parametrize("name", ["diagonal_construction", "multivalued_construction"])
def test_negative_inverse_of_q0(request, name, lambdas):
    cons = request.getfixturevalue(name)
    for lam in lambdas:
        np.testing.assert_allclose(neg_inv_q0(cons, lam), -np.linalg.inv(q0(cons, lam)), atol=1e-10)


def test_operator_part_forms(multivalued_construction, lambdas):
    for lam in lambdas:
        q0_operator_part_form(multivalued_construction, lam)
        r0_operator_part_form(multivalued_construction, lam)


def test_construction_is_the_stieltjes_family_of_its_rs_function(multivalued_construction, lambdas):
    family = rs_family(construction_rs_handle(multivalued_construction))
    for lam in lambdas:
        np.testing.assert_allclose(family.form_operator(lam), q0(multivalued_construction, lam), atol=1e-10)


def test_restricted_domain_of_z(diagonal_construction):
    cons = make_construction(
        diagonal_construction.A_hat, diagonal_construction.V, dom_Z=Subspace(2, np.array([[1.0], [0.0]]))
    )
    family = construction_family(cons)
    lam = -1.0 + 0.5j
    np.testing.assert_allclose(family.form_operator(lam), diagonal_q0(lam)[:1, :1], atol=1e-12)
    assert parts(family.relation(lam)).mul.dim == 1


# ---------------------------------------------------------------------------
# RS-function families


def test_inverse_kind_is_negative_inverse(system, lambdas):
    omega = system_handle(system)
    for lam in lambdas:
        Q = from_rs(omega, FamilyKind.STIELTJES, lam)
        R = from_rs(omega, FamilyKind.INVERSE_STIELTJES, lam)
        assert relations_equal(R, negate(inverse(Q)))


def test_to_rs_recovers_omega(system, lambdas):
    omega = system_handle(system)
    for kind in FamilyKind:
        family = rs_family(omega, kind)
        for lam in lambdas:
            z = lambda_to_z(lam)
            np.testing.assert_allclose(to_rs(family, z), omega(z), atol=1e-9)


def test_graph_from_omega_at_plus_one_is_multivalued():
    R = graph_from_omega(np.eye(2), FamilyKind.STIELTJES)
    assert parts(R).mul.dim == 2


def test_neg_h_over_lambda_values():
    H = np.array([[2.0, 0.5], [0.5, 1.0]])
    family = neg_h_over_lambda(H)
    for lam in (-1.0 + 1.0j, -0.3, 2.0 + 0.5j):
        np.testing.assert_allclose(family.form_operator(lam), -H / lam, atol=1e-10)


# ---------------------------------------------------------------------------
# M01 / M02


def test_m01_limit_scalar():
    N = np.array([[0.5]])
    F_prime = np.array([[0.2]])
    expected = 1 - 2 * 0.25 / 1.2
    assert m01_limit_minus_infinity(N, F_prime, [1.0]) == pytest.approx(expected)
    assert m01(N, F_prime, -1e8)[0, 0].real == pytest.approx(expected, abs=1e-6)


def test_m0_criteria_without_coupling():
    F = np.diag([0.5, -0.5])
    N = np.zeros((2, 1))
    assert m01_criterion(N, F)[0]
    assert m02_criterion(N, F)[0]
    assert not m01_criterion(np.array([[1.0], [0.0]]), F)[0]


# ---------------------------------------------------------------------------
# sector and kernel checks


def test_sector_check_on_negative_h_over_lambda(lambdas):
    family = neg_h_over_lambda(np.diag([1.0, 3.0]))
    for lam in lambdas:
        sector = sector_check(family, lam, samples=32, seed=1)
        assert sector.ok, sector.report.violations
        assert sector.semi_angle <= sector.bound + 1e-6


@pytest.mark.parametrize("kind", list(FamilyKind))
def test_sector_check_on_system_family(system, kind, lambdas):
    family = rs_family(system_handle(system), kind)
    for lam in lambdas + [-0.7]:
        assert sector_check(family, lam).ok


def test_sector_check_flags_negative_constant(lambdas):
    # Omega = 3 I gives Q = -2 I
    family = rs_family(constant_handle(3.0 * np.eye(2)))
    assert not sector_check(family, lambdas[0]).ok


@pytest.mark.parametrize("kind", list(FamilyKind))
def test_kernel_check_on_system_family(system, kind, lambdas):
    family = rs_family(system_handle(system), kind)
    report = kernel_check(family, lambdas)
    assert report.ok, report.violations


@pytest.mark.parametrize("kind", list(FamilyKind))
def test_kernel_check_flags_wrong_sign(kind, lambdas):
    family = rs_family(constant_handle(3.0 * np.eye(2)), kind)
    assert not kernel_check(family, lambdas).ok


def test_kernel_refuses_nearly_conjugate_points(system):
    family = rs_family(system_handle(system))
    with pytest.raises(GridDegenerate):
        family_kernel(family, -1.0 + 1.0j, -1.0 + 5e-5 - 1.0j)


def test_lower_bound_of_scalar_family():
    family = neg_h_over_lambda(np.eye(2))
    lam = -1.0 + 1.0j
    assert lower_bound_constant(family, lam).value == pytest.approx(1 / abs(lam), rel=1e-6)


def test_lower_bound_fails_for_singular_value():
    family = rs_family(constant_handle(np.diag([-1.0, 0.0])))
    with pytest.raises(BoundViolated):
        lower_bound_constant(family, -1.0 + 1.0j)


# ---------------------------------------------------------------------------
# closed forms


def test_closed_form_of_positive_operator():
    closed = closed_form_from_cayley(from_operator(np.diag([1.0, 2.0])))
    assert closed.alpha == 0.0
    assert closed.form([1, 0], [1, 0]) == pytest.approx(1.0)
    assert closed.form([0, 1], [0, 1]) == pytest.approx(2.0)
    assert closed.form([1, 0], [0, 1]) == pytest.approx(0.0, abs=1e-12)
    assert closed.in_domain([1.0, 1.0])


def test_closed_form_after_rotation():
    A = np.exp(-0.3j) * np.diag([1.0, 2.0])
    closed = closed_form_from_cayley(from_operator(A), rotation=0.3)
    assert closed.form([1, 0], [1, 0]) == pytest.approx(np.exp(-0.3j))


def test_closed_form_needs_sectorial_relation():
    with pytest.raises(NotSectorial):
        closed_form_from_cayley(from_operator(-np.eye(2)))


def test_closed_form_refuses_singular_middle_factor():
    # G = i makes I + iG vanish
    closed = ClosedFormRepresentation(full_space(1), np.array([[1j]]), np.eye(1), 0.0)
    with pytest.raises(IllConditioned):
        closed.form([1.0], [1.0])


# ---------------------------------------------------------------------------
# limits


def test_resolvent_limits_of_diagonal_construction(diagonal_construction):
    limits = resolvent_limits(construction_family(diagonal_construction))
    assert limits.report.ok, limits.report.violations
    assert limits.method == "direct"
    np.testing.assert_allclose(to_operator(limits.at_zero), np.diag([1.72, 1.18]), atol=1e-9)
    np.testing.assert_allclose(to_operator(limits.at_infinity), 0.64 * np.eye(2), atol=1e-9)


def test_resolvent_limits_of_inverse_kind(diagonal_construction):
    limits = resolvent_limits(construction_family(diagonal_construction, FamilyKind.INVERSE_STIELTJES))
    assert limits.report.ok, limits.report.violations
    np.testing.assert_allclose(to_operator(limits.at_zero), -0.64 * np.eye(2), atol=1e-9)
    np.testing.assert_allclose(to_operator(limits.at_infinity), -np.diag([1.72, 1.18]), atol=1e-9)


def test_resolvent_limits_with_multivalued_endpoint():
    limits = resolvent_limits(neg_h_over_lambda(2.0 * np.eye(2)))
    assert limits.report.ok, limits.report.violations
    assert parts(limits.at_zero).mul.dim == 2
    np.testing.assert_allclose(to_operator(limits.at_infinity), np.zeros((2, 2)), atol=1e-9)


def test_monotone_limits_split_converging_and_diverging():
    results = monotone_form_limits(lambda x: np.diag([x, 1.0]), 0.0, 1.0, [[1.0, 0.0], [0.0, 1.0]])
    assert [r.status for r in results] == ["diverges", "converges"]
    assert results[1].lower_limit == pytest.approx(1.0)
    assert results[1].upper_limit == pytest.approx(1.0)


def test_monotone_limits_need_monotone_family():
    with pytest.raises(HypothesisViolated):
        monotone_form_limits(lambda x: np.diag([1.0 - x, 1.0]), 0.0, 1.0, [[1.0, 0.0]])


# ---------------------------------------------------------------------------
# form domains and transforms


@pytest.mark.parametrize("kind", list(FamilyKind))
def test_form_domain_constancy_for_system(system, kind, lambdas):
    family = rs_family(system_handle(system), kind)
    report = form_domain_constancy(family, lambdas)
    assert report.ok, report.violations
    assert any(item["reason"].startswith("Re lam") for item in report.skipped)


def test_form_domain_constancy_needs_rs_origin(diagonal_construction, lambdas):
    family = construction_family(diagonal_construction, FamilyKind.INVERSE_STIELTJES)
    with pytest.raises(HypothesisViolated):
        form_domain_constancy(family, lambdas)


@pytest.mark.parametrize("kind", list(FamilyKind))
def test_transform_equivalences_for_system(system, kind, lambdas):
    report = transform_equivalences(rs_family(system_handle(system), kind), lambdas + [-0.5])
    assert report.ok, report.violations


def test_transform_equivalences_for_construction(diagonal_construction, lambdas):
    report = transform_equivalences(construction_family(diagonal_construction), lambdas)
    assert report.ok, report.violations


def test_form_family_with_bounded_z(diagonal_construction, lambdas):
    Z = np.diag([1.0, 2.0])
    cons = make_construction(diagonal_construction.A_hat, diagonal_construction.V, Z)
    for lam in lambdas[:3]:
        Fm, R = form_family(cons, "stieltjes", lam)
        np.testing.assert_allclose(Fm, Z @ diagonal_q0(lam) @ Z, atol=1e-12)
        np.testing.assert_allclose(to_operator(R), Fm, atol=1e-10)
