import math

import numpy as np
import pytest

from stieltjes_lab.app.errors import BadPoint, CouplingMismatch, InputError, MembershipViolated, NotContraction, NotHermitian
from stieltjes_lab.app.rs_functions import (
    boundary_value,
    class_angle_at,
    constant_handle,
    disk_inequality,
    linear_handle,
    make_system,
    minimality_check,
    mobius_check,
    omega0,
    omega0_handle,
    omega0_residuals,
    real_axis_bounds,
    rs_kernel,
    rs_membership,
    rule_handle,
    schur_frobenius_check,
    structure_decomposition,
    system_from_block,
    system_from_selfadjoint_block,
    system_handle,
    transfer,
)
from stieltjes_lab.services.instance_gen import make_rng, random_selfadjoint_block

GRID = [0.3 + 0.2j, -0.4 + 0.5j, 0.1 - 0.6j, -0.7 - 0.1j, 2.0 + 1.0j, -3.0 - 0.5j, 0.5, -0.25]


def test_transfer_matches_block_formula(system):
    z = 0.2 + 0.4j
    expected = system.D + z * system.C @ np.linalg.inv(np.eye(3) - z * system.F) @ system.C.conj().T
    np.testing.assert_allclose(transfer(system, z), expected, atol=1e-12)
    np.testing.assert_allclose(transfer(system, 0.0), system.D, atol=1e-14)


def test_transfer_is_symmetric(system):
    z = -0.3 + 0.8j
    np.testing.assert_allclose(transfer(system, z.conjugate()), transfer(system, z).conj().T, atol=1e-12)


def test_make_system_validates():
    with pytest.raises(NotContraction):
        make_system(np.eye(1) * 1.2, np.zeros((1, 1)), np.zeros((1, 1)))
    with pytest.raises(NotHermitian):
        system_from_block(np.array([[0.0, 0.5, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]), 2)


def test_cut_points_are_rejected(system):
    with pytest.raises(BadPoint):
        transfer(system, 1.0)
    with pytest.raises(BadPoint):
        transfer(system, -2.5)


def test_system_transfer_is_in_rs(system):
    report = rs_membership(system_handle(system), GRID)
    assert report.ok, report.violations
    checks = {entry["check"] for entry in report.entries}
    assert {"disk_inequality", "symmetry", "kernel_block", "real_bounds"} <= checks


def test_scaled_identity_is_not_in_rs():
    report = rs_membership(linear_handle(2.0, dim=2), GRID)
    assert not report.ok
    assert any(v["check"] == "disk_inequality" for v in report.violations)


def test_constant_outside_unit_ball_is_not_in_rs():
    report = rs_membership(constant_handle(3.0 * np.eye(2)), GRID)
    assert not report.ok


def test_disk_inequality_vanishes_for_identity_map():
    z = 0.3 + 0.4j
    omega = z * np.eye(2)
    np.testing.assert_allclose(disk_inequality(omega, z), np.zeros((2, 2)), atol=1e-14)


def test_kernel_diagonal_matches_disk_inequality(system):
    z = 0.1 + 0.5j
    value = transfer(system, z)
    np.testing.assert_allclose(rs_kernel(value, value, z, z), disk_inequality(value, z), atol=1e-12)


def test_schur_frobenius_identity(system):
    for z in (0.3 + 0.2j, -0.5j, 0.7, 1.5 - 2.0j):
        assert schur_frobenius_check(system, z) < 1e-10


def test_class_angle_for_system(system):
    alpha = class_angle_at(system_handle(system), 0.3 + 0.4j)
    assert alpha == pytest.approx(math.atan(0.8 / 0.75))


def test_class_angle_violation_carries_witness():
    with pytest.raises(MembershipViolated) as info:
        class_angle_at(linear_handle(2.0, dim=2), 0.5j)
    assert info.value.details["norm"] > 1.0
    assert len(info.value.details["witness"]) == 2


def test_class_angle_needs_unit_disk(system):
    with pytest.raises(BadPoint):
        class_angle_at(system_handle(system), 1.5j)


def test_unknown_rule():
    with pytest.raises(InputError):
        rule_handle("quadratic", dim=1)


def test_minimality_of_generic_system(system):
    assert minimality_check(system)
    degenerate = make_system(np.zeros((1, 1)), np.zeros((1, 2)), np.diag([0.5, -0.5]))
    assert not minimality_check(degenerate)


def test_structure_decomposition_of_constant():
    omega = constant_handle(np.diag([1.0, -1.0, 0.2]))
    structure = structure_decomposition(omega)
    assert structure.ranks == (1, 1, 1)
    assert structure.invariance_residual < 1e-12


def test_omega0_identities(sab):
    value = omega0(sab.N_param, sab.F_prime, sab.F_doubleprime, 0.2 + 0.3j)
    handle = omega0_handle(sab.N_param, sab.F_prime, sab.F_doubleprime)
    np.testing.assert_allclose(handle(0.2 + 0.3j), value, atol=1e-10)
    np.testing.assert_allclose(handle(0.0), np.zeros((2, 2)), atol=1e-14)


def test_omega0_needs_matching_coupling(sab):
    with pytest.raises(CouplingMismatch):
        omega0(sab.N_param, sab.F_prime, sab.F_prime, 0.5j)


def test_mobius_reconstruction(sab):
    for z in (0.2 + 0.3j, -0.6j, 0.4):
        assert mobius_check(sab, z) < 1e-9


DISK_POINTS = (0.3 + 0.2j, -0.4 + 0.5j, 0.1 - 0.6j, -0.2 - 0.7j, 0.6j)


@pytest.mark.parametrize("seed", range(100))
def test_omega0_identities_on_seeded_blocks(seed):
    rng = make_rng(seed)
    sab = random_selfadjoint_block(rng, int(rng.integers(1, 5)), int(rng.integers(1, 5)))
    for z in DISK_POINTS:
        _, residuals = omega0_residuals(sab.N_param, sab.F_prime, sab.F_doubleprime, z)
        assert set(residuals) == {"negative_inverse", "mean_inverse", "plus_fraction", "minus_fraction"}
        assert max(residuals.values()) < 1e-9
        assert mobius_check(sab, z) < 1e-9


def test_boundary_value_direct(system):
    handle = system_handle(system)
    value, method = boundary_value(handle, 1)
    assert method == "direct"
    np.testing.assert_allclose(value, transfer(system, 1 - 1e-9), atol=1e-6)


def test_real_axis_bounds_for_system(sab):
    lower, upper = real_axis_bounds(system_handle(system_from_selfadjoint_block(sab)), 0.5)
    assert lower >= -1e-12
    assert upper >= -1e-12
