import math

import numpy as np
import pytest

from stieltjes_lab.app.contractions import (
    boundary_limits,
    build_block_contraction,
    class_angle_check,
    decompose_block_contraction,
    defect,
    defect_star,
    dyadic_limit,
    min_class_angle,
    sector_semi_angle,
    sectorial_product_angle,
    selfadjoint_block,
    sigma_pm,
    w_function,
)
from stieltjes_lab.app.errors import BadPoint, InputError, NoConvergence, NotContraction, NotHermitian
from stieltjes_lab.services.instance_gen import (
    make_rng,
    random_block_contraction,
    random_contraction,
    random_selfadjoint_block,
)


def test_defect_squares_to_identity_gap(rng):
    T = random_contraction(rng, 3, 2)
    D_T = defect(T)
    np.testing.assert_allclose(D_T @ D_T, np.eye(2) - T.conj().T @ T, atol=1e-12)
    D_star = defect_star(T)
    np.testing.assert_allclose(D_star @ D_star, np.eye(3) - T @ T.conj().T, atol=1e-12)


@pytest.mark.parametrize("seed", range(200))
def test_defect_intertwines(seed):
    rng = make_rng(seed)
    T = random_contraction(rng, int(rng.integers(1, 9)), int(rng.integers(1, 9)))
    assert np.linalg.norm(T @ defect(T) - defect_star(T) @ T, 2) < 1e-10


def test_defect_rejects_expansions():
    with pytest.raises(NotContraction):
        defect(np.diag([1.5, 0.2]))


def test_hermitian_contraction_has_zero_angle():
    assert class_angle_check(np.diag([0.9, -0.4]), 0.0)
    assert min_class_angle(np.diag([0.9, -0.4])) == 0.0


def test_min_class_angle_of_imaginary_scalar():
    # ||0.5 i sin(a) + i cos(a)|| <= 1 first holds at tan(a/2) = 1/2
    alpha = min_class_angle(0.5j * np.eye(2))
    assert alpha == pytest.approx(2 * math.atan(0.5), abs=1e-6)


def test_unitary_rotation_is_in_no_class():
    assert math.isinf(min_class_angle(1j * np.eye(1)))


def test_class_angle_domain():
    with pytest.raises(InputError):
        class_angle_check(np.eye(1), math.pi / 2)


def test_sector_semi_angle_of_normal_matrix():
    assert sector_semi_angle(np.diag([1.0, 1.0 + 1.0j])) == pytest.approx(math.pi / 4, abs=1e-6)
    assert sector_semi_angle(np.diag([2.0, 0.5])) == 0.0
    assert math.isinf(sector_semi_angle(-np.eye(2)))


@pytest.mark.parametrize("seed", range(100))
def test_block_contraction_round_trip(seed):
    rng = make_rng(seed)
    block = random_block_contraction(rng, int(rng.integers(1, 5)), int(rng.integers(1, 5)))
    assert np.linalg.norm(block.T, 2) <= 1 + 1e-12
    recovered = decompose_block_contraction(block.T, block.D.shape[1])
    rebuilt = build_block_contraction(recovered.D, recovered.N_param, recovered.G, recovered.L_param)
    assert np.linalg.norm(rebuilt.T - block.T, 2) < 1e-9
    np.testing.assert_allclose(recovered.N_param, block.N_param, atol=1e-9)


def test_block_contraction_rejects_bad_shapes():
    with pytest.raises(InputError):
        build_block_contraction(np.zeros((2, 2)), np.zeros((3, 1)), np.zeros((2, 3)), np.zeros((3, 3)))


def test_selfadjoint_block_structure(sab):
    np.testing.assert_allclose(sab.T, sab.T.conj().T, atol=1e-12)
    assert np.linalg.norm(sab.T, 2) <= 1 + 1e-9
    np.testing.assert_allclose(sab.F_prime - sab.F_doubleprime, 2 * sab.N_param @ sab.N_param.conj().T, atol=1e-12)


def test_selfadjoint_block_needs_hermitian_d():
    with pytest.raises(NotHermitian):
        selfadjoint_block(np.array([[0.0, 0.5], [0.0, 0.0]]), np.zeros((1, 2)), np.zeros((1, 1)))


IDENTITY_POINTS = (0.3 + 0.2j, -0.4 + 0.5j, 0.1 - 0.6j, -0.7 - 0.1j, 2.0 + 1.0j, 0.5, -0.25)


def test_sigma_and_w_shapes(sab):
    sigma_plus, sigma_minus = sigma_pm(sab, 0.3 + 0.2j)
    assert sigma_plus.shape == (2, 2)
    assert sigma_minus.shape == (2, 2)
    assert w_function(sab, 0.3 + 0.2j).shape == (2, 2)


@pytest.mark.parametrize("seed", range(100))
def test_sigma_w_and_boundary_identities_hold(seed):
    rng = make_rng(seed)
    sys = random_selfadjoint_block(rng, int(rng.integers(1, 5)), int(rng.integers(1, 5)))
    np.testing.assert_allclose(sys.F_prime - sys.F_doubleprime, 2 * sys.N_param @ sys.N_param.conj().T, atol=1e-12)
    for z in IDENTITY_POINTS:
        sigma_pm(sys, z, tol=1e-9)
        w_function(sys, z, tol=1e-9)
    limits = boundary_limits(sys)
    assert limits.method == "direct"
    np.testing.assert_allclose(limits.B_plus, sys.F_prime, atol=1e-9)
    np.testing.assert_allclose(limits.B_minus, sys.F_doubleprime, atol=1e-9)


def test_sigma_refuses_the_cut(sab):
    with pytest.raises(BadPoint):
        sigma_pm(sab, 1.5)


def test_boundary_limits_direct(sab):
    limits = boundary_limits(sab)
    assert limits.method == "direct"
    np.testing.assert_allclose(limits.B_plus, sab.F_prime, atol=1e-9)
    np.testing.assert_allclose(limits.B_minus, sab.F_doubleprime, atol=1e-9)


def test_boundary_limits_dyadic_when_d_touches_one(rng):
    N = random_contraction(rng, 2, 2, max_norm=0.5)
    sys = selfadjoint_block(np.diag([1.0, 0.3]), N, np.diag([0.2, -0.1]))
    limits = boundary_limits(sys)
    assert limits.method == "dyadic"
    np.testing.assert_allclose(limits.B_plus, sys.F_prime, atol=1e-6)


def test_dyadic_limit_of_smooth_function():
    value, step = dyadic_limit(lambda x: np.array([[x * x]]), 1.0)
    assert value[0, 0] == pytest.approx(1.0, abs=1e-7)
    assert step < 1e-8


def test_dyadic_limit_reports_divergence():
    with pytest.raises(NoConvergence):
        dyadic_limit(lambda x: np.array([[1.0 / (1.0 - x)]]), 1.0)


def test_sectorial_product_angle_matches_class_angle():
    assert sectorial_product_angle(0.5j * np.eye(2)) == pytest.approx(2 * math.atan(0.5), abs=1e-6)
    assert sectorial_product_angle(np.diag([0.9, -0.4])) == pytest.approx(0.0, abs=1e-9)
