import numpy as np
import pytest

from stieltjes_lab.app.errors import EmptyDomain, IllConditioned, NotAnOperator, NotInResolventSet
from stieltjes_lab.app.linrel import (
    adjoint,
    cayley,
    compose_congruence,
    form_matrix,
    from_operator,
    from_pairs,
    inverse,
    is_nonnegative,
    is_nonpositive,
    is_selfadjoint,
    negate,
    numerical_range,
    operator_part,
    parts,
    purely_multivalued,
    relations_equal,
    resolvent,
    scalar_shift,
    to_operator,
    verify_resolvent_connection,
    zero_operator,
)
from stieltjes_lab.app.numerics import subspace_distance
from stieltjes_lab.services.instance_gen import arc_grid, make_rng, random_complex, random_nonnegative_relation, random_psd


def test_graph_basis_is_orthonormal(rng):
    R = from_operator(random_complex(rng, 3, 3))
    assert R.rank == 3
    np.testing.assert_allclose(R.graph.basis.conj().T @ R.graph.basis, np.eye(3), atol=1e-12)


def test_duplicate_pairs_do_not_raise_rank():
    F = np.array([[1.0, 2.0], [0.0, 0.0]])
    R = from_pairs(F, 3 * F)
    assert R.rank == 1


def test_adjoint_of_operator_graph(rng):
    A = random_complex(rng, 3, 3)
    assert relations_equal(adjoint(from_operator(A)), from_operator(A.conj().T))


def test_adjoint_of_multivalued_relation():
    assert relations_equal(adjoint(purely_multivalued(2)), purely_multivalued(2))


def test_inverse_swaps_components(rng):
    A = random_complex(rng, 3, 3) + 3 * np.eye(3)
    assert relations_equal(inverse(from_operator(A)), from_operator(np.linalg.inv(A)))
    assert relations_equal(inverse(zero_operator(2)), purely_multivalued(2))


def test_parts_of_relation_with_multivalued_part():
    top = np.array([[1.0, 0.0], [0.0, 0.0]])
    bottom = np.array([[0.0, 0.0], [0.0, 1.0]])
    pieces = parts(from_pairs(top, bottom))
    assert (pieces.dom.dim, pieces.ran.dim, pieces.ker.dim, pieces.mul.dim) == (1, 1, 1, 1)


def test_sign_predicates(rng):
    H = random_psd(rng, 3)
    assert is_selfadjoint(from_operator(H))
    assert is_nonnegative(from_operator(H))
    assert is_nonpositive(negate(from_operator(H)))
    assert is_nonnegative(purely_multivalued(3))
    assert not is_selfadjoint(from_operator(np.array([[0.0, 1.0], [0.0, 0.0]])))


def test_random_nonnegative_relations_are_nonnegative(rng):
    for _ in range(5):
        assert is_nonnegative(random_nonnegative_relation(rng, 4, mul_probability=0.5))


def test_resolvent_of_operator_graph(rng):
    H = random_psd(rng, 3)
    lam = -1.0 + 0.5j
    expected = np.linalg.inv(H - lam * np.eye(3))
    np.testing.assert_allclose(resolvent(from_operator(H), lam), expected, atol=1e-10)


def test_resolvent_of_multivalued_part_vanishes():
    np.testing.assert_allclose(resolvent(purely_multivalued(2), -1.0), np.zeros((2, 2)), atol=1e-14)


def test_resolvent_at_eigenvalue_fails():
    with pytest.raises(NotInResolventSet):
        resolvent(from_operator(np.diag([1.0, 2.0])), 2.0)


def test_to_operator_rejects_multivalued():
    with pytest.raises(NotAnOperator):
        to_operator(purely_multivalued(2))


def test_shift_then_operator(rng):
    A = random_complex(rng, 2, 2)
    np.testing.assert_allclose(to_operator(scalar_shift(from_operator(A), 0.5j)), A - 0.5j * np.eye(2), atol=1e-10)


@pytest.mark.parametrize("seed", range(200))
def test_cayley_is_an_involution(seed):
    rng = make_rng(seed)
    n = int(rng.integers(1, 9))
    R = random_nonnegative_relation(rng, n, mul_probability=0.5)
    assert subspace_distance(cayley(cayley(R)).graph, R.graph) < 1e-10
    generic = from_operator(random_complex(rng, n, n))
    assert subspace_distance(cayley(cayley(generic)).graph, generic.graph) < 1e-10


@pytest.mark.parametrize("seed", range(200))
def test_cayley_of_nonnegative_relation_is_selfadjoint_contraction(seed):
    rng = make_rng(seed)
    R = random_nonnegative_relation(rng, int(rng.integers(1, 9)), mul_probability=0.5)
    T = to_operator(cayley(R))
    np.testing.assert_allclose(T, T.conj().T, atol=1e-10)
    assert np.linalg.norm(T, 2) <= 1 + 1e-10


def test_congruence_with_invertible_z(rng):
    A = random_complex(rng, 3, 3)
    Z = random_complex(rng, 3, 3) + 2 * np.eye(3)
    expected = Z.conj().T @ A @ Z
    np.testing.assert_allclose(to_operator(compose_congruence(Z, from_operator(A))), expected, atol=1e-9)


CONNECTION_POINTS = arc_grid((0.5, 3.0), 20, 0.2)


@pytest.mark.parametrize("seed", range(50))
def test_resolvent_connection_identity(seed):
    rng = make_rng(seed)
    A = random_nonnegative_relation(rng, int(rng.integers(1, 9)), mul_probability=0.5)
    for lam in CONNECTION_POINTS:
        assert verify_resolvent_connection(A, lam) < 1e-9


def test_resolvent_connection_refuses_ill_conditioned_factors():
    # T = diag(1, -0.5); I - wT at lam = -2 + i has condition about 1.75
    A = from_operator(np.diag([0.0, 3.0]))
    assert verify_resolvent_connection(A, -2.0 + 1.0j) < 1e-10
    with pytest.raises(IllConditioned):
        verify_resolvent_connection(A, -2.0 + 1.0j, cond_limit=1.5)


def test_sign_predicates_follow_the_tolerance():
    R = from_operator(np.array([[1.0, 1e-6], [0.0, 2.0]]))
    assert not is_nonnegative(R)
    assert is_nonnegative(R, tol=1e-5)
    assert not is_nonpositive(negate(R))
    assert is_nonpositive(negate(R), tol=1e-5)


def test_numerical_range_of_hermitian_is_real_interval():
    H = np.diag([1.0, 3.0])
    sample = numerical_range(from_operator(H), samples=32, seed=5)
    values = np.array(sample.values)
    assert sample.sample_count == len(values)
    assert np.all(np.abs(values.imag) < 1e-12)
    assert values.real.min() >= 1.0 - 1e-12
    assert values.real.max() <= 3.0 + 1e-12


def test_numerical_range_is_seeded(rng):
    R = from_operator(random_complex(rng, 3, 3))
    assert numerical_range(R, seed=9).values == numerical_range(R, seed=9).values


def test_numerical_range_needs_a_domain():
    with pytest.raises(EmptyDomain):
        numerical_range(purely_multivalued(2))


def test_operator_part_reassembles(rng):
    R = random_nonnegative_relation(rng, 4, mul_probability=1.0)
    decomposition = operator_part(R)
    assert decomposition.mul_basis.dim + decomposition.complement_basis.dim == 4
    assert relations_equal(decomposition.reassemble(), R)


def test_form_matrix_matches_operator(rng):
    H = random_psd(rng, 3)
    dom, S = form_matrix(from_operator(H))
    U = dom.basis
    np.testing.assert_allclose(S, U.conj().T @ H @ U, atol=1e-10)
