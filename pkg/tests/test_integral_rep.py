import numpy as np
import pytest

from stieltjes_lab.app.errors import HypothesisViolated, NotNonnegativeSelfadjoint, PoleHit
from stieltjes_lab.app.families import FamilyKind, make_construction, q0
from stieltjes_lab.app.integral_rep import (
    evaluate_rep,
    inverse_stieltjes_rep,
    reconstruction_error,
    spectral_measure,
    stieltjes_rep,
)
from stieltjes_lab.app.linrel import from_operator
from stieltjes_lab.app.numerics import Subspace


def test_spectral_measure_of_diagonal_operator():
    measure = spectral_measure(from_operator(np.diag([2.0, 0.5])))
    assert measure.nodes == pytest.approx((0.5, 2.0))
    total = sum(measure.projectors, np.zeros((2, 2)))
    np.testing.assert_allclose(total, np.eye(2), atol=1e-12)
    np.testing.assert_allclose(measure.p_mul, np.zeros((2, 2)), atol=1e-12)


def test_spectral_measure_needs_nonnegative_relation():
    with pytest.raises(NotNonnegativeSelfadjoint):
        spectral_measure(from_operator(-np.eye(2)))


def test_stieltjes_rep_of_diagonal_construction(diagonal_construction, lambdas):
    rep = stieltjes_rep(diagonal_construction)
    assert rep.kind is FamilyKind.STIELTJES
    assert rep.nodes == pytest.approx((0.5, 2.0))
    np.testing.assert_allclose(rep.gamma, 0.64 * np.eye(2), atol=1e-12)
    np.testing.assert_allclose(rep.atoms[0].weight, np.diag([0.54, 0.0]), atol=1e-12)
    np.testing.assert_allclose(rep.atoms[1].weight, np.diag([0.0, 1.08]), atol=1e-12)
    assert rep.notes["moment_residual"] < 1e-12
    for lam in lambdas:
        np.testing.assert_allclose(evaluate_rep(rep, lam), q0(diagonal_construction, lam), atol=1e-12)


def test_evaluating_on_a_node_is_a_pole(diagonal_construction):
    rep = stieltjes_rep(diagonal_construction)
    with pytest.raises(PoleHit):
        evaluate_rep(rep, 0.5)


def test_stieltjes_rep_with_multivalued_part(multivalued_construction, lambdas):
    rep = stieltjes_rep(multivalued_construction)
    np.testing.assert_allclose(rep.gamma, np.diag([0.64, 1.0]), atol=1e-12)
    assert reconstruction_error(rep, multivalued_construction, lambdas) < 1e-9


def test_inverse_rep_picks_up_linear_term(multivalued_construction, lambdas):
    rep = inverse_stieltjes_rep(multivalued_construction)
    assert rep.kind is FamilyKind.INVERSE_STIELTJES
    np.testing.assert_allclose(rep.pi, np.diag([0.0, 0.36]), atol=1e-12)
    np.testing.assert_allclose(rep.gamma, -0.64 * np.eye(2), atol=1e-12)
    assert rep.nodes == pytest.approx((0.5,))
    assert reconstruction_error(rep, multivalued_construction, lambdas + [-0.8]) < 1e-9


def test_inverse_rep_drops_the_zero_node(lambdas):
    cons = make_construction(from_operator(np.diag([0.0, 2.0])), 0.6 * np.eye(2))
    rep = inverse_stieltjes_rep(cons)
    assert rep.nodes == pytest.approx((2.0,))
    assert rep.gamma[0, 0].real == pytest.approx(-1.0)
    assert reconstruction_error(rep, cons, lambdas) < 1e-9


def test_representation_needs_bounded_z(diagonal_construction):
    cons = make_construction(
        diagonal_construction.A_hat, diagonal_construction.V, dom_Z=Subspace(2, np.array([[1.0], [0.0]]))
    )
    with pytest.raises(HypothesisViolated):
        stieltjes_rep(cons)
    with pytest.raises(HypothesisViolated):
        inverse_stieltjes_rep(cons)
