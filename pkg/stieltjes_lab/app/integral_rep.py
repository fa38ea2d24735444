# stieltjes_lab/app/integral_rep.py
"""Atomic integral representations of bounded Stieltjes / inverse Stieltjes functions.

At finite dimension the spectral measure of the operator part of A_hat is a finite
sum of eigenprojectors, so every measure here is stored by its jumps.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, NamedTuple, Optional, Sequence

import numpy as np

from .errors import BadPoint, HypothesisViolated, NotNonnegativeSelfadjoint, PoleHit, SignViolation
from .families import FamilyKind, StieltjesConstruction, check_lambda, invert_construction, q0, r0
from .linrel import LinearRelation, is_nonnegative, operator_part
from .numerics import (
    DEFAULT_CLUSTER_TOL,
    eigen_clusters,
    eigh_hermitian,
    hermitian_part,
    max_eig_hermitian,
    min_eig_hermitian,
    opnorm,
)

log = logging.getLogger(__name__)

POLE_TOL = 1e-10
SIGN_TOL = 1e-10
POSITIVE_NODE_TOL = 1e-9


class Atom(NamedTuple):
    t: float
    weight: np.ndarray


@dataclass(frozen=True, eq=False)
class SpectralMeasure:
    nodes: tuple[float, ...]
    projectors: tuple[np.ndarray, ...]
    p_hat: np.ndarray
    p_range: np.ndarray
    p_mul: np.ndarray


@dataclass(frozen=True, eq=False)
class IntegralRepresentation:
    kind: FamilyKind
    gamma: np.ndarray
    atoms: tuple[Atom, ...]
    pi: Optional[np.ndarray] = None
    notes: dict[str, Any] = field(default_factory=dict)

    @property
    def nodes(self) -> tuple[float, ...]:
        return tuple(atom.t for atom in self.atoms)


def spectral_measure(A_hat: LinearRelation, cluster_tol: float = DEFAULT_CLUSTER_TOL) -> SpectralMeasure:
    """Clustered eigenprojectors of the operator part, lifted to the ambient space."""
    if not is_nonnegative(A_hat):
        raise NotNonnegativeSelfadjoint("A_hat must be nonnegative selfadjoint")
    decomposition = operator_part(A_hat)
    W = decomposition.complement_basis.basis
    M = decomposition.mul_basis.basis
    values, vectors = eigh_hermitian(decomposition.operator_part)
    nodes: list[float] = []
    projectors: list[np.ndarray] = []
    n = A_hat.space_dim
    p_range = np.zeros((n, n), dtype=complex)
    for t, block in eigen_clusters(values, vectors, cluster_tol):
        lifted = W @ block
        E = lifted @ lifted.conj().T
        t = max(t, 0.0)
        nodes.append(t)
        projectors.append(E)
        if t > POSITIVE_NODE_TOL:
            p_range = p_range + E
    log.debug("spectral measure with %d nodes", len(nodes))
    return SpectralMeasure(tuple(nodes), tuple(projectors), W @ W.conj().T, p_range, M @ M.conj().T)


def _require_bounded(cons: StieltjesConstruction) -> np.ndarray:
    if not cons.bounded:
        raise HypothesisViolated("integral representations need a bounded Z (dom Z = M)", dom_dim=cons.dom_Z.dim)
    return cons.Z


def _check_signs(gamma_sign: float, gamma: np.ndarray, pi: Optional[np.ndarray], atoms: Sequence[Atom], tol: float) -> None:
    scale = max(1.0, opnorm(gamma))
    if gamma_sign > 0 and min_eig_hermitian(gamma) < -tol * scale:
        raise SignViolation("Gamma is not nonnegative", min_eigenvalue=min_eig_hermitian(gamma))
    if gamma_sign < 0 and max_eig_hermitian(gamma) > tol * scale:
        raise SignViolation("Gamma is not nonpositive", max_eigenvalue=max_eig_hermitian(gamma))
    if pi is not None and min_eig_hermitian(pi) < -tol * max(1.0, opnorm(pi)):
        raise SignViolation("Pi is not nonnegative", min_eigenvalue=min_eig_hermitian(pi))
    for atom in atoms:
        if min_eig_hermitian(atom.weight) < -tol * max(1.0, opnorm(atom.weight)):
            raise SignViolation("atom weight is not nonnegative", node=atom.t, min_eigenvalue=min_eig_hermitian(atom.weight))


def stieltjes_rep(
    cons: StieltjesConstruction, tol: float = SIGN_TOL, cluster_tol: float = DEFAULT_CLUSTER_TOL
) -> IntegralRepresentation:
    """Gamma + sum_i Sigma_i/(t_i - lam) representing Z* Q0(lam) Z."""
    Z = _require_bounded(cons)
    measure = spectral_measure(cons.A_hat, cluster_tol)
    VZ = cons.V @ Z
    eye = np.eye(cons.dim_m, dtype=complex)
    gamma = hermitian_part(Z.conj().T @ (eye - cons.V.conj().T @ measure.p_hat @ cons.V) @ Z)
    atoms = tuple(
        Atom(t, hermitian_part((1 + t) * VZ.conj().T @ E @ VZ)) for t, E in zip(measure.nodes, measure.projectors)
    )
    _check_signs(1.0, gamma, None, atoms, tol)
    moment = sum((atom.weight / (1 + atom.t) for atom in atoms), np.zeros_like(gamma))
    expected = VZ.conj().T @ measure.p_hat @ VZ
    residual = opnorm(moment - expected)
    return IntegralRepresentation(FamilyKind.STIELTJES, gamma, atoms, None, {"moment_residual": residual})


def inverse_stieltjes_rep(
    cons: StieltjesConstruction, tol: float = SIGN_TOL, cluster_tol: float = DEFAULT_CLUSTER_TOL
) -> IntegralRepresentation:
    """Gamma + lam Pi + sum_i (1/(t_i - lam) - 1/t_i) Sigma_i representing Y* R0(A_hat^{-1})(lam) Y.

    Only nodes t_i > 0 carry atoms; the kernel of the operator part contributes to Gamma.
    """
    Y = _require_bounded(cons)
    measure = spectral_measure(cons.A_hat, cluster_tol)
    VY = cons.V @ Y
    Vh = cons.V.conj().T
    eye = np.eye(cons.dim_m, dtype=complex)
    gamma = hermitian_part(Y.conj().T @ (-eye + Vh @ (measure.p_mul + measure.p_range) @ cons.V) @ Y)
    pi = hermitian_part(VY.conj().T @ measure.p_mul @ VY)
    atoms = tuple(
        Atom(t, hermitian_part(t * (1 + t) * VY.conj().T @ E @ VY))
        for t, E in zip(measure.nodes, measure.projectors)
        if t > POSITIVE_NODE_TOL
    )
    _check_signs(-1.0, gamma, pi, atoms, tol)
    moment = sum((atom.weight / (atom.t * (1 + atom.t)) for atom in atoms), np.zeros_like(gamma))
    expected = VY.conj().T @ measure.p_range @ VY
    residual = opnorm(moment - expected)
    return IntegralRepresentation(FamilyKind.INVERSE_STIELTJES, gamma, atoms, pi, {"moment_residual": residual})


def evaluate_rep(rep: IntegralRepresentation, lam: complex, pole_tol: float = POLE_TOL) -> np.ndarray:
    lam = complex(lam)
    for atom in rep.atoms:
        if abs(lam - atom.t) < pole_tol:
            raise PoleHit("lam coincides with a node of the measure", point=lam, node=atom.t)
    lam = check_lambda(lam)
    value = rep.gamma.astype(complex)
    if rep.kind is FamilyKind.STIELTJES:
        for atom in rep.atoms:
            value = value + atom.weight / (atom.t - lam)
        return value
    if rep.pi is not None:
        value = value + lam * rep.pi
    for atom in rep.atoms:
        value = value + (1 / (atom.t - lam) - 1 / atom.t) * atom.weight
    return value


def represented_value(rep: IntegralRepresentation, cons: StieltjesConstruction, lam: complex) -> np.ndarray:
    """The family value the representation is supposed to reproduce."""
    Z = _require_bounded(cons)
    if rep.kind is FamilyKind.STIELTJES:
        inner = q0(cons, lam)
    else:
        inner = r0(invert_construction(cons), lam)
    return Z.conj().T @ inner @ Z


def reconstruction_error(rep: IntegralRepresentation, cons: StieltjesConstruction, grid: Sequence[complex]) -> float:
    worst = 0.0
    for lam in grid:
        try:
            diff = opnorm(evaluate_rep(rep, lam) - represented_value(rep, cons, lam))
        except BadPoint:
            log.debug("skipping %s: not in the domain", lam)
            continue
        worst = max(worst, diff)
    if math.isnan(worst):
        return math.inf
    return worst


__all__ = [
    "Atom",
    "SpectralMeasure",
    "IntegralRepresentation",
    "spectral_measure",
    "stieltjes_rep",
    "inverse_stieltjes_rep",
    "evaluate_rep",
    "represented_value",
    "reconstruction_error",
]
