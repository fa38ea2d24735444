# stieltjes_lab/app/linrel.py
"""Finite-dimensional linear relations stored as orthonormal graph bases.

A relation R in M = C^n is a subspace of M (+) M.  It is kept as a 2n x r matrix
with orthonormal columns ``[X; Y]``; a graph pair is ``{X c, Y c}``.  Two relations
are equal when their graph subspaces are equal, never entry by entry.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, NamedTuple, Optional

import numpy as np

from .errors import (
    BadPoint,
    DimensionMismatch,
    EmptyDomain,
    IllConditioned,
    NotAnOperator,
    NotDecomposable,
    NotInResolventSet,
)
from .numerics import (
    DEFAULT_ANGLE_TOL,
    DEFAULT_COND_LIMIT,
    DEFAULT_PSD_TOL,
    Subspace,
    as_matrix,
    as_square,
    column_space,
    inv_guarded,
    min_eig_hermitian,
    max_eig_hermitian,
    null_basis,
    opnorm,
    pinv,
    subspace_distance,
    subspace_equal,
)

log = logging.getLogger(__name__)

# Graph blocks are sub-blocks of an orthonormal matrix, so rank cutoffs on them are absolute.
GRAPH_RANK_TOL = 1e-10
RESOLVENT_RESIDUAL_TOL = 1e-9
CONNECTION_GUARD = 1e-8


@dataclass(frozen=True, eq=False)
class LinearRelation:
    space_dim: int
    graph: Subspace

    def __post_init__(self) -> None:
        if self.graph.ambient_dim != 2 * self.space_dim:
            raise DimensionMismatch(
                "graph must live in M (+) M",
                space_dim=self.space_dim,
                ambient_dim=self.graph.ambient_dim,
            )

    @property
    def X(self) -> np.ndarray:
        return self.graph.basis[: self.space_dim]

    @property
    def Y(self) -> np.ndarray:
        return self.graph.basis[self.space_dim :]

    @property
    def rank(self) -> int:
        return self.graph.dim


class RelationParts(NamedTuple):
    dom: Subspace
    ran: Subspace
    ker: Subspace
    mul: Subspace


class NumericalRangeSample(NamedTuple):
    values: tuple[complex, ...]
    sample_count: int


@dataclass(frozen=True, eq=False)
class OperatorPartDecomposition:
    """R = Gr(A_s) (+) ({0} x mul R) with A_s acting on M (-) mul R."""

    space_dim: int
    mul_basis: Subspace
    dom_basis: Subspace
    complement_basis: Subspace
    operator_part: np.ndarray

    def embedded(self) -> np.ndarray:
        """A_s as an n x n matrix vanishing on mul R."""
        W = self.complement_basis.basis
        return W @ self.operator_part @ W.conj().T

    def reassemble(self) -> LinearRelation:
        D = self.dom_basis.basis
        M = self.mul_basis.basis
        n = self.space_dim
        top = np.hstack([D, np.zeros((n, M.shape[1]), dtype=complex)])
        bottom = np.hstack([self.embedded() @ D, M])
        return from_pairs(top, bottom)


def from_pairs(F: Any, F_prime: Any, tol: float = GRAPH_RANK_TOL) -> LinearRelation:
    """Relation spanned by the pairs {F[:, j], F_prime[:, j]}."""
    top = as_matrix(F, name="F")
    bottom = as_matrix(F_prime, name="F_prime")
    if top.shape != bottom.shape:
        raise DimensionMismatch("pair blocks differ in shape", left=list(top.shape), right=list(bottom.shape))
    stacked = np.vstack([top, bottom])
    scale = max(1.0, opnorm(stacked))
    return LinearRelation(top.shape[0], column_space(stacked, tol * scale, absolute=True))


def from_operator(A: Any) -> LinearRelation:
    """Graph of a square matrix."""
    mat = as_square(A, name="A")
    n = mat.shape[0]
    return from_pairs(np.eye(n, dtype=complex), mat)


def purely_multivalued(n: int) -> LinearRelation:
    """The relation {0} x M."""
    return from_pairs(np.zeros((n, n), dtype=complex), np.eye(n, dtype=complex))


def zero_operator(n: int) -> LinearRelation:
    return from_operator(np.zeros((n, n), dtype=complex))


def parts(R: LinearRelation, tol: float = GRAPH_RANK_TOL) -> RelationParts:
    X, Y = R.X, R.Y
    n = R.space_dim
    dom = column_space(X, tol, absolute=True)
    ran = column_space(Y, tol, absolute=True)
    ker_coeffs = null_basis(Y, tol, absolute=True)
    mul_coeffs = null_basis(X, tol, absolute=True)
    ker = column_space(X @ ker_coeffs, tol, absolute=True) if ker_coeffs.size else Subspace.zero(n)
    mul = column_space(Y @ mul_coeffs, tol, absolute=True) if mul_coeffs.size else Subspace.zero(n)
    return RelationParts(dom, ran, ker, mul)


def adjoint(R: LinearRelation) -> LinearRelation:
    """{g, g'} in R* iff (f', g) = (f, g') for all {f, f'} in R."""
    n = R.space_dim
    flipped = np.vstack([R.Y, -R.X])
    if flipped.shape[1] == 0:
        return LinearRelation(n, Subspace(2 * n, np.eye(2 * n, dtype=complex)))
    complement = null_basis(flipped.conj().T, GRAPH_RANK_TOL, absolute=True)
    return LinearRelation(n, Subspace(2 * n, complement))


def inverse(R: LinearRelation) -> LinearRelation:
    return LinearRelation(R.space_dim, Subspace(2 * R.space_dim, np.vstack([R.Y, R.X])))


def negate(R: LinearRelation) -> LinearRelation:
    """{f, -f'}."""
    return LinearRelation(R.space_dim, Subspace(2 * R.space_dim, np.vstack([R.X, -R.Y])))


def scalar_shift(R: LinearRelation, lam: complex) -> LinearRelation:
    """R - lam I = {f, f' - lam f}."""
    return from_pairs(R.X, R.Y - lam * R.X)


def scale(R: LinearRelation, c: complex) -> LinearRelation:
    """c R = {f, c f'}."""
    return from_pairs(R.X, c * R.Y)


def add_operator(R: LinearRelation, B: Any) -> LinearRelation:
    """R + B = {f, f' + B f} for a bounded matrix B."""
    mat = as_square(B, name="B")
    if mat.shape[0] != R.space_dim:
        raise DimensionMismatch("operator size differs from the relation", n=R.space_dim, size=mat.shape[0])
    return from_pairs(R.X, R.Y + mat @ R.X)


def compose_congruence(Z: Any, R: LinearRelation) -> LinearRelation:
    """Z* R Z = {f, Z* g'} over pairs {Z f, g'} in R."""
    mat = as_square(Z, name="Z")
    n = R.space_dim
    if mat.shape[0] != n:
        raise DimensionMismatch("Z size differs from the relation", n=n, size=mat.shape[0])
    joint = np.hstack([mat, -R.X])
    coeffs = null_basis(joint, GRAPH_RANK_TOL * max(1.0, opnorm(joint)), absolute=True)
    f_part = coeffs[:n]
    c_part = coeffs[n:]
    return from_pairs(f_part, mat.conj().T @ (R.Y @ c_part))


def resolvent(
    R: LinearRelation,
    lam: complex,
    tol: float = RESOLVENT_RESIDUAL_TOL,
    *,
    rank_tol: float = GRAPH_RANK_TOL,
) -> np.ndarray:
    """(R - lam)^{-1} as a matrix B with {B g, g + lam B g} in R."""
    n = R.space_dim
    S = R.Y - lam * R.X
    if R.rank != n:
        raise NotInResolventSet(
            "graph dimension differs from the space dimension", graph_dim=R.rank, space_dim=n, point=complex(lam)
        )
    if n == 0:
        return np.zeros((0, 0), dtype=complex)
    s = np.linalg.svd(S, compute_uv=False)
    if s[-1] <= rank_tol * max(1.0, s[0]):
        raise NotInResolventSet("R - lam is not invertible", smallest_singular_value=float(s[-1]), point=complex(lam))
    B = np.linalg.solve(S.T, R.X.T).T
    residual = opnorm(B @ S - R.X)
    if residual > tol * max(1.0, opnorm(B)):
        raise IllConditioned("resolvent solve residual too large", residual=residual, point=complex(lam))
    return B


def is_selfadjoint(R: LinearRelation, tol: float = DEFAULT_ANGLE_TOL) -> bool:
    return subspace_equal(R.graph, adjoint(R).graph, tol)


def graph_form(R: LinearRelation) -> np.ndarray:
    """Hermitian-ready Gram matrix X* Y of (f', f) over graph coefficients."""
    return R.X.conj().T @ R.Y


def is_nonnegative(R: LinearRelation, tol: float = DEFAULT_PSD_TOL) -> bool:
    if not is_selfadjoint(R, max(tol, DEFAULT_ANGLE_TOL)):
        return False
    return min_eig_hermitian(graph_form(R)) >= -tol


def is_nonpositive(R: LinearRelation, tol: float = DEFAULT_PSD_TOL) -> bool:
    if not is_selfadjoint(R, max(tol, DEFAULT_ANGLE_TOL)):
        return False
    return max_eig_hermitian(graph_form(R)) <= tol


def cayley(A: LinearRelation) -> LinearRelation:
    """C(A) = {{f + f', f - f'} : {f, f'} in A}; an involution."""
    return from_pairs(A.X + A.Y, A.X - A.Y)


def to_operator(R: LinearRelation, tol: float = GRAPH_RANK_TOL) -> np.ndarray:
    """Matrix of R when R is an everywhere defined single-valued operator."""
    n = R.space_dim
    if R.rank != n:
        raise NotAnOperator("relation is not the graph of an operator on M", graph_dim=R.rank, space_dim=n)
    if n == 0:
        return np.zeros((0, 0), dtype=complex)
    s = np.linalg.svd(R.X, compute_uv=False)
    if s[-1] <= tol:
        raise NotAnOperator("relation has a multivalued part", smallest_singular_value=float(s[-1]))
    return np.linalg.solve(R.X.T, R.Y.T).T


def verify_resolvent_connection(
    A: LinearRelation, lam: complex, cond_limit: float = DEFAULT_COND_LIMIT
) -> float:
    """Residual of the two Cayley-side expressions for (A - lam)^{-1}."""
    lam = complex(lam)
    if abs(1 - lam) < CONNECTION_GUARD or abs(1 + lam) < CONNECTION_GUARD:
        raise BadPoint("lam must stay away from +1 and -1", point=lam)
    n = A.space_dim
    eye = np.eye(n, dtype=complex)
    direct = resolvent(A, lam)
    T = -eye + 2 * resolvent(A, -1.0)
    w = (1 + lam) / (1 - lam)
    first = (T + eye) @ inv_guarded(eye - w * T, cond_limit=cond_limit, what="I - wT") / (1 - lam)
    shift = (1 - lam) / (1 + lam)
    second = -(eye + (2 / (1 + lam)) * inv_guarded(T - shift * eye, cond_limit=cond_limit, what="T - shift")) / (1 + lam)
    residual = max(opnorm(direct - first), opnorm(direct - second))
    log.debug("resolvent connection at %s: residual %.3e", lam, residual)
    return residual


def numerical_range(
    R: LinearRelation,
    samples: int = 64,
    seed: Optional[int] = 0,
    tol: float = GRAPH_RANK_TOL,
) -> NumericalRangeSample:
    """Seeded sample of W(R) = {(f', f)/||f||^2}."""
    X, Y = R.X, R.Y
    if column_space(X, tol, absolute=True).is_trivial:
        raise EmptyDomain("relation has trivial domain")
    rng = np.random.default_rng(seed)
    r = R.rank
    coeffs = np.hstack(
        [
            np.eye(r, dtype=complex),
            rng.standard_normal((r, samples)) + 1j * rng.standard_normal((r, samples)),
        ]
    )
    F = X @ coeffs
    Fp = Y @ coeffs
    values: list[complex] = []
    for j in range(coeffs.shape[1]):
        norm2 = float(np.vdot(F[:, j], F[:, j]).real)
        if np.sqrt(norm2) <= tol:
            continue
        values.append(complex(np.vdot(F[:, j], Fp[:, j]) / norm2))
    return NumericalRangeSample(tuple(values), len(values))


def operator_part(R: LinearRelation, tol: float = DEFAULT_ANGLE_TOL) -> OperatorPartDecomposition:
    pieces = parts(R)
    n = R.space_dim
    if pieces.mul.dim and pieces.dom.dim:
        overlap = opnorm(pieces.dom.basis.conj().T @ pieces.mul.basis)
        if overlap > tol:
            raise NotDecomposable("dom R is not orthogonal to mul R", overlap=overlap)
    W = pieces.mul.complement()
    S = W.basis.conj().T @ R.Y @ pinv(R.X, GRAPH_RANK_TOL) @ W.basis
    return OperatorPartDecomposition(n, pieces.mul, pieces.dom, W, S)


def form_matrix(R: LinearRelation) -> tuple[Subspace, np.ndarray]:
    """Matrix S of f -> (R f, f) in an orthonormal basis U of dom R: (R U a, U b) = b* S a."""
    dom = parts(R).dom
    U = dom.basis
    S = U.conj().T @ R.Y @ pinv(R.X, GRAPH_RANK_TOL) @ U
    return dom, S


def form_value(R: LinearRelation, u: Any, v: Any) -> complex:
    """(f', v) for the graph pair {u, f'} with minimal-norm coefficients."""
    u_vec = np.asarray(u, dtype=complex).reshape(-1)
    v_vec = np.asarray(v, dtype=complex).reshape(-1)
    coeffs, *_ = np.linalg.lstsq(R.X, u_vec, rcond=None)
    return complex(np.vdot(v_vec, R.Y @ coeffs))


def relation_distance(R: LinearRelation, S: LinearRelation) -> float:
    return subspace_distance(R.graph, S.graph)


def relations_equal(R: LinearRelation, S: LinearRelation, tol: float = DEFAULT_ANGLE_TOL) -> bool:
    return subspace_equal(R.graph, S.graph, tol)


__all__ = [
    "LinearRelation",
    "RelationParts",
    "NumericalRangeSample",
    "OperatorPartDecomposition",
    "from_pairs",
    "from_operator",
    "purely_multivalued",
    "zero_operator",
    "parts",
    "adjoint",
    "inverse",
    "negate",
    "scalar_shift",
    "scale",
    "add_operator",
    "compose_congruence",
    "resolvent",
    "is_selfadjoint",
    "is_nonnegative",
    "is_nonpositive",
    "graph_form",
    "cayley",
    "to_operator",
    "verify_resolvent_connection",
    "numerical_range",
    "operator_part",
    "form_matrix",
    "form_value",
    "relation_distance",
    "relations_equal",
]
