# stieltjes_lab/app/numerics.py
"""Dense complex-matrix helpers with explicit rank and tolerance policies.

Every other module goes through these helpers for rank decisions, pseudo-inverses,
square roots of PSD matrices and guarded solves, so the tolerance policy lives in
one place.  Rank cutoffs are relative to the largest singular value unless a
caller asks for an absolute threshold (graph bases are orthonormal, so their
blocks already live on the unit scale).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Optional

import numpy as np
import scipy.linalg

from .errors import (
    DimensionMismatch,
    IllConditioned,
    NonFiniteEntries,
    NotPSD,
    ShapeMismatch,
)

log = logging.getLogger(__name__)

DEFAULT_RANK_RTOL = 1e-10
DEFAULT_PSD_TOL = 1e-10
DEFAULT_ANGLE_TOL = 1e-8
DEFAULT_COND_LIMIT = 1e12
DEFAULT_CLUSTER_TOL = 1e-9


def as_matrix(A: Any, *, name: str = "matrix") -> np.ndarray:
    """Return ``A`` as a finite complex 2-D array."""
    arr = np.asarray(A, dtype=complex)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2:
        raise ShapeMismatch(f"{name} must be two-dimensional", shape=list(arr.shape))
    if arr.size and not np.all(np.isfinite(arr)):
        raise NonFiniteEntries(f"{name} has NaN or Inf entries")
    return arr


def as_square(A: Any, *, name: str = "matrix") -> np.ndarray:
    arr = as_matrix(A, name=name)
    if arr.shape[0] != arr.shape[1]:
        raise ShapeMismatch(f"{name} must be square", shape=list(arr.shape))
    return arr


def opnorm(A: np.ndarray) -> float:
    """Spectral norm; zero for empty matrices."""
    if A.size == 0:
        return 0.0
    return float(np.linalg.norm(A, 2))


def hermitian_part(H: np.ndarray) -> np.ndarray:
    return (H + H.conj().T) / 2


def imaginary_part(H: np.ndarray) -> np.ndarray:
    """Hermitian matrix (H - H*)/(2i)."""
    return (H - H.conj().T) / 2j


@dataclass(frozen=True, eq=False)
class Subspace:
    """Orthonormal basis (columns) of a subspace of C^ambient_dim."""

    ambient_dim: int
    basis: np.ndarray

    def __post_init__(self) -> None:
        basis = np.array(self.basis, dtype=complex, copy=True)
        if basis.ndim != 2:
            basis = basis.reshape(self.ambient_dim, -1)
        if basis.shape[0] != self.ambient_dim:
            raise ShapeMismatch(
                "basis rows must equal the ambient dimension",
                ambient_dim=self.ambient_dim,
                rows=int(basis.shape[0]),
            )
        basis.setflags(write=False)
        object.__setattr__(self, "basis", basis)

    @property
    def dim(self) -> int:
        return int(self.basis.shape[1])

    @property
    def is_trivial(self) -> bool:
        return self.dim == 0

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.conj().T

    def complement(self) -> "Subspace":
        if self.dim == 0:
            return full_space(self.ambient_dim)
        return Subspace(self.ambient_dim, scipy.linalg.null_space(self.basis.conj().T))

    @classmethod
    def zero(cls, ambient_dim: int) -> "Subspace":
        return cls(ambient_dim, np.zeros((ambient_dim, 0), dtype=complex))


def full_space(n: int) -> Subspace:
    return Subspace(n, np.eye(n, dtype=complex))


def orthonormal_column_basis(A: Any, tol: float = DEFAULT_RANK_RTOL) -> Subspace:
    """Orthonormal basis of the numerical column space of ``A``.

    Singular values above ``tol * sigma_max`` are retained; a zero matrix gives the
    zero-dimensional subspace.
    """
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    arr = as_matrix(A)
    n = arr.shape[0]
    if arr.size == 0:
        return Subspace.zero(n)
    return Subspace(n, scipy.linalg.orth(arr, rcond=tol))


def column_space(A: np.ndarray, tol: float = DEFAULT_RANK_RTOL, *, absolute: bool = False) -> Subspace:
    """Column space with an optional absolute singular-value cutoff."""
    n = A.shape[0]
    if A.size == 0:
        return Subspace.zero(n)
    u, s, _ = np.linalg.svd(A, full_matrices=False)
    cutoff = tol if absolute else tol * (s[0] if s.size else 0.0)
    rank = int(np.sum(s > cutoff))
    return Subspace(n, u[:, :rank])


def null_basis(A: np.ndarray, tol: float = DEFAULT_RANK_RTOL, *, absolute: bool = False) -> np.ndarray:
    """Orthonormal basis of the numerical null space of ``A`` (columns)."""
    rows, cols = A.shape
    if cols == 0:
        return np.zeros((0, 0), dtype=complex)
    if rows == 0:
        return np.eye(cols, dtype=complex)
    _, s, vh = np.linalg.svd(A, full_matrices=True)
    cutoff = tol if absolute else tol * (s[0] if s.size else 0.0)
    rank = int(np.sum(s > cutoff))
    return vh[rank:].conj().T


def numerical_rank(A: np.ndarray, tol: float = DEFAULT_RANK_RTOL, *, absolute: bool = False) -> int:
    if A.size == 0:
        return 0
    s = np.linalg.svd(A, compute_uv=False)
    cutoff = tol if absolute else tol * s[0]
    return int(np.sum(s > cutoff))


def pinv(A: Any, tol: float = DEFAULT_RANK_RTOL) -> np.ndarray:
    """Moore-Penrose pseudo-inverse with a relative singular-value cutoff."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    arr = as_matrix(A)
    if arr.size == 0:
        return np.zeros((arr.shape[1], arr.shape[0]), dtype=complex)
    return scipy.linalg.pinv(arr, atol=0.0, rtol=tol if tol > 0 else None)


def eigh_hermitian(H: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of the symmetrized matrix."""
    if H.size == 0:
        return np.zeros(0), np.zeros((0, 0), dtype=complex)
    return scipy.linalg.eigh(hermitian_part(H))


def min_eig_hermitian(H: Any) -> float:
    """Smallest eigenvalue of (H + H*)/2; +inf for an empty matrix."""
    arr = as_square(H)
    if arr.size == 0:
        return float("inf")
    return float(scipy.linalg.eigvalsh(hermitian_part(arr))[0])


def max_eig_hermitian(H: Any) -> float:
    arr = as_square(H)
    if arr.size == 0:
        return float("-inf")
    return float(scipy.linalg.eigvalsh(hermitian_part(arr))[-1])


def sqrt_psd(H: Any, tol: float = DEFAULT_PSD_TOL, *, scale: Optional[float] = None) -> np.ndarray:
    """Hermitian PSD square root; eigenvalues within tolerance below zero are clamped.

    The admissible negative slack is ``tol * scale`` where ``scale`` defaults to ``||H||``.
    """
    arr = as_square(H)
    if arr.size == 0:
        return arr.copy()
    vals, vecs = eigh_hermitian(arr)
    norm = float(np.max(np.abs(vals)))
    floor = tol * (norm if scale is None else scale)
    if vals[0] < -floor:
        raise NotPSD("matrix is not positive semidefinite", min_eigenvalue=float(vals[0]))
    roots = np.sqrt(np.clip(vals, 0.0, None))
    return (vecs * roots) @ vecs.conj().T


def pinv_sqrt_psd(H: Any, tol: float = DEFAULT_RANK_RTOL) -> np.ndarray:
    """H^{[-1/2]}: pseudo-inverse of the PSD square root."""
    arr = as_square(H)
    if arr.size == 0:
        return arr.copy()
    vals, vecs = eigh_hermitian(arr)
    top = max(float(np.max(np.abs(vals))), 0.0)
    keep = vals > tol * top if top > 0 else np.zeros_like(vals, dtype=bool)
    inv_roots = np.zeros_like(vals)
    inv_roots[keep] = 1.0 / np.sqrt(vals[keep])
    return (vecs * inv_roots) @ vecs.conj().T


def subspace_angles(U: Subspace, V: Subspace) -> np.ndarray:
    if U.ambient_dim != V.ambient_dim:
        raise DimensionMismatch(
            "subspaces live in different spaces", left=U.ambient_dim, right=V.ambient_dim
        )
    if U.dim == 0 or V.dim == 0:
        return np.zeros(0)
    return scipy.linalg.subspace_angles(U.basis, V.basis)


def subspace_equal(U: Subspace, V: Subspace, tol: float = DEFAULT_ANGLE_TOL) -> bool:
    """True iff dimensions agree and every principal angle is below ``tol``."""
    angles = subspace_angles(U, V)
    if U.dim != V.dim:
        return False
    if U.dim == 0:
        return True
    return bool(np.max(angles) < tol)


def subspace_distance(U: Subspace, V: Subspace) -> float:
    """Spectral-norm distance between orthogonal projectors."""
    if U.ambient_dim != V.ambient_dim:
        raise DimensionMismatch(
            "subspaces live in different spaces", left=U.ambient_dim, right=V.ambient_dim
        )
    return opnorm(U.projector() - V.projector())


def is_hermitian(H: np.ndarray, tol: float = DEFAULT_PSD_TOL) -> bool:
    if H.size == 0:
        return True
    return opnorm(H - H.conj().T) <= tol * max(1.0, opnorm(H))


def is_contraction(T: np.ndarray, tol: float = DEFAULT_PSD_TOL) -> bool:
    return opnorm(T) <= 1.0 + tol


def condition_number(A: np.ndarray) -> float:
    if A.size == 0:
        return 1.0
    s = np.linalg.svd(A, compute_uv=False)
    if s[-1] == 0:
        return float("inf")
    return float(s[0] / s[-1])


def solve_guarded(
    A: np.ndarray,
    B: np.ndarray,
    *,
    cond_limit: float = DEFAULT_COND_LIMIT,
    what: str = "linear system",
) -> np.ndarray:
    """Solve ``A X = B`` refusing matrices with condition estimate above ``cond_limit``."""
    if A.shape[0] == 0:
        return np.zeros((0,) + B.shape[1:], dtype=complex)
    cond = condition_number(A)
    if not np.isfinite(cond) or cond > cond_limit:
        raise IllConditioned(f"{what} is ill-conditioned", condition=cond, limit=cond_limit)
    return scipy.linalg.solve(A, B)


def inv_guarded(
    A: np.ndarray, *, cond_limit: float = DEFAULT_COND_LIMIT, what: str = "matrix"
) -> np.ndarray:
    return solve_guarded(A, np.eye(A.shape[0], dtype=complex), cond_limit=cond_limit, what=what)


def eigen_clusters(
    values: np.ndarray, vectors: np.ndarray, tol: float = DEFAULT_CLUSTER_TOL
) -> list[tuple[float, np.ndarray]]:
    """Group sorted eigenvalues whose neighbours differ by at most ``tol * max(1, |t|)``.

    Returns (mean eigenvalue, eigenvector block) pairs in increasing order.
    """
    clusters: list[tuple[float, np.ndarray]] = []
    if values.size == 0:
        return clusters
    start = 0
    for idx in range(1, values.size + 1):
        if idx < values.size and values[idx] - values[idx - 1] <= tol * max(1.0, abs(values[idx])):
            continue
        block = vectors[:, start:idx]
        clusters.append((float(np.mean(values[start:idx])), block))
        start = idx
    return clusters


__all__ = [
    "DEFAULT_RANK_RTOL",
    "DEFAULT_PSD_TOL",
    "DEFAULT_ANGLE_TOL",
    "DEFAULT_COND_LIMIT",
    "DEFAULT_CLUSTER_TOL",
    "Subspace",
    "full_space",
    "as_matrix",
    "as_square",
    "opnorm",
    "hermitian_part",
    "imaginary_part",
    "orthonormal_column_basis",
    "column_space",
    "null_basis",
    "numerical_rank",
    "pinv",
    "eigh_hermitian",
    "min_eig_hermitian",
    "max_eig_hermitian",
    "sqrt_psd",
    "pinv_sqrt_psd",
    "subspace_angles",
    "subspace_equal",
    "subspace_distance",
    "is_hermitian",
    "is_contraction",
    "condition_number",
    "solve_guarded",
    "inv_guarded",
    "eigen_clusters",
]
