# stieltjes_lab/app/contractions.py
"""Contraction toolkit: defect operators, the C_H(alpha) classes, 2x2 block
parametrizations of contractions and the selfadjoint-block identity family.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .errors import (
    BadPoint,
    IdentityResidualExceeded,
    InputError,
    NoConvergence,
    NotContraction,
    NotHermitian,
    ShapeMismatch,
)
from .numerics import (
    DEFAULT_COND_LIMIT,
    DEFAULT_PSD_TOL,
    as_matrix,
    as_square,
    column_space,
    hermitian_part,
    is_hermitian,
    max_eig_hermitian,
    min_eig_hermitian,
    opnorm,
    pinv,
    solve_guarded,
    sqrt_psd,
)

log = logging.getLogger(__name__)

CONTRACTION_TOL = 1e-10
IDENTITY_TOL = 1e-9
ANGLE_RESOLUTION = 1e-8
BOUNDARY_STEP_TOL = 1e-8
BOUNDARY_MATCH_TOL = 1e-6
BOUNDARY_K_RANGE = (6, 20)
DEFECT_RANK_TOL = 1e-10


def _require_contraction(T: np.ndarray, tol: float, name: str = "T") -> None:
    norm = opnorm(T)
    if norm > 1.0 + tol:
        raise NotContraction(f"{name} is not a contraction", norm=norm)


def defect(T: Any, tol: float = CONTRACTION_TOL) -> np.ndarray:
    """D_T = (I - T* T)^{1/2}."""
    mat = as_matrix(T, name="T")
    _require_contraction(mat, tol)
    gram = np.eye(mat.shape[1], dtype=complex) - mat.conj().T @ mat
    return sqrt_psd(gram, tol=max(tol, DEFAULT_PSD_TOL) * 4, scale=1.0)


def defect_star(T: Any, tol: float = CONTRACTION_TOL) -> np.ndarray:
    """D_{T*} = (I - T T*)^{1/2}."""
    return defect(as_matrix(T, name="T").conj().T, tol)


def defect_projector(T: Any, tol: float = CONTRACTION_TOL) -> np.ndarray:
    """Orthogonal projector onto the defect space of T (closure of ran D_T)."""
    D_T = defect(T, tol)
    return column_space(D_T, DEFECT_RANK_TOL, absolute=True).projector()


def class_angle_check(T: Any, alpha: float, tol: float = CONTRACTION_TOL) -> bool:
    """Membership of T in C_H(alpha): ||T sin(alpha) +/- i cos(alpha) I|| <= 1."""
    if not 0.0 <= alpha < math.pi / 2:
        raise InputError("alpha must lie in [0, pi/2)", alpha=alpha)
    mat = as_square(T, name="T")
    if alpha == 0.0:
        return is_hermitian(mat, tol) and opnorm(mat) <= 1.0 + tol
    eye = np.eye(mat.shape[0], dtype=complex)
    s, c = math.sin(alpha), math.cos(alpha)
    return opnorm(mat * s + 1j * c * eye) <= 1.0 + tol and opnorm(mat * s - 1j * c * eye) <= 1.0 + tol


def min_class_angle(T: Any, resolution: float = ANGLE_RESOLUTION, tol: float = CONTRACTION_TOL) -> float:
    """Smallest alpha with T in C_H(alpha); +inf when no alpha below pi/2 works."""
    mat = as_square(T, name="T")
    _require_contraction(mat, tol)
    if class_angle_check(mat, 0.0, tol):
        return 0.0
    hi = math.pi / 2 - resolution
    if not class_angle_check(mat, hi, tol):
        return math.inf
    lo = 0.0
    while hi - lo > resolution:
        mid = (lo + hi) / 2
        if class_angle_check(mat, mid, tol):
            hi = mid
        else:
            lo = mid
    return hi


def sector_semi_angle(A: Any, resolution: float = ANGLE_RESOLUTION, tol: float = 1e-12) -> float:
    """Smallest alpha in [0, pi/2] with W(A) inside {|arg z| <= alpha}; +inf if none."""
    mat = as_square(A, name="A")
    scale = max(1.0, opnorm(mat))

    def inside(alpha: float) -> bool:
        rot_minus = np.exp(-1j * alpha) * mat
        rot_plus = np.exp(1j * alpha) * mat
        upper = max_eig_hermitian((rot_minus - rot_minus.conj().T) / 2j)
        lower = min_eig_hermitian((rot_plus - rot_plus.conj().T) / 2j)
        return upper <= tol * scale and lower >= -tol * scale

    if min_eig_hermitian(hermitian_part(mat)) < -tol * scale:
        return math.inf
    if inside(0.0):
        return 0.0
    hi = math.pi / 2
    if not inside(hi):
        return math.inf
    lo = 0.0
    while hi - lo > resolution:
        mid = (lo + hi) / 2
        if inside(mid):
            hi = mid
        else:
            lo = mid
    return hi


def sectorial_product_angle(T: Any, resolution: float = ANGLE_RESOLUTION) -> float:
    """Semi-angle of the sector spanned by W((I - T*)(I + T))."""
    mat = as_square(T, name="T")
    eye = np.eye(mat.shape[0], dtype=complex)
    return sector_semi_angle((eye - mat.conj().T) @ (eye + mat), resolution)


@dataclass(frozen=True, eq=False)
class BlockContraction:
    """T = [[D, C], [B, F]] : M (+) K -> N (+) L with the four free parameters."""

    D: np.ndarray
    N_param: np.ndarray
    G: np.ndarray
    L_param: np.ndarray
    B: np.ndarray
    C: np.ndarray
    F: np.ndarray
    T: np.ndarray

    @property
    def split(self) -> tuple[int, int]:
        return self.D.shape[1], self.D.shape[0]


def build_block_contraction(
    D: Any, N_param: Any, G: Any, L_param: Any, tol: float = CONTRACTION_TOL
) -> BlockContraction:
    """Assemble T from (D, N, G, L) with B = N D_D, C = D_{D*} G, F = -N D* G + D_{N*} L D_G.

    Shapes: D is p x m, N is l x m, G is p x k and L is l x k.  N, G and L are
    compressed onto the defect spaces they are defined on.
    """
    Dm = as_matrix(D, name="D")
    Nm = as_matrix(N_param, name="N")
    Gm = as_matrix(G, name="G")
    Lm = as_matrix(L_param, name="L")
    p, m = Dm.shape
    l_rows, k = Lm.shape
    if Nm.shape != (l_rows, m) or Gm.shape != (p, k):
        raise ShapeMismatch(
            "block parameters have incompatible shapes",
            D=list(Dm.shape),
            N=list(Nm.shape),
            G=list(Gm.shape),
            L=list(Lm.shape),
        )
    for name, mat in (("D", Dm), ("N", Nm), ("G", Gm), ("L", Lm)):
        _require_contraction(mat, tol, name)

    D_D = defect(Dm, tol)
    D_Dstar = defect_star(Dm, tol)
    Nm = Nm @ defect_projector(Dm, tol)
    Gm = defect_projector(Dm.conj().T, tol) @ Gm
    D_G = defect(Gm, tol)
    D_Nstar = defect_star(Nm, tol)
    Lm = defect_projector(Nm.conj().T, tol) @ Lm @ defect_projector(Gm, tol)

    B = Nm @ D_D
    C = D_Dstar @ Gm
    F = -Nm @ Dm.conj().T @ Gm + D_Nstar @ Lm @ D_G
    T = np.block([[Dm, C], [B, F]])
    norm = opnorm(T)
    if norm > 1.0 + 10 * tol:
        raise NotContraction("assembled block is not a contraction", norm=norm)
    return BlockContraction(Dm, Nm, Gm, Lm, B, C, F, T)


def decompose_block_contraction(T: Any, split: Any, tol: float = CONTRACTION_TOL) -> BlockContraction:
    """Recover (D, N, G, L) from a contraction; ``split`` is m or (m, p)."""
    mat = as_matrix(T, name="T")
    _require_contraction(mat, tol)
    if isinstance(split, (tuple, list)):
        m, p = int(split[0]), int(split[1])
    else:
        m = p = int(split)
    if not (0 <= m <= mat.shape[1] and 0 <= p <= mat.shape[0]):
        raise ShapeMismatch("split outside the block", split=[m, p], shape=list(mat.shape))
    Dm = mat[:p, :m]
    C = mat[:p, m:]
    B = mat[p:, :m]
    F = mat[p:, m:]
    D_D = defect(Dm, tol)
    D_Dstar = defect_star(Dm, tol)
    Nm = B @ pinv(D_D, DEFECT_RANK_TOL)
    Gm = pinv(D_Dstar, DEFECT_RANK_TOL) @ C
    D_G = defect(Gm, 1e-8)
    D_Nstar = defect_star(Nm, 1e-8)
    Lm = pinv(D_Nstar, DEFECT_RANK_TOL) @ (F + Nm @ Dm.conj().T @ Gm) @ pinv(D_G, DEFECT_RANK_TOL)
    return BlockContraction(Dm, Nm, Gm, Lm, B, C, F, mat)


@dataclass(frozen=True, eq=False)
class SelfadjointBlockSystem:
    """Selfadjoint contraction T = [[D, C], [C*, F]] on M (+) K and its F', F''."""

    D: np.ndarray
    N_param: np.ndarray
    X: np.ndarray
    C: np.ndarray
    F: np.ndarray
    F_prime: np.ndarray
    F_doubleprime: np.ndarray
    T: np.ndarray

    @property
    def dim_m(self) -> int:
        return self.D.shape[0]

    @property
    def dim_k(self) -> int:
        return self.F.shape[0]


def selfadjoint_block(D: Any, N_param: Any, X: Any, tol: float = CONTRACTION_TOL) -> SelfadjointBlockSystem:
    """C* = N D_D, F = -N D N* + D_{N*} X D_{N*}, F' = F + N(I+D)N*, F'' = F - N(I-D)N*."""
    Dm = as_square(D, name="D")
    Nm = as_matrix(N_param, name="N")
    Xm = as_square(X, name="X")
    m = Dm.shape[0]
    k = Xm.shape[0]
    if Nm.shape != (k, m):
        raise ShapeMismatch("N must map M into K", N=list(Nm.shape), m=m, k=k)
    for name, mat in (("D", Dm), ("X", Xm)):
        if not is_hermitian(mat, tol):
            raise NotHermitian(f"{name} is not Hermitian")
    for name, mat in (("D", Dm), ("N", Nm), ("X", Xm)):
        _require_contraction(mat, tol, name)
    Dm = hermitian_part(Dm)
    Nm = Nm @ defect_projector(Dm, tol)
    D_D = defect(Dm, tol)
    D_Nstar = defect_star(Nm, tol)
    P_Nstar = defect_projector(Nm.conj().T, tol)
    Xm = P_Nstar @ hermitian_part(Xm) @ P_Nstar

    C = D_D @ Nm.conj().T
    core = D_Nstar @ Xm @ D_Nstar
    F = hermitian_part(-Nm @ Dm @ Nm.conj().T + core)
    eye_m = np.eye(m, dtype=complex)
    F_prime = hermitian_part(F + Nm @ (eye_m + Dm) @ Nm.conj().T)
    F_doubleprime = hermitian_part(F - Nm @ (eye_m - Dm) @ Nm.conj().T)
    T = np.block([[Dm, C], [C.conj().T, F]])
    norm = opnorm(T)
    if norm > 1.0 + 10 * tol:
        raise NotContraction("assembled selfadjoint block is not a contraction", norm=norm)
    return SelfadjointBlockSystem(Dm, Nm, Xm, C, F, F_prime, F_doubleprime, T)


def _check_off_cut(z: complex) -> None:
    if z.imag == 0.0 and abs(z.real) >= 1.0:
        raise BadPoint("z lies on (-inf, -1] or [1, inf)", point=z)


def sigma_pm(
    sys: SelfadjointBlockSystem,
    z: complex,
    tol: float = IDENTITY_TOL,
    cond_limit: float = DEFAULT_COND_LIMIT,
) -> tuple[np.ndarray, np.ndarray]:
    """Sigma_+(z), Sigma_-(z), after checking their inverse formulas through F' and F''."""
    z = complex(z)
    _check_off_cut(z)
    m, k = sys.dim_m, sys.dim_k
    eye_m = np.eye(m, dtype=complex)
    eye_k = np.eye(k, dtype=complex)
    plus_root = sqrt_psd(eye_m + sys.D, scale=1.0)
    minus_root = sqrt_psd(eye_m - sys.D, scale=1.0)
    N = sys.N_param
    inner = solve_guarded(eye_k - z * sys.F, N, cond_limit=cond_limit, what="I - zF")
    sigma_plus = z * plus_root @ N.conj().T @ inner @ plus_root
    sigma_minus = z * minus_root @ N.conj().T @ inner @ minus_root

    inner_prime = solve_guarded(eye_k - z * sys.F_prime, N, cond_limit=cond_limit, what="I - zF'")
    inner_second = solve_guarded(eye_k - z * sys.F_doubleprime, N, cond_limit=cond_limit, what="I - zF''")
    plus_inverse = eye_m + z * plus_root @ N.conj().T @ inner_prime @ plus_root
    minus_inverse = eye_m - z * minus_root @ N.conj().T @ inner_second @ minus_root

    residual = max(
        opnorm((eye_m - sigma_plus) @ plus_inverse - eye_m),
        opnorm((eye_m + sigma_minus) @ minus_inverse - eye_m),
    )
    if residual > tol:
        raise IdentityResidualExceeded("Sigma inverse identities fail", residual=residual, point=z)
    return sigma_plus, sigma_minus


def w_function(
    sys: SelfadjointBlockSystem,
    z: complex,
    tol: float = IDENTITY_TOL,
    cond_limit: float = DEFAULT_COND_LIMIT,
) -> np.ndarray:
    """W(z) = I + z D N* (I - z (F'+F'')/2)^{-1} N, checked against its stated inverse."""
    z = complex(z)
    _check_off_cut(z)
    m, k = sys.dim_m, sys.dim_k
    eye_m = np.eye(m, dtype=complex)
    eye_k = np.eye(k, dtype=complex)
    N = sys.N_param
    mean_f = (sys.F_prime + sys.F_doubleprime) / 2
    W = eye_m + z * sys.D @ N.conj().T @ solve_guarded(eye_k - z * mean_f, N, cond_limit=cond_limit, what="I - zF0")
    W_inv = eye_m - z * sys.D @ N.conj().T @ solve_guarded(eye_k - z * sys.F, N, cond_limit=cond_limit, what="I - zF")
    residual = opnorm(W @ W_inv - eye_m)
    if residual > tol:
        raise IdentityResidualExceeded("W(z) inverse identity fails", residual=residual, point=z)
    return W


def _block_b(sys: SelfadjointBlockSystem, x: float, cond_limit: float) -> np.ndarray:
    eye_m = np.eye(sys.dim_m, dtype=complex)
    return sys.F + x * sys.C.conj().T @ solve_guarded(eye_m - x * sys.D, sys.C, cond_limit=cond_limit, what="I - xD")


@dataclass(frozen=True, eq=False)
class BoundaryLimits:
    B_plus: np.ndarray
    B_minus: np.ndarray
    method: str
    last_step: float


def boundary_limits(
    sys: SelfadjointBlockSystem,
    step_tol: float = BOUNDARY_STEP_TOL,
    match_tol: float = BOUNDARY_MATCH_TOL,
    cond_limit: float = DEFAULT_COND_LIMIT,
) -> BoundaryLimits:
    """B(+1) and B(-1) for B(x) = F + x C*(I - xD)^{-1} C; they must equal F' and F''."""
    if opnorm(sys.D) < 1.0 - 1e-12:
        B_plus = _block_b(sys, 1.0, cond_limit)
        B_minus = _block_b(sys, -1.0, cond_limit)
        method, last_step = "direct", 0.0
    else:
        log.warning("D has eigenvalues on the unit circle; using dyadic boundary schedule")
        B_plus, step_plus = dyadic_limit(lambda x: _block_b(sys, x, cond_limit), 1.0, step_tol)
        B_minus, step_minus = dyadic_limit(lambda x: _block_b(sys, x, cond_limit), -1.0, step_tol)
        method, last_step = "dyadic", max(step_plus, step_minus)
    mismatch = max(opnorm(B_plus - sys.F_prime), opnorm(B_minus - sys.F_doubleprime))
    if mismatch > match_tol:
        raise IdentityResidualExceeded("boundary limits differ from F', F''", residual=mismatch, method=method)
    return BoundaryLimits(B_plus, B_minus, method, last_step)


def dyadic_limit(fn, endpoint: float, step_tol: float = BOUNDARY_STEP_TOL, k_range=BOUNDARY_K_RANGE):
    """Limit of fn(x) as x -> endpoint along x = endpoint (1 - 2^{-k}) with Richardson steps.

    Returns (limit, last difference); raises NoConvergence when successive
    extrapolated values still differ by more than ``step_tol``.
    """
    k_lo, k_hi = k_range
    previous_value = fn(endpoint * (1.0 - 2.0 ** (-k_lo)))
    previous_extrapolated = None
    last_step = math.inf
    for k in range(k_lo + 1, k_hi + 1):
        value = fn(endpoint * (1.0 - 2.0 ** (-k)))
        extrapolated = 2 * value - previous_value
        if previous_extrapolated is not None:
            last_step = opnorm(extrapolated - previous_extrapolated)
            if last_step < step_tol:
                return extrapolated, last_step
        previous_value, previous_extrapolated = value, extrapolated
    raise NoConvergence("boundary sequence did not settle", last_residual=last_step, endpoint=endpoint)


__all__ = [
    "BlockContraction",
    "SelfadjointBlockSystem",
    "BoundaryLimits",
    "defect",
    "defect_star",
    "defect_projector",
    "class_angle_check",
    "min_class_angle",
    "sector_semi_angle",
    "sectorial_product_angle",
    "build_block_contraction",
    "decompose_block_contraction",
    "selfadjoint_block",
    "sigma_pm",
    "w_function",
    "boundary_limits",
    "dyadic_limit",
]
