# stieltjes_lab/app/rs_functions.py
"""Transfer functions of passive selfadjoint systems and the class RS(M).

Omega(z) = D + z C (I - zF)^{-1} C* for the selfadjoint contraction
T = [[D, C], [C*, F]] on M (+) K.  Membership in RS(M) is tested through the
disk inequality, the two-point kernel restricted to one half-plane at a time,
and the operator bounds -I <= Omega(x) <= I on (-1, 1).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Mapping, Optional, Sequence

import numpy as np

from .contractions import SelfadjointBlockSystem, class_angle_check, defect, dyadic_limit
from .errors import (
    BadPoint,
    CouplingMismatch,
    IdentityResidualExceeded,
    InputError,
    MembershipViolated,
    NotContraction,
    NotHermitian,
    ShapeMismatch,
)
from .numerics import (
    DEFAULT_COND_LIMIT,
    as_matrix,
    as_square,
    condition_number,
    eigh_hermitian,
    hermitian_part,
    imaginary_part,
    inv_guarded,
    is_hermitian,
    min_eig_hermitian,
    numerical_rank,
    opnorm,
    solve_guarded,
)
from .reports import CheckReport

log = logging.getLogger(__name__)

SYSTEM_TOL = 1e-10
IDENTITY_TOL = 1e-9
MEMBERSHIP_TOL = 1e-8
KERNEL_BLOCK_SIZE = 12
STRUCTURE_CLUSTER_TOL = 1e-8
COUPLING_TOL = 1e-9
STRUCTURE_SAMPLES = (0.3j, -0.3j, 0.5, -0.5, 0.2 + 0.4j, 0.2 - 0.4j, -0.6 + 0.1j, -0.6 - 0.1j, 0.7j, -0.7j)


def check_off_cut(z: complex) -> complex:
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise BadPoint("point is not finite", point=z)
    if z.imag == 0.0 and abs(z.real) >= 1.0:
        raise BadPoint("z lies on the cut (-inf, -1] U [1, inf)", point=z)
    return z


@dataclass(frozen=True, eq=False)
class PassiveSelfadjointSystem:
    D: np.ndarray
    C: np.ndarray
    F: np.ndarray

    @property
    def dim_m(self) -> int:
        return self.D.shape[0]

    @property
    def dim_k(self) -> int:
        return self.F.shape[0]

    @property
    def T(self) -> np.ndarray:
        return np.block([[self.D, self.C], [self.C.conj().T, self.F]])


def make_system(D: Any, C: Any, F: Any, tol: float = SYSTEM_TOL) -> PassiveSelfadjointSystem:
    """Validate and assemble the system; T must be a Hermitian contraction."""
    Dm = as_square(D, name="D")
    Fm = as_square(F, name="F")
    Cm = as_matrix(C, name="C")
    if Cm.size == 0:
        Cm = np.zeros((Dm.shape[0], Fm.shape[0]), dtype=complex)
    if Cm.shape != (Dm.shape[0], Fm.shape[0]):
        raise ShapeMismatch("C must map K into M", C=list(Cm.shape), m=Dm.shape[0], k=Fm.shape[0])
    sys = PassiveSelfadjointSystem(Dm, Cm, Fm)
    T = sys.T
    if not is_hermitian(T, tol):
        raise NotHermitian("system operator T is not selfadjoint")
    norm = opnorm(T)
    if norm > 1.0 + tol:
        raise NotContraction("system operator T is not a contraction", norm=norm)
    return PassiveSelfadjointSystem(hermitian_part(Dm), Cm, hermitian_part(Fm))


def system_from_block(T: Any, dim_m: int, tol: float = SYSTEM_TOL) -> PassiveSelfadjointSystem:
    mat = as_square(T, name="T")
    if not 0 <= dim_m <= mat.shape[0]:
        raise ShapeMismatch("dim_m outside the block", dim_m=dim_m, size=mat.shape[0])
    return make_system(mat[:dim_m, :dim_m], mat[:dim_m, dim_m:], mat[dim_m:, dim_m:], tol)


def system_from_selfadjoint_block(sab: SelfadjointBlockSystem) -> PassiveSelfadjointSystem:
    return make_system(sab.D, sab.C, sab.F)


def transfer(sys: PassiveSelfadjointSystem, z: complex, cond_limit: float = DEFAULT_COND_LIMIT) -> np.ndarray:
    z = check_off_cut(z)
    if sys.dim_k == 0:
        return sys.D.copy()
    eye_k = np.eye(sys.dim_k, dtype=complex)
    inner = solve_guarded(eye_k - z * sys.F, sys.C.conj().T, cond_limit=cond_limit, what="I - zF")
    return sys.D + z * sys.C @ inner


def schur_frobenius_check(
    sys: PassiveSelfadjointSystem, z: complex, cond_limit: float = DEFAULT_COND_LIMIT
) -> float:
    """|| P_M (I - zT)^{-1}|_M - (I - z Omega(z))^{-1} ||."""
    z = check_off_cut(z)
    m = sys.dim_m
    n = m + sys.dim_k
    big = inv_guarded(np.eye(n, dtype=complex) - z * sys.T, cond_limit=cond_limit, what="I - zT")
    small = inv_guarded(np.eye(m, dtype=complex) - z * transfer(sys, z, cond_limit), cond_limit=cond_limit, what="I - z Omega(z)")
    return opnorm(big[:m, :m] - small)


def minimality_check(sys: PassiveSelfadjointSystem, tol: float = 1e-10) -> bool:
    """span{F^n C* M} = K at numerical rank."""
    k = sys.dim_k
    if k == 0:
        return True
    blocks = [sys.C.conj().T]
    for _ in range(1, k):
        blocks.append(sys.F @ blocks[-1])
    krylov = np.hstack(blocks)
    return numerical_rank(krylov, tol) == k


# ---------------------------------------------------------------------------
# handles


def _constant_rule(params: Mapping[str, Any]) -> Callable[[complex], np.ndarray]:
    D = as_square(params["D"], name="D")

    def evaluate(z: complex) -> np.ndarray:
        return D.copy()

    return evaluate


def _linear_rule(params: Mapping[str, Any]) -> Callable[[complex], np.ndarray]:
    c = complex(params.get("c", 1.0))
    eye = np.eye(int(params["dim"]), dtype=complex)

    def evaluate(z: complex) -> np.ndarray:
        return c * z * eye

    return evaluate


RS_RULES: dict[str, Callable[[Mapping[str, Any]], Callable[[complex], np.ndarray]]] = {
    "constant": _constant_rule,
    "linear": _linear_rule,
}


@dataclass(frozen=True, eq=False)
class RSFunctionHandle:
    """Evaluator for Omega on C minus the cut, backed by a system or a closed-form rule."""

    dim: int
    system: Optional[PassiveSelfadjointSystem] = None
    rule: Optional[Mapping[str, Any]] = None
    cond_limit: float = DEFAULT_COND_LIMIT
    _evaluator: Optional[Callable[[complex], np.ndarray]] = field(default=None, repr=False)

    @property
    def origin(self) -> str:
        return "system" if self.system is not None else "rule"

    def __call__(self, z: complex) -> np.ndarray:
        z = check_off_cut(z)
        if self.system is not None:
            return transfer(self.system, z, self.cond_limit)
        assert self._evaluator is not None
        return self._evaluator(z)


def system_handle(sys: PassiveSelfadjointSystem, cond_limit: float = DEFAULT_COND_LIMIT) -> RSFunctionHandle:
    return RSFunctionHandle(sys.dim_m, system=sys, cond_limit=cond_limit)


def rule_handle(name: str, **params: Any) -> RSFunctionHandle:
    try:
        factory = RS_RULES[name]
    except KeyError:
        raise InputError(f"unknown RS rule {name!r}", known=sorted(RS_RULES)) from None
    evaluator = factory(params)
    dim = evaluator(0.0).shape[0]
    return RSFunctionHandle(dim, rule={"name": name, **params}, _evaluator=evaluator)


def constant_handle(D: Any) -> RSFunctionHandle:
    return rule_handle("constant", D=as_square(D, name="D"))


def linear_handle(c: complex = 1.0, dim: int = 1) -> RSFunctionHandle:
    """Omega(z) = c z I."""
    return rule_handle("linear", c=complex(c), dim=int(dim))


# ---------------------------------------------------------------------------
# membership


def disk_inequality(omega: np.ndarray, z: complex) -> np.ndarray:
    """I - Omega* Omega - (1 - |z|^2) Im Omega / Im z at a nonreal z."""
    eye = np.eye(omega.shape[0], dtype=complex)
    return eye - omega.conj().T @ omega - (1 - abs(z) ** 2) * imaginary_part(omega) / z.imag


def rs_kernel(omega_z: np.ndarray, omega_w: np.ndarray, z: complex, w: complex) -> np.ndarray:
    """K(z, w) = I - Omega(w)* Omega(z) - ((1 - conj(w) z)/(z - conj(w))) (Omega(z) - Omega(w)*)."""
    eye = np.eye(omega_z.shape[0], dtype=complex)
    wbar = complex(w).conjugate()
    factor = (1 - wbar * z) / (z - wbar)
    return eye - omega_w.conj().T @ omega_z - factor * (omega_z - omega_w.conj().T)


def kernel_block_matrix(values: Sequence[np.ndarray], points: Sequence[complex]) -> np.ndarray:
    """Block (i, j) = K(z_j, z_i); all points in one open half-plane."""
    rows = []
    for i, zi in enumerate(points):
        rows.append([rs_kernel(values[j], values[i], points[j], zi) for j in range(len(points))])
    return np.block(rows)


def _chunks(items: Sequence[Any], size: int) -> Iterable[Sequence[Any]]:
    for start in range(0, len(items), size):
        yield items[start : start + size]


def rs_membership(
    omega: RSFunctionHandle,
    grid: Sequence[complex],
    tol: float = MEMBERSHIP_TOL,
    *,
    block_size: int = KERNEL_BLOCK_SIZE,
    evaluate: Optional[Callable[[Callable[[complex], np.ndarray], Sequence[complex]], list[np.ndarray]]] = None,
) -> CheckReport:
    """Disk inequality, half-plane kernel blocks and real-point bounds over ``grid``."""
    report = CheckReport("rs_membership", tol)
    points = [check_off_cut(z) for z in grid]
    values = evaluate(omega, points) if evaluate else [omega(z) for z in points]
    upper: list[tuple[complex, np.ndarray]] = []
    lower: list[tuple[complex, np.ndarray]] = []
    for z, value in zip(points, values):
        if z.imag != 0.0:
            margin = min_eig_hermitian(disk_inequality(value, z))
            report.record("disk_inequality", margin, margin >= -tol, point=z)
            symmetry = opnorm(omega(z.conjugate()) - value.conj().T)
            report.record("symmetry", symmetry, symmetry <= max(tol, 1e-10) * max(1.0, opnorm(value)), point=z)
            (upper if z.imag > 0 else lower).append((z, value))
        else:
            if not is_hermitian(value, max(tol, 1e-10)):
                report.record("real_hermitian", opnorm(value - value.conj().T), False, point=z)
                continue
            eye = np.eye(value.shape[0], dtype=complex)
            lower_margin = min_eig_hermitian(eye + value)
            upper_margin = min_eig_hermitian(eye - value)
            margin = min(lower_margin, upper_margin)
            report.record("real_bounds", margin, margin >= -tol, point=z)
    for label, half in (("upper", upper), ("lower", lower)):
        for chunk in _chunks(half, block_size):
            pts = [z for z, _ in chunk]
            block = kernel_block_matrix([v for _, v in chunk], pts)
            margin = min_eig_hermitian(block)
            report.record("kernel_block", margin, margin >= -tol, half_plane=label, size=len(pts))
    log.debug("rs_membership over %d points: %d violations", len(points), len(report.violations))
    return report


def class_angle_at(omega: RSFunctionHandle, z: complex, tol: float = MEMBERSHIP_TOL) -> float:
    """alpha_z = arctan(2 |Im z| / (1 - |z|^2)); Omega(z) must lie in C_M(alpha_z)."""
    z = complex(z)
    if abs(z) >= 1.0:
        raise BadPoint("z must lie in the open unit disk", point=z)
    alpha = math.atan(2 * abs(z.imag) / (1 - abs(z) ** 2))
    value = omega(z)
    if not class_angle_check(value, alpha, tol):
        eye = np.eye(value.shape[0], dtype=complex)
        if alpha == 0.0:
            probe = value if opnorm(value) > 1.0 + tol else value - value.conj().T
        else:
            s, c = math.sin(alpha), math.cos(alpha)
            plus = value * s + 1j * c * eye
            minus = value * s - 1j * c * eye
            probe = plus if opnorm(plus) >= opnorm(minus) else minus
        _, sigma, vh = np.linalg.svd(probe)
        raise MembershipViolated(
            "Omega(z) is outside C_M(alpha_z)",
            point=z,
            alpha=alpha,
            norm=float(sigma[0]),
            witness=vh[0].conj(),
        )
    return alpha


# ---------------------------------------------------------------------------
# structure


@dataclass(frozen=True, eq=False)
class StructureDecomposition:
    proj_plus: np.ndarray
    proj_minus: np.ndarray
    proj_defect: np.ndarray
    invariance_residual: float
    sample_points: tuple[complex, ...]

    @property
    def ranks(self) -> tuple[int, int, int]:
        return tuple(int(round(np.trace(P).real)) for P in (self.proj_plus, self.proj_minus, self.proj_defect))


def structure_decomposition(
    omega: RSFunctionHandle,
    cluster_tol: float = STRUCTURE_CLUSTER_TOL,
    samples: Sequence[complex] = STRUCTURE_SAMPLES,
    tol: float = 1e-8,
) -> StructureDecomposition:
    """Projectors onto ker(I - Omega(0)), ker(I + Omega(0)) and the defect space of Omega(0)."""
    center = omega(0.0)
    values, vectors = eigh_hermitian(center)
    plus_cols = vectors[:, np.abs(values - 1.0) <= cluster_tol]
    minus_cols = vectors[:, np.abs(values + 1.0) <= cluster_tol]
    proj_plus = plus_cols @ plus_cols.conj().T
    proj_minus = minus_cols @ minus_cols.conj().T
    proj_defect = np.eye(center.shape[0], dtype=complex) - proj_plus - proj_minus
    residual = 0.0
    for z in samples:
        value = omega(z)
        residual = max(
            residual,
            opnorm(value @ proj_plus - proj_plus),
            opnorm(value @ proj_minus + proj_minus),
            opnorm(proj_plus @ value - value @ proj_plus),
            opnorm(proj_minus @ value - value @ proj_minus),
        )
    if residual > tol:
        log.warning("structure projectors are not invariant: residual %.3e", residual)
    return StructureDecomposition(proj_plus, proj_minus, proj_defect, residual, tuple(complex(z) for z in samples))


# ---------------------------------------------------------------------------
# Omega_0


def _coupling(N: Any, F_prime: Any, F_doubleprime: Any, tol: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    Nm = as_matrix(N, name="N")
    Fp = as_square(F_prime, name="F_prime")
    Fs = as_square(F_doubleprime, name="F_doubleprime")
    k = Nm.shape[0]
    if Fp.shape != (k, k) or Fs.shape != (k, k):
        raise ShapeMismatch("F', F'' must act on the range space of N", N=list(Nm.shape), F_prime=list(Fp.shape))
    mismatch = opnorm(Fp - Fs - 2 * Nm @ Nm.conj().T)
    if mismatch > tol:
        raise CouplingMismatch("F' - F'' differs from 2NN*", residual=mismatch)
    return Nm, Fp, Fs


def omega0_residuals(
    N: np.ndarray,
    F_prime: np.ndarray,
    F_doubleprime: np.ndarray,
    z: complex,
    cond_limit: float = DEFAULT_COND_LIMIT,
) -> tuple[np.ndarray, dict[str, float]]:
    """Omega_0(z) and the residuals of the four fractional identities it satisfies."""
    z = check_off_cut(z)
    k, m = N.shape
    eye_k = np.eye(k, dtype=complex)
    eye_m = np.eye(m, dtype=complex)
    Nh = N.conj().T
    mean_f = (F_prime + F_doubleprime) / 2
    omega0_val = z * Nh @ solve_guarded(eye_k - z * mean_f, N, cond_limit=cond_limit, what="I - z(F'+F'')/2")
    via_prime = z * Nh @ solve_guarded(eye_k - z * F_prime, N, cond_limit=cond_limit, what="I - zF'")
    via_second = z * Nh @ solve_guarded(eye_k - z * F_doubleprime, N, cond_limit=cond_limit, what="I - zF''")
    m01 = eye_m + 2 * via_prime
    m02 = -eye_m + 2 * via_second

    residuals = {
        "negative_inverse": opnorm(-inv_guarded(m01, cond_limit=cond_limit, what="M01") - m02),
        "mean_inverse": opnorm(
            inv_guarded(eye_m - omega0_val, cond_limit=cond_limit, what="I - Omega0") - (eye_m + via_prime)
        ),
        "plus_fraction": opnorm(
            (eye_m + omega0_val) @ inv_guarded(eye_m - omega0_val, cond_limit=cond_limit, what="I - Omega0") - m01
        ),
        "minus_fraction": opnorm(
            (omega0_val - eye_m) @ inv_guarded(eye_m + omega0_val, cond_limit=cond_limit, what="I + Omega0") - m02
        ),
    }
    return omega0_val, residuals


def omega0(
    N: Any,
    F_prime: Any,
    F_doubleprime: Any,
    z: complex,
    tol: float = IDENTITY_TOL,
    *,
    coupling_tol: float = COUPLING_TOL,
    cond_limit: float = DEFAULT_COND_LIMIT,
) -> np.ndarray:
    """Omega_0(z) = z N* (I - z(F'+F'')/2)^{-1} N after verifying its identities."""
    Nm, Fp, Fs = _coupling(N, F_prime, F_doubleprime, coupling_tol)
    value, residuals = omega0_residuals(Nm, Fp, Fs, z, cond_limit)
    worst = max(residuals.values()) if residuals else 0.0
    if worst > tol:
        raise IdentityResidualExceeded("Omega_0 identities fail", residual=worst, point=complex(z), residuals=residuals)
    return value


def omega0_handle(
    N: Any, F_prime: Any, F_doubleprime: Any, *, coupling_tol: float = COUPLING_TOL, tol: float = SYSTEM_TOL
) -> RSFunctionHandle:
    """Omega_0 as the transfer function of [[0, N*], [N, (F'+F'')/2]]."""
    Nm, Fp, Fs = _coupling(N, F_prime, F_doubleprime, coupling_tol)
    m = Nm.shape[1]
    sys = make_system(np.zeros((m, m), dtype=complex), Nm.conj().T, (Fp + Fs) / 2, tol=max(tol, 1e-9))
    return system_handle(sys)


def mobius_check(sab: SelfadjointBlockSystem, z: complex, cond_limit: float = DEFAULT_COND_LIMIT) -> float:
    """|| Omega(z) - (Omega(0) + D Omega_0 (I + Omega(0) Omega_0)^{-1} D) ||, D the defect of Omega(0)."""
    z = check_off_cut(z)
    sys = system_from_selfadjoint_block(sab)
    value = transfer(sys, z, cond_limit)
    center = sys.D
    D_center = defect(center)
    inner = omega0(sab.N_param, sab.F_prime, sab.F_doubleprime, z, tol=math.inf, cond_limit=cond_limit)
    eye = np.eye(center.shape[0], dtype=complex)
    rebuilt = center + D_center @ inner @ inv_guarded(eye + center @ inner, cond_limit=cond_limit, what="I + Omega(0) Omega_0") @ D_center
    return opnorm(value - rebuilt)


def boundary_value(
    omega: RSFunctionHandle, sign: int, cond_limit: float = DEFAULT_COND_LIMIT
) -> tuple[np.ndarray, str]:
    """Omega(+1) or Omega(-1): direct when I -+ F is invertible, else the dyadic limit."""
    sign = 1 if sign > 0 else -1
    if omega.system is None:
        assert omega._evaluator is not None
        return omega._evaluator(complex(sign)), "direct"
    sys = omega.system
    eye_k = np.eye(sys.dim_k, dtype=complex)
    if sys.dim_k == 0 or condition_number(eye_k - sign * sys.F) <= cond_limit:
        if sys.dim_k == 0:
            return sys.D.copy(), "direct"
        inner = solve_guarded(eye_k - sign * sys.F, sys.C.conj().T, cond_limit=cond_limit, what="I -+ F")
        return sys.D + sign * sys.C @ inner, "direct"
    log.warning("I %s F is singular; Omega(%+d) taken as a dyadic limit", "-" if sign > 0 else "+", sign)
    value, _ = dyadic_limit(lambda x: transfer(sys, x, cond_limit), float(sign))
    return value, "dyadic"


def real_axis_bounds(omega: RSFunctionHandle, x: float) -> tuple[float, float]:
    """(min eig(I + Omega(x)), min eig(I - Omega(x))) for x in (-1, 1)."""
    value = omega(complex(x))
    eye = np.eye(value.shape[0], dtype=complex)
    return min_eig_hermitian(eye + value), min_eig_hermitian(eye - value)


def max_singular_on_disk(omega: RSFunctionHandle, points: Sequence[complex]) -> float:
    return max((opnorm(omega(z)) for z in points), default=0.0)


__all__ = [
    "PassiveSelfadjointSystem",
    "RSFunctionHandle",
    "StructureDecomposition",
    "RS_RULES",
    "check_off_cut",
    "make_system",
    "system_from_block",
    "system_from_selfadjoint_block",
    "transfer",
    "schur_frobenius_check",
    "minimality_check",
    "system_handle",
    "rule_handle",
    "constant_handle",
    "linear_handle",
    "disk_inequality",
    "rs_kernel",
    "kernel_block_matrix",
    "rs_membership",
    "class_angle_at",
    "structure_decomposition",
    "omega0",
    "omega0_residuals",
    "omega0_handle",
    "mobius_check",
    "boundary_value",
    "real_axis_bounds",
    "max_singular_on_disk",
]
