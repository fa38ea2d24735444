# stieltjes_lab/app/families.py
"""Stieltjes and inverse Stieltjes families of linear relations.

A family is a map lam -> M(lam) on C minus [0, inf).  Two origins are supported:
an RS(M) function Omega, turned into relations by the fractional transforms
Q = (I + Omega)(I - Omega)^{-1} and R = -Q^{-1} at z = (1 + lam)/(1 - lam), and an
explicit construction (A_hat, V, Z) built on the resolvent of a nonnegative
selfadjoint relation A_hat.  Checks (sector, kernel, limits) record their
findings in a CheckReport instead of raising.
"""
from __future__ import annotations

import cmath
import enum
import logging
import math
from dataclasses import dataclass
from typing import Any, Callable, Optional, Sequence

import numpy as np
import scipy.optimize

from .contractions import min_class_angle
from .errors import (
    BadPoint,
    BoundViolated,
    DimensionMismatch,
    EmptyDomain,
    GridDegenerate,
    HypothesisViolated,
    IdentityResidualExceeded,
    IllConditioned,
    InputError,
    NoConvergence,
    NotContraction,
    NotInResolventSet,
    NotNonnegativeSelfadjoint,
    NotSectorial,
    ShapeMismatch,
)
from .linrel import (
    LinearRelation,
    NumericalRangeSample,
    add_operator,
    adjoint,
    cayley,
    compose_congruence,
    form_matrix,
    form_value,
    from_pairs,
    inverse,
    is_nonnegative,
    is_nonpositive,
    is_selfadjoint,
    negate,
    numerical_range,
    operator_part,
    parts,
    relation_distance,
    resolvent,
    scale,
    to_operator,
)
from .numerics import (
    Subspace,
    as_matrix,
    as_square,
    column_space,
    full_space,
    hermitian_part,
    imaginary_part,
    inv_guarded,
    is_hermitian,
    min_eig_hermitian,
    opnorm,
    pinv,
    pinv_sqrt_psd,
    solve_guarded,
    sqrt_psd,
    subspace_equal,
)
from .reports import CheckReport
from .rs_functions import (
    RSFunctionHandle,
    boundary_value,
    check_off_cut,
    make_system,
    omega0_handle,
    system_handle,
)

log = logging.getLogger(__name__)

IDENTITY_TOL = 1e-9
SECTOR_TOL = 1e-8
KERNEL_TOL = 1e-7
BOUND_TOL = 1e-10
COINCIDENT_TOL = 1e-9
DEGENERATE_TOL = 1e-4
DERIVATIVE_STEPS = (1e-4, 5e-5)
CR_STEP = 1e-5
CR_TOL = 1e-5
DIVERGENCE_THRESHOLD = 1e6
LIMIT_TOL = 1e-6
LOWER_BOUND_ANGLES = 720


class FamilyKind(str, enum.Enum):
    STIELTJES = "stieltjes"
    INVERSE_STIELTJES = "inverse_stieltjes"

    @classmethod
    def parse(cls, value: Any) -> "FamilyKind":
        if isinstance(value, cls):
            return value
        text = str(value).strip().lower().replace("-", "_")
        aliases = {"s": cls.STIELTJES, "inverse": cls.INVERSE_STIELTJES, "is": cls.INVERSE_STIELTJES}
        if text in aliases:
            return aliases[text]
        try:
            return cls(text)
        except ValueError:
            raise InputError(f"unknown family kind {value!r}") from None


# ---------------------------------------------------------------------------
# points


def check_lambda(lam: complex) -> complex:
    lam = complex(lam)
    if not (math.isfinite(lam.real) and math.isfinite(lam.imag)):
        raise BadPoint("lam is not finite", point=lam)
    if lam.imag == 0.0 and lam.real >= 0.0:
        raise BadPoint("lam lies on [0, inf)", point=lam)
    return lam


def lambda_to_z(lam: complex) -> complex:
    """z = (1 + lam)/(1 - lam); maps C minus [0, inf) onto C minus the RS cut."""
    lam = check_lambda(lam)
    return (1 + lam) / (1 - lam)


def z_to_lambda(z: complex) -> complex:
    z = check_off_cut(z)
    return (z - 1) / (z + 1)


def phi_branch(kind: FamilyKind, lam: complex) -> tuple[float, float]:
    """(rotation phi, semi-angle bound) with e^{i phi} W(M(lam)) inside that sector."""
    lam = check_lambda(lam)
    if lam.imag == 0.0:
        return (0.0 if kind is FamilyKind.STIELTJES else math.pi), 0.0
    theta = abs(cmath.phase(lam))
    sign = 1.0 if lam.imag > 0 else -1.0
    if lam.real < 0:
        return (0.0 if kind is FamilyKind.STIELTJES else math.pi), math.pi - theta
    if kind is FamilyKind.STIELTJES:
        return -sign * (math.pi - theta) / 2, (math.pi - theta) / 2
    return -sign * (math.pi + theta) / 2, (math.pi - theta) / 2


# ---------------------------------------------------------------------------
# types


@dataclass(frozen=True, eq=False)
class StieltjesConstruction:
    """Q(lam) = Z* (I + (1 + lam) V* (A_hat - lam)^{-1} V) Z on dom Z."""

    A_hat: LinearRelation
    V: np.ndarray
    Z: np.ndarray
    dom_Z: Subspace

    @property
    def dim_m(self) -> int:
        return self.V.shape[1]

    @property
    def dim_k(self) -> int:
        return self.V.shape[0]

    @property
    def bounded(self) -> bool:
        return self.dom_Z.dim == self.dim_m


def make_construction(
    A_hat: LinearRelation,
    V: Any,
    Z: Any = None,
    dom_Z: Optional[Subspace] = None,
    tol: float = 1e-10,
) -> StieltjesConstruction:
    Vm = as_matrix(V, name="V")
    k, m = Vm.shape
    if A_hat.space_dim != k:
        raise DimensionMismatch("V must map M into the space of A_hat", V=list(Vm.shape), space_dim=A_hat.space_dim)
    if not is_nonnegative(A_hat, tol):
        raise NotNonnegativeSelfadjoint("A_hat must be nonnegative selfadjoint")
    norm = opnorm(Vm)
    if norm > 1.0 + tol:
        raise NotContraction("V is not a contraction", norm=norm)
    Zm = np.eye(m, dtype=complex) if Z is None else as_square(Z, name="Z")
    if Zm.shape[0] != m:
        raise ShapeMismatch("Z must act on M", Z=list(Zm.shape), m=m)
    dom = full_space(m) if dom_Z is None else dom_Z
    if dom.ambient_dim != m:
        raise DimensionMismatch("dom Z must be a subspace of M", ambient=dom.ambient_dim, m=m)
    return StieltjesConstruction(A_hat, Vm, Zm, dom)


def invert_construction(cons: StieltjesConstruction) -> StieltjesConstruction:
    """Same data with A_hat replaced by its inverse (still nonnegative selfadjoint)."""
    return StieltjesConstruction(inverse(cons.A_hat), cons.V, cons.Z, cons.dom_Z)


@dataclass(frozen=True, eq=False)
class FamilyHandle:
    kind: FamilyKind
    rs: Optional[RSFunctionHandle] = None
    construction: Optional[StieltjesConstruction] = None
    rule: Optional[dict[str, Any]] = None

    def __post_init__(self) -> None:
        if (self.rs is None) == (self.construction is None):
            raise InputError("a family needs exactly one origin")

    @property
    def dim(self) -> int:
        return self.rs.dim if self.rs is not None else self.construction.dim_m

    @property
    def origin(self) -> str:
        if self.rule is not None:
            return "rule"
        return "construction" if self.construction is not None else "rs"

    def relation(self, lam: complex) -> LinearRelation:
        lam = check_lambda(lam)
        if self.rs is not None:
            return from_rs(self.rs, self.kind, lam)
        return form_family(self.construction, self.kind, lam)[1]

    def form_operator(self, lam: complex) -> np.ndarray:
        """Bounded value M(lam); for a restricted dom Z, the form matrix on a basis of dom Z."""
        lam = check_lambda(lam)
        if self.rs is not None:
            return to_operator(self.relation(lam))
        return form_family(self.construction, self.kind, lam)[0]


def rs_family(omega: RSFunctionHandle, kind: Any = FamilyKind.STIELTJES) -> FamilyHandle:
    return FamilyHandle(FamilyKind.parse(kind), rs=omega)


def construction_family(cons: StieltjesConstruction, kind: Any = FamilyKind.STIELTJES) -> FamilyHandle:
    return FamilyHandle(FamilyKind.parse(kind), construction=cons)


# ---------------------------------------------------------------------------
# fractional transforms


def graph_from_omega(omega_value: np.ndarray, kind: FamilyKind) -> LinearRelation:
    eye = np.eye(omega_value.shape[0], dtype=complex)
    if kind is FamilyKind.STIELTJES:
        return from_pairs(eye - omega_value, eye + omega_value)
    return from_pairs(eye + omega_value, omega_value - eye)


def from_rs(omega: RSFunctionHandle, kind: Any, lam: complex) -> LinearRelation:
    """Q(lam) = {(I - Omega(z))h, (I + Omega(z))h}; the inverse kind is R = -Q^{-1}."""
    kind = FamilyKind.parse(kind)
    z = lambda_to_z(lam)
    return graph_from_omega(omega(z), kind)


def to_rs(family: FamilyHandle, z: complex) -> np.ndarray:
    """Omega(z) from the pairs of M(lam): {f + f', f' - f} (Stieltjes) or {f - f', f + f'}."""
    lam = z_to_lambda(z)
    R = family.relation(lam)
    if family.kind is FamilyKind.STIELTJES:
        omega_graph = from_pairs(R.X + R.Y, R.Y - R.X)
    else:
        omega_graph = from_pairs(R.X - R.Y, R.X + R.Y)
    return to_operator(omega_graph)


# ---------------------------------------------------------------------------
# explicit constructions


def q0(cons: StieltjesConstruction, lam: complex) -> np.ndarray:
    """Q0(lam) = I + (1 + lam) V* (A_hat - lam)^{-1} V."""
    lam = check_lambda(lam)
    eye = np.eye(cons.dim_m, dtype=complex)
    if lam == -1:
        return eye
    res = resolvent(cons.A_hat, lam)
    return eye + (1 + lam) * cons.V.conj().T @ res @ cons.V


def r0(cons: StieltjesConstruction, lam: complex) -> np.ndarray:
    """R0(lam) = -I - (1 + lam) V* (lam A_hat - I)^{-1} V = -Q0(1/lam)."""
    lam = check_lambda(lam)
    eye = np.eye(cons.dim_m, dtype=complex)
    if lam == -1:
        return -eye
    res = resolvent(scale(cons.A_hat, lam), 1.0)
    return -eye - (1 + lam) * cons.V.conj().T @ res @ cons.V


def cayley_operator(cons: StieltjesConstruction) -> np.ndarray:
    """F = C(A_hat) as a selfadjoint contraction on K."""
    return hermitian_part(to_operator(cayley(cons.A_hat)))


def q0_cayley_form(cons: StieltjesConstruction, lam: complex) -> np.ndarray:
    """D_V^2 + (2/(1 - lam)) V* (I - zF)^{-1} V with F = C(A_hat)."""
    z = lambda_to_z(lam)
    F = cayley_operator(cons)
    V = cons.V
    eye_k = np.eye(cons.dim_k, dtype=complex)
    eye_m = np.eye(cons.dim_m, dtype=complex)
    inner = solve_guarded(eye_k - z * F, V, what="I - zF")
    return eye_m - V.conj().T @ V + (2 / (1 - complex(lam))) * V.conj().T @ inner


def r0_cayley_form(cons: StieltjesConstruction, lam: complex) -> np.ndarray:
    """-D_V^2 + (2 lam/(1 - lam)) V* (I + zF)^{-1} V."""
    lam = check_lambda(lam)
    if lam == 0:
        raise BadPoint("lam = 0 is excluded for R0", point=lam)
    z = lambda_to_z(lam)
    F = cayley_operator(cons)
    V = cons.V
    eye_k = np.eye(cons.dim_k, dtype=complex)
    eye_m = np.eye(cons.dim_m, dtype=complex)
    inner = solve_guarded(eye_k + z * F, V, what="I + zF")
    return -(eye_m - V.conj().T @ V) + (2 * lam / (1 - lam)) * V.conj().T @ inner


def neg_inv_q0(cons: StieltjesConstruction, lam: complex, tol: float = IDENTITY_TOL) -> np.ndarray:
    """-Q0(lam)^{-1} = -I + (1 + lam) V* (A_hat - lam + (1 + lam) V V*)^{-1} V, checked twice."""
    lam = check_lambda(lam)
    eye_m = np.eye(cons.dim_m, dtype=complex)
    if lam == -1:
        return -eye_m
    V = cons.V
    VVh = V @ V.conj().T
    shifted = add_operator(cons.A_hat, (1 + lam) * VVh)
    value = -eye_m + (1 + lam) * V.conj().T @ resolvent(shifted, lam) @ V

    direct = -inv_guarded(q0(cons, lam), what="Q0(lam)")
    F = cayley_operator(cons)
    eye_k = np.eye(cons.dim_k, dtype=complex)
    middle = (2 / (1 + lam)) * eye_k - (eye_k + F) @ (eye_k - VVh)
    via_cayley = -eye_m + V.conj().T @ solve_guarded(middle, (eye_k + F) @ V, what="Cayley-side middle factor")
    residual = max(opnorm(value - direct), opnorm(value - via_cayley))
    if residual > tol * max(1.0, opnorm(value)):
        raise IdentityResidualExceeded("-Q0^{-1} closed form disagrees", residual=residual, point=lam)
    return value


def q0_operator_part_form(cons: StieltjesConstruction, lam: complex, tol: float = IDENTITY_TOL) -> np.ndarray:
    """I - V* P V + V* U (I + S)(S - lam)^{-1} U* V with S the operator part of A_hat on U = (mul A_hat)^perp."""
    lam = check_lambda(lam)
    decomposition = operator_part(cons.A_hat)
    U = decomposition.complement_basis.basis
    S = decomposition.operator_part
    V = cons.V
    eye_m = np.eye(cons.dim_m, dtype=complex)
    eye_s = np.eye(S.shape[0], dtype=complex)
    UhV = U.conj().T @ V
    middle = (eye_s + S) @ solve_guarded(S - lam * eye_s, UhV, what="S - lam")
    value = eye_m - UhV.conj().T @ UhV + UhV.conj().T @ middle
    residual = opnorm(value - q0(cons, lam))
    if residual > tol * max(1.0, opnorm(value)):
        raise IdentityResidualExceeded("operator-part form of Q0 disagrees", residual=residual, point=lam)
    return value


def r0_operator_part_form(cons: StieltjesConstruction, lam: complex, tol: float = IDENTITY_TOL) -> np.ndarray:
    """R0 built on A_hat^{-1}, expanded through the operator part of A_hat.

    -I + (1 + lam) V* P_mul V + V* U [S (I + S)((S - lam)^{-1} - (I + S)^{-1})] U* V,
    where P_mul projects onto mul A_hat.
    """
    lam = check_lambda(lam)
    if lam == 0:
        raise BadPoint("lam = 0 is excluded for R0", point=lam)
    decomposition = operator_part(cons.A_hat)
    U = decomposition.complement_basis.basis
    M = decomposition.mul_basis.basis
    S = decomposition.operator_part
    V = cons.V
    eye_m = np.eye(cons.dim_m, dtype=complex)
    eye_s = np.eye(S.shape[0], dtype=complex)
    MhV = M.conj().T @ V
    UhV = U.conj().T @ V
    shifted = solve_guarded(S - lam * eye_s, eye_s, what="S - lam")
    unit = solve_guarded(eye_s + S, eye_s, what="I + S")
    middle = S @ (eye_s + S) @ (shifted - unit)
    value = -eye_m + (1 + lam) * MhV.conj().T @ MhV + UhV.conj().T @ middle @ UhV
    residual = opnorm(value - r0(invert_construction(cons), lam))
    if residual > tol * max(1.0, opnorm(value)):
        raise IdentityResidualExceeded("operator-part form of R0 disagrees", residual=residual, point=lam)
    return value


def construction_rs_handle(cons: StieltjesConstruction) -> RSFunctionHandle:
    """Omega_0 with N = (I + A_hat)^{-1/2} V, F' = C(A_hat), F'' = F' - 2NN*; its Stieltjes family is Q0."""
    F = cayley_operator(cons)
    eye_k = np.eye(cons.dim_k, dtype=complex)
    N = sqrt_psd((eye_k + F) / 2, scale=1.0) @ cons.V
    return omega0_handle(N, F, F - 2 * N @ N.conj().T)


# ---------------------------------------------------------------------------
# M01 / M02


def _m0(N: Any, F_boundary: Any, lam: complex, sign: int) -> np.ndarray:
    Nm = as_matrix(N, name="N")
    Fm = as_square(F_boundary, name="F")
    z = lambda_to_z(lam)
    eye_k = np.eye(Nm.shape[0], dtype=complex)
    eye_m = np.eye(Nm.shape[1], dtype=complex)
    return sign * eye_m + 2 * z * Nm.conj().T @ solve_guarded(eye_k - z * Fm, Nm, what="I - zF")


def m01(N: Any, F_prime: Any, lam: complex) -> np.ndarray:
    """I + 2z N* (I - zF')^{-1} N."""
    return _m0(N, F_prime, lam, 1)


def m02(N: Any, F_doubleprime: Any, lam: complex) -> np.ndarray:
    """-I + 2z N* (I - zF'')^{-1} N."""
    return _m0(N, F_doubleprime, lam, -1)


def m01_criterion(N: Any, F_prime: Any, tol: float = 1e-10) -> tuple[bool, float]:
    """M01 is a Stieltjes family iff I + F' - 2NN* >= 0."""
    Nm = as_matrix(N, name="N")
    Fm = as_square(F_prime, name="F_prime")
    margin = min_eig_hermitian(np.eye(Fm.shape[0], dtype=complex) + Fm - 2 * Nm @ Nm.conj().T)
    return margin >= -tol, margin


def m02_criterion(N: Any, F_doubleprime: Any, tol: float = 1e-10) -> tuple[bool, float]:
    """M02 is an inverse Stieltjes family iff I - F'' - 2NN* >= 0."""
    Nm = as_matrix(N, name="N")
    Fm = as_square(F_doubleprime, name="F_doubleprime")
    margin = min_eig_hermitian(np.eye(Fm.shape[0], dtype=complex) - Fm - 2 * Nm @ Nm.conj().T)
    return margin >= -tol, margin


def m01_limit_minus_infinity(N: Any, F_prime: Any, f: Any, tol: float = 1e-10) -> float:
    """lim_{x -> -inf} (M01(x) f, f) = ||f||^2 - 2 ||(I + F')^{[-1/2]} N f||^2, or -inf off the range."""
    Nm = as_matrix(N, name="N")
    Fm = as_square(F_prime, name="F_prime")
    vec = np.asarray(f, dtype=complex).reshape(-1)
    shifted = np.eye(Fm.shape[0], dtype=complex) + Fm
    image = Nm @ vec
    root = sqrt_psd(shifted, scale=1.0)
    solution = pinv(root, tol) @ image
    if opnorm((root @ solution - image).reshape(-1, 1)) > 1e-8 * max(1.0, float(np.linalg.norm(image))):
        return -math.inf
    lifted = pinv_sqrt_psd(shifted, tol) @ image
    return float(np.vdot(vec, vec).real - 2 * np.vdot(lifted, lifted).real)


# ---------------------------------------------------------------------------
# closed-form families


def neg_h_over_lambda(H: Any, tol: float = 1e-10) -> FamilyHandle:
    """The Stieltjes family -H/lam for H > 0 as a passive selfadjoint system."""
    Hm = as_square(H, name="H")
    if not is_hermitian(Hm, tol) or min_eig_hermitian(Hm) <= tol:
        raise NotNonnegativeSelfadjoint("H must be positive definite", min_eigenvalue=min_eig_hermitian(Hm))
    Hm = hermitian_part(Hm)
    eye = np.eye(Hm.shape[0], dtype=complex)
    plus_inv = inv_guarded(Hm + eye, what="H + I")
    D = (Hm - eye) @ plus_inv
    C = 2 * sqrt_psd(Hm) @ plus_inv
    sys = make_system(hermitian_part(D), C, -hermitian_part(D), tol=1e-9)
    return FamilyHandle(FamilyKind.STIELTJES, rs=system_handle(sys), rule={"name": "neg_h_over_lambda", "H": Hm})


# ---------------------------------------------------------------------------
# forms


def form_family(cons: StieltjesConstruction, kind: Any, lam: complex) -> tuple[np.ndarray, LinearRelation]:
    """Form matrix [q(lam)[w_a, w_b]] on an orthonormal basis W of dom Z and its relation.

    q[W a, W b] = b* Fm a with Fm = (ZW)* inner (ZW), inner = Q0 or R0.  The relation
    is {W a, W Fm a} plus the multivalued part M minus dom Z.
    """
    kind = FamilyKind.parse(kind)
    lam = check_lambda(lam)
    inner = q0(cons, lam) if kind is FamilyKind.STIELTJES else r0(cons, lam)
    W = cons.dom_Z.basis
    ZW = cons.Z @ W
    Fm = ZW.conj().T @ inner @ ZW
    perp = cons.dom_Z.complement().basis
    m = cons.dim_m
    top = np.hstack([W, np.zeros((m, perp.shape[1]), dtype=complex)])
    bottom = np.hstack([W @ Fm, perp])
    return Fm, from_pairs(top, bottom)


# ---------------------------------------------------------------------------
# sector / Nevanlinna checks


@dataclass
class SectorReport:
    lam: complex
    phi: float
    semi_angle: float
    bound: float
    samples: Optional[NumericalRangeSample]
    worst_violation: float
    report: CheckReport

    @property
    def ok(self) -> bool:
        return self.report.ok

    def to_dict(self) -> dict[str, Any]:
        payload = self.report.to_dict()
        payload.update(
            {
                "lambda": {"re": self.lam.real, "im": self.lam.imag},
                "phi": self.phi,
                "semi_angle": self.semi_angle,
                "bound": self.bound,
                "worst_violation": self.worst_violation,
                "sample_count": self.samples.sample_count if self.samples else 0,
            }
        )
        return payload


def kind_certificates(R: LinearRelation, kind: FamilyKind, lam: complex) -> dict[str, float]:
    """Smallest eigenvalues of the matrices whose positivity characterizes the kind at lam.

    nevanlinna: Im S / Im lam; sector: Re S + (Re lam / Im lam) Im S (Stieltjes) or
    -Re S + (Re lam / Im lam) Im S (inverse), which is Im(lam S)/Im lam resp.
    |lam|^2 Im(S/lam)/Im lam.  At real lam the relation must be selfadjoint and
    of the right sign.  Values are scaled by max(1, ||S||).
    """
    _, S = form_matrix(R)
    norm = max(1.0, opnorm(S))
    if lam.imag == 0.0:
        selfadjoint = relation_distance(R, adjoint(R))
        sign = min_eig_hermitian(S) if kind is FamilyKind.STIELTJES else min_eig_hermitian(-S)
        return {"selfadjoint": -selfadjoint, "sign": sign / norm}
    ratio = lam.real / lam.imag
    nevanlinna = min_eig_hermitian(imaginary_part(S) / lam.imag)
    if kind is FamilyKind.STIELTJES:
        sector = min_eig_hermitian(hermitian_part(S) + ratio * imaginary_part(S))
    else:
        sector = min_eig_hermitian(-hermitian_part(S) + ratio * imaginary_part(S))
    return {"nevanlinna": nevanlinna / norm, "sector": sector / norm}


def _sample_slack(kind: FamilyKind, lam: complex, q: complex) -> float:
    value = q if kind is FamilyKind.STIELTJES else -q
    return (abs(lam.imag) * value.real + lam.real * abs(q.imag)) / (abs(lam) * max(1.0, abs(q)))


def _product_slack(kind: FamilyKind, lam: complex, q: complex) -> float:
    if kind is FamilyKind.STIELTJES:
        return (lam * q).imag / lam.imag / max(1.0, abs(lam * q))
    return (q / lam).imag / lam.imag / max(1.0, abs(q / lam))


def sector_check(
    family: FamilyHandle,
    lam: complex,
    samples: int = 64,
    seed: Optional[int] = 0,
    tol: float = SECTOR_TOL,
) -> SectorReport:
    """Sector inequality, Nevanlinna certificates and sampled numerical range at lam."""
    lam = check_lambda(lam)
    kind = family.kind
    R = family.relation(lam)
    report = CheckReport("sector_check", tol)
    phi, bound = phi_branch(kind, lam)
    for name, value in kind_certificates(R, kind, lam).items():
        report.record(name, value, value >= -tol, point=lam)
    if lam.imag != 0.0:
        symmetry = relation_distance(adjoint(R), family.relation(lam.conjugate()))
        report.record("symmetry", -symmetry, symmetry <= max(tol, 1e-9), point=lam)

    try:
        sample = numerical_range(R, samples=samples, seed=seed)
    except EmptyDomain:
        report.skip("relation has trivial domain", point=lam)
        return SectorReport(lam, phi, 0.0, bound, None, 0.0, report)

    values = np.asarray(sample.values, dtype=complex)
    worst = 0.0
    if lam.imag != 0.0:
        slacks = [_sample_slack(kind, lam, q) for q in values]
        products = [_product_slack(kind, lam, q) for q in values]
        worst = min(min(slacks), min(products))
        report.record("sample_inequality", min(slacks), min(slacks) >= -tol, point=lam)
        report.record("sample_product", min(products), min(products) >= -tol, point=lam)
    else:
        signed = values.real if kind is FamilyKind.STIELTJES else -values.real
        imag = float(np.max(np.abs(values.imag))) if values.size else 0.0
        worst = min(float(np.min(signed)) if values.size else 0.0, -imag)
        report.record("sample_real", worst, worst >= -tol * max(1.0, float(np.max(np.abs(values)))), point=lam)

    rotated = np.exp(1j * phi) * values
    scale_ = float(np.max(np.abs(values))) if values.size else 0.0
    significant = rotated[np.abs(rotated) > 1e-6 * max(1.0, scale_)]
    semi_angle = float(np.max(np.abs(np.angle(significant)))) if significant.size else 0.0
    report.record("containment", bound - semi_angle, semi_angle <= bound + 1e-6, point=lam, phi=phi)
    return SectorReport(lam, phi, semi_angle, bound, sample, worst, report)


# ---------------------------------------------------------------------------
# closed forms


@dataclass(frozen=True, eq=False)
class ClosedFormRepresentation:
    """A[u, v] = -(u, v) + 2((I + iG)^{-1} P u, P v) on ran(I + T_R), P = (I + T_R)^{[-1/2]}."""

    domain_basis: Subspace
    g_operator: np.ndarray
    root_pinv: np.ndarray
    alpha: float
    rotation: float = 0.0

    def form(self, u: Any, v: Any) -> complex:
        u_vec = np.asarray(u, dtype=complex).reshape(-1)
        v_vec = np.asarray(v, dtype=complex).reshape(-1)
        n = u_vec.size
        inner = solve_guarded(np.eye(n, dtype=complex) + 1j * self.g_operator, self.root_pinv @ u_vec, what="I + iG")
        value = -np.vdot(v_vec, u_vec) + 2 * np.vdot(self.root_pinv @ v_vec, inner)
        return complex(np.exp(-1j * self.rotation) * value)

    def in_domain(self, u: Any, tol: float = 1e-9) -> bool:
        u_vec = np.asarray(u, dtype=complex).reshape(-1)
        residual = u_vec - self.domain_basis.projector() @ u_vec
        return float(np.linalg.norm(residual)) <= tol * max(1.0, float(np.linalg.norm(u_vec)))


def closed_form_from_cayley(A: LinearRelation, rotation: float = 0.0, tol: float = 1e-10) -> ClosedFormRepresentation:
    """Closed sectorial form of e^{i rotation} A read off T = -I + 2(A + I)^{-1}."""
    rotated = scale(A, cmath.exp(1j * rotation)) if rotation else A
    n = A.space_dim
    eye = np.eye(n, dtype=complex)
    try:
        T = -eye + 2 * resolvent(rotated, -1.0)
    except (NotInResolventSet, IllConditioned) as exc:
        raise NotSectorial("-1 is not in the resolvent set", **exc.details) from exc
    try:
        alpha = min_class_angle(T)
    except NotContraction as exc:
        raise NotSectorial("Cayley transform is not a contraction", **exc.details) from exc
    if math.isinf(alpha):
        raise NotSectorial("Cayley transform lies in no C_H(alpha)")
    T_R = hermitian_part(T)
    shifted = eye + T_R
    P = pinv_sqrt_psd(shifted, tol)
    G = hermitian_part(P @ imaginary_part(T) @ P)
    domain = column_space(shifted, 1e-9, absolute=True)
    return ClosedFormRepresentation(domain, G, P, alpha, rotation)


# ---------------------------------------------------------------------------
# kernels


def _derivative(fn: Callable[[complex], np.ndarray], lam: complex) -> np.ndarray:
    h1, h2 = DERIVATIVE_STEPS

    def central(h: float) -> np.ndarray:
        return (fn(lam + h) - fn(lam - h)) / (2 * h)

    return (4 * central(h2) - central(h1)) / 3


def family_kernel(
    family: FamilyHandle, lam: complex, mu: complex, values: Optional[dict[complex, np.ndarray]] = None
) -> np.ndarray:
    """K(lam, mu) (Stieltjes, >= 0) or L(lam, mu) (inverse, <= 0) for bounded values."""
    fetch = (lambda p: values[p]) if values is not None else family.form_operator
    sign = 1.0 if family.kind is FamilyKind.STIELTJES else -1.0
    gap = lam - mu.conjugate()
    if abs(gap) < COINCIDENT_TOL:
        value = fetch(lam)
        return 2 * value + sign * 2 * lam * _derivative(family.form_operator, lam)
    if abs(gap) < DEGENERATE_TOL:
        raise GridDegenerate("grid points nearly conjugate", gap=abs(gap), left=lam, right=mu)
    a = fetch(lam)
    b = fetch(mu).conj().T
    return a + b + sign * ((lam + mu.conjugate()) / gap) * (a - b)


def kernel_check(family: FamilyHandle, grid: Sequence[complex], tol: float = KERNEL_TOL) -> CheckReport:
    """Block matrix with block (i, j) = K(lam_j, lam_i); PSD (Stieltjes) or NSD (inverse)."""
    points = [check_lambda(lam) for lam in grid]
    values = {lam: family.form_operator(lam) for lam in points}
    rows = [[family_kernel(family, points[j], points[i], values) for j in range(len(points))] for i in range(len(points))]
    block = np.block(rows) if rows else np.zeros((0, 0), dtype=complex)
    report = CheckReport("kernel_check", tol)
    margin = min_eig_hermitian(block) if family.kind is FamilyKind.STIELTJES else min_eig_hermitian(-block)
    report.record("kernel_block", margin, margin >= -tol * max(1.0, opnorm(block)), size=len(points))
    report.notes["hermitian_defect"] = opnorm(block - block.conj().T)
    return report


# ---------------------------------------------------------------------------
# lower bounds


@dataclass(frozen=True)
class LowerBound:
    value: float
    angle: float
    rotated: float
    phi: float


def lower_bound_constant(family: FamilyHandle, lam: complex, tol: float = BOUND_TOL) -> LowerBound:
    """c(lam) with |(M(lam) f, f)| >= c(lam) ||f||^2, from the best rotation of the real part."""
    lam = check_lambda(lam)
    M = family.form_operator(lam)

    def floor(theta: float) -> float:
        return min_eig_hermitian(hermitian_part(np.exp(-1j * theta) * M))

    angles = np.linspace(-math.pi, math.pi, LOWER_BOUND_ANGLES, endpoint=False)
    floors = np.array([floor(t) for t in angles])
    best = int(np.argmax(floors))
    step = 2 * math.pi / LOWER_BOUND_ANGLES
    refined = scipy.optimize.minimize_scalar(
        lambda t: -floor(t),
        bounds=(angles[best] - step, angles[best] + step),
        method="bounded",
        options={"xatol": 1e-10},
    )
    theta, value = (float(refined.x), -float(refined.fun)) if -refined.fun >= floors[best] else (float(angles[best]), float(floors[best]))
    phi, _ = phi_branch(family.kind, lam)
    rotated = min_eig_hermitian(hermitian_part(np.exp(1j * phi) * M))
    if value <= tol:
        raise BoundViolated("no positive lower bound for |(M f, f)|", value=value, point=lam)
    return LowerBound(value, theta, rotated, phi)


# ---------------------------------------------------------------------------
# limits on the negative axis


@dataclass
class ResolventLimits:
    at_zero: LinearRelation
    at_infinity: LinearRelation
    method: str
    report: CheckReport


def _domain_samples(R: LinearRelation, seed: int = 0, count: int = 2) -> list[np.ndarray]:
    dom = parts(R).dom
    if dom.is_trivial:
        return []
    vectors = [dom.basis[:, j] for j in range(dom.dim)]
    rng = np.random.default_rng(seed)
    for _ in range(count):
        coeffs = rng.standard_normal(dom.dim) + 1j * rng.standard_normal(dom.dim)
        vectors.append(dom.basis @ coeffs / np.linalg.norm(coeffs))
    return vectors


def _in_domain(R: LinearRelation, g: np.ndarray, tol: float = 1e-8) -> bool:
    P = parts(R).dom.projector()
    return float(np.linalg.norm(g - P @ g)) <= tol * max(1.0, float(np.linalg.norm(g)))


def _form(R: LinearRelation, g: np.ndarray) -> float:
    return form_value(R, g, g).real


def _limit_relations(family: FamilyHandle) -> tuple[LinearRelation, LinearRelation, str]:
    kind = family.kind
    if family.rs is not None:
        omega_one, method_one = boundary_value(family.rs, 1)
        omega_minus, method_minus = boundary_value(family.rs, -1)
        method = "dyadic" if "dyadic" in (method_one, method_minus) else "direct"
        return graph_from_omega(omega_one, kind), graph_from_omega(omega_minus, kind), method
    cons = family.construction
    if not cons.bounded:
        raise HypothesisViolated("limits need a bounded Z (dom Z = M)")
    handle = construction_rs_handle(cons)
    omega_one, method_one = boundary_value(handle, 1)
    omega_minus, method_minus = boundary_value(handle, -1)
    method = "dyadic" if "dyadic" in (method_one, method_minus) else "direct"
    q_zero = graph_from_omega(omega_one, FamilyKind.STIELTJES)
    q_inf = graph_from_omega(omega_minus, FamilyKind.STIELTJES)
    if kind is FamilyKind.STIELTJES:
        at_zero, at_inf = q_zero, q_inf
    else:
        at_zero, at_inf = negate(q_inf), negate(q_zero)
    return compose_congruence(cons.Z, at_zero), compose_congruence(cons.Z, at_inf), method


def resolvent_limits(
    family: FamilyHandle,
    tol: float = LIMIT_TOL,
    *,
    max_steps: int = 40,
    order_points: Sequence[float] = (-4.0, -1.0, -0.25),
) -> ResolventLimits:
    """M(-0) and M(-inf) as relations, with sign, form-convergence and ordering checks."""
    kind = family.kind
    at_zero, at_inf, method = _limit_relations(family)
    report = CheckReport("resolvent_limits", tol)
    report.notes["method"] = method
    sign_check = is_nonnegative if kind is FamilyKind.STIELTJES else is_nonpositive
    for label, R in (("at_zero", at_zero), ("at_infinity", at_inf)):
        report.record(f"{label}.selfadjoint", 0.0, is_selfadjoint(R))
        report.record(f"{label}.sign", 0.0, sign_check(R, 1e-9))

    # the endpoint whose form domain is smallest carries the convergence statement
    target, label, path = (
        (at_zero, "at_zero", lambda k: -(2.0 ** -k))
        if kind is FamilyKind.STIELTJES
        else (at_inf, "at_infinity", lambda k: -(2.0 ** k))
    )
    for index, g in enumerate(_domain_samples(target)):
        limit = _form(target, g)
        diff = math.inf
        for k in range(1, max_steps + 1):
            diff = abs(_form(family.relation(path(k)), g) - limit)
            if diff <= tol * max(1.0, abs(limit)):
                break
        else:
            raise NoConvergence("form values do not approach the limit", endpoint=label, vector=index, last_residual=diff)
        report.record(f"{label}.form_convergence", diff, True, vector=index, steps=k)

    for x in order_points:
        Rx = family.relation(x)
        outer = target
        for g in _domain_samples(outer):
            if not _in_domain(Rx, g):
                report.record("domain_inclusion", 0.0, False, point=x)
                continue
            gap = (_form(outer, g) - _form(Rx, g)) if kind is FamilyKind.STIELTJES else (_form(Rx, g) - _form(outer, g))
            report.record("order_outer", gap, gap >= -tol, point=x)
        inner_end = at_inf if kind is FamilyKind.STIELTJES else at_zero
        for g in _domain_samples(Rx):
            if not _in_domain(inner_end, g):
                report.record("domain_inclusion", 0.0, False, point=x)
                continue
            gap = (_form(Rx, g) - _form(inner_end, g)) if kind is FamilyKind.STIELTJES else (_form(inner_end, g) - _form(Rx, g))
            report.record("order_inner", gap, gap >= -tol, point=x)
    return ResolventLimits(at_zero, at_inf, method, report)


@dataclass
class MonotoneLimit:
    index: int
    status: str
    lower_limit: float
    upper_limit: float
    last_value: float


def _extrapolated_endpoint(sampler: Callable[[float], np.ndarray], a: float, b: float, steps: int = 40) -> np.ndarray:
    previous = sampler(a + (b - a) * 2.0 ** -6)
    previous_ex: Optional[np.ndarray] = None
    current = previous
    for k in range(7, steps + 1):
        current = sampler(a + (b - a) * 2.0 ** -k)
        extrapolated = 2 * current - previous
        if previous_ex is not None and opnorm(extrapolated - previous_ex) < 1e-12 * max(1.0, opnorm(current)):
            return extrapolated
        previous, previous_ex = current, extrapolated
    return current


def monotone_form_limits(
    sampler: Callable[[float], np.ndarray],
    a: float,
    b: float,
    vectors: Sequence[Any],
    *,
    upper: Optional[np.ndarray] = None,
    tol: float = 1e-9,
    steps: int = 40,
    threshold: float = DIVERGENCE_THRESHOLD,
) -> list[MonotoneLimit]:
    """Limits of L(x)^{[-1]}[f] at both ends of (a, b) for a non-decreasing PSD family L."""
    if not a < b:
        raise InputError("need a < b", a=a, b=b)
    probe = sorted({a + (b - a) * t for t in [2.0 ** -k for k in range(1, 13)] + [0.75, 0.9]})
    mats = [hermitian_part(as_square(sampler(x), name="L(x)")) for x in probe]
    scale_ = max(1.0, max(opnorm(L) for L in mats))
    for L, x in zip(mats, probe):
        if min_eig_hermitian(L) < -tol * scale_:
            raise HypothesisViolated("L(x) is not nonnegative", point=x, min_eigenvalue=min_eig_hermitian(L))
    for (x0, L0), (x1, L1) in zip(zip(probe, mats), zip(probe[1:], mats[1:])):
        margin = min_eig_hermitian(L1 - L0)
        if margin < -tol * scale_:
            raise HypothesisViolated("L is not non-decreasing", left=x0, right=x1, min_eigenvalue=margin)
    ranges = [column_space(L, 1e-8 * scale_, absolute=True) for L in mats]
    for x, rng in zip(probe[1:], ranges[1:]):
        if not subspace_equal(ranges[0], rng):
            raise HypothesisViolated("ran L(x) changes along (a, b)", point=x)

    L_a = hermitian_part(_extrapolated_endpoint(sampler, a, b, steps))
    L_b = hermitian_part(upper) if upper is not None else hermitian_part(_extrapolated_endpoint(lambda t: sampler(a + b - t), a, b, steps))
    range_a = column_space(L_a, 1e-8 * scale_, absolute=True)
    pinv_a = pinv(L_a, 1e-8)
    pinv_b = pinv(L_b, 1e-8)
    results: list[MonotoneLimit] = []
    for index, f in enumerate(vectors):
        vec = np.asarray(f, dtype=complex).reshape(-1)
        norm = max(1.0, float(np.linalg.norm(vec)))
        if float(np.linalg.norm(vec - ranges[0].projector() @ vec)) > 1e-8 * norm:
            results.append(MonotoneLimit(index, "outside", math.inf, math.inf, math.inf))
            continue
        upper_limit = float(np.vdot(vec, pinv_b @ vec).real)
        last = math.nan
        if float(np.linalg.norm(vec - range_a.projector() @ vec)) <= 1e-8 * norm:
            lower_limit = float(np.vdot(vec, pinv_a @ vec).real)
            for k in range(1, steps + 1):
                L = sampler(a + (b - a) * 2.0 ** -k)
                last = float(np.vdot(vec, pinv(hermitian_part(L), 1e-12) @ vec).real)
                if abs(last - lower_limit) <= 1e-6 * max(1.0, abs(lower_limit)):
                    break
            else:
                raise NoConvergence("inverse form does not settle", vector=index, last_residual=abs(last - lower_limit))
            results.append(MonotoneLimit(index, "converges", lower_limit, upper_limit, last))
        else:
            for k in range(1, steps + 1):
                L = sampler(a + (b - a) * 2.0 ** -k)
                last = float(np.vdot(vec, pinv(hermitian_part(L), 1e-14) @ vec).real)
                if last > threshold:
                    break
            else:
                raise NoConvergence("inverse form neither settles nor diverges", vector=index, last_value=last)
            results.append(MonotoneLimit(index, "diverges", math.inf, upper_limit, last))
    return results


# ---------------------------------------------------------------------------
# form domains and transforms


def _form_value_at(family: FamilyHandle, lam: complex, u: np.ndarray, v: np.ndarray) -> complex:
    return form_value(family.relation(lam), u, v)


def form_domain_constancy(
    family: FamilyHandle,
    grid: Sequence[complex],
    tol: float = 1e-8,
    *,
    cr_step: float = CR_STEP,
    cr_tol: float = CR_TOL,
) -> CheckReport:
    """ran(I -+ Re Omega(z)) constant over the grid, and lam -> q(lam)[u, v] holomorphic."""
    if family.rs is not None:
        omega = family.rs
    elif (
        family.kind is FamilyKind.STIELTJES
        and family.construction.bounded
        and np.allclose(family.construction.Z, np.eye(family.dim))
    ):
        omega = construction_rs_handle(family.construction)
    else:
        raise HypothesisViolated("form-domain constancy needs an RS origin")
    report = CheckReport("form_domain_constancy", tol)
    sign = -1.0 if family.kind is FamilyKind.STIELTJES else 1.0
    eye = np.eye(family.dim, dtype=complex)
    used: list[complex] = []
    ranges: list[Subspace] = []
    for lam in grid:
        lam = check_lambda(lam)
        if lam.real >= 0:
            report.skip("Re lam >= 0 maps outside the unit disk", point=lam)
            continue
        z = lambda_to_z(lam)
        ranges.append(column_space(eye + sign * hermitian_part(omega(z)), tol, absolute=True))
        used.append(lam)
    for i in range(1, len(ranges)):
        equal = subspace_equal(ranges[0], ranges[i])
        report.record("range_equal", float(ranges[i].dim - ranges[0].dim), equal, point=used[i])
    if not ranges:
        return report
    basis = ranges[0].basis
    for lam in used:
        if lam.imag == 0.0:
            continue
        for a in range(basis.shape[1]):
            for b in range(basis.shape[1]):
                u, v = basis[:, a], basis[:, b]
                f_x = (_form_value_at(family, lam + cr_step, u, v) - _form_value_at(family, lam - cr_step, u, v)) / (2 * cr_step)
                f_y = (_form_value_at(family, lam + 1j * cr_step, u, v) - _form_value_at(family, lam - 1j * cr_step, u, v)) / (2 * cr_step)
                residual = abs(1j * f_x - f_y)
                report.record("cauchy_riemann", residual, residual <= cr_tol, point=lam, pair=[a, b])
    return report


def transform_equivalences(family: FamilyHandle, samples: Sequence[complex], tol: float = SECTOR_TOL) -> CheckReport:
    """-M(1/lam), -M(lam)^{-1} and lam M(lam) (or M(lam)/lam) carry the expected kinds."""
    report = CheckReport("transform_equivalences", tol)
    kind = family.kind
    mirror = FamilyKind.INVERSE_STIELTJES if kind is FamilyKind.STIELTJES else FamilyKind.STIELTJES
    for lam in samples:
        lam = check_lambda(lam)
        R = family.relation(lam)
        candidates = {
            "reciprocal": negate(family.relation(1 / lam)),
            "negative_inverse": negate(inverse(R)),
        }
        for label, relation in candidates.items():
            for name, value in kind_certificates(relation, mirror, lam).items():
                report.record(f"{label}.{name}", value, value >= -tol, point=lam)
        if lam.imag == 0.0:
            continue
        _, S = form_matrix(R)
        scaled = lam * S if kind is FamilyKind.STIELTJES else S / lam
        value = min_eig_hermitian(imaginary_part(scaled) / lam.imag)
        label = "times_lambda" if kind is FamilyKind.STIELTJES else "over_lambda"
        report.record(f"{label}.nevanlinna", value, value >= -tol * max(1.0, opnorm(scaled)), point=lam)
    return report


__all__ = [
    "FamilyKind",
    "StieltjesConstruction",
    "FamilyHandle",
    "SectorReport",
    "ClosedFormRepresentation",
    "LowerBound",
    "ResolventLimits",
    "MonotoneLimit",
    "check_lambda",
    "lambda_to_z",
    "z_to_lambda",
    "phi_branch",
    "make_construction",
    "invert_construction",
    "rs_family",
    "construction_family",
    "graph_from_omega",
    "from_rs",
    "to_rs",
    "q0",
    "r0",
    "cayley_operator",
    "q0_cayley_form",
    "r0_cayley_form",
    "neg_inv_q0",
    "q0_operator_part_form",
    "r0_operator_part_form",
    "construction_rs_handle",
    "m01",
    "m02",
    "m01_criterion",
    "m02_criterion",
    "m01_limit_minus_infinity",
    "neg_h_over_lambda",
    "form_family",
    "kind_certificates",
    "sector_check",
    "closed_form_from_cayley",
    "family_kernel",
    "kernel_check",
    "lower_bound_constant",
    "resolvent_limits",
    "monotone_form_limits",
    "form_domain_constancy",
    "transform_equivalences",
]
