"""Seeded random instances and lambda grids.

Every generator takes a ``numpy.random.Generator`` so a whole run is reproducible
from one seed; ``generate_instances`` is what ``stieltjes_cli gen`` writes.
"""
from __future__ import annotations

import cmath
import logging
import math
from typing import Any, Optional, Sequence

import numpy as np

from stieltjes_lab.app.config_loader import GridSpec
from stieltjes_lab.app.contractions import (
    BlockContraction,
    SelfadjointBlockSystem,
    build_block_contraction,
    selfadjoint_block,
)
from stieltjes_lab.app.errors import BadPoint, GridDegenerate, InputError
from stieltjes_lab.app.families import StieltjesConstruction, check_lambda, construction_family, make_construction, rs_family
from stieltjes_lab.app.linrel import LinearRelation, from_pairs
from stieltjes_lab.app.numerics import hermitian_part, opnorm
from stieltjes_lab.app.rs_functions import PassiveSelfadjointSystem, system_from_block, system_handle
from stieltjes_lab.app.serialization import decode_complex, encode_family

log = logging.getLogger(__name__)

MUL_PROBABILITY = 0.3
MAX_NORM_RANGE = (0.5, 0.95)
GRID_MARGIN = 1e-3
REP_GRID_COUNT = 20


def make_rng(seed: Optional[int]) -> np.random.Generator:
    return np.random.default_rng(seed)


def random_complex(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / math.sqrt(2)


def random_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    Q, R = np.linalg.qr(random_complex(rng, n, n))
    phases = np.diag(R) / np.where(np.abs(np.diag(R)) > 0, np.abs(np.diag(R)), 1.0)
    return Q * phases


def random_psd(rng: np.random.Generator, n: int, rank: Optional[int] = None) -> np.ndarray:
    G = random_complex(rng, n, n if rank is None else rank)
    return hermitian_part(G @ G.conj().T / max(1, n))


def random_contraction(rng: np.random.Generator, rows: int, cols: int, max_norm: Optional[float] = None) -> np.ndarray:
    A = random_complex(rng, rows, cols)
    target = rng.uniform(*MAX_NORM_RANGE) if max_norm is None else max_norm
    norm = opnorm(A)
    return A * (target / norm) if norm > 0 else A


def random_hermitian_contraction(rng: np.random.Generator, n: int, max_norm: Optional[float] = None) -> np.ndarray:
    H = hermitian_part(random_complex(rng, n, n))
    target = rng.uniform(*MAX_NORM_RANGE) if max_norm is None else max_norm
    norm = opnorm(H)
    return hermitian_part(H * (target / norm)) if norm > 0 else H


def random_nonnegative_relation(
    rng: np.random.Generator, n: int, mul_probability: float = MUL_PROBABILITY
) -> LinearRelation:
    """PSD operator part on a random subspace plus, with ``mul_probability``, a multivalued part."""
    mul_dim = int(rng.integers(1, n + 1)) if n > 0 and rng.uniform() < mul_probability else 0
    U = random_unitary(rng, n)
    W, M = U[:, : n - mul_dim], U[:, n - mul_dim :]
    H = random_psd(rng, n - mul_dim)
    top = np.hstack([W, np.zeros((n, mul_dim), dtype=complex)])
    bottom = np.hstack([W @ H, M])
    return from_pairs(top, bottom)


def random_system(rng: np.random.Generator, dim_m: int, dim_k: int) -> PassiveSelfadjointSystem:
    return system_from_block(random_hermitian_contraction(rng, dim_m + dim_k), dim_m)


def random_selfadjoint_block(rng: np.random.Generator, dim_m: int, dim_k: int) -> SelfadjointBlockSystem:
    D = random_hermitian_contraction(rng, dim_m)
    N = random_contraction(rng, dim_k, dim_m)
    X = random_hermitian_contraction(rng, dim_k)
    return selfadjoint_block(D, N, X)


def random_block_contraction(rng: np.random.Generator, dim_m: int, dim_k: int) -> BlockContraction:
    D = random_contraction(rng, dim_m, dim_m)
    N = random_contraction(rng, dim_k, dim_m)
    G = random_contraction(rng, dim_m, dim_k)
    L = random_contraction(rng, dim_k, dim_k)
    return build_block_contraction(D, N, G, L)


def random_construction(
    rng: np.random.Generator, dim_m: int, dim_k: int, *, random_z: bool = False
) -> StieltjesConstruction:
    A_hat = random_nonnegative_relation(rng, dim_k)
    V = random_contraction(rng, dim_k, dim_m)
    Z = None
    if random_z:
        Z = np.eye(dim_m, dtype=complex) + 0.5 * random_contraction(rng, dim_m, dim_m)
    return make_construction(A_hat, V, Z)


def generate_instances(seed: int, dim_m: int, dim_k: int) -> dict[str, dict[str, Any]]:
    """Family JSON for a seeded system and a seeded construction."""
    if dim_m < 1 or dim_k < 1:
        raise InputError("dimensions must be at least 1", dim_m=dim_m, dim_k=dim_k)
    rng = make_rng(seed)
    system = random_system(rng, dim_m, dim_k)
    construction = random_construction(rng, dim_m, dim_k)
    log.info("generated instances seed=%s dims=(%d, %d)", seed, dim_m, dim_k)
    return {
        "system": encode_family(rs_family(system_handle(system))),
        "construction": encode_family(construction_family(construction)),
    }


# ---------------------------------------------------------------------------
# grids


def distance_to_cut(lam: complex) -> float:
    """Distance from lam to [0, inf)."""
    return abs(lam.imag) if lam.real >= 0 else abs(lam)


def arc_grid(radii: Sequence[float], count: int, arg_margin: float) -> list[complex]:
    """``count`` points on the arcs |lam| = r, arg lam in [margin, 2 pi - margin], split evenly."""
    if not radii or count < 1:
        raise GridDegenerate("grid needs at least one radius and one point", radii=list(radii), count=count)
    if not 0 < arg_margin < math.pi:
        raise GridDegenerate("arg margin must lie in (0, pi)", arg_margin=arg_margin)
    if min(radii) * math.sin(min(arg_margin, math.pi / 2)) < GRID_MARGIN:
        raise GridDegenerate("grid comes too close to [0, inf)", radii=list(radii), arg_margin=arg_margin)
    base, extra = divmod(count, len(radii))
    points: list[complex] = []
    for i, r in enumerate(radii):
        n = base + (1 if i < extra else 0)
        if n == 0:
            continue
        angles = [math.pi] if n == 1 else np.linspace(arg_margin, 2 * math.pi - arg_margin, n)
        points.extend(complex(cmath.rect(r, float(a))) for a in angles)
    return points


def default_grid(spec: Optional[GridSpec] = None, count: Optional[int] = None) -> list[complex]:
    spec = spec or GridSpec()
    return arc_grid(spec.radii, count or spec.count, spec.arg_margin)


def validate_grid(points: Sequence[complex]) -> list[complex]:
    out = []
    for lam in points:
        lam = check_lambda(lam)
        if distance_to_cut(lam) < GRID_MARGIN:
            raise BadPoint("grid point too close to [0, inf)", point=lam, margin=GRID_MARGIN)
        out.append(lam)
    if not out:
        raise GridDegenerate("empty grid")
    return out


def parse_grid(text: Optional[str], spec: Optional[GridSpec] = None) -> list[complex]:
    """'default' | 'arcs:R1,R2,...:COUNT[:MARGIN]' | 'points:z1,z2,...' (z like -1+2j or -1+2i)."""
    spec = spec or GridSpec()
    if text is None or text.strip() in ("", "default"):
        return validate_grid(default_grid(spec))
    kind, _, rest = text.strip().partition(":")
    if kind == "arcs":
        fields = rest.split(":")
        if len(fields) not in (2, 3):
            raise InputError("arcs grid is arcs:R1,R2,...:COUNT[:MARGIN]", grid=text)
        try:
            radii = [float(r) for r in fields[0].split(",") if r.strip()]
            count = int(fields[1])
            margin = float(fields[2]) if len(fields) == 3 else spec.arg_margin
        except ValueError:
            raise InputError("cannot read arcs grid", grid=text) from None
        if any(r <= 0 for r in radii):
            raise GridDegenerate("radii must be positive", radii=radii)
        return validate_grid(arc_grid(radii, count, margin))
    if kind == "points":
        tokens = [t for t in rest.split(",") if t.strip()]
        return validate_grid([decode_complex(t.strip(), "grid") for t in tokens])
    raise InputError(f"unknown grid spec {text!r}", grid=text)


__all__ = [
    "MUL_PROBABILITY",
    "REP_GRID_COUNT",
    "make_rng",
    "random_complex",
    "random_unitary",
    "random_psd",
    "random_contraction",
    "random_hermitian_contraction",
    "random_nonnegative_relation",
    "random_system",
    "random_selfadjoint_block",
    "random_block_contraction",
    "random_construction",
    "generate_instances",
    "distance_to_cut",
    "arc_grid",
    "default_grid",
    "validate_grid",
    "parse_grid",
]
