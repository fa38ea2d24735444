# stieltjes_lab/app/serialization.py
"""JSON codec for instances, families, representations and reports.

Complex entries travel as {"re": x, "im": y}; matrices as row-major nested lists.
Decoders raise ParseError naming the key that could not be read.
"""
from __future__ import annotations

import csv
import io
import json
import logging
from collections.abc import Mapping
from pathlib import Path
from typing import Any, Iterable, Optional, TextIO

import numpy as np

from .errors import ParseError, StieltjesLabError
from .families import (
    FamilyHandle,
    FamilyKind,
    StieltjesConstruction,
    construction_family,
    make_construction,
    neg_h_over_lambda,
    rs_family,
)
from .integral_rep import Atom, IntegralRepresentation
from .linrel import LinearRelation
from .numerics import Subspace, orthonormal_column_basis
from .reports import CheckReport, plain
from .rs_functions import PassiveSelfadjointSystem, RSFunctionHandle, rule_handle, system_from_block, system_handle

log = logging.getLogger(__name__)

ORTHONORMAL_TOL = 1e-8


# ---------------------------------------------------------------------------
# scalars and matrices


def encode_complex(value: complex) -> dict[str, float]:
    value = complex(value)
    return {"re": float(value.real), "im": float(value.imag)}


def decode_complex(raw: Any, key: str = "value") -> complex:
    if isinstance(raw, Mapping):
        try:
            return complex(float(raw["re"]), float(raw.get("im", 0.0)))
        except (KeyError, TypeError, ValueError):
            raise ParseError(f"{key}: expected {{'re', 'im'}}", key=key) from None
    if isinstance(raw, (int, float)) and not isinstance(raw, bool):
        return complex(raw)
    if isinstance(raw, str):
        try:
            return complex(raw.replace(" ", "").replace("i", "j"))
        except ValueError:
            raise ParseError(f"{key}: cannot read {raw!r} as a complex number", key=key) from None
    raise ParseError(f"{key}: expected a complex number", key=key)


def encode_matrix(A: np.ndarray) -> list[list[dict[str, float]]]:
    arr = np.asarray(A, dtype=complex)
    return [[encode_complex(entry) for entry in row] for row in arr]


def decode_matrix(raw: Any, key: str = "matrix", *, cols: Optional[int] = None) -> np.ndarray:
    if not isinstance(raw, list):
        raise ParseError(f"{key}: expected a nested list", key=key)
    if not raw:
        return np.zeros((0, cols or 0), dtype=complex)
    if not all(isinstance(row, list) for row in raw):
        raise ParseError(f"{key}: every row must be a list", key=key)
    width = len(raw[0])
    if any(len(row) != width for row in raw):
        raise ParseError(f"{key}: ragged rows", key=key, widths=sorted({len(row) for row in raw}))
    out = np.zeros((len(raw), width), dtype=complex)
    for i, row in enumerate(raw):
        for j, entry in enumerate(row):
            out[i, j] = decode_complex(entry, f"{key}[{i}][{j}]")
    if not np.all(np.isfinite(out)):
        raise ParseError(f"{key}: non-finite entries", key=key)
    return out


def _field(data: Any, name: str, context: str) -> Any:
    if not isinstance(data, Mapping):
        raise ParseError(f"{context}: expected an object", key=context)
    if name not in data:
        raise ParseError(f"{context}: missing key {name!r}", key=f"{context}.{name}")
    return data[name]


def _int_field(data: Any, name: str, context: str) -> int:
    raw = _field(data, name, context)
    if isinstance(raw, bool) or not isinstance(raw, int) or raw < 0:
        raise ParseError(f"{context}.{name}: expected a nonnegative integer", key=f"{context}.{name}")
    return raw


# ---------------------------------------------------------------------------
# subspaces and relations


def encode_subspace(S: Subspace) -> dict[str, Any]:
    return {"ambient_dim": S.ambient_dim, "basis": encode_matrix(S.basis)}


def decode_subspace(raw: Any, key: str = "subspace") -> Subspace:
    n = _int_field(raw, "ambient_dim", key)
    basis = decode_matrix(_field(raw, "basis", key), f"{key}.basis")
    if basis.size == 0:
        return Subspace.zero(n)
    if basis.shape[0] != n:
        raise ParseError(f"{key}.basis: expected {n} rows", key=f"{key}.basis", rows=basis.shape[0])
    gram = basis.conj().T @ basis
    if np.linalg.norm(gram - np.eye(basis.shape[1])) > ORTHONORMAL_TOL:
        log.debug("%s: basis not orthonormal, re-orthonormalizing", key)
        return orthonormal_column_basis(basis)
    return Subspace(n, basis)


def encode_relation(R: LinearRelation) -> dict[str, Any]:
    return {"space_dim": R.space_dim, "graph": encode_subspace(R.graph)}


def decode_relation(raw: Any, key: str = "relation") -> LinearRelation:
    n = _int_field(raw, "space_dim", key)
    graph = decode_subspace(_field(raw, "graph", key), f"{key}.graph")
    if graph.ambient_dim != 2 * n:
        raise ParseError(f"{key}.graph: ambient_dim must be 2*space_dim", key=f"{key}.graph", space_dim=n)
    return LinearRelation(n, graph)


# ---------------------------------------------------------------------------
# systems, constructions, families


def encode_system(sys: PassiveSelfadjointSystem) -> dict[str, Any]:
    return {"dim_m": sys.dim_m, "dim_k": sys.dim_k, "T": encode_matrix(sys.T)}


def decode_system(raw: Any, key: str = "system") -> PassiveSelfadjointSystem:
    m = _int_field(raw, "dim_m", key)
    k = _int_field(raw, "dim_k", key)
    T = decode_matrix(_field(raw, "T", key), f"{key}.T")
    if T.shape != (m + k, m + k):
        raise ParseError(f"{key}.T: expected shape {(m + k, m + k)}", key=f"{key}.T", shape=list(T.shape))
    return system_from_block(T, m)


def encode_construction(cons: StieltjesConstruction) -> dict[str, Any]:
    return {
        "A_hat": encode_relation(cons.A_hat),
        "V": encode_matrix(cons.V),
        "Z": encode_matrix(cons.Z),
        "dom_Z": encode_subspace(cons.dom_Z),
    }


def decode_construction(raw: Any, key: str = "construction") -> StieltjesConstruction:
    A_hat = decode_relation(_field(raw, "A_hat", key), f"{key}.A_hat")
    V = decode_matrix(_field(raw, "V", key), f"{key}.V")
    Z = decode_matrix(raw["Z"], f"{key}.Z") if raw.get("Z") is not None else None
    dom_Z = decode_subspace(raw["dom_Z"], f"{key}.dom_Z") if raw.get("dom_Z") is not None else None
    return make_construction(A_hat, V, Z, dom_Z)


def _encode_param(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return encode_matrix(value)
    if isinstance(value, complex):
        return encode_complex(value)
    return plain(value)


def encode_rule(rule: Mapping[str, Any]) -> dict[str, Any]:
    return {name: _encode_param(value) for name, value in rule.items()}


def decode_rule_family(raw: Any, kind: FamilyKind, key: str = "rule") -> FamilyHandle:
    name = _field(raw, "name", key)
    if name == "linear":
        c = decode_complex(raw.get("c", 1.0), f"{key}.c")
        return rs_family(rule_handle("linear", c=c, dim=_int_field(raw, "dim", key)), kind)
    if name == "constant":
        D = decode_matrix(_field(raw, "D", key), f"{key}.D")
        return rs_family(rule_handle("constant", D=D), kind)
    if name == "neg_h_over_lambda":
        if kind is not FamilyKind.STIELTJES:
            raise ParseError("neg_h_over_lambda is a Stieltjes family", key=f"{key}.name")
        return neg_h_over_lambda(decode_matrix(_field(raw, "H", key), f"{key}.H"))
    raise ParseError(f"{key}.name: unknown rule {name!r}", key=f"{key}.name")


def encode_rs_handle(omega: RSFunctionHandle) -> dict[str, Any]:
    if omega.system is not None:
        return {"system": encode_system(omega.system)}
    assert omega.rule is not None
    return {"rule": encode_rule(omega.rule)}


def encode_family(family: FamilyHandle) -> dict[str, Any]:
    if family.rule is not None:
        origin = {"rule": encode_rule(family.rule)}
    elif family.rs is not None:
        origin = encode_rs_handle(family.rs)
    else:
        origin = {"construction": encode_construction(family.construction)}
    return {"kind": family.kind.value, "origin": origin}


def _decode_origin(origin: Any, kind: FamilyKind, key: str) -> FamilyHandle:
    if not isinstance(origin, Mapping) or len(origin) != 1:
        raise ParseError(f"{key}: expected exactly one of system/construction/rule", key=key)
    if "system" in origin:
        return rs_family(system_handle(decode_system(origin["system"], f"{key}.system")), kind)
    if "construction" in origin:
        return construction_family(decode_construction(origin["construction"], f"{key}.construction"), kind)
    if "rule" in origin:
        return decode_rule_family(origin["rule"], kind, f"{key}.rule")
    raise ParseError(f"{key}: unknown origin {next(iter(origin))!r}", key=key)


def _decode_kind(raw: Any, key: str) -> FamilyKind:
    try:
        return FamilyKind.parse(raw)
    except StieltjesLabError:
        raise ParseError(f"{key}: unknown family kind {raw!r}", key=key) from None


def decode_family(raw: Any, key: str = "family") -> FamilyHandle:
    kind = _decode_kind(_field(raw, "kind", key), f"{key}.kind")
    return _decode_origin(_field(raw, "origin", key), kind, f"{key}.origin")


def decode_instance(raw: Any, kind: Any = None) -> FamilyHandle:
    """Any instance file as a family: a family object, or a bare system / rule / construction.

    ``kind`` overrides the kind stored in the file; bare origins default to Stieltjes.
    """
    if not isinstance(raw, Mapping):
        raise ParseError("instance: expected a JSON object", key="instance")
    override = _decode_kind(kind, "kind") if kind is not None else None
    if "origin" in raw:
        family = decode_family(raw, "instance")
        if override is None or override is family.kind:
            return family
        return _decode_origin(raw["origin"], override, "instance.origin")
    stored = _decode_kind(raw["kind"], "instance.kind") if "kind" in raw else FamilyKind.STIELTJES
    chosen = override or stored
    if "T" in raw:
        return rs_family(system_handle(decode_system(raw, "instance")), chosen)
    if "rule" in raw:
        return decode_rule_family(raw["rule"], chosen, "instance.rule")
    if "A_hat" in raw:
        return construction_family(decode_construction(raw, "instance"), chosen)
    raise ParseError("instance: expected a family, system, rule or construction", key="instance", keys=sorted(raw))


# ---------------------------------------------------------------------------
# representations and reports


def encode_representation(rep: IntegralRepresentation) -> dict[str, Any]:
    return {
        "kind": rep.kind.value,
        "gamma": encode_matrix(rep.gamma),
        "pi": encode_matrix(rep.pi) if rep.pi is not None else None,
        "atoms": [{"t": float(atom.t), "weight": encode_matrix(atom.weight)} for atom in rep.atoms],
        "notes": plain(rep.notes),
    }


def decode_representation(raw: Any, key: str = "representation") -> IntegralRepresentation:
    kind = _decode_kind(_field(raw, "kind", key), f"{key}.kind")
    gamma = decode_matrix(_field(raw, "gamma", key), f"{key}.gamma")
    pi_raw = raw.get("pi")
    pi = decode_matrix(pi_raw, f"{key}.pi") if pi_raw is not None else None
    atoms_raw = _field(raw, "atoms", key)
    if not isinstance(atoms_raw, list):
        raise ParseError(f"{key}.atoms: expected a list", key=f"{key}.atoms")
    atoms = []
    for i, item in enumerate(atoms_raw):
        context = f"{key}.atoms[{i}]"
        t = _field(item, "t", context)
        if isinstance(t, bool) or not isinstance(t, (int, float)):
            raise ParseError(f"{context}.t: expected a real number", key=f"{context}.t")
        atoms.append(Atom(float(t), decode_matrix(_field(item, "weight", context), f"{context}.weight")))
    return IntegralRepresentation(kind, gamma, tuple(atoms), pi, dict(raw.get("notes") or {}))


def encode_report(report: CheckReport) -> dict[str, Any]:
    return report.to_dict()


# ---------------------------------------------------------------------------
# files


def dumps_json(data: Any) -> str:
    """Canonical text: sorted keys, indent 2, trailing newline."""
    return json.dumps(plain(data), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def dump_json_atomic(path: Path, data: Any) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(dumps_json(data), encoding="utf-8")
    tmp.replace(path)


def load_json(path: Path) -> Any:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ParseError(f"{path} does not exist", key="path", path=str(path)) from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc.msg})", key="json", line=exc.lineno, column=exc.colno) from None


def flatten_row(value: Any, prefix: str = "") -> dict[str, Any]:
    """Flatten nested values into CSV columns; complex entries split into .re/.im pairs."""
    out: dict[str, Any] = {}

    def put(name: str, item: Any) -> None:
        if isinstance(item, np.ndarray):
            item = item.tolist()
        if isinstance(item, np.generic):
            item = item.item()
        if isinstance(item, complex):
            out[f"{name}.re"] = item.real
            out[f"{name}.im"] = item.imag
        elif isinstance(item, Mapping):
            if set(item) == {"re", "im"}:
                out[f"{name}.re"] = item["re"]
                out[f"{name}.im"] = item["im"]
                return
            for key, sub in item.items():
                put(f"{name}.{key}" if name else str(key), sub)
        elif isinstance(item, (list, tuple)):
            for i, sub in enumerate(item):
                if isinstance(sub, (list, tuple)):
                    for j, entry in enumerate(sub):
                        put(f"{name}[{i},{j}]", entry)
                else:
                    put(f"{name}[{i}]", sub)
        else:
            out[name] = plain(item)

    put(prefix, value)
    return out


def write_csv(rows: Iterable[Mapping[str, Any]], stream: TextIO) -> None:
    flat = [flatten_row(row) for row in rows]
    columns: list[str] = []
    seen: set[str] = set()
    for row in flat:
        for name in row:
            if name not in seen:
                seen.add(name)
                columns.append(name)
    writer = csv.DictWriter(stream, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in flat:
        writer.writerow(row)


def dumps_csv(rows: Iterable[Mapping[str, Any]]) -> str:
    buffer = io.StringIO()
    write_csv(rows, buffer)
    return buffer.getvalue()


def dump_csv_atomic(path: Path, rows: Iterable[Mapping[str, Any]]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(dumps_csv(rows), encoding="utf-8")
    tmp.replace(path)


__all__ = [
    "encode_complex",
    "decode_complex",
    "encode_matrix",
    "decode_matrix",
    "encode_subspace",
    "decode_subspace",
    "encode_relation",
    "decode_relation",
    "encode_system",
    "decode_system",
    "encode_construction",
    "decode_construction",
    "encode_rule",
    "encode_rs_handle",
    "encode_family",
    "decode_family",
    "decode_instance",
    "encode_representation",
    "decode_representation",
    "encode_report",
    "dumps_json",
    "dump_json_atomic",
    "load_json",
    "flatten_row",
    "write_csv",
    "dumps_csv",
    "dump_csv_atomic",
]
