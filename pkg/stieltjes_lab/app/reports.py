# stieltjes_lab/app/reports.py
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np


def plain(value: Any) -> Any:
    """Convert numpy scalars/arrays and complex numbers into JSON-friendly values."""
    if isinstance(value, np.ndarray):
        value = value.tolist()
    elif isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, complex):
        return {"re": float(value.real), "im": float(value.imag)}
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if math.isnan(value):
            return "nan"
        return value
    if isinstance(value, dict):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [plain(item) for item in value]
    return value


@dataclass
class CheckReport:
    """Outcome of a verification sweep: per-point entries plus the failing subset.

    Checks never raise on a violated inequality; they record it here and the
    caller (usually the CLI) decides the exit status.
    """

    name: str
    tol: float
    entries: list[dict[str, Any]] = field(default_factory=list)
    violations: list[dict[str, Any]] = field(default_factory=list)
    skipped: list[dict[str, Any]] = field(default_factory=list)
    notes: dict[str, Any] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.violations

    def record(self, check: str, value: float, passed: bool, *, point: Optional[complex] = None, **extra: Any) -> None:
        entry: dict[str, Any] = {"check": check, "value": value, "passed": bool(passed)}
        if point is not None:
            entry["point"] = complex(point)
        entry.update(extra)
        self.entries.append(entry)
        if not passed:
            self.violations.append(entry)

    def skip(self, reason: str, *, point: Optional[complex] = None, **extra: Any) -> None:
        entry: dict[str, Any] = {"reason": reason}
        if point is not None:
            entry["point"] = complex(point)
        entry.update(extra)
        self.skipped.append(entry)

    def merge(self, other: "CheckReport", prefix: Optional[str] = None) -> None:
        label = prefix or other.name
        for entry in other.entries:
            tagged = dict(entry, check=f"{label}.{entry['check']}")
            self.entries.append(tagged)
            if not tagged["passed"]:
                self.violations.append(tagged)
        self.skipped.extend(dict(item, source=label) for item in other.skipped)

    def extend(self, other: "CheckReport") -> None:
        """Absorb another report's entries without renaming them."""
        self.entries.extend(other.entries)
        self.violations.extend(other.violations)
        self.skipped.extend(other.skipped)

    def worst(self, check: Optional[str] = None) -> Optional[float]:
        values = [e["value"] for e in self.entries if check is None or e["check"] == check]
        return min(values) if values else None

    def to_dict(self) -> dict[str, Any]:
        return plain(
            {
                "name": self.name,
                "ok": self.ok,
                "tol": self.tol,
                "entries": self.entries,
                "violations": self.violations,
                "skipped": self.skipped,
                "notes": self.notes,
            }
        )


__all__ = ["CheckReport", "plain"]
