# stieltjes_lab/app/config_loader.py
from __future__ import annotations

import json
import logging
import os
from collections.abc import Mapping
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Optional

log = logging.getLogger(__name__)

REPO_ROOT = Path(__file__).resolve().parents[2]
CONFIG_DIR = REPO_ROOT / "config"
CONFIG_PATH = CONFIG_DIR / "appconfig.json"
CONFIG_ENV_VAR = "STIELTJES_LAB_CONFIG"

_REPO_ROOT_PREFIX = "<REPO_ROOT>/"

_DEFAULT_SAMPLES = 64
_DEFAULT_WORKERS = 4
_DEFAULT_SEED = 42
_DEFAULT_OUTPUT_DIR = "<REPO_ROOT>/var/output"


@dataclass(frozen=True)
class Tolerances:
    rank_rtol: float = 1e-10
    identity_tol: float = 1e-9
    psd_tol: float = 1e-10
    angle_tol: float = 1e-8
    cond_limit: float = 1e12
    cluster_tol: float = 1e-9
    kernel_tol: float = 1e-8

    def with_override(self, tol: Optional[float]) -> "Tolerances":
        """--tol replaces the check tolerances; rank and conditioning policies stay put."""
        if tol is None:
            return self
        return replace(self, identity_tol=tol, psd_tol=tol, angle_tol=tol, kernel_tol=tol)


@dataclass(frozen=True)
class GridSpec:
    """Two arcs |lam| = r, arg lam in [margin, 2 pi - margin], ``count`` points in total."""

    radii: tuple[float, ...] = (0.5, 2.0)
    count: int = 24
    arg_margin: float = 0.2


def _read_json_file(path: Path) -> dict:
    """Read JSON from disk, returning an empty mapping on failure."""
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except Exception:
        log.warning("Could not read %s; falling back to defaults", path, exc_info=True)
        return {}


def config_path() -> Path:
    override = os.getenv(CONFIG_ENV_VAR)
    if override and override.strip():
        return Path(override.strip()).expanduser()
    return CONFIG_PATH


def load_app_config() -> dict:
    """Return the raw JSON configuration for the application."""
    data = _read_json_file(config_path())
    return data if isinstance(data, dict) else {}


def _coerce_positive_number(value: Any, fallback: float) -> float:
    """Convert unknown input into a positive float, else the fallback."""
    try:
        numeric = float(value)
    except Exception:
        return float(fallback)
    if not numeric > 0 or numeric == float("inf"):
        return float(fallback)
    return numeric


def _coerce_positive_int(value: Any, fallback: int) -> int:
    return int(_coerce_positive_number(value, fallback))


def _section(cfg: Optional[Mapping[str, Any]], key: str) -> Mapping[str, Any]:
    if cfg is None:
        cfg = load_app_config()
    if not isinstance(cfg, Mapping):
        return {}
    raw = cfg.get(key)
    return raw if isinstance(raw, Mapping) else {}


def get_tolerances(cfg: Optional[Mapping[str, Any]] = None) -> Tolerances:
    """Tolerance policy from the "tolerances" section, field by field with defaults."""
    section = _section(cfg, "tolerances")
    defaults = Tolerances()
    values = {
        name: _coerce_positive_number(section.get(name), getattr(defaults, name))
        for name in Tolerances.__dataclass_fields__
    }
    return Tolerances(**values)


def get_lambda_grid_spec(cfg: Optional[Mapping[str, Any]] = None) -> GridSpec:
    section = _section(cfg, "lambda_grid")
    defaults = GridSpec()
    radii_raw = section.get("radii")
    radii: tuple[float, ...] = defaults.radii
    if isinstance(radii_raw, list) and radii_raw:
        parsed = tuple(_coerce_positive_number(r, 0.0) for r in radii_raw)
        if all(r > 0 for r in parsed):
            radii = parsed
        else:
            log.warning("Ignoring invalid lambda_grid.radii %r", radii_raw)
    count = _coerce_positive_int(section.get("count"), defaults.count)
    margin = _coerce_positive_number(section.get("arg_margin"), defaults.arg_margin)
    return GridSpec(radii, count, margin)


def _top_level(cfg: Optional[Mapping[str, Any]], key: str) -> Any:
    if cfg is None:
        cfg = load_app_config()
    if isinstance(cfg, Mapping):
        return cfg.get(key)
    return None


def get_sample_count(cfg: Optional[Mapping[str, Any]] = None) -> int:
    return _coerce_positive_int(_top_level(cfg, "samples"), _DEFAULT_SAMPLES)


def get_worker_count(cfg: Optional[Mapping[str, Any]] = None) -> int:
    return _coerce_positive_int(_top_level(cfg, "workers"), _DEFAULT_WORKERS)


def get_default_seed(cfg: Optional[Mapping[str, Any]] = None) -> int:
    raw = _top_level(cfg, "default_seed")
    try:
        seed = int(raw)
    except Exception:
        return _DEFAULT_SEED
    return seed if seed >= 0 else _DEFAULT_SEED


def _resolve_config_path(raw_value: Any, setting_name: str) -> Optional[Path]:
    """Convert configuration entries into absolute filesystem paths when possible."""
    if raw_value is None:
        return None
    text_value = str(raw_value).strip()
    if not text_value:
        return None
    if text_value.startswith(_REPO_ROOT_PREFIX):
        return (REPO_ROOT / text_value[len(_REPO_ROOT_PREFIX):]).resolve()
    try:
        candidate = Path(text_value).expanduser()
    except Exception:
        log.warning("%s could not be interpreted as a filesystem path; ignoring it.", setting_name, exc_info=True)
        return None
    if not candidate.is_absolute():
        candidate = (CONFIG_DIR / candidate).resolve()
    return candidate


def get_output_dir(cfg: Optional[Mapping[str, Any]] = None) -> Path:
    """Where generated instances and reports go when --out names no directory."""
    resolved = _resolve_config_path(_top_level(cfg, "output_dir"), "output_dir")
    if resolved is None:
        resolved = _resolve_config_path(_DEFAULT_OUTPUT_DIR, "output_dir")
    assert resolved is not None
    return resolved


__all__ = [
    "REPO_ROOT",
    "CONFIG_DIR",
    "CONFIG_PATH",
    "CONFIG_ENV_VAR",
    "Tolerances",
    "GridSpec",
    "config_path",
    "load_app_config",
    "get_tolerances",
    "get_lambda_grid_spec",
    "get_sample_count",
    "get_worker_count",
    "get_default_seed",
    "get_output_dir",
]
