"""stieltjes_lab: numerical models of Stieltjes and inverse Stieltjes families of linear relations."""

from pathlib import Path
import os
import sys
from typing import Iterable, Optional, Union

PathInput = Union[str, os.PathLike[str]]

__version__ = "0.1.0"


def _unique_paths(paths: Iterable[Path]) -> Iterable[Path]:
    """Yield each path only once while preserving the original order."""
    seen = set()
    for path in paths:
        normalized = path.resolve()
        if normalized not in seen:
            seen.add(normalized)
            yield normalized


def bootstrap(script_location: Optional[PathInput] = None, *, prepend: bool = True) -> Path:
    """Make ``import stieltjes_lab`` work when a tool is run as a plain script.

    ``python stieltjes_lab/tools/stieltjes_cli.py`` only puts the tools folder on
    ``sys.path``; this adds the repository root (and the caller's folder when
    ``script_location`` is given). Returns the repository root.
    """
    package_directory = Path(__file__).resolve().parent
    repository_root = package_directory.parent
    candidates = [repository_root]
    if script_location is not None:
        script_path = Path(script_location).resolve()
        candidates.append(script_path if script_path.is_dir() else script_path.parent)

    for candidate in _unique_paths(candidates):
        candidate_text = str(candidate)
        if candidate_text in sys.path:
            continue
        if prepend:
            sys.path.insert(0, candidate_text)
        else:
            sys.path.append(candidate_text)

    return repository_root


__all__ = ["bootstrap", "__version__"]
