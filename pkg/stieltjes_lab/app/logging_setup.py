# stieltjes_lab/app/logging_setup.py
from __future__ import annotations

import logging
import os
import sys
from datetime import datetime
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Optional

from .config_loader import REPO_ROOT

LOG_FORMAT = "%(asctime)s %(levelname)s [%(process)d] %(name)s: %(message)s"
LOG_DATEFMT = "%Y-%m-%d %H:%M:%S"


class DateSizeRotatingFileHandler(RotatingFileHandler):
    """Size-based rotation that opens a fresh timestamped file instead of numbered backups."""

    def __init__(self, directory: Path, prefix: str = "stieltjes", max_bytes: int = 1_000_000) -> None:
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.prefix = prefix
        super().__init__(self._new_filename(), maxBytes=max_bytes, backupCount=0, encoding="utf-8", errors="replace")

    def _new_filename(self) -> str:
        # milliseconds keep two rollovers within one second apart
        stamp = datetime.now().strftime("%Y%m%d-%H%M%S-%f")[:-3]
        return str(self.directory / f"{self.prefix}-{stamp}.log")

    def doRollover(self) -> None:
        if self.stream:
            self.stream.close()
            self.stream = None
        self.baseFilename = os.fspath(self._new_filename())
        self.mode = "a"
        self.stream = self._open()


def _coerce_level(level: Optional[str | int]) -> int:
    if isinstance(level, int):
        return level
    if isinstance(level, str) and level.strip():
        return getattr(logging, level.strip().upper(), logging.INFO)
    env_level = os.getenv("LOG_LEVEL", "INFO")
    return getattr(logging, env_level.upper(), logging.INFO)


def start_log(
    *,
    app_name: str = "stieltjes",
    log_dir: Optional[str | Path] = None,
    level: Optional[str | int] = None,
    to_console: bool = True,
    to_file: bool = False,
    max_bytes: int = 1_000_000,
) -> logging.Logger:
    """Configure the root logger once for a CLI run.

    Console output goes to stderr so stdout stays clean for JSON/CSV results.
    A rotating file under LOG_DIR (default <repo>/var/logs) is added when
    ``to_file`` is set or LOG_DIR is present in the environment.
    """
    root = logging.getLogger()
    root.setLevel(_coerce_level(level))

    for handler in list(root.handlers):
        root.removeHandler(handler)
        handler.close()

    formatter = logging.Formatter(fmt=LOG_FORMAT, datefmt=LOG_DATEFMT)

    if log_dir is None:
        log_dir = os.getenv("LOG_DIR") or None
        to_file = to_file or log_dir is not None
    if to_file:
        directory = Path(log_dir) if log_dir is not None else REPO_ROOT / "var" / "logs"
        file_handler = DateSizeRotatingFileHandler(directory, prefix=app_name, max_bytes=max_bytes)
        file_handler.setFormatter(formatter)
        root.addHandler(file_handler)

    if to_console:
        console = logging.StreamHandler(sys.stderr)
        console.setFormatter(formatter)
        console.setLevel(root.level)
        root.addHandler(console)

    if not root.handlers:
        root.addHandler(logging.NullHandler())

    root.info("Logging started app=%s level=%s", app_name, logging.getLevelName(root.level))
    return root


__all__ = ["DateSizeRotatingFileHandler", "start_log", "LOG_FORMAT", "LOG_DATEFMT"]
