"""
Error hierarchy shared by the library and the CLI.

Each class carries the process exit code the CLI reports for it.
"""

from __future__ import annotations

from typing import Dict, Optional


class CgsError(Exception):
    """Base class for every failure the toolkit raises on purpose."""

    exit_code: int = 1


class ConfigError(CgsError, ValueError):
    exit_code = 2


class IngestError(CgsError, ValueError):
    """A series file could not be read or parsed."""

    exit_code = 3

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        self.path = path
        self.line = line
        location = ""
        if path is not None:
            location = f"{path}"
            if line is not None:
                location += f":{line}"
            location += ": "
        super().__init__(f"{location}{message}")


class EstimationError(CgsError, ValueError):
    """Lag or dimension estimation failed, possibly for several group members."""

    exit_code = 4

    def __init__(self, message: str, failures: Optional[Dict[str, str]] = None):
        self.failures = dict(failures or {})
        if self.failures:
            detail = "; ".join(f"{label}: {reason}" for label, reason in self.failures.items())
            message = f"{message} ({detail})"
        super().__init__(message)


class GeometryError(CgsError, ValueError):
    """Degenerate point cloud or invalid alpha-shape request."""

    exit_code = 5


class StatsError(CgsError, ValueError):
    exit_code = 6


class OutputError(CgsError, OSError):
    exit_code = 7


EXIT_CODES = {
    "ok": 0,
    "unexpected": 1,
    "config": ConfigError.exit_code,
    "ingest": IngestError.exit_code,
    "estimation": EstimationError.exit_code,
    "geometry": GeometryError.exit_code,
    "stats": StatsError.exit_code,
    "output": OutputError.exit_code,
}
