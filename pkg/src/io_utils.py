"""
Deterministic, atomic writers for CSV / JSON / text artifacts.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable, Union

import pandas as pd

from src.errors import OutputError
from src.models import OutputFile

FLOAT_FORMAT = "%.9g"

PathLike = Union[str, Path]


def format_float(value: float) -> str:
    """9 significant digits, the fixed CSV/mesh number format."""
    return FLOAT_FORMAT % value


def atomic_write_text(path: PathLike, text: str) -> Path:
    """Write to a temp file next to `path`, then rename it into place."""
    target = Path(path)
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        with tempfile.NamedTemporaryFile(
            "w", delete=False, dir=target.parent, prefix=f".{target.name}.", suffix=".tmp",
            encoding="utf-8", newline="",
        ) as tmp_file:
            tmp_file.write(text)
            tmp_path = tmp_file.name
        os.replace(tmp_path, target)
    except OSError as e:
        raise OutputError(f"Could not write {target}: {e}") from e
    return target


def write_frame_csv(frame: pd.DataFrame, path: PathLike, index: bool = False) -> Path:
    text = frame.to_csv(index=index, float_format=FLOAT_FORMAT, lineterminator="\n")
    return atomic_write_text(path, text)


def write_json(payload: Any, path: PathLike) -> Path:
    text = json.dumps(payload, indent=2, sort_keys=False, default=_json_default) + "\n"
    return atomic_write_text(path, text)


def write_records(records: Iterable[dict], path: PathLike, output_format: str) -> Path:
    rows = list(records)
    if output_format == "json":
        return write_json(rows, path)
    return write_frame_csv(pd.DataFrame(rows), path)


def describe_output(path: PathLike) -> OutputFile:
    data = Path(path).read_bytes()
    return OutputFile(path=str(path), sha256=hashlib.sha256(data).hexdigest(), bytes=len(data))


def _json_default(value: Any) -> Any:
    if hasattr(value, "model_dump"):
        return value.model_dump()
    if hasattr(value, "tolist"):
        return value.tolist()
    if isinstance(value, (set, frozenset, tuple)):
        return list(value)
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def non_finite_as_text(value: Any) -> Any:
    """Replace inf / -inf / nan floats by "inf" / "-inf" / "nan" in nested dicts and lists."""
    if isinstance(value, float) and not math.isfinite(value):
        return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")
    if isinstance(value, dict):
        return {k: non_finite_as_text(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [non_finite_as_text(v) for v in value]
    return value
