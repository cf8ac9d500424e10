"""
Series ingestion: single-channel ascii files (EDATA layout), multi-channel
CSV files and directory-per-group cohorts, plus the descriptive summary used
to tabulate CGS volumes per group.
"""

from __future__ import annotations

import logging
import math
import re
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, ValidationError, field_validator, model_validator

from src.errors import IngestError
from src.io_utils import atomic_write_text
from src.models import SummaryStats

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

TIME_COLUMNS = {"t", "time"}
FORMAT_SUFFIXES = {"ascii": ".txt", "csv": ".csv"}
DECIMAL = re.compile(r"[+-]?(?:[0-9]+(?:\.[0-9]*)?|\.[0-9]+)(?:[eE][+-]?[0-9]+)?")


class TimeSeries(BaseModel):
    """One scalar channel. `samples` is stored as a read-only float64 array."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    samples: np.ndarray
    dt: float
    label: str
    group: Optional[str] = None

    @field_validator("samples", mode="before")
    @classmethod
    def _as_array(cls, value) -> np.ndarray:
        arr = np.array(value, dtype=np.float64)
        if arr.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if arr.size < 2:
            raise ValueError("a series needs at least 2 samples")
        if not np.all(np.isfinite(arr)):
            raise ValueError("samples must be finite")
        arr.setflags(write=False)
        return arr

    @field_validator("dt")
    @classmethod
    def _positive_dt(cls, value: float) -> float:
        if not (value > 0 and math.isfinite(value)):
            raise ValueError("dt must be positive")
        return float(value)

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def fs(self) -> float:
        return 1.0 / self.dt

    def with_group(self, group: str) -> "TimeSeries":
        return self.model_copy(update={"group": group})

    @classmethod
    def from_samples(cls, samples: Sequence[float], fs: float, label: str = "series",
                     group: Optional[str] = None) -> "TimeSeries":
        if not fs > 0:
            raise ValueError("fs must be positive")
        return cls(samples=samples, dt=1.0 / fs, label=label, group=group)


class SeriesGroup(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    name: str
    members: Tuple[TimeSeries, ...]

    @model_validator(mode="after")
    def _shared_dt(self) -> "SeriesGroup":
        if not self.members:
            raise ValueError("a group needs at least one member")
        dts = {m.dt for m in self.members}
        if len(dts) != 1:
            raise ValueError(f"group {self.name!r} mixes sampling intervals {sorted(dts)}")
        return self

    def __len__(self) -> int:
        return len(self.members)

    @property
    def dt(self) -> float:
        return self.members[0].dt

    @property
    def labels(self) -> List[str]:
        return [m.label for m in self.members]


def load_series(path: PathLike, format: str = "ascii", fs: float = 173.61,
                channel: Optional[str] = None) -> TimeSeries:
    """
    Load one series. For CSV input the first channel is used unless `channel`
    names a column.
    """
    if format == "ascii":
        return _load_ascii(Path(path), fs)
    if format == "csv":
        channels = load_channels(path, fs)
        if channel is None:
            if len(channels) > 1:
                logger.warning("%s has %d channels, using the first", path, len(channels))
            return channels[0]
        for series in channels:
            if series.label.split(":", 1)[-1] == channel:
                return series
        raise IngestError(f"no channel named {channel!r}", str(path))
    raise IngestError(f"unsupported format {format!r}; use 'ascii' or 'csv'", str(path))


def _check_fs(fs: float, path: Path) -> None:
    if not (fs > 0 and math.isfinite(fs)):
        raise IngestError(f"sampling rate must be positive, got {fs}", str(path))


def _read_text(path: Path) -> str:
    if not path.exists():
        raise IngestError("file not found", str(path))
    try:
        return path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise IngestError(f"could not read file: {e}", str(path)) from e


def _load_ascii(path: Path, fs: float) -> TimeSeries:
    _check_fs(fs, path)
    text = _read_text(path)

    values: List[float] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        token = raw.strip()
        if not token:
            continue
        if len(token.split()) != 1:
            raise IngestError(f"expected one value per line, got {token!r}", str(path), line_no)
        if not DECIMAL.fullmatch(token):
            raise IngestError(f"non-numeric token {token!r}", str(path), line_no)
        value = float(token)
        if not math.isfinite(value):
            raise IngestError(f"value {token!r} overflows a float", str(path), line_no)
        values.append(value)

    if not values:
        raise IngestError("empty file", str(path))
    try:
        return TimeSeries(samples=values, dt=1.0 / fs, label=path.stem)
    except ValidationError as e:
        raise IngestError(_first_error(e), str(path)) from e


def _is_number(token: str) -> bool:
    return DECIMAL.fullmatch(token) is not None


def load_channels(path: PathLike, fs: float = 173.61) -> List[TimeSeries]:
    """
    Load every channel of a comma-separated file. A header row is detected
    when its first line is not numeric; a leading `t`/`time` column is treated
    as an index and dropped.
    """
    path = Path(path)
    _check_fs(fs, path)
    text = _read_text(path)
    numbered = [(i, ln) for i, ln in enumerate(text.splitlines(), start=1) if ln.strip()]
    if not numbered:
        raise IngestError("empty file", str(path))
    lines = [ln for _, ln in numbered]

    has_header = not all(_is_number(tok.strip()) for tok in lines[0].split(","))
    try:
        frame = pd.read_csv(path, header=0 if has_header else None, dtype=str,
                            skip_blank_lines=True, skipinitialspace=True)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise IngestError(f"could not parse CSV: {e}", str(path)) from e

    if has_header:
        frame.columns = [str(c).strip() for c in frame.columns]
        if len(frame.columns) > 1 and frame.columns[0].lower() in TIME_COLUMNS:
            frame = frame.drop(columns=frame.columns[0])
    else:
        frame.columns = [str(i) for i in range(len(frame.columns))]

    if frame.empty:
        raise IngestError("no data rows", str(path))

    # pandas drops blank lines; map rows back to file lines
    data_lines = [i for i, _ in numbered[1 if has_header else 0:]]
    if len(data_lines) != len(frame):
        data_lines = list(range(2 if has_header else 1, len(frame) + 2))
    channels: List[TimeSeries] = []
    for column in frame.columns:
        raw = frame[column].fillna("").str.strip()
        bad = ~raw.str.fullmatch(DECIMAL.pattern).to_numpy(dtype=bool)
        numeric = pd.Series(np.nan, index=raw.index)
        numeric[~bad] = raw[~bad].astype(np.float64)
        bad |= ~np.isfinite(numeric.to_numpy(dtype=np.float64))
        if bad.any():
            row = int(np.flatnonzero(bad)[0])
            raise IngestError(
                f"non-numeric or missing value {frame[column].iloc[row]!r} in column {column!r}",
                str(path), data_lines[row],
            )
        try:
            channels.append(TimeSeries(samples=numeric.to_numpy(dtype=np.float64), dt=1.0 / fs,
                                       label=f"{path.stem}:{column}"))
        except ValidationError as e:
            raise IngestError(_first_error(e), str(path)) from e
    return channels


def load_group(dir: PathLike, format: str = "ascii", fs: float = 173.61) -> SeriesGroup:
    """
    Load `<dir>/*.txt` (or `*.csv`) as one group named after the directory.
    Members are ordered by file name; any failing file aborts the load.
    """
    directory = Path(dir)
    if not directory.is_dir():
        raise IngestError("not a directory", str(directory))
    suffix = FORMAT_SUFFIXES.get(format)
    if suffix is None:
        raise IngestError(f"unsupported format {format!r}; use 'ascii' or 'csv'", str(directory))

    files = sorted((p for p in directory.iterdir() if p.is_file() and p.suffix.lower() == suffix),
                   key=lambda p: p.name)
    if not files:
        raise IngestError(f"no {suffix} files found", str(directory))

    members: List[TimeSeries] = []
    for file_path in files:
        if format == "ascii":
            members.append(load_series(file_path, "ascii", fs).with_group(directory.name))
        else:
            members.extend(s.with_group(directory.name) for s in load_channels(file_path, fs))

    logger.info("Loaded group %s: %d series from %s", directory.name, len(members), directory)
    return SeriesGroup(name=directory.name, members=tuple(members))


def write_series(series: TimeSeries, path: PathLike) -> Path:
    """Write the ascii-column form; `repr` keeps every float bit-exact."""
    text = "".join(f"{float(v)!r}\n" for v in series.samples)
    return atomic_write_text(path, text)


def summary_stats(values: Sequence[float]) -> SummaryStats:
    """
    Five-number summary plus mean and sample sd (n-1). Quartiles interpolate
    linearly between order statistics at 1+(n-1)p. A single value has sd 0.
    """
    arr = np.sort(np.asarray(values, dtype=np.float64))
    if arr.size == 0:
        raise ValueError("summary_stats needs at least one value")
    if not np.all(np.isfinite(arr)):
        raise ValueError("summary_stats needs finite values")

    n = int(arr.size)
    q1, median, q3 = np.percentile(arr, [25.0, 50.0, 75.0], method="linear")
    mean = math.fsum(arr) / n
    sd = math.sqrt(math.fsum((arr - mean) ** 2) / (n - 1)) if n > 1 else 0.0
    lo, hi = float(arr[0]), float(arr[-1])
    # interpolation can land an ulp outside [min, max] on constant data
    q1, median, q3 = (min(max(float(q), lo), hi) for q in (q1, median, q3))
    mean = min(max(mean, lo), hi)
    return SummaryStats(n=n, min=lo, q1=q1, median=median, q3=q3, max=hi, mean=mean, sd=sd)


def _first_error(e: ValidationError) -> str:
    errors = e.errors()
    return errors[0]["msg"] if errors else str(e)
