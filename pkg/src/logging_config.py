# src/logging_config.py
import logging
import os
from pathlib import Path
from typing import Optional

from rich.logging import RichHandler

LOG_FORMAT = "%(asctime)s | %(levelname)s | %(message)s"
LOG_FILE_NAME = "cgs_runs.log"

_configured = False


def configure_logging(level: Optional[str] = None, log_dir: Optional[str] = None) -> Path:
    """
    Route package logs to `<log_dir>/cgs_runs.log` and to a rich console handler.

    `CGS_LOG_LEVEL` and `CGS_LOG_DIR` are used when the arguments are omitted.
    Calling it twice only adjusts the level.
    """
    global _configured

    level_name = (level or os.getenv("CGS_LOG_LEVEL", "INFO")).upper()
    directory = Path(log_dir or os.getenv("CGS_LOG_DIR", "logs"))
    log_file = directory / LOG_FILE_NAME

    root = logging.getLogger("src")
    root.setLevel(level_name)
    if _configured:
        return log_file

    directory.mkdir(parents=True, exist_ok=True)
    file_handler = logging.FileHandler(log_file, encoding="utf-8")
    file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root.addHandler(file_handler)

    console = RichHandler(show_path=False, rich_tracebacks=False)
    console.setFormatter(logging.Formatter("%(message)s"))
    root.addHandler(console)

    _configured = True
    return log_file
