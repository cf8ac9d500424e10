"""Order-preserving parallel map over independent work items."""

from __future__ import annotations

import os
from typing import Callable, List, Optional, Sequence, TypeVar

from joblib import Parallel, delayed

T = TypeVar("T")
R = TypeVar("R")


def resolve_n_jobs(n_jobs: Optional[int] = None) -> int:
    """Explicit value, else CGS_N_JOBS, else 1."""
    if n_jobs is not None:
        return n_jobs
    return int(os.getenv("CGS_N_JOBS", "1"))


def parallel_map(func: Callable[[T], R], items: Sequence[T], n_jobs: Optional[int] = None) -> List[R]:
    """Results come back in item order; a single worker runs in-process."""
    n_jobs = resolve_n_jobs(n_jobs)
    if n_jobs == 1 or len(items) < 2:
        return [func(item) for item in items]
    return Parallel(n_jobs=n_jobs)(delayed(func)(item) for item in items)
