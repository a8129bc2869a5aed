"""Thread-pool helpers with a worker-count independent result order."""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

import numpy as np

T = TypeVar("T")
R = TypeVar("R")

THREADS_ENV = "APERNET_THREADS"


def resolve_threads(threads: int | None = None) -> int:
    if threads is None:
        raw = os.environ.get(THREADS_ENV, "1")
        try:
            threads = int(raw)
        except ValueError:
            threads = 1
    return max(1, int(threads))


def ordered_map(fn: Callable[[T], R], items: Iterable[T], threads: int | None = None) -> list[R]:
    """Apply ``fn`` to every item and return results in input order."""
    items = list(items)
    n = resolve_threads(threads)
    if n == 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def stable_sum(parts: Iterable[float]) -> float:
    """Correctly rounded sum; the result does not depend on the order of ``parts``."""
    return math.fsum(float(p) for p in parts)


def chunk_sum(values: np.ndarray) -> float:
    return math.fsum(np.asarray(values, dtype=float).ravel().tolist())
