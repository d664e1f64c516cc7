"""Thread-count policy and an order-preserving parallel map.

GENECON_THREADS caps worker threads: unset/1 means sequential, 0 means one
per CPU. Results are always assembled in input order, so output is identical
whatever the thread count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def thread_count() -> int:
    raw = os.environ.get("GENECON_THREADS", "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError as exc:
        raise ValueError(f"GENECON_THREADS must be an integer, got {raw!r}") from exc
    if n < 0:
        raise ValueError(f"GENECON_THREADS must be nonnegative, got {n}")
    if n == 0:
        return os.cpu_count() or 1
    return n


def ordered_map(fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
    seq: Sequence[T] = list(items)
    workers = min(thread_count(), len(seq)) if seq else 0
    if workers <= 1:
        return [fn(x) for x in seq]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, seq))
