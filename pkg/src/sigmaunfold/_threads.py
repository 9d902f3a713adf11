"""Worker pool sizing and ordered parallel map."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def worker_count() -> int:
    """Thread cap from ``UNFOLD_THREADS`` (defaults to the CPU count)."""
    env = os.environ.get("UNFOLD_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return max(1, os.cpu_count() or 1)


def ordered_map(fn, items, workers: int | None = None) -> list:
    """``[fn(x) for x in items]`` evaluated on a thread pool; order is preserved."""
    items = list(items)
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))


def chunks(n: int, parts: int) -> list[slice]:
    parts = max(1, min(parts, n))
    edges = [n * i // parts for i in range(parts + 1)]
    return [slice(edges[i], edges[i + 1]) for i in range(parts)]
