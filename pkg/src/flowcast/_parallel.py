import os
from concurrent.futures import ThreadPoolExecutor

ENV_THREADS = "FLOWCAST_THREADS"


def thread_count(requested: int | None = None) -> int:
    """Worker cap: explicit value, else ``FLOWCAST_THREADS``, with 0 meaning all cores."""
    if requested is None:
        raw = os.environ.get(ENV_THREADS, "0").strip() or "0"
        try:
            requested = int(raw)
        except ValueError:
            requested = 0
    if requested <= 0:
        requested = os.cpu_count() or 1
    return requested


def ordered_map(fn, items, workers: int | None = None) -> list:
    """``list(map(fn, items))``, optionally across threads; result order is input order."""
    items = list(items)
    workers = min(thread_count(workers), max(len(items), 1))
    if workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
