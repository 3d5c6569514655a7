import os
from concurrent.futures import ThreadPoolExecutor


def worker_count():
    """Worker cap from ``TBM_THREADS`` (unset or 0 means one per CPU)."""
    try:
        n = int(os.environ.get("TBM_THREADS", "0"))
    except ValueError:
        n = 0
    return n if n > 0 else (os.cpu_count() or 1)


def pmap(func, items):
    """Ordered map, fanned out over threads when more than one worker is allowed."""
    items = list(items)
    n = min(worker_count(), len(items))
    if n <= 1:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(func, items))
