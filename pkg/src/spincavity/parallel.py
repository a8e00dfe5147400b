"""Thread fan-out for independent sweep points."""

import os
from concurrent.futures import ThreadPoolExecutor

THREADS_ENV = "SPINCAVITY_THREADS"


def worker_count(n_tasks=None):
    """Workers to use: ``SPINCAVITY_THREADS`` if set, else the CPU count."""
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            n = max(1, int(raw))
        except ValueError:
            n = 1
    else:
        n = os.cpu_count() or 1
    if n_tasks is not None:
        n = min(n, max(1, n_tasks))
    return n


def parallel_map(func, items):
    """``[func(x) for x in items]``, spread over threads, results in input order."""
    items = list(items)
    n = worker_count(len(items))
    if n <= 1:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(func, items))
