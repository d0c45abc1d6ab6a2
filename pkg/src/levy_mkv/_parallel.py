"""Replica-level worker pool.

Work items carry their replica index and stream ids, so the assembled
results are independent of worker count and scheduling order.
"""

from __future__ import annotations

import multiprocessing as mp


def pmap(fn, jobs, workers: int = 1):
    """Map fn over jobs (module-level fn, picklable args); returns a list in
    job order."""
    jobs = list(jobs)
    if workers <= 1 or len(jobs) <= 1:
        return [fn(job) for job in jobs]
    ctx = mp.get_context("fork")
    chunk = max(1, len(jobs) // (workers * 8))
    with ctx.Pool(processes=workers) as pool:
        return pool.map(fn, jobs, chunksize=chunk)
