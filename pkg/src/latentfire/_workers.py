"""Ordered, deterministic fan-out of independent tasks."""

import os

from joblib import Parallel, delayed
from threadpoolctl import threadpool_limits

ENV_VAR = "LATENTFIRE_THREADS"


def resolve_workers(n_jobs=None):
    """Worker count after applying the ``LATENTFIRE_THREADS`` cap (0 = auto)."""
    cap = int(os.environ.get(ENV_VAR, "0") or 0)
    auto = os.cpu_count() or 1
    if n_jobs is None or n_jobs <= 0:
        n_jobs = cap if cap > 0 else auto
    elif cap > 0:
        n_jobs = min(n_jobs, cap)
    return max(1, int(n_jobs))


def _run_chunk(fn, chunk):
    # single-threaded BLAS inside every task keeps results identical
    # regardless of how tasks are spread over workers
    with threadpool_limits(limits=1):
        return [fn(*args) for args in chunk]


def run_ordered(fn, tasks, n_jobs=None):
    """Evaluate ``fn(*task)`` for every task, returning results in task order."""
    tasks = list(tasks)
    n = resolve_workers(n_jobs)
    if n == 1 or len(tasks) <= 1:
        return _run_chunk(fn, tasks)
    n = min(n, len(tasks))
    chunks = [tasks[i::n] for i in range(n)]
    parts = Parallel(n_jobs=n)(delayed(_run_chunk)(fn, c) for c in chunks)
    out = [None] * len(tasks)
    for i, part in enumerate(parts):
        out[i::n] = part
    return out
