"""Shared helpers: radius tolerance, deterministic parallel mapping."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

# Relative slack applied to every ball radius before membership tests, so that
# a point at numerical distance r*(1+1e-16) still counts as inside B(c, r).
RADIUS_REL_TOL = 1e-9
RADIUS_ABS_TOL = 1e-15

THREADS_ENV = "WRH_LAB_THREADS"


def effective_radius(r: float) -> float:
    """Radius with the membership slack applied (monotone in r for r >= 0)."""
    return r * (1.0 + RADIUS_REL_TOL) + RADIUS_ABS_TOL


def resolve_threads(threads: int | None = None) -> int:
    """Thread count from the argument, the WRH_LAB_THREADS env var, or the host."""
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get(THREADS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def parallel_map(fn, items, threads: int | None = None):
    """Map preserving input order, so downstream reductions are deterministic
    regardless of the thread count."""
    nthreads = resolve_threads(threads)
    items = list(items)
    if nthreads == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=nthreads) as pool:
        return list(pool.map(fn, items))
