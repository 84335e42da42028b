"""Replica fan-out that keeps results in replica order."""
from concurrent.futures import ProcessPoolExecutor


def run_replicas(fn, replicas, threads=1):
    """``[fn(r) for r in range(replicas)]``, optionally over a process pool.

    Every replica draws from its own ``(seed, tag, replica)`` stream, so the
    output is identical for any ``threads``.
    """
    if threads < 1:
        raise ValueError("threads must be at least 1")
    if threads == 1 or replicas < 2:
        return [fn(r) for r in range(replicas)]
    chunk = max(1, replicas // (8 * threads))
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(replicas), chunksize=chunk))
