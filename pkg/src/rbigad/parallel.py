"""Row-chunked evaluation with an optional thread pool.

The pool size comes from :func:`set_threads` or the ``RBIGAD_THREADS``
environment variable (default 1).  Chunks are reassembled in order, so results
do not depend on the thread count.
"""

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

CHUNK_ROWS = 2048
_threads = None


def set_threads(n):
    global _threads
    _threads = None if n is None else max(1, int(n))


def get_threads():
    if _threads is not None:
        return _threads
    try:
        return max(1, int(os.environ.get("RBIGAD_THREADS", "1")))
    except ValueError:
        return 1


def map_chunks(fn, X, chunk_rows=CHUNK_ROWS):
    """Apply ``fn`` to consecutive row blocks of ``X`` and concatenate."""
    if X.shape[0] == 0:
        return np.empty(0)
    blocks = [X[i:i + chunk_rows] for i in range(0, X.shape[0], chunk_rows)]
    threads = get_threads()
    if threads == 1 or len(blocks) == 1:
        parts = [fn(b) for b in blocks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(fn, blocks))
    return np.concatenate(parts)
