"""Reproducible random streams.

Every stochastic routine in the package draws from a Philox (counter-based)
generator keyed by the master seed plus a small integer path identifying the
task, e.g. ``(seed, STREAM_ALM, ell, m)``.  Streams for distinct paths are
independent and do not depend on scheduling, so parallel workers reproduce
the single-worker results bit for bit.
"""

from __future__ import annotations

import os

import numpy as np

# Stream namespaces; keep values stable, results depend on them.
STREAM_ALM = 1
STREAM_DIRECT = 2
STREAM_VOLUME = 3
STREAM_SCAN = 4
STREAM_PROBE = 5
STREAM_SWEEP = 6
STREAM_MESH_POINTS = 7

_MASK = (1 << 64) - 1


def substream(*path: int) -> np.random.Generator:
    """Philox generator for an integer key path, independent across paths."""
    entropy = [int(k) & _MASK for k in path]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def worker_count() -> int:
    """Worker count from SPHEREFIELD_WORKERS; defaults to 1."""
    raw = os.environ.get("SPHEREFIELD_WORKERS", "1")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)
