"""Deterministic random streams derived from a root seed.

Every stochastic stage draws from a generator keyed by (root seed, labels...).
The key is hashed with sha256 rather than Python's salted ``hash()``, so the
same seed reproduces the same stream across processes and platforms. Labels
are free-form (stage names, species ids, iteration or batch indices).
"""

from __future__ import annotations

import hashlib

import numpy as np


def stream_seed(root: int, *labels: object) -> int:
    """Return a 64-bit seed for the substream named by ``labels``."""
    text = repr((int(root),) + tuple(str(x) for x in labels))
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def substream(root: int, *labels: object) -> np.random.Generator:
    """Return a fresh Generator for the substream named by ``labels``."""
    return np.random.default_rng(stream_seed(root, *labels))
