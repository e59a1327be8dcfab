"""Seedable counter-based random streams.

Every consumer asks for a stream by a label path, e.g.
``derive_rng(seed, "sweep", "blmmse-dft", 3)``.  The labels are hashed into
the Philox key, so the numbers a component sees depend only on the seed and
its own labels, never on how many other streams were created before it or on
the order in which workers run.
"""

import hashlib

import numpy as np


def _label_words(labels):
    h = hashlib.sha256()
    for label in labels:
        h.update(repr(label).encode("utf-8"))
        h.update(b"\x00")
    digest = h.digest()
    return [int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4)]


def derive_rng(seed, *labels):
    """Return an independent ``numpy.random.Generator`` for ``(seed, *labels)``."""
    seed = int(seed)
    if seed < 0:
        raise ValueError("seed must be non-negative")
    words = [seed & 0xFFFFFFFF, (seed >> 32) & 0xFFFFFFFF] + _label_words(labels)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(words)))
