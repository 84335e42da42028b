"""Counter-based, splittable random streams.

Every random draw in the library goes through :func:`stream`, which keys a
Philox generator by ``(seed, tag, replica)``. Replica ``r`` of an experiment
therefore sees the same numbers no matter how replicas are scheduled across
workers.
"""
import zlib

import numpy as np


def _tag_key(tag):
    return zlib.crc32(tag.encode("utf-8"))


def stream(seed, tag="", replica=0):
    """Return an independent generator for ``(seed, tag, replica)``."""
    if seed < 0 or replica < 0:
        raise ValueError("seed and replica must be nonnegative")
    ss = np.random.SeedSequence([int(seed), _tag_key(tag), int(replica)])
    return np.random.Generator(np.random.Philox(ss))


def child_seed(seed, tag, replica):
    """Derive a plain integer seed, for APIs that take ``seed`` rather than a generator."""
    ss = np.random.SeedSequence([int(seed), _tag_key(tag), int(replica)])
    return int(ss.generate_state(1, dtype=np.uint32)[0])
