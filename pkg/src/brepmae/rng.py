"""Seeded random streams.

Every consumer (init, masking, dropout, shuffling, ...) draws from its own
PCG64 generator whose seed is a hash of ``(seed, purpose, epoch)``. Streams
for different purposes therefore never interleave, and adding draws to one
consumer leaves every other consumer's sequence untouched.
"""

import hashlib
import json

import numpy as np


def stream_seed(seed, purpose="", epoch=None):
    """64-bit seed derived from the JSON encoding of the key tuple."""
    key = json.dumps([seed, purpose, epoch], separators=(",", ":"), default=list)
    digest = hashlib.blake2b(key.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def make_rng(seed, purpose="", epoch=None):
    return np.random.Generator(np.random.PCG64(stream_seed(seed, purpose, epoch)))
