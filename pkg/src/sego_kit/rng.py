"""Labeled, counter-based random stream derivation.

Every module derives its streams from one master seed plus string/int
labels, hashed into a Philox key. Streams are therefore reproducible and
independent of execution order, which is what makes per-chain sampling
order-independent under parallel execution.
"""
from __future__ import annotations

import hashlib

import numpy as np


def derive_key(master_seed: int, *labels) -> int:
    """Hash (master_seed, *labels) into a 128-bit Philox key."""
    h = hashlib.sha256()
    h.update(str(int(master_seed)).encode())
    for label in labels:
        h.update(b"/")
        h.update(str(label).encode())
    return int.from_bytes(h.digest()[:16], "little")


def derive_rng(master_seed: int, *labels) -> np.random.Generator:
    """Generator for the stream named by ``labels`` under ``master_seed``."""
    return np.random.Generator(np.random.Philox(key=derive_key(master_seed, *labels)))
