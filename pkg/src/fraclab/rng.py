"""Deterministic stream derivation.

Every estimator draws from a Philox counter-based generator keyed by a hash
of (seed, label).  Streams for different labels are independent, and the
draw sequence depends only on (seed, label, sample count), never on thread
count or call order elsewhere in the program.
"""

from __future__ import annotations

import hashlib

import numpy as np


def stream_key(seed: int, label: str) -> np.ndarray:
    """Derive a 128-bit Philox key from an integer seed and a text label."""
    h = hashlib.blake2b(digest_size=16)
    h.update(int(seed).to_bytes(8, "little", signed=False))
    h.update(b"\x00")
    h.update(label.encode("utf-8"))
    raw = h.digest()
    return np.frombuffer(raw, dtype=np.uint64).copy()


def stream(seed: int, label: str) -> np.random.Generator:
    """Independent generator for (seed, label)."""
    return np.random.Generator(np.random.Philox(key=stream_key(seed, label)))


def subseed(seed: int, label: str) -> int:
    """Derive a child integer seed, for experiments that seed sub-estimators."""
    h = hashlib.blake2b(digest_size=8)
    h.update(int(seed).to_bytes(8, "little", signed=False))
    h.update(b"\x01")
    h.update(label.encode("utf-8"))
    return int.from_bytes(h.digest(), "little") % (2**63)
