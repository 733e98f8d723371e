"""Deterministic random-stream derivation.

All randomness in a run flows from a single root seed. Components draw from
named substreams so that reruns of any component are stable regardless of
execution order or worker count. Stream names are hashed with SHA-256, never
with Python's salted hash().
"""

from __future__ import annotations

import hashlib

import numpy as np


def _token_to_int(token: object) -> int:
    digest = hashlib.sha256(repr(token).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def substream(root_seed: int, *tokens: object) -> np.random.Generator:
    """Generator for the substream identified by (root_seed, *tokens)."""
    entropy = [int(root_seed) & 0xFFFFFFFFFFFFFFFF]
    entropy.extend(_token_to_int(t) for t in tokens)
    return np.random.default_rng(np.random.SeedSequence(entropy))
