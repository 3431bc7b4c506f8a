"""Content hashing utilities for reproducibility."""

import hashlib
import json
from typing import Any

MASK64 = (1 << 64) - 1


def content_hash(data: Any) -> str:
    """Short stable hash of a config or other JSON-able content."""
    if isinstance(data, dict):
        # Sort keys for consistent hashing
        data_str = json.dumps(data, sort_keys=True, separators=(',', ':'))
    else:
        data_str = str(data)

    return hashlib.sha256(data_str.encode('utf-8')).hexdigest()[:16]


def derive_seed(seed: int, stage: str) -> int:
    """Derive a per-stage 64-bit seed from the run seed.

    The sub-seed is the first 8 bytes (little-endian) of
    SHA-256("<seed>:<stage>"), so any stage can be replayed in isolation.
    """
    digest = hashlib.sha256(f"{int(seed) & MASK64}:{stage}".encode('utf-8')).digest()
    return int.from_bytes(digest[:8], 'little')
