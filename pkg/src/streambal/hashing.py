"""Seedable 64-bit hashing, salted re-hashing, and unit-circle projection.

One hash family (keyed blake2b truncated to 64 bits) with domain-separated
seeds: callers derive secondary hashes as seed^1, seed^2, ... instead of
using independent hash functions.
"""

from __future__ import annotations

from hashlib import blake2b

from .core import ValidationError

_MASK64 = (1 << 64) - 1
_TWO64 = float(1 << 64)


def hash64(key: bytes, seed: int) -> int:
    """64-bit hash of `key` under `seed`. Deterministic, non-cryptographic use."""
    kb = (seed & _MASK64).to_bytes(8, "little")
    return int.from_bytes(blake2b(key, digest_size=8, key=kb).digest(), "little")


def salted_index(key: bytes, salt: int, n: int, seed: int) -> int:
    """Index in [0, n) for (key, salt).

    The salt is appended to the key as its 8-byte little-endian encoding, so
    salt=1,2,3,... yields the per-key probe sequence of bins.
    """
    if n < 1:
        raise ValidationError("salted_index needs n >= 1")
    if salt < 1:
        raise ValidationError("salt must be >= 1")
    return hash64(key + salt.to_bytes(8, "little"), seed) % n


def unit_circle(label: bytes, seed: int) -> float:
    """Project a key or worker label onto the circular id space [0, 1)."""
    return hash64(label, seed) / _TWO64
