"""16-bit bucket keys derived from four hex digits of a perceptual hash.

Two derivation schemes exist.  The continuous scheme takes hex digits 1-4
of the canonical rendering (the top 16 bits of the hash value).  The
discontinuous scheme concatenates hex digits 4, 8, 12 and 16 (1-indexed,
most significant digit first), spreading the bucket key across the whole
hash so that localized bit damage rarely moves an entry out of reach.

Neighbor enumeration flips bits of the 16-bit key itself, which for the
discontinuous scheme corresponds to flipping bits inside the four selected
source nibbles.
"""

from __future__ import annotations

from enum import Enum
from itertools import combinations
from math import comb

from .hashing import PerceptualHash

PREFIX_BITS = 16
PREFIX_SPACE = 1 << PREFIX_BITS
MAX_FLIP_TOLERANCE = 4

# A bucket key is a plain 16-bit unsigned integer.
PrefixKey = int


class PrefixScheme(str, Enum):
    CONTINUOUS = "continuous"
    DISCONTINUOUS = "discontinuous"


def prefix_to_hex(key: PrefixKey) -> str:
    """Render a bucket key as 4 uppercase hex digits."""
    if not 0 <= key < PREFIX_SPACE:
        raise ValueError(f"prefix key out of 16-bit range: {key}")
    return f"{key:04X}"


def prefix_from_hex(text: str) -> PrefixKey:
    """Parse a 4-hex-digit bucket key (case-insensitive)."""
    if len(text) != 4:
        raise ValueError(f"expected 4 hex digits, got {len(text)}: {text!r}")
    try:
        return int(text, 16)
    except ValueError as exc:
        raise ValueError(f"not a hex string: {text!r}") from exc


def extract_prefix(h: PerceptualHash | int, scheme: PrefixScheme) -> PrefixKey:
    """Derive the 16-bit bucket key of a hash under the given scheme."""
    bits = int(h)
    if scheme is PrefixScheme.CONTINUOUS:
        return (bits >> 48) & 0xFFFF
    # hex digit k (1-indexed, MSB first) is the nibble at shift 64 - 4k
    return (
        ((bits >> 48) & 0xF) << 12  # digit 4
        | ((bits >> 32) & 0xF) << 8  # digit 8
        | ((bits >> 16) & 0xF) << 4  # digit 12
        | (bits & 0xF)  # digit 16
    )


def neighbor_count(flip_tolerance: int) -> int:
    """Number of keys within the given bit-flip tolerance, original included."""
    return sum(comb(PREFIX_BITS, i) for i in range(flip_tolerance + 1))


def enumerate_neighbors(key: PrefixKey, flip_tolerance: int) -> list[PrefixKey]:
    """All 16-bit keys within Hamming distance ``flip_tolerance`` of ``key``.

    Ordered original first, then ascending by (distance, numeric value), so
    candidate traversal is reproducible.
    """
    if not 0 <= key < PREFIX_SPACE:
        raise ValueError(f"prefix key out of 16-bit range: {key}")
    if not 0 <= flip_tolerance <= MAX_FLIP_TOLERANCE:
        raise ValueError(f"flip tolerance out of range [0, {MAX_FLIP_TOLERANCE}]: {flip_tolerance}")
    out = [key]
    for distance in range(1, flip_tolerance + 1):
        ring = []
        for positions in combinations(range(PREFIX_BITS), distance):
            mask = 0
            for p in positions:
                mask |= 1 << p
            ring.append(key ^ mask)
        ring.sort()
        out.extend(ring)
    return out
