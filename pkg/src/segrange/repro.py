"""Deterministic data generation and output checksumming for benchmarks.

The generator is splitmix64: draw i of a stream seeded with s mixes the
state ``s + (i+1) * 0x9E3779B97F4A7C15``, so any window of draws can be
produced independently and vectorized.  Checksums cover the canonical
little-endian byte encoding of an output array (floats bit-cast) with
CRC-32, giving a cheap, portable regression anchor.
"""

from __future__ import annotations

import zlib

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)


def splitmix64(seed: int, start: int, count: int) -> np.ndarray:
    """Draws [start, start+count) of the splitmix64 stream for seed."""
    if count < 0:
        raise ValueError("count must be non-negative")
    idx = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + idx * GOLDEN
        z = (z ^ (z >> np.uint64(30))) * MIX1
        z = (z ^ (z >> np.uint64(27))) * MIX2
        return z ^ (z >> np.uint64(31))


def unit_doubles(seed: int, start: int, count: int) -> np.ndarray:
    """count float64 values in [0, 1), drawn from the stream window."""
    bits = splitmix64(seed, start, count)
    return (bits >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)


def uniform_doubles(seed: int, start: int, count: int, lo: float, hi: float) -> np.ndarray:
    return lo + (hi - lo) * unit_doubles(seed, start, count)


def canonical_bytes(arr: np.ndarray) -> bytes:
    """Little-endian byte encoding, independent of host byte order."""
    a = np.ascontiguousarray(arr)
    return a.astype(a.dtype.newbyteorder("<"), copy=False).tobytes()


def checksum(arr) -> str:
    """CRC-32 of the canonical encoding, as 8 hex digits."""
    if np.isscalar(arr) or (isinstance(arr, np.ndarray) and arr.ndim == 0):
        arr = np.asarray([arr])
    return format(zlib.crc32(canonical_bytes(np.asarray(arr))) & 0xFFFFFFFF, "08x")
