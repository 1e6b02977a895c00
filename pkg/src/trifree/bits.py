"""Packed-bit adjacency rows and popcount helpers."""

from __future__ import annotations

import numpy as np

try:  # numpy >= 2.0
    _bitwise_count = np.bitwise_count
except AttributeError:  # pragma: no cover - older numpy
    _LUT = np.array([bin(i).count("1") for i in range(256)], dtype=np.uint8)

    def _bitwise_count(a):
        return _LUT[a]


def row_bytes(n: int) -> int:
    return (n + 7) // 8


def pack_adjacency(n: int, edges) -> np.ndarray:
    """(n, ceil(n/8)) uint8 matrix; bit v of row u set iff uv is an edge."""
    rows = np.zeros((n, row_bytes(n)), dtype=np.uint8)
    for u, v in edges:
        rows[u, v >> 3] |= 1 << (v & 7)
        rows[v, u >> 3] |= 1 << (u & 7)
    return rows


def pack_bool(mask: np.ndarray) -> np.ndarray:
    """Pack a boolean vector into the same bit layout as :func:`pack_adjacency`."""
    return np.packbits(mask, bitorder="little")


def popcount(row: np.ndarray) -> int:
    return int(_bitwise_count(row).sum())


def and_popcount(a: np.ndarray, b: np.ndarray) -> int:
    return int(_bitwise_count(a & b).sum())
