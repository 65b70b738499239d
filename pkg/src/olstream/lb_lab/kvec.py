"""The binary vector K_n, whose Toeplitz blocks all have large recovery numbers."""

from __future__ import annotations

import numpy as np


def _powers_of_two_below(m: int) -> list[int]:
    out, p = [], 1
    while p < m:
        out.append(p)
        p *= 2
    return out


def k_vector(n: int) -> np.ndarray:
    """K[i] = 1 iff n-1-i is a power of two (1, 2, 4, ...)."""
    if n < 2:
        raise ValueError("K_n needs n >= 2")
    k = np.zeros(n, dtype=np.int64)
    for p in _powers_of_two_below(n):
        k[n - 1 - p] = 1
    return k
