"""Radix-2 number-theoretic transforms over word-sized primes, vectorised with numpy.

All arithmetic is on int64 arrays holding residues below 2**31, so every
product fits in 63 bits.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .primes import is_prime, primitive_root, two_adicity

PRIME_LIMIT = 1 << 31


def _powers(w: int, count: int, p: int) -> np.ndarray:
    out = np.ones(1, dtype=np.int64)
    step = w
    while len(out) < count:
        out = np.concatenate((out, out * step % p))
        step = step * step % p
    return out[:count]


def _bit_reverse(size: int) -> np.ndarray:
    bits = size.bit_length() - 1
    idx = np.arange(size, dtype=np.int64)
    rev = np.zeros(size, dtype=np.int64)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    return rev


class NttPlan:
    """Precomputed permutation and twiddles for one (prime, size) pair."""

    def __init__(self, p: int, size: int):
        if not is_prime(p) or p >= PRIME_LIMIT:
            raise ValueError(f"NTT modulus must be a prime below 2**31, got {p}")
        if size < 1 or size & (size - 1):
            raise ValueError(f"size must be a power of two, got {size}")
        if size > 1 and two_adicity(p - 1) < size.bit_length() - 1:
            raise ValueError(f"no {size}-th root of unity mod {p}")
        self.p = p
        self.size = size
        root = pow(primitive_root(p), (p - 1) // size, p) if size > 1 else 1
        iroot = pow(root, p - 2, p)
        self.rev = _bit_reverse(size)
        self.fwd_twiddles = []
        self.inv_twiddles = []
        h = 1
        while h < size:
            self.fwd_twiddles.append(_powers(pow(root, size // (2 * h), p), h, p))
            self.inv_twiddles.append(_powers(pow(iroot, size // (2 * h), p), h, p))
            h *= 2
        self.size_inv = pow(size, p - 2, p)

    def _run(self, a: np.ndarray, twiddles) -> np.ndarray:
        p, size = self.p, self.size
        lead = a.shape[:-1]
        a = a[..., self.rev]
        h = 1
        for tw in twiddles:
            a = a.reshape(lead + (size // (2 * h), 2, h))
            u = a[..., 0, :]
            v = a[..., 1, :] * tw % p
            a = np.stack(((u + v) % p, (u - v) % p), axis=-2)
            h *= 2
        return a.reshape(lead + (size,))

    def forward(self, a: np.ndarray) -> np.ndarray:
        return self._run(a, self.fwd_twiddles)

    def inverse(self, a: np.ndarray) -> np.ndarray:
        return self._run(a, self.inv_twiddles) * self.size_inv % self.p


@lru_cache(maxsize=256)
def get_plan(p: int, size: int) -> NttPlan:
    return NttPlan(p, size)


def transform_size(length: int) -> int:
    """Smallest power of two >= length."""
    return 1 << max(0, (length - 1).bit_length())


def cyclic_convolve_mod(a: np.ndarray, b: np.ndarray, p: int, size: int) -> np.ndarray:
    """Cyclic convolution of the zero-padded inputs modulo prime ``p``."""
    plan = get_plan(p, size)
    fa = plan.forward(_pad(a % p, size))
    fb = plan.forward(_pad(b % p, size))
    return plan.inverse(fa * fb % p)


def _pad(a: np.ndarray, size: int) -> np.ndarray:
    a = np.asarray(a, dtype=np.int64)
    out = np.zeros(a.shape[:-1] + (size,), dtype=np.int64)
    out[..., : a.shape[-1]] = a
    return out
