"""Exact arithmetic over Z/qZ: primality, residue vectors and exact convolution."""

from .context import ModContext, ZqVector, as_zq_vector, bit_width, inner_product
from .convolve import (
    CRT_PRIMES,
    MAX_TRANSFORM,
    FixedKernel,
    TransformLimitError,
    convolve_exact,
)
from .primes import find_prime_below_power, is_prime, primitive_root

__all__ = [
    "CRT_PRIMES",
    "MAX_TRANSFORM",
    "FixedKernel",
    "ModContext",
    "TransformLimitError",
    "ZqVector",
    "as_zq_vector",
    "bit_width",
    "convolve_exact",
    "find_prime_below_power",
    "inner_product",
    "is_prime",
    "primitive_root",
]
