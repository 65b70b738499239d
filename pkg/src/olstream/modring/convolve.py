"""Exact linear convolution of residue sequences.

Coefficients of the unreduced product are bounded by
``min(len(a), len(b)) * (q - 1) ** 2``.  They are recovered exactly from
transforms over a fixed set of CRT primes (each ``= 1 mod 2**21``), after
splitting wide digits into 16-bit limbs so one limb product never leaves a
single residue word.  Short operands go through numpy's integer convolution
when the bound fits in int64.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .context import ModContext, SINGLE_PRIME_LIMIT
from .ntt import _pad, get_plan, transform_size

CRT_PRIMES = (2013265921, 1811939329, 469762049)
MAX_TRANSFORM = 1 << 21
LIMB_BITS = 16
# Operands no longer than this use the direct O(n*m) kernel when exact in int64.
DIRECT_MAX = 512
INT64_SAFE = (1 << 63) - 1

METHODS = ("auto", "direct", "single", "crt")


class TransformLimitError(ValueError):
    pass


def _limb_count(q: int) -> int:
    bits = (q - 1).bit_length()
    return 1 if bits <= LIMB_BITS else -(-bits // LIMB_BITS)


def _split_limbs(x: np.ndarray, k: int) -> np.ndarray:
    if k == 1:
        return x[None, :]
    mask = (1 << LIMB_BITS) - 1
    return np.stack([(x >> (LIMB_BITS * i)) & mask for i in range(k)])


def _select_primes(bound: int) -> tuple[int, ...]:
    prod = 1
    for i, p in enumerate(CRT_PRIMES):
        prod *= p
        if prod > bound:
            return CRT_PRIMES[: i + 1]
    raise TransformLimitError(f"coefficient bound {bound} exceeds CRT capacity")


def _crt(residues: list[np.ndarray], primes: tuple[int, ...]) -> np.ndarray:
    """Exact integers from residues modulo pairwise coprime primes (Garner)."""
    v0 = residues[0]
    if len(primes) == 1:
        return v0
    p0, p1 = primes[0], primes[1]
    v1 = (residues[1] - v0) % p1 * pow(p0, -1, p1) % p1
    if len(primes) == 2:
        return v0 + p0 * v1
    p2 = primes[2]
    t = (residues[2] - v0) % p2 * pow(p0, -1, p2) % p2
    v2 = (t - v1) % p2 * pow(p1, -1, p2) % p2
    return v0.astype(object) + p0 * (v1.astype(object) + p1 * v2.astype(object))


def _as_digits(x, q: int) -> np.ndarray:
    arr = np.asarray(x, dtype=np.int64) if not isinstance(x, np.ndarray) else x.astype(np.int64, copy=False)
    if arr.ndim != 1 or len(arr) == 0:
        raise ValueError("operands must be non-empty 1-d sequences")
    if arr.min() < 0 or arr.max() >= q:
        raise ValueError(f"digits must lie in [0, {q})")
    return arr


def _assemble(diagonals: list[np.ndarray], q: int, reduce: bool) -> np.ndarray:
    """Combine limb diagonals sum_s d_s * 2**(16 s); optionally reduce mod q."""
    if len(diagonals) == 1:
        d = diagonals[0]
        if d.dtype == object:
            return (d % q).astype(np.int64) if reduce else d
        return d % q if reduce else d
    total = np.zeros(len(diagonals[0]), dtype=object)
    for s, d in enumerate(diagonals):
        total = total + d.astype(object) * (1 << (LIMB_BITS * s))
    if reduce:
        return (total % q).astype(np.int64)
    return total


class _CrtLayout:
    def __init__(self, la: int, lb: int, q: int):
        self.out_len = la + lb - 1
        self.size = transform_size(self.out_len)
        if self.size > MAX_TRANSFORM:
            raise TransformLimitError(
                f"transform of size {self.size} exceeds limit {MAX_TRANSFORM}"
            )
        self.limbs = _limb_count(q)
        limb_max = min(q - 1, (1 << LIMB_BITS) - 1) if self.limbs > 1 else q - 1
        bound = min(la, lb) * limb_max * limb_max * self.limbs
        self.primes = _select_primes(max(bound, 1))

    def spectra(self, x: np.ndarray) -> list[np.ndarray]:
        limbs = _split_limbs(x, self.limbs)
        return [get_plan(p, self.size).forward(_pad(limbs % p, self.size)) for p in self.primes]

    def combine(self, fa: list[np.ndarray], fb: list[np.ndarray], q: int, reduce: bool) -> np.ndarray:
        k = self.limbs
        per_prime = []
        for p, sa, sb in zip(self.primes, fa, fb):
            plan = get_plan(p, self.size)
            diag_spec = np.zeros((2 * k - 1, self.size), dtype=np.int64)
            for i in range(k):
                for j in range(k):
                    diag_spec[i + j] = (diag_spec[i + j] + sa[i] * sb[j]) % p
            per_prime.append(plan.inverse(diag_spec)[:, : self.out_len])
        diagonals = [_crt([r[s] for r in per_prime], self.primes) for s in range(2 * k - 1)]
        return _assemble(diagonals, q, reduce)


def _direct_safe(la: int, lb: int, q: int) -> bool:
    return min(la, lb) * (q - 1) * (q - 1) <= INT64_SAFE


def _direct(a: np.ndarray, b: np.ndarray, q: int, reduce: bool) -> np.ndarray:
    if _direct_safe(len(a), len(b), q):
        c = np.convolve(a, b)
    else:
        c = np.convolve(a.astype(object), b.astype(object))
    if reduce:
        return (c % q).astype(np.int64)
    return c


def _single_prime(a: np.ndarray, b: np.ndarray, ctx: ModContext) -> np.ndarray:
    out_len = len(a) + len(b) - 1
    size = transform_size(out_len)
    if not ctx.supports_transform(size):
        raise ValueError(f"modulus {ctx.q} has no transform of size {size}")
    plan = get_plan(ctx.q, size)
    c = plan.inverse(plan.forward(_pad(a, size)) * plan.forward(_pad(b, size)) % ctx.q)
    return c[:out_len]


def convolve_exact(
    a: Sequence[int] | np.ndarray,
    b: Sequence[int] | np.ndarray,
    q: int | ModContext,
    *,
    reduce: bool = True,
    method: str = "auto",
) -> np.ndarray:
    """Full linear convolution of digit sequences ``a`` and ``b``.

    Returns ``len(a) + len(b) - 1`` coefficients.  With ``reduce=True`` every
    coefficient is taken mod q (int64 array); otherwise the exact integer sums
    are returned (int64 when they fit, else an object array of Python ints).

    ``method`` picks the kernel: ``"direct"`` (O(n*m)), ``"single"`` (one NTT
    modulo q itself, needs an NTT-friendly prime q), ``"crt"`` (limb split +
    CRT transforms) or ``"auto"``.
    """
    ctx = q if isinstance(q, ModContext) else None
    qv = ctx.q if ctx else int(q)
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    a = _as_digits(a, qv)
    b = _as_digits(b, qv)
    la, lb = len(a), len(b)
    if transform_size(la + lb - 1) > MAX_TRANSFORM:
        raise TransformLimitError(f"combined length {la + lb - 1} exceeds transform limit")

    if method == "auto":
        if min(la, lb) <= DIRECT_MAX and _direct_safe(la, lb, qv):
            method = "direct"
        elif reduce and qv < SINGLE_PRIME_LIMIT and (ctx or ModContext(qv)).supports_transform(
            transform_size(la + lb - 1)
        ):
            method = "single"
        else:
            method = "crt"

    if method == "direct":
        return _direct(a, b, qv, reduce)
    if method == "single":
        if not reduce:
            raise ValueError("single-prime transform only yields reduced coefficients")
        return _single_prime(a, b, ctx or ModContext(qv))
    layout = _CrtLayout(la, lb, qv)
    return layout.combine(layout.spectra(a), layout.spectra(b), qv, reduce)


class FixedKernel:
    """Convolution of length-``block_len`` blocks against a fixed tap segment.

    The tap spectrum is computed once, so each :meth:`apply` costs one forward
    and one inverse transform per CRT prime (or a direct product for short
    segments).
    """

    def __init__(self, taps: Sequence[int] | np.ndarray, q: int, block_len: int, *, reduce: bool = True):
        self.q = q
        self.reduce = reduce
        self.taps = _as_digits(taps, q)
        self.block_len = block_len
        self.out_len = block_len + len(self.taps) - 1
        self.direct = min(block_len, len(self.taps)) <= DIRECT_MAX and _direct_safe(
            block_len, len(self.taps), q
        )
        self.nonzero = bool(self.taps.any())
        if not self.direct:
            self._layout = _CrtLayout(block_len, len(self.taps), q)
            self._tap_spectra = self._layout.spectra(self.taps)

    def apply(self, block: np.ndarray) -> np.ndarray:
        if len(block) != self.block_len:
            raise ValueError(f"expected a block of {self.block_len}, got {len(block)}")
        if not self.nonzero:
            return np.zeros(self.out_len, dtype=np.int64)
        block = np.asarray(block, dtype=np.int64)
        if self.direct:
            c = np.convolve(block, self.taps)
            return c % self.q if self.reduce else c
        spectra = self._layout.spectra(block)
        return self._layout.combine(spectra, self._tap_spectra, self.q, self.reduce)
