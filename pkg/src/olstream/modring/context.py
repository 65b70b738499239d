from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .primes import is_prime, two_adicity

MAX_MODULUS = 1 << 63
# Largest modulus for which single-prime transforms stay inside int64 products.
SINGLE_PRIME_LIMIT = 1 << 31


def bit_width(q: int) -> int:
    """ceil(log2 q): bits needed to store one residue of Z/qZ."""
    return (q - 1).bit_length()


@dataclass(frozen=True)
class ModContext:
    """A modulus ``q`` plus the metadata the engines need about it.

    ``transform_size`` is the largest power-of-two transform the caller plans to
    run directly modulo ``q``; ``ntt_friendly`` says whether that is possible.
    """

    q: int
    transform_size: int = 2
    delta: int = field(init=False)
    is_prime: bool = field(init=False)
    two_adicity: int = field(init=False)
    ntt_friendly: bool = field(init=False)

    def __post_init__(self):
        q = self.q
        if not isinstance(q, int) or not 2 <= q < MAX_MODULUS:
            raise ValueError(f"modulus must satisfy 2 <= q < 2**63, got {q!r}")
        size = self.transform_size
        if size < 1 or size & (size - 1):
            raise ValueError(f"transform_size must be a power of two, got {size}")
        prime = is_prime(q)
        adicity = two_adicity(q - 1) if prime and q > 2 else 0
        object.__setattr__(self, "delta", bit_width(q))
        object.__setattr__(self, "is_prime", prime)
        object.__setattr__(self, "two_adicity", adicity)
        object.__setattr__(self, "ntt_friendly", self.supports_transform(size))

    def supports_transform(self, size: int) -> bool:
        """True iff a length-``size`` NTT exists directly modulo q."""
        if not self.is_prime or self.q >= SINGLE_PRIME_LIMIT:
            return False
        return (1 << self.two_adicity) >= size

    def check(self, value: int) -> int:
        if not 0 <= value < self.q:
            raise ValueError(f"residue {value} outside [0, {self.q})")
        return value


@dataclass(frozen=True)
class ZqVector:
    """Fixed-length vector of residues in [q]."""

    elems: tuple[int, ...]
    ctx: ModContext

    def __post_init__(self):
        q = self.ctx.q
        for e in self.elems:
            if not 0 <= e < q:
                raise ValueError(f"element {e} outside [0, {q})")

    @classmethod
    def of(cls, values: Iterable[int], q: int | ModContext) -> "ZqVector":
        ctx = q if isinstance(q, ModContext) else ModContext(q)
        return cls(tuple(int(v) for v in values), ctx)

    @property
    def q(self) -> int:
        return self.ctx.q

    def __len__(self) -> int:
        return len(self.elems)

    def __getitem__(self, i):
        return self.elems[i]

    def __iter__(self):
        return iter(self.elems)

    def __add__(self, other: "ZqVector") -> "ZqVector":
        _check_compatible(self, other)
        q = self.q
        return ZqVector(tuple((a + b) % q for a, b in zip(self, other)), self.ctx)

    def reversed(self) -> "ZqVector":
        return ZqVector(self.elems[::-1], self.ctx)


def as_zq_vector(values: Sequence[int] | ZqVector, q: int | ModContext | None = None) -> ZqVector:
    if isinstance(values, ZqVector):
        if q is not None:
            qq = q.q if isinstance(q, ModContext) else q
            if qq != values.q:
                raise ValueError(f"vector lives mod {values.q}, expected mod {qq}")
        return values
    if q is None:
        raise ValueError("a modulus is required for plain sequences")
    return ZqVector.of(values, q)


def _check_compatible(a: ZqVector, b: ZqVector) -> None:
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} vs {len(b)}")
    if a.q != b.q:
        raise ValueError(f"context mismatch: mod {a.q} vs mod {b.q}")


def inner_product(a: ZqVector, b: ZqVector) -> int:
    """sum(a[i] * b[i]) mod q."""
    _check_compatible(a, b)
    return sum(x * y for x, y in zip(a.elems, b.elems)) % a.q
