"""Deterministic primality testing and prime selection for word-sized moduli."""

from __future__ import annotations

# First twelve primes as Miller-Rabin bases: deterministic for n < 3.3 * 10**24,
# which covers every 64-bit integer.
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Return True iff ``n`` is prime. Exact for all n < 2**64."""
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    d = n - 1
    s = 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def find_prime_below_power(delta: int) -> int:
    """Largest prime p with 2**(delta-1) < p < 2**delta."""
    if not isinstance(delta, int) or not 2 <= delta <= 62:
        raise ValueError(f"delta must be an integer in [2, 62], got {delta!r}")
    lo = 1 << (delta - 1)
    p = (1 << delta) - 1
    while p > lo:
        if is_prime(p):
            return p
        p -= 1
    # Bertrand's postulate guarantees we never get here.
    raise AssertionError(f"no prime in ({lo}, {2 * lo})")


def factorize_small(n: int) -> list[int]:
    """Distinct prime factors of ``n`` by trial division. Intended for n < 2**40."""
    factors = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            factors.append(d)
            while n % d == 0:
                n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        factors.append(n)
    return factors


def primitive_root(p: int) -> int:
    """Smallest generator of the multiplicative group mod prime ``p``."""
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    if p == 2:
        return 1
    factors = factorize_small(p - 1)
    g = 2
    while any(pow(g, (p - 1) // r, p) == 1 for r in factors):
        g += 1
    return g


def two_adicity(n: int) -> int:
    """Largest m with 2**m dividing n (n > 0)."""
    return (n & -n).bit_length() - 1
