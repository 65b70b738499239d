import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from olstream.modring import (
    CRT_PRIMES,
    FixedKernel,
    ModContext,
    TransformLimitError,
    ZqVector,
    bit_width,
    convolve_exact,
    find_prime_below_power,
    inner_product,
    is_prime,
    primitive_root,
)
from olstream.modring.convolve import MAX_TRANSFORM


def sieve(limit):
    flags = np.ones(limit, dtype=bool)
    flags[:2] = False
    for i in range(2, int(limit**0.5) + 1):
        if flags[i]:
            flags[i * i :: i] = False
    return flags


def schoolbook(a, b, q=None):
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += int(x) * int(y)
    return out if q is None else [c % q for c in out]


def test_is_prime_matches_sieve():
    flags = sieve(100000)
    assert all(is_prime(i) == bool(flags[i]) for i in range(100000))


def test_is_prime_large_known_values():
    assert is_prime(2**61 - 1)
    assert is_prime(2**63 - 25)
    assert not is_prime(2**63 - 1)
    # Strong pseudoprime to the first several prime bases.
    assert not is_prime(3825123056546413051)
    for p in CRT_PRIMES:
        assert is_prime(p) and (p - 1) % (1 << 21) == 0


def test_find_prime_below_power_examples():
    assert find_prime_below_power(2) == 3
    assert find_prime_below_power(3) == 7
    assert find_prime_below_power(16) == 65521


def test_find_prime_below_power_matches_sieve():
    flags = sieve(1 << 20)
    for delta in range(2, 21):
        primes = np.nonzero(flags[(1 << (delta - 1)) + 1 : 1 << delta])[0] + (1 << (delta - 1)) + 1
        assert find_prime_below_power(delta) == int(primes.max())


@pytest.mark.parametrize("delta", [30, 31, 32, 40, 61, 62])
def test_find_prime_below_power_range(delta):
    p = find_prime_below_power(delta)
    assert is_prime(p) and (1 << (delta - 1)) < p < (1 << delta)


@pytest.mark.parametrize("delta", [0, 1, 63, -3])
def test_find_prime_below_power_rejects(delta):
    with pytest.raises(ValueError):
        find_prime_below_power(delta)


def test_primitive_root_generates_group():
    for p in (3, 7, 257, 65537):
        g = primitive_root(p)
        assert len({pow(g, k, p) for k in range(p - 1)}) == p - 1


def test_mod_context_fields():
    ctx = ModContext(65537, transform_size=1 << 16)
    assert ctx.delta == 17 and ctx.is_prime and ctx.ntt_friendly
    assert ModContext(12).delta == 4 and not ModContext(12).is_prime
    assert ModContext(2).delta == 1
    assert ModContext(256).delta == 8 and ModContext(257).delta == 9
    assert not ModContext(65521, transform_size=1 << 10).ntt_friendly
    for bad in (0, 1, 1 << 63):
        with pytest.raises(ValueError):
            ModContext(bad)


def test_bit_width_is_ceil_log2():
    for q in range(2, 5000):
        assert 2 ** bit_width(q) >= q > 2 ** (bit_width(q) - 1)


def test_zq_vector_validates():
    with pytest.raises(ValueError):
        ZqVector.of([0, 7], 7)
    v = ZqVector.of([1, 2, 3], 7)
    assert len(v) == 3 and list(v.reversed()) == [3, 2, 1]
    assert list(v + v) == [2, 4, 6]


def test_inner_product_examples():
    assert inner_product(ZqVector.of([1, 2, 3], 7), ZqVector.of([4, 5, 6], 7)) == 4
    b = ZqVector.of([5, 6, 1], 7)
    assert inner_product(ZqVector.of([0, 0, 0], 7), b) == 0


def test_inner_product_errors():
    with pytest.raises(ValueError):
        inner_product(ZqVector.of([1, 2], 7), ZqVector.of([1, 2, 3], 7))
    with pytest.raises(ValueError):
        inner_product(ZqVector.of([1, 2], 7), ZqVector.of([1, 2], 11))


def test_inner_product_wide_oracle():
    rng = random.Random(5)
    q = 65521
    for _ in range(1000):
        a = [rng.randrange(q) for _ in range(64)]
        b = [rng.randrange(q) for _ in range(64)]
        wide = sum(x * y for x, y in zip(a, b))
        assert inner_product(ZqVector.of(a, q), ZqVector.of(b, q)) == wide % q


def test_convolve_examples():
    assert convolve_exact([1, 1], [1, 1], 10).tolist() == [1, 2, 1]
    assert convolve_exact([2], [3], 5).tolist() == [1]


@pytest.mark.parametrize("method", ["direct", "crt", "auto"])
def test_convolve_schoolbook_256(method):
    rng = np.random.default_rng(9)
    q = 1 << 16
    a = rng.integers(0, q, 256)
    b = rng.integers(0, q, 256)
    assert convolve_exact(a, b, q, method=method).tolist() == schoolbook(a, b, q)


@pytest.mark.parametrize("q", [2, 10, 65521, 65537, 2**31 - 1, 2**61 - 1, 2**63 - 25])
@pytest.mark.parametrize("method", ["direct", "crt", "auto"])
def test_convolve_exact_unreduced(q, method):
    rng = random.Random(q)
    for la, lb in ((1, 1), (3, 17), (40, 9), (130, 600)):
        a = [rng.randrange(q) for _ in range(la)]
        b = [rng.randrange(q) for _ in range(lb)]
        exact = schoolbook(a, b)
        got = convolve_exact(a, b, q, reduce=False, method=method)
        assert [int(x) for x in got] == exact
        assert convolve_exact(a, b, q, method=method).tolist() == [c % q for c in exact]


def test_single_prime_and_crt_agree():
    rng = np.random.default_rng(1)
    q = 65537
    for length in (5, 100, 999):
        a = rng.integers(0, q, length)
        b = rng.integers(0, q, length + 3)
        assert np.array_equal(convolve_exact(a, b, q, method="single"), convolve_exact(a, b, q, method="crt"))


def test_single_prime_needs_friendly_modulus():
    with pytest.raises(ValueError):
        convolve_exact([1] * 10, [2] * 10, 65521, method="single")


def test_convolve_rejects():
    with pytest.raises(ValueError):
        convolve_exact([], [1], 5)
    with pytest.raises(ValueError):
        convolve_exact([5], [1], 5)
    with pytest.raises(ValueError):
        convolve_exact([1], [1], 5, method="fft")
    with pytest.raises(TransformLimitError):
        convolve_exact(np.zeros(MAX_TRANSFORM, dtype=np.int64), np.zeros(2, dtype=np.int64), 5)


@settings(max_examples=60, deadline=None)
@given(
    st.integers(2, 2**40),
    st.lists(st.integers(0, 2**40), min_size=1, max_size=40),
    st.lists(st.integers(0, 2**40), min_size=1, max_size=40),
    st.lists(st.integers(0, 2**40), min_size=1, max_size=40),
)
def test_convolve_bilinear(q, a, a2, b):
    a = [x % q for x in a]
    a2 = [x % q for x in a2[: len(a)]] + [0] * max(0, len(a) - len(a2))
    b = [x % q for x in b]
    s = [(x + y) % q for x, y in zip(a, a2)]
    lhs = convolve_exact(s, b, q, method="crt")
    rhs = (convolve_exact(a, b, q).astype(object) + convolve_exact(a2, b, q).astype(object)) % q
    assert [int(x) for x in lhs] == [int(x) for x in rhs]


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 2**62), st.data())
def test_inner_product_is_middle_coefficient(q, data):
    n = data.draw(st.integers(1, 30))
    a = data.draw(st.lists(st.integers(0, q - 1), min_size=n, max_size=n))
    b = data.draw(st.lists(st.integers(0, q - 1), min_size=n, max_size=n))
    c = convolve_exact(a, b[::-1], q)
    assert int(c[n - 1]) == inner_product(ZqVector.of(a, q), ZqVector.of(b, q))


@pytest.mark.parametrize("q", [251, 65521, 2**31 - 1])
@pytest.mark.parametrize("block", [4, 700])
def test_fixed_kernel_matches_convolve(q, block):
    rng = np.random.default_rng(q + block)
    taps = rng.integers(0, q, block)
    for reduce in (True, False):
        k = FixedKernel(taps, q, block, reduce=reduce)
        x = rng.integers(0, q, block)
        got = [int(v) for v in k.apply(x)]
        assert got == [int(v) for v in convolve_exact(x, taps, q, reduce=reduce)]
    assert not FixedKernel([0, 0], q, 2).nonzero
    with pytest.raises(ValueError):
        FixedKernel(taps, q, block).apply(x[:-1])
