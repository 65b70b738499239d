import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from olstream.lb_lab import k_vector
from olstream.mult_online import (
    DigitStream,
    NaiveMultiplier,
    RelaxedMultiplier,
    fixed_y_schedule,
    k_number,
    make_multiplier,
    multiply_online,
    relaxed_schedule,
)
from olstream.probe_lab import CellMemory


def product_digits(x, y, q, n):
    return list(DigitStream.from_int(x * y % q**n, q, n).digits)


@pytest.mark.parametrize("kind", ["naive", "relaxed"])
def test_worked_example(kind):
    e = make_multiplier(kind, 10)
    assert e.next_digit(2, 4) == 8
    assert e.next_digit(1, 3) == 0


def test_digit_conventions():
    x = DigitStream.from_int(15949, 8)
    assert x.digits == (5, 1, 1, 7, 3)
    assert x.digit(0) == 5
    assert x.segment(1, 3) == 457
    assert x.segment(3, 10) == 31
    assert x.digit(15) == 0
    assert x.value == 15949


def test_digit_stream_validation():
    with pytest.raises(ValueError):
        DigitStream(1, (0,))
    with pytest.raises(ValueError):
        DigitStream(4, (4,))
    with pytest.raises(ValueError):
        DigitStream.from_int(16, 2, 3)


def test_k_number_examples():
    assert k_number(1, 4).digits == (0, 1, 1, 0)
    assert k_number(1, 4).value == 6
    assert k_number(2, 4).digits == (2, 1, 1, 0)
    assert k_number(2, 4).value == 22


@pytest.mark.parametrize("delta,n", [(1, 8), (1, 64), (2, 32), (4, 16), (8, 128)])
def test_k_number_reverses_k_vector(delta, n):
    bits = [(k_number(delta, n).value >> i) & 1 for i in range(n * delta)]
    assert bits[::-1] == k_vector(n * delta).tolist()


def test_relaxed_schedule_examples():
    pairs = [set(b.pairs()) for b in relaxed_schedule(1)]
    assert {(1, 0)} in pairs and {(0, 1)} in pairs and {(1, 1)} in pairs
    sq = [set(b.pairs()) for b in relaxed_schedule(3)]
    assert {(2, 2), (2, 3), (3, 2), (3, 3)} in sq
    assert [set(b.pairs()) for b in relaxed_schedule(0)] == [{(0, 0)}]


def test_relaxed_schedule_coverage():
    steps = 1 << 10
    count = np.zeros((steps, steps), dtype=np.int16)
    for t in range(steps):
        for b in relaxed_schedule(t):
            (a0, a1), (b0, b1) = b.x_range, b.y_range
            assert a1 - 1 <= t and b1 - 1 <= t
            assert a0 + b0 >= t
            count[a0:a1, b0:b1] += 1
    a, b = np.meshgrid(np.arange(steps), np.arange(steps), indexing="ij")
    assert np.all(count[a + b < steps] == 1)
    assert count.max() == 1


def test_fixed_y_schedule_coverage():
    n = 256
    count = np.zeros((n, n), dtype=np.int16)
    for t in range(n):
        for b in fixed_y_schedule(t, n):
            (a0, a1), (b0, b1) = b.x_range, b.y_range
            assert a1 - 1 <= t and a0 + b0 >= t
            count[a0:a1, b0 : min(b1, n)] += 1
    a, b = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    assert np.all(count[a + b < n] == 1)


def test_relaxed_q256_n1024():
    rng = random.Random(3)
    q, n = 256, 1024
    x, y = rng.randrange(q**n), rng.randrange(q**n)
    xs = DigitStream.from_int(x, q, n).digits
    ys = DigitStream.from_int(y, q, n).digits
    assert RelaxedMultiplier(q, n).run(xs, ys) == product_digits(x, y, q, n)


@pytest.mark.parametrize("q", [2, 3, 10, 16, 256, 65536, 2**20 + 7, 2**31])
@pytest.mark.parametrize("kind", ["naive", "relaxed"])
def test_engines_all_modes(q, kind):
    rng = random.Random(q)
    for n in (1, 2, 5, 17, 64):
        x, y = rng.randrange(q**n), rng.randrange(q**n)
        xs = DigitStream.from_int(x, q, n).digits
        ys = DigitStream.from_int(y, q, n).digits
        expected = product_digits(x, y, q, n)
        assert make_multiplier(kind, q, n).run(xs, ys) == expected
        assert make_multiplier(kind, q).run(xs, ys) == expected
        assert make_multiplier(kind, q, n, y_fixed=ys).run(xs) == expected
        assert make_multiplier(kind, q, n, memory=CellMemory(64)).run(xs, ys) == expected
        assert make_multiplier(kind, q, n, y_fixed=ys, memory=CellMemory(16)).run(xs) == expected


def test_prefix_locality_every_step():
    rng = random.Random(11)
    q, n = 16, 200
    xs = [rng.randrange(q) for _ in range(n)]
    ys = [rng.randrange(q) for _ in range(n)]
    e = RelaxedMultiplier(q)
    out = []
    for t in range(n):
        out.append(e.next_digit(xs[t], ys[t]))
        xv = DigitStream(q, tuple(xs[: t + 1])).value
        yv = DigitStream(q, tuple(ys[: t + 1])).value
        assert out == product_digits(xv, yv, q, t + 1)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 16), st.data())
def test_commutativity(delta, data):
    q = 1 << delta
    n = data.draw(st.integers(1, 40))
    xs = data.draw(st.lists(st.integers(0, q - 1), min_size=n, max_size=n))
    ys = data.draw(st.lists(st.integers(0, q - 1), min_size=n, max_size=n))
    assert RelaxedMultiplier(q, n).run(xs, ys) == RelaxedMultiplier(q, n).run(ys, xs)
    assert multiply_online(xs, ys, q) == multiply_online(xs, ys, q, engine="naive")


def test_errors():
    e = RelaxedMultiplier(10)
    with pytest.raises(ValueError):
        e.next_digit(10, 0)
    with pytest.raises(ValueError):
        e.next_digit(0, 10)
    with pytest.raises(ValueError):
        e.next_digit(1)
    with pytest.raises(ValueError):
        RelaxedMultiplier(2**32)
    with pytest.raises(ValueError):
        NaiveMultiplier(2**63)
    with pytest.raises(ValueError):
        make_multiplier("karatsuba", 10)
    with pytest.raises(ValueError):
        RelaxedMultiplier(10, memory=CellMemory(64))
    fixed = RelaxedMultiplier(10, 2, y_fixed=[4, 3])
    with pytest.raises(ValueError):
        fixed.next_digit(2, 5)
    with pytest.raises(ValueError):
        multiply_online([1], [1, 2], 10)


def test_naive_wide_digits():
    q = 2**62
    rng = random.Random(2)
    n = 6
    x, y = rng.randrange(q**n), rng.randrange(q**n)
    xs = DigitStream.from_int(x, q, n).digits
    ys = DigitStream.from_int(y, q, n).digits
    assert NaiveMultiplier(q, n).run(xs, ys) == product_digits(x, y, q, n)
