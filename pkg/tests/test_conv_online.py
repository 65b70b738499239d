import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from olstream.conv_online import NaiveConvolver, PartitionedConvolver, flush_schedule, make_convolver
from olstream.probe_lab import CellMemory


def direct_outputs(v, q, stream):
    n = len(v)
    out = []
    for t in range(len(stream)):
        out.append(sum(v[n - 1 - j] * stream[t - j] for j in range(n) if t - j >= 0) % q)
    return out


@pytest.mark.parametrize("kind", ["naive", "partitioned"])
def test_worked_example(kind):
    e = make_convolver(kind, [1, 0, 0, 2], 5)
    assert e.next(3) == 1
    assert e.window_values() == [0, 0, 0, 3]
    assert e.next(1) == 2
    assert e.window_values() == [0, 0, 3, 1]
    assert e.t == 2


@pytest.mark.parametrize("kind", ["naive", "partitioned"])
def test_zero_vector(kind):
    e = make_convolver(kind, [0] * 8, 7)
    assert e.run([1, 2, 3, 4, 5, 6] * 4) == [0] * 24


def test_partitioned_equals_naive_n1024():
    rng = np.random.default_rng(0)
    q = 65521
    v = rng.integers(0, q, 1024).tolist()
    stream = rng.integers(0, q, 4096).tolist()
    assert PartitionedConvolver(v, q).run(stream) == NaiveConvolver(v, q).run(stream)


@pytest.mark.parametrize("q", [2, 5, 257, 2**31 - 1, 2**61 - 1])
@pytest.mark.parametrize("n", [1, 2, 3, 8, 13, 64])
def test_engines_match_direct(q, n):
    rng = np.random.default_rng(n * 7 + q % 1000)
    v = [int(x) for x in rng.integers(0, min(q, 2**62), n)]
    stream = [int(x) for x in rng.integers(0, min(q, 2**62), 3 * n + 5)]
    expected = direct_outputs(v, q, stream)
    assert NaiveConvolver(v, q).run(stream) == expected
    assert PartitionedConvolver(v, q).run(stream) == expected


def test_non_power_of_two_padding():
    e = make_convolver("partitioned", [1, 2, 3], 11)
    assert e.n == 4
    assert e.run([1, 0, 0, 0, 0]) == [3, 2, 1, 0, 0]


def test_rejects_out_of_range():
    e = make_convolver("partitioned", [1, 2], 5)
    with pytest.raises(ValueError):
        e.next(5)
    with pytest.raises(ValueError):
        make_convolver("partitioned", [5], 5)
    with pytest.raises(ValueError):
        make_convolver("fancy", [1], 5)
    with pytest.raises(ValueError):
        make_convolver("naive", [], 5)


def test_flush_schedule_examples():
    s = flush_schedule(0, 8)
    assert [(e.block_size, e.inputs, e.taps) for e in s] == [(1, (0, 1), (1, 2))]
    assert [e.block_size for e in flush_schedule(3, 8)] == [1, 2, 4]
    assert [e.block_size for e in flush_schedule(3, 4)] == [1, 2]
    assert [e.block_size for e in flush_schedule(7, 64)] == [1, 2, 4, 8]
    with pytest.raises(ValueError):
        flush_schedule(-1, 8)


@pytest.mark.parametrize("n", [2**k for k in range(1, 13)])
def test_lag_coverage_exactly_once(n):
    cover = np.zeros(n, dtype=np.int64)
    b = 1
    while 2 * b <= n:
        cover[b : 2 * b] += 1
        b *= 2
    assert cover[0] == 0 and np.all(cover[1:] == 1)


@pytest.mark.parametrize("n", [2, 8, 64, 512])
def test_contribution_coverage(n):
    steps = 3 * n
    count = np.zeros((steps, n), dtype=np.int64)
    for t in range(steps):
        for e in flush_schedule(t, n):
            s0, s1 = e.inputs
            j0, j1 = e.taps
            assert s0 + j0 > t, "block lands at or before the current step"
            assert s1 - 1 <= t
            count[s0:s1, j0:j1] += 1
    # Pairs whose output lies inside the run must be covered exactly once.
    s, j = np.meshgrid(np.arange(steps), np.arange(n), indexing="ij")
    inside = (s + j < steps) & (j >= 1)
    assert np.all(count[inside] == 1)
    assert np.all(count[:, 0] == 0)
    assert count.max() <= 1


@pytest.mark.parametrize("kind", ["naive", "partitioned"])
@pytest.mark.parametrize("w", [8, 16, 64])
def test_instrumented_matches_plain(kind, w):
    rng = np.random.default_rng(w)
    q = 251
    v = rng.integers(0, q, 32).tolist()
    stream = rng.integers(0, q, 100).tolist()
    mem = CellMemory(w)
    assert make_convolver(kind, v, q, memory=mem).run(stream) == make_convolver(kind, v, q).run(stream)
    assert mem.trace.ops == 100
    assert mem.trace.reads > 0 and mem.trace.writes > 0


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 300), st.data())
def test_warmup_and_steady_state(q, data):
    n = data.draw(st.sampled_from([1, 2, 4, 8, 16, 32]))
    v = data.draw(st.lists(st.integers(0, q - 1), min_size=n, max_size=n))
    stream = data.draw(st.lists(st.integers(0, q - 1), min_size=1, max_size=3 * n + 3))
    assert PartitionedConvolver(v, q).run(stream) == direct_outputs(v, q, stream)
