import numpy as np
import pytest

from olstream.conv_online import make_convolver
from olstream.errors import InvariantViolation
from olstream.lb_lab import build_tree
from olstream.mult_online import make_multiplier
from olstream.probe_lab import (
    CellMemory,
    Encoding,
    ProbeTrace,
    ReplayError,
    encode_interval,
    information_transfer,
    information_transfer_reference,
    it_profile,
    replay_decode,
)


def test_it_examples():
    c = 7
    assert information_transfer(ProbeTrace.from_events([2, 5], [1, 0], [c, c]), 2, 3, 6) == {c}
    assert information_transfer(ProbeTrace.from_events([2, 4, 5], [1, 1, 0], [c, c, c]), 2, 3, 6) == set()
    with pytest.raises(ValueError):
        information_transfer(ProbeTrace(), 3, 2, 5)
    with pytest.raises(ValueError):
        information_transfer(ProbeTrace(), 0, 2, 2)


def test_it_matches_reference_on_random_traces():
    rng = np.random.default_rng(0)
    for _ in range(300):
        m = int(rng.integers(1, 80))
        ops = np.sort(rng.integers(0, 16, m))
        tr = ProbeTrace.from_events(ops, rng.integers(0, 2, m), rng.integers(0, 6, m))
        t0 = int(rng.integers(0, 8))
        t1 = int(rng.integers(t0, 12))
        t2 = int(rng.integers(t1 + 1, 16))
        assert information_transfer(tr, t0, t1, t2) == information_transfer_reference(tr, t0, t1, t2)
        tree = build_tree(16)
        prof = it_profile(tr, tree)
        for v in tree.nodes:
            assert prof.size(v) == len(information_transfer_reference(tr, v.t0, v.t1, v.t2))
        assert prof.total <= prof.reads


def test_it_profile_empty_and_hand_built():
    tree = build_tree(4)
    prof = it_profile(ProbeTrace(), tree)
    assert prof.total == 0 and set(prof.sizes.values()) == {0}
    # Cell 3 written at op 1, read at op 2: crosses the root only.
    tr = ProbeTrace.from_events([0, 1, 2, 3], [0, 1, 0, 0], [9, 3, 3, 8])
    prof = it_profile(tr, tree)
    nonzero = {k: v for k, v in prof.sizes.items() if v}
    assert nonzero == {(2, 0): 1}
    assert prof.reads == 3


def _record(factory, inputs):
    mem = CellMemory(64, keep_values=True)
    engine = factory(mem)
    outs = [engine.step(x) for x in inputs]
    return mem, outs


def test_encoding_sizes():
    enc = Encoding(64, 0, 0, 1, ())
    assert enc.bits == 64 and enc.words() == [0]
    enc = Encoding(32, 0, 0, 1, ((5, 9),))
    assert enc.bits == 96
    assert Encoding.from_words(enc.words(), 32, 0, 0, 1) == enc
    with pytest.raises(ReplayError):
        Encoding.from_words([2, 5, 9], 32, 0, 0, 1)


def test_encode_needs_values():
    mem = CellMemory(64)
    with pytest.raises(ValueError):
        encode_interval(mem, None, 0, 0, 1)


@pytest.mark.parametrize("kind", ["naive", "partitioned"])
def test_replay_every_node_conv(kind):
    rng = np.random.default_rng(1)
    n, q = 16, 257
    v = rng.integers(0, q, n).tolist()
    stream = rng.integers(0, q, n).tolist()
    factory = lambda m: make_convolver(kind, v, q, memory=m)  # noqa: E731
    mem, outs = _record(factory, stream)
    for node in build_tree(n).nodes:
        enc = encode_interval(mem, None, node.t0, node.t1, node.t2)
        assert enc.bits == mem.w * (1 + 2 * enc.count)
        elided = [None if node.t0 <= t <= node.t1 else x for t, x in enumerate(stream)]
        got = replay_decode(factory, elided, enc, node.t0, node.t1, node.t2, original=mem.trace)
        assert got == outs[node.t1 + 1 : node.t2 + 1]


def test_replay_mult():
    rng = np.random.default_rng(2)
    n, q = 16, 16
    pairs = list(zip(rng.integers(0, q, n).tolist(), rng.integers(0, q, n).tolist()))
    factory = lambda m: make_multiplier("relaxed", q, n, memory=m)  # noqa: E731
    mem, outs = _record(factory, pairs)
    for node in build_tree(n).nodes:
        enc = encode_interval(mem, None, node.t0, node.t1, node.t2)
        elided = [None if node.t0 <= t <= node.t1 else x for t, x in enumerate(pairs)]
        assert replay_decode(factory, elided, enc, node.t0, node.t1, node.t2) == outs[node.t1 + 1 : node.t2 + 1]


def test_replay_detects_bad_encodings():
    rng = np.random.default_rng(3)
    n, q = 8, 5
    v = rng.integers(0, q, n).tolist()
    stream = rng.integers(0, q, n).tolist()
    factory = lambda m: make_convolver("partitioned", v, q, memory=m)  # noqa: E731
    mem, outs = _record(factory, stream)
    enc = encode_interval(mem, None, 0, 3, 7)
    assert enc.count > 0
    truncated = Encoding(enc.w, 0, 3, 7, enc.entries[1:])
    with pytest.raises(ReplayError):
        replay_decode(factory, stream, truncated, 0, 3, 7, original=mem.trace)
    bogus = Encoding(enc.w, 0, 3, 7, enc.entries + ((10**6, 0),))
    with pytest.raises(ReplayError):
        replay_decode(factory, stream, bogus, 0, 3, 7)
    with pytest.raises(ReplayError):
        replay_decode(factory, stream, enc, 0, 1, 3)
    assert issubclass(ReplayError, InvariantViolation)


def test_replay_detects_nondeterminism():
    rng = np.random.default_rng(4)
    n, q = 8, 5
    v = rng.integers(0, q, n).tolist()
    stream = rng.integers(0, q, n).tolist()
    mem, _ = _record(lambda m: make_convolver("partitioned", v, q, memory=m), stream)
    enc = encode_interval(mem, None, 0, 3, 7)
    # A different engine replays against the partitioned engine's record.
    with pytest.raises(ReplayError):
        replay_decode(lambda m: make_convolver("naive", v, q, memory=m), stream, enc, 0, 3, 7, original=mem.trace)
