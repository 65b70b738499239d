import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from olstream.probe_lab import READ, WRITE, CellMemory, PlainStore, ProbeTrace, pack_digits, unpack_digits


@settings(max_examples=200, deadline=None)
@given(st.integers(8, 64), st.integers(1, 130), st.data())
def test_pack_round_trip(w, delta, data):
    digits = data.draw(st.lists(st.integers(0, 2**delta - 1), max_size=40))
    cells = pack_digits(digits, delta, w)
    assert all(0 <= c < 2**w for c in cells)
    if delta <= w:
        assert len(cells) == -(-len(digits) // (w // delta))
    else:
        assert len(cells) == len(digits) * -(-delta // w)
    assert unpack_digits(cells, delta, w, len(digits)) == digits


def test_read_your_writes_and_default_zero():
    mem = CellMemory(16)
    reg = mem.region("r", 10, 5)
    mem.begin_op()
    assert reg.read(0, 10).tolist() == [0] * 10
    reg.write(2, [31, 7, 1])
    assert reg.read(0, 5).tolist() == [0, 0, 31, 7, 1]
    mem.end_op()
    mem.begin_op()
    assert reg.get(3) == 7
    reg.set(3, 9)
    mem.end_op()
    mem.begin_op()
    assert reg.read(0, 10).tolist() == [0, 0, 31, 9, 1, 0, 0, 0, 0, 0]
    mem.end_op()


def test_probe_accounting_per_op():
    mem = CellMemory(64)
    reg = mem.region("r", 16, 8)  # 8 slots per cell -> 2 cells
    mem.begin_op()
    reg.read(0, 16)
    reg.read(0, 16)  # cached within the op
    reg.set(0, 5)
    reg.set(1, 6)  # same cell, one flushed write
    mem.end_op()
    ops, kinds, addrs = mem.trace.arrays()
    assert mem.trace.reads == 2 and mem.trace.writes == 1
    assert kinds.tolist() == [READ, READ, WRITE]
    assert ops.tolist() == [0, 0, 0]
    mem.begin_op()
    reg.set(15, 1)  # partial cell: read then write
    mem.end_op()
    assert mem.trace.reads == 3 and mem.trace.writes == 2


def test_full_cell_write_needs_no_read():
    mem = CellMemory(64)
    reg = mem.region("r", 16, 8)
    mem.begin_op()
    reg.write(0, list(range(8)))
    mem.end_op()
    assert mem.trace.reads == 0 and mem.trace.writes == 1


def test_spill_cells_for_wide_slots():
    mem = CellMemory(8)
    reg = mem.region("wide", 3, 20)
    assert reg.ncells == 9
    mem.begin_op()
    reg.write(0, [2**20 - 1, 12345, 0])
    mem.end_op()
    mem.begin_op()
    assert reg.read(0, 3).tolist() == [2**20 - 1, 12345, 0]
    mem.end_op()


def test_object_slots_beyond_int64():
    mem = CellMemory(64)
    reg = mem.region("big", 2, 130)
    mem.begin_op()
    reg.write(0, [2**129 + 5, 3])
    assert [int(x) for x in reg.read(0, 2)] == [2**129 + 5, 3]
    mem.end_op()


def test_errors():
    with pytest.raises(ValueError):
        CellMemory(7)
    with pytest.raises(ValueError):
        CellMemory(65)
    mem = CellMemory(16)
    reg = mem.region("r", 4, 4)
    with pytest.raises(RuntimeError):
        reg.read(0, 1)
    mem.begin_op()
    with pytest.raises(IndexError):
        reg.read(0, 5)
    with pytest.raises(ValueError):
        reg.set(0, 16)
    with pytest.raises(RuntimeError):
        mem.begin_op()
    mem.end_op()
    with pytest.raises(ValueError):
        mem.region("r", 1, 1)
    small = CellMemory(8)
    with pytest.raises(MemoryError):
        small.allocate(257)


def test_ring_helpers_plain_and_cells():
    for store in (PlainStore(), CellMemory(32)):
        reg = store.region("ring", 8, 10)
        store.begin_op()
        reg.write_ring(6, [1, 2, 3, 4])
        assert reg.read_ring(6, 4).tolist() == [1, 2, 3, 4]
        assert reg.read(0, 2).tolist() == [3, 4]
        reg.add_ring(7, [10, 10], q=11)
        assert reg.read_ring(6, 4).tolist() == [1, 1, 2, 4]
        store.end_op()


def test_io_ports_are_charged():
    mem = CellMemory(8)
    mem.begin_op()
    mem.charge_input(20)
    mem.emit_output(9)
    mem.end_op()
    assert mem.trace.reads == 3 and mem.trace.writes == 2


def test_trace_dump_load(tmp_path):
    mem = CellMemory(64)
    reg = mem.region("r", 4, 64)
    for t in range(5):
        mem.begin_op()
        reg.get(t % 4)
        reg.set((t + 1) % 4, t)
        mem.end_op()
    path = tmp_path / "trace.bin"
    mem.trace.dump(path)
    assert path.stat().st_size == 13 * len(mem.trace)
    back = ProbeTrace.load(path)
    for a, b in zip(back.arrays(), mem.trace.arrays()):
        assert np.array_equal(a, b)
    assert back.reads == mem.trace.reads and back.writes == mem.trace.writes


def test_trace_spills_to_disk():
    mem = CellMemory(64, keep_values=True, spill_limit=5)
    reg = mem.region("r", 64, 64)
    for t in range(20):
        mem.begin_op()
        reg.write(0, list(range(t, t + 3)))
        mem.end_op()
    assert mem.trace._spilled > 0
    assert len(mem.trace) == 60
    vals = mem.trace.values()
    assert vals[-3:].tolist() == [19, 20, 21]


def test_from_events_requires_order():
    with pytest.raises(ValueError):
        ProbeTrace.from_events([1, 0], [0, 0], [0, 0])


def test_skip_ops_advances_clock():
    mem = CellMemory(16)
    mem.skip_ops(3)
    mem.begin_op()
    assert mem.current_op == 3
    mem.end_op()
