"""Instrumented w-bit cell memory and the storage regions engines keep state in.

Engines never hold state between operations themselves.  Everything that must
survive from one operation to the next lives in a *region*: either an
:class:`ArrayRegion` (plain numpy storage, no accounting) or a
:class:`CellRegion` backed by a :class:`CellMemory`, which packs slots into
w-bit cells and logs every probe.

Within one operation the algorithm may keep whatever it has already seen in
free registers: a cell is charged at most one read (the first access, if that
access is a read) and at most one write (flushed when the operation ends).
"""

from __future__ import annotations

import os
import tempfile
from typing import Sequence

import numpy as np

READ = 0
WRITE = 1

TRACE_DTYPE = np.dtype([("op", "<u4"), ("kind", "u1"), ("addr", "<u8")])
DEFAULT_SPILL_LIMIT = 10**8


def cells_for_bits(bits: int, w: int) -> int:
    return -(-bits // w)


# -- digit packing -----------------------------------------------------------


def pack_digits(digits: Sequence[int], delta: int, w: int) -> list[int]:
    """Pack δ-bit digits into w-bit cells.

    floor(w/δ) digits share a cell when δ <= w (least significant first);
    otherwise each digit spills over ceil(δ/w) consecutive cells.
    """
    if delta <= w:
        per = w // delta
        cells = []
        for c in range(0, len(digits), per):
            value = 0
            for k, d in enumerate(digits[c : c + per]):
                value |= int(d) << (k * delta)
            cells.append(value)
        return cells
    cps = cells_for_bits(delta, w)
    mask = (1 << w) - 1
    return [(int(d) >> (k * w)) & mask for d in digits for k in range(cps)]


def unpack_digits(cells: Sequence[int], delta: int, w: int, count: int) -> list[int]:
    """Inverse of :func:`pack_digits` for the first ``count`` digits."""
    if delta <= w:
        per = w // delta
        mask = (1 << delta) - 1
        out = [(int(cells[i // per]) >> ((i % per) * delta)) & mask for i in range(count)]
        return out
    cps = cells_for_bits(delta, w)
    out = []
    for i in range(count):
        value = 0
        for k in range(cps):
            value |= int(cells[i * cps + k]) << (k * w)
        out.append(value)
    return out


# -- trace ---------------------------------------------------------------------


class ProbeTrace:
    """Time-ordered log of (operation index, read/write, cell address) events.

    Events are kept in memory in numpy chunks; beyond ``spill_limit`` events the
    chunks are streamed to a temporary file in the binary dump format.
    """

    def __init__(self, *, keep_values: bool = False, spill_limit: int = DEFAULT_SPILL_LIMIT):
        self.keep_values = keep_values
        self.spill_limit = spill_limit
        self._ops: list[np.ndarray] = []
        self._kinds: list[np.ndarray] = []
        self._addrs: list[np.ndarray] = []
        self._vals: list[np.ndarray] = []
        self._in_memory = 0
        self._spilled = 0
        self._spill_path: str | None = None
        self._vals_path: str | None = None
        self._cache = None
        self.reads = 0
        self.writes = 0
        self.ops = 0

    def __len__(self) -> int:
        return self._in_memory + self._spilled

    def __del__(self):
        for path in (self._spill_path, self._vals_path):
            if path and os.path.exists(path):
                try:
                    os.remove(path)
                except OSError:
                    pass

    def record(self, op: int, kind: int, addrs: np.ndarray, values: np.ndarray | None = None) -> None:
        n = len(addrs)
        if n == 0:
            return
        self._ops.append(np.full(n, op, dtype=np.uint32))
        self._kinds.append(np.full(n, kind, dtype=np.uint8))
        self._addrs.append(np.asarray(addrs, dtype=np.uint64))
        if self.keep_values:
            if values is None:
                values = np.zeros(n, dtype=np.uint64)
            self._vals.append(np.asarray(values, dtype=np.uint64))
        if kind == READ:
            self.reads += n
        else:
            self.writes += n
        self._in_memory += n
        self._cache = None
        if self._in_memory > self.spill_limit:
            self._spill()

    def _spill(self) -> None:
        if self._spill_path is None:
            fd, self._spill_path = tempfile.mkstemp(prefix="olstream-trace-", suffix=".bin")
            os.close(fd)
            if self.keep_values:
                fd, self._vals_path = tempfile.mkstemp(prefix="olstream-vals-", suffix=".bin")
                os.close(fd)
        records = self._memory_records()
        with open(self._spill_path, "ab") as fh:
            records.tofile(fh)
        if self.keep_values:
            with open(self._vals_path, "ab") as fh:
                np.concatenate(self._vals).astype("<u8").tofile(fh)
        self._spilled += len(records)
        self._ops, self._kinds, self._addrs, self._vals = [], [], [], []
        self._in_memory = 0

    def _memory_records(self) -> np.ndarray:
        rec = np.empty(self._in_memory, dtype=TRACE_DTYPE)
        if self._in_memory:
            rec["op"] = np.concatenate(self._ops)
            rec["kind"] = np.concatenate(self._kinds)
            rec["addr"] = np.concatenate(self._addrs)
        return rec

    def records(self) -> np.ndarray:
        """All events as a structured array with fields op, kind, addr."""
        if self._cache is not None:
            return self._cache
        rec = self._memory_records()
        if self._spilled:
            rec = np.concatenate((np.fromfile(self._spill_path, dtype=TRACE_DTYPE), rec))
        self._cache = rec
        return rec

    def values(self) -> np.ndarray:
        """Values stored by write events (zeros for reads); needs keep_values."""
        if not self.keep_values:
            raise ValueError("trace was recorded without values")
        parts = []
        if self._spilled:
            parts.append(np.fromfile(self._vals_path, dtype="<u8"))
        parts.extend(self._vals)
        if not parts:
            return np.zeros(0, dtype=np.uint64)
        return np.concatenate(parts)

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        rec = self.records()
        return (
            rec["op"].astype(np.int64),
            rec["kind"].astype(np.int64),
            rec["addr"].astype(np.int64),
        )

    def dump(self, path: str | os.PathLike) -> None:
        """Write little-endian records (u32 op, u8 kind, u64 address)."""
        self.records().tofile(path)

    @classmethod
    def load(cls, path: str | os.PathLike) -> "ProbeTrace":
        rec = np.fromfile(path, dtype=TRACE_DTYPE)
        return cls.from_events(rec["op"], rec["kind"], rec["addr"])

    @classmethod
    def from_events(cls, ops, kinds, addrs) -> "ProbeTrace":
        """Build a trace from parallel sequences (events taken in the given order)."""
        trace = cls()
        ops = np.asarray(ops, dtype=np.int64)
        kinds = np.asarray(kinds, dtype=np.int64)
        addrs = np.asarray(addrs, dtype=np.int64)
        if len(ops) and np.any(np.diff(ops) < 0):
            raise ValueError("operation indices must be non-decreasing")
        if len(ops):
            trace._ops.append(ops.astype(np.uint32))
            trace._kinds.append(kinds.astype(np.uint8))
            trace._addrs.append(addrs.astype(np.uint64))
            trace._in_memory = len(ops)
            trace.reads = int(np.sum(kinds == READ))
            trace.writes = int(np.sum(kinds == WRITE))
            trace.ops = int(ops.max()) + 1
        return trace


# -- regions -----------------------------------------------------------------


class Region:
    """A named array of fixed-width slots."""

    name: str
    length: int
    slot_bits: int

    def read(self, i: int, j: int) -> np.ndarray:
        raise NotImplementedError

    def write(self, i: int, values) -> None:
        raise NotImplementedError

    def peek(self, i: int, j: int) -> np.ndarray:
        raise NotImplementedError

    def get(self, i: int) -> int:
        return int(self.read(i, i + 1)[0])

    def set(self, i: int, value: int) -> None:
        self.write(i, [value])

    def add(self, i: int, values, q: int | None = None) -> None:
        cur = self.read(i, i + len(values))
        new = cur + values
        self.write(i, new % q if q is not None else new)

    def _ring_spans(self, start: int, count: int):
        if count > self.length:
            raise ValueError(f"ring span of {count} exceeds region {self.name} ({self.length})")
        s = start % self.length
        first = min(count, self.length - s)
        spans = [(s, s + first, 0)]
        if first < count:
            spans.append((0, count - first, first))
        return spans

    def read_ring(self, start: int, count: int) -> np.ndarray:
        spans = self._ring_spans(start, count)
        if len(spans) == 1:
            a, b, _ = spans[0]
            return self.read(a, b)
        return np.concatenate([self.read(a, b) for a, b, _ in spans])

    def write_ring(self, start: int, values) -> None:
        for a, b, off in self._ring_spans(start, len(values)):
            self.write(a, values[off : off + (b - a)])

    def add_ring(self, start: int, values, q: int | None = None) -> None:
        for a, b, off in self._ring_spans(start, len(values)):
            self.add(a, values[off : off + (b - a)], q)


def _slot_dtype(slot_bits: int):
    return np.int64 if slot_bits <= 62 else object


class ArrayRegion(Region):
    """Uninstrumented region backed by a numpy array.

    ``growable`` regions extend with zeros on writes past the end and read
    zeros there, so engines without a fixed horizon can use them.
    """

    def __init__(self, name: str, length: int, slot_bits: int, *, growable: bool = False):
        self.name = name
        self.slot_bits = slot_bits
        self.growable = growable
        self.data = np.zeros(max(length, 1), dtype=_slot_dtype(slot_bits))
        self.length = length

    def _ensure(self, j: int) -> None:
        if j <= len(self.data):
            self.length = max(self.length, j)
            return
        if not self.growable:
            raise IndexError(f"slot {j - 1} beyond region {self.name} of length {self.length}")
        new = np.zeros(max(j, 2 * len(self.data)), dtype=self.data.dtype)
        new[: len(self.data)] = self.data
        self.data = new
        self.length = j

    def read(self, i: int, j: int) -> np.ndarray:
        if j > self.length:
            if not self.growable:
                raise IndexError(f"slots [{i}, {j}) beyond region {self.name}")
            out = np.zeros(j - i, dtype=self.data.dtype)
            hi = min(j, self.length)
            if hi > i:
                out[: hi - i] = self.data[i:hi]
            return out
        return self.data[i:j].copy()

    peek = read

    def write(self, i: int, values) -> None:
        j = i + len(values)
        self._ensure(j)
        self.data[i:j] = values

    def get(self, i: int) -> int:
        if i >= self.length:
            if not self.growable:
                raise IndexError(f"slot {i} beyond region {self.name}")
            return 0
        return int(self.data[i])

    def set(self, i: int, value: int) -> None:
        self._ensure(i + 1)
        self.data[i] = value


class PlainStore:
    """Storage provider for uninstrumented engines: no probes are charged."""

    w = None
    instrumented = False

    def region(self, name: str, length: int, slot_bits: int, *, growable: bool = False) -> ArrayRegion:
        return ArrayRegion(name, length, slot_bits, growable=growable)

    def begin_op(self) -> None:
        pass

    def end_op(self) -> None:
        pass

    def charge_input(self, bits: int) -> None:
        pass

    def emit_output(self, bits: int) -> None:
        pass


class CellMemory:
    """Word-addressed memory of w-bit cells with an append-only probe trace."""

    instrumented = True

    def __init__(self, w: int = 64, *, keep_values: bool = False, spill_limit: int = DEFAULT_SPILL_LIMIT):
        if not 8 <= w <= 64:
            raise ValueError(f"cell width must be within [8, 64], got {w}")
        self.w = w
        self.w_mask = (1 << w) - 1
        self.trace = ProbeTrace(keep_values=keep_values, spill_limit=spill_limit)
        self._cells = np.zeros(256, dtype=np.uint64)
        self._stamp = np.full(256, -1, dtype=np.int64)
        self.size = 0
        self.current_op = -1
        self._next_op = 0
        self._in_op = False
        self._dirty: list[tuple[int, int]] = []
        self.regions: dict[str, CellRegion] = {}
        self._input_port: list[int] = []
        self._output_port: list[int] = []

    # allocation

    def allocate(self, ncells: int) -> int:
        base = self.size
        self.size += ncells
        if self.size > (1 << self.w):
            raise MemoryError(f"address space of {self.w}-bit cells exhausted")
        if self.size > len(self._cells):
            cap = max(self.size, 2 * len(self._cells))
            cells = np.zeros(cap, dtype=np.uint64)
            cells[: len(self._cells)] = self._cells
            stamp = np.full(cap, -1, dtype=np.int64)
            stamp[: len(self._stamp)] = self._stamp
            self._cells, self._stamp = cells, stamp
        return base

    def region(self, name: str, length: int, slot_bits: int, *, growable: bool = False) -> "CellRegion":
        if name in self.regions:
            raise ValueError(f"region {name!r} already allocated")
        reg = CellRegion(self, name, length, slot_bits)
        self.regions[name] = reg
        return reg

    # operation framing

    @property
    def op_count(self) -> int:
        return self._next_op

    def begin_op(self) -> None:
        if self._in_op:
            raise RuntimeError("operation already in progress")
        self.current_op = self._next_op
        self._next_op += 1
        self._in_op = True

    def end_op(self) -> None:
        if not self._in_op:
            raise RuntimeError("no operation in progress")
        if self._dirty:
            addrs = np.unique(np.concatenate([np.arange(a, b) for a, b in self._dirty]))
            self.trace.record(self.current_op, WRITE, addrs, self._cells[addrs] if self.trace.keep_values else None)
            self._dirty = []
        self._in_op = False
        self.trace.ops = self._next_op

    def skip_ops(self, count: int) -> None:
        """Advance the operation counter without executing anything."""
        if self._in_op:
            raise RuntimeError("cannot skip inside an operation")
        self._next_op += count

    # probes

    def _check_range(self, a0: int, a1: int) -> None:
        if not self._in_op:
            raise RuntimeError("cell access outside an operation")
        if a0 < 0 or a1 > self.size:
            raise IndexError(f"cells [{a0}, {a1}) outside allocated memory ({self.size})")

    def read_cells(self, a0: int, a1: int) -> np.ndarray:
        self._check_range(a0, a1)
        stamp = self._stamp[a0:a1]
        fresh = np.nonzero(stamp != self.current_op)[0]
        if len(fresh):
            self.trace.record(self.current_op, READ, fresh + a0)
            stamp[fresh] = self.current_op
        return self._cells[a0:a1].copy()

    def write_cells(self, a0: int, values) -> None:
        a1 = a0 + len(values)
        self._check_range(a0, a1)
        self._cells[a0:a1] = values
        self._stamp[a0:a1] = self.current_op
        self._dirty.append((a0, a1))

    def peek_cells(self, a0: int, a1: int) -> np.ndarray:
        return self._cells[a0:a1].copy()

    def poke_cells(self, a0: int, values) -> None:
        """Set cell contents without charging a probe (decoder bookkeeping)."""
        self._cells[a0 : a0 + len(values)] = values

    def _port(self, port: list[int], cells: int) -> list[int]:
        while len(port) < cells:
            port.append(self.allocate(1))
        return port[:cells]

    def charge_input(self, bits: int) -> None:
        """Charge the reads that deliver an operation's input (never written by the engine)."""
        for a in self._port(self._input_port, cells_for_bits(bits, self.w)):
            self.read_cells(a, a + 1)

    def emit_output(self, bits: int) -> None:
        """Charge the writes of one result to the output region."""
        for a in self._port(self._output_port, cells_for_bits(bits, self.w)):
            self.write_cells(a, np.zeros(1, dtype=np.uint64))

    def snapshot(self) -> np.ndarray:
        return self._cells[: self.size].copy()


class CellRegion(Region):
    """Slots of ``slot_bits`` bits packed into consecutive cells of a CellMemory."""

    def __init__(self, memory: CellMemory, name: str, length: int, slot_bits: int):
        if slot_bits < 1:
            raise ValueError("slot width must be positive")
        self.memory = memory
        self.name = name
        self.length = length
        self.slot_bits = slot_bits
        w = memory.w
        if slot_bits <= w:
            self.per_cell = w // slot_bits
            self.cells_per_slot = 1
            ncells = -(-length // self.per_cell)
            self._shifts = (np.arange(self.per_cell, dtype=np.uint64) * np.uint64(slot_bits))
            self._mask = np.uint64((1 << slot_bits) - 1)
        else:
            self.per_cell = 0
            self.cells_per_slot = cells_for_bits(slot_bits, w)
            ncells = length * self.cells_per_slot
        self.ncells = ncells
        self.base = memory.allocate(ncells)
        self._dtype = _slot_dtype(slot_bits)

    def _check(self, i: int, j: int) -> None:
        if i < 0 or j > self.length or i > j:
            raise IndexError(f"slots [{i}, {j}) outside region {self.name} of length {self.length}")

    def _unpack(self, cells: np.ndarray, off: int, count: int) -> np.ndarray:
        if self.per_cell:
            digits = ((cells[:, None] >> self._shifts[None, :]) & self._mask).reshape(-1)
            digits = digits[off : off + count]
            return digits.astype(np.int64) if self._dtype is np.int64 else np.array(
                [int(d) for d in digits], dtype=object
            )
        vals = unpack_digits([int(c) for c in cells], self.slot_bits, self.memory.w, count)
        return np.array(vals, dtype=self._dtype)

    def _pack(self, digits: np.ndarray) -> np.ndarray:
        if self.per_cell:
            d = np.asarray(digits).astype(np.uint64).reshape(-1, self.per_cell)
            return np.bitwise_or.reduce(d << self._shifts[None, :], axis=1)
        return np.array(pack_digits(digits, self.slot_bits, self.memory.w), dtype=np.uint64)

    def _cell_span(self, i: int, j: int) -> tuple[int, int]:
        if self.per_cell:
            return i // self.per_cell, (j - 1) // self.per_cell + 1
        return i * self.cells_per_slot, j * self.cells_per_slot

    def read(self, i: int, j: int) -> np.ndarray:
        self._check(i, j)
        if i == j:
            return np.zeros(0, dtype=self._dtype)
        c0, c1 = self._cell_span(i, j)
        cells = self.memory.read_cells(self.base + c0, self.base + c1)
        off = i - c0 * self.per_cell if self.per_cell else 0
        return self._unpack(cells, off, j - i)

    def peek(self, i: int, j: int) -> np.ndarray:
        self._check(i, j)
        if i == j:
            return np.zeros(0, dtype=self._dtype)
        c0, c1 = self._cell_span(i, j)
        cells = self.memory.peek_cells(self.base + c0, self.base + c1)
        off = i - c0 * self.per_cell if self.per_cell else 0
        return self._unpack(cells, off, j - i)

    def write(self, i: int, values) -> None:
        count = len(values)
        j = i + count
        self._check(i, j)
        if count == 0:
            return
        top = 1 << self.slot_bits
        for v in (values if self._dtype is object or count < 8 else (np.min(values), np.max(values))):
            if not 0 <= int(v) < top:
                raise ValueError(f"value {int(v)} does not fit a {self.slot_bits}-bit slot of {self.name}")
        c0, c1 = self._cell_span(i, j)
        if self.per_cell:
            per = self.per_cell
            ncell = c1 - c0
            full = np.zeros(ncell * per, dtype=np.uint64)
            lo = i - c0 * per
            hi = lo + count
            live = min(ncell * per, self.length - c0 * per)
            # A partially covered cell must be read before it is rewritten;
            # slots past the region end are always zero and need no read.
            if lo > 0 or (ncell == 1 and hi < live):
                first = self.memory.read_cells(self.base + c0, self.base + c0 + 1)
                full[:per] = self._unpack(first, 0, per).astype(np.uint64)
            if ncell > 1 and hi < live:
                last = self.memory.read_cells(self.base + c1 - 1, self.base + c1)
                full[-per:] = self._unpack(last, 0, per).astype(np.uint64)
            if self._dtype is object:
                full[lo:hi] = np.asarray([int(v) for v in values], dtype=np.uint64)
            else:
                full[lo:hi] = np.asarray(values).astype(np.uint64)
            self.memory.write_cells(self.base + c0, self._pack(full))
        else:
            self.memory.write_cells(self.base + c0, self._pack([int(v) for v in values]))
