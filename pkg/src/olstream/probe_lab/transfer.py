"""Information transfer between time intervals, and the encode/replay construction.

IT(t0, t1, t2) is the set of cells written during operations [t0, t1] and read
during [t1+1, t2] before any write to them in [t1+1, t2].  Events are taken in
trace order: inside an operation the engine's reads precede its (flushed)
writes.

Every read whose cell was last written at an earlier operation t_w belongs to
exactly one tree node, the lowest common ancestor of t_w and t_r, which is why
summing |IT(v)| over the tree never exceeds the number of reads.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ..errors import InvariantViolation
from .memory import READ, WRITE, CellMemory, ProbeTrace


class ReplayError(InvariantViolation):
    """Replay could not be completed faithfully (bad encoding or non-deterministic engine)."""


# -- last-write index ---------------------------------------------------------


def last_write_ops(trace: ProbeTrace) -> np.ndarray:
    """For every event, the operation of the latest earlier write to the same cell (-1 if none)."""
    cached = getattr(trace, "_last_write_cache", None)
    if cached is not None and len(cached) == len(trace):
        return cached
    ops, kinds, addrs = trace.arrays()
    n = len(ops)
    out = np.full(n, -1, dtype=np.int64)
    if n:
        order = np.lexsort((np.arange(n), addrs))
        s_addr = addrs[order]
        s_val = np.where(kinds[order] == WRITE, ops[order] + 1, 0)
        start = np.ones(n, dtype=bool)
        start[1:] = s_addr[1:] != s_addr[:-1]
        gid = np.cumsum(start) - 1
        span = int(ops.max()) + 2
        incl = np.maximum.accumulate(gid * span + s_val) - gid * span
        incl = np.maximum(incl, 0)
        excl = np.zeros(n, dtype=np.int64)
        excl[1:] = incl[:-1]
        excl[start] = 0
        out[order] = excl - 1
    trace._last_write_cache = out
    return out


def _check_interval(t0: int, t1: int, t2: int, n: int | None = None) -> None:
    if not 0 <= t0 <= t1 < t2:
        raise ValueError(f"need 0 <= t0 <= t1 < t2, got ({t0}, {t1}, {t2})")
    if n is not None and t2 >= n:
        raise ValueError(f"t2={t2} beyond the {n} recorded operations")


def information_transfer(trace: ProbeTrace, t0: int, t1: int, t2: int, n: int | None = None) -> set[int]:
    _check_interval(t0, t1, t2, n)
    ops, kinds, addrs = trace.arrays()
    lw = last_write_ops(trace)
    sel = (kinds == READ) & (ops > t1) & (ops <= t2) & (lw >= t0) & (lw <= t1)
    return set(int(a) for a in np.unique(addrs[sel]))


def information_transfer_reference(trace: ProbeTrace, t0: int, t1: int, t2: int) -> set[int]:
    """Quadratic scan straight from the definition (test oracle)."""
    _check_interval(t0, t1, t2)
    ops, kinds, addrs = trace.arrays()
    out = set()
    for r in range(len(ops)):
        if kinds[r] != READ or not t1 < ops[r] <= t2:
            continue
        for e in range(r - 1, -1, -1):
            if addrs[e] == addrs[r] and kinds[e] == WRITE:
                if t0 <= ops[e] <= t1:
                    out.add(int(addrs[r]))
                break
    return out


@dataclass
class ITProfile:
    sizes: dict  # (level, index) -> |IT(v)|
    total: int
    reads: int

    def size(self, node) -> int:
        return self.sizes.get((node.level, node.index), 0)


def it_profile(trace: ProbeTrace, tree) -> ITProfile:
    """|IT(v)| for every internal node of ``tree``, plus their sum and the read count."""
    ops, kinds, addrs = trace.arrays()
    lw = last_write_ops(trace)
    sizes = {(v.level, v.index): 0 for v in tree.nodes}
    sel = (kinds == READ) & (lw >= 0) & (lw < ops) & (ops < tree.n)
    tw, tr, a = lw[sel], ops[sel], addrs[sel]
    if len(tr):
        # bit_length(tw ^ tr) is the level of the lowest common ancestor.
        level = np.frexp((tw ^ tr).astype(np.float64))[1].astype(np.int64)
        index = tr >> level
        # Unique (node, cell) pairs: a cell counts once per node however often it is read.
        key = np.stack((level, index, a), axis=1)
        uniq = np.unique(key, axis=0)
        nodes, counts = np.unique(uniq[:, :2], axis=0, return_counts=True)
        for (lv, ix), c in zip(nodes, counts):
            sizes[(int(lv), int(ix))] = int(c)
    return ITProfile(sizes, int(sum(sizes.values())), int(np.sum(kinds == READ)))


# -- encoding and replay ---------------------------------------------------------


@dataclass(frozen=True)
class Encoding:
    w: int
    t0: int
    t1: int
    t2: int
    entries: tuple[tuple[int, int], ...]  # (address, value at the end of op t1)

    @property
    def count(self) -> int:
        return len(self.entries)

    @property
    def bits(self) -> int:
        return self.w * (1 + 2 * len(self.entries))

    def words(self) -> list[int]:
        """The encoding as w-bit words: count, then address/value pairs."""
        out = [len(self.entries)]
        for a, v in self.entries:
            out.extend((a, v))
        return out

    @classmethod
    def from_words(cls, words: Sequence[int], w: int, t0: int, t1: int, t2: int) -> "Encoding":
        if not words:
            raise ReplayError("empty encoding")
        count = int(words[0])
        if len(words) != 1 + 2 * count:
            raise ReplayError(f"encoding announces {count} cells but holds {len(words) - 1} words")
        pairs = tuple((int(words[1 + 2 * i]), int(words[2 + 2 * i])) for i in range(count))
        return cls(w, t0, t1, t2, pairs)


def encode_interval(memory: CellMemory, trace: ProbeTrace | None, t0: int, t1: int, t2: int) -> Encoding:
    """Addresses of IT(t0, t1, t2) with the values they held after operation t1."""
    trace = trace if trace is not None else memory.trace
    if not trace.keep_values:
        raise ValueError("encoding needs a trace recorded with keep_values=True")
    _check_interval(t0, t1, t2)
    cells = sorted(information_transfer(trace, t0, t1, t2))
    ops, kinds, addrs = trace.arrays()
    vals = trace.values()
    sel = np.nonzero((kinds == WRITE) & (ops >= t0) & (ops <= t1))[0]
    last = {}
    for e in sel:
        last[int(addrs[e])] = int(vals[e])
    entries = []
    for a in cells:
        if a not in last:
            raise InvariantViolation(f"cell {a} in IT has no write in [{t0}, {t1}]")
        entries.append((a, last[a]))
    return Encoding(memory.w, t0, t1, t2, tuple(entries))


def replay_decode(
    engine_factory: Callable[[CellMemory], object],
    inputs_outside: Sequence,
    encoding: Encoding,
    t0: int,
    t1: int,
    t2: int,
    *,
    original: ProbeTrace | None = None,
) -> list:
    """Outputs of operations t1+1..t2 without the inputs of [t0, t1].

    A fresh memory is built, operations 0..t0-1 are simulated, [t0, t1] is
    skipped, the encoded cells are restored and operations t1+1..t2 are run.
    ``inputs_outside`` gives the inputs for times 0..t2; entries inside
    [t0, t1] are ignored (use None).  When the original trace is supplied, the
    read addresses of every replayed operation are compared with it and any
    divergence raises ReplayError.
    """
    _check_interval(t0, t1, t2)
    if (encoding.t0, encoding.t1, encoding.t2) != (t0, t1, t2):
        raise ReplayError("encoding was made for a different interval")
    if len(inputs_outside) <= t2:
        raise ReplayError(f"need inputs for times 0..{t2}")
    memory = CellMemory(encoding.w)
    engine = engine_factory(memory)
    for t in range(t0):
        engine.step(inputs_outside[t])
    memory.skip_ops(t1 - t0 + 1)
    for a, v in encoding.entries:
        if not 0 <= a < memory.size:
            raise ReplayError(f"encoded address {a} outside allocated memory ({memory.size})")
        if v >> encoding.w:
            raise ReplayError(f"encoded value for cell {a} exceeds {encoding.w} bits")
        memory.poke_cells(a, np.array([v], dtype=np.uint64))
    if original is not None:
        o_ops, o_kinds, o_addrs = original.arrays()
        expected = {}
        for t in range(t1 + 1, t2 + 1):
            m = (o_ops == t) & (o_kinds == READ)
            expected[t] = np.sort(o_addrs[m])
        # The prefix and the encoding must cover every read: cells last written
        # inside [t0, t1] have to be encoded.
        lw = last_write_ops(original)
        encoded = {a for a, _ in encoding.entries}
        need = (o_kinds == READ) & (o_ops > t1) & (o_ops <= t2) & (lw >= t0) & (lw <= t1)
        missing = set(int(a) for a in o_addrs[need]) - encoded
        if missing:
            raise ReplayError(f"cells {sorted(missing)[:8]} were written in [{t0}, {t1}] but not encoded")
    outputs = []
    for t in range(t1 + 1, t2 + 1):
        mark = len(memory.trace)
        try:
            outputs.append(engine.step(inputs_outside[t]))
        except IndexError as exc:
            raise ReplayError(f"replay read outside allocated memory at op {t}: {exc}") from exc
        if original is not None:
            r_ops, r_kinds, r_addrs = memory.trace.arrays()
            got = np.sort(r_addrs[mark:][r_kinds[mark:] == READ])
            if not np.array_equal(got, expected[t]):
                raise ReplayError(f"op {t}: replay read addresses differ from the original run")
    return outputs
