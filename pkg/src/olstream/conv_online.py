"""Online convolution: after each arriving value, emit <A, V> mod q.

``A`` is the window of the last n stream values (oldest first, zeros before
the stream starts) and ``V`` is fixed.  Writing ``taps[j] = V[n-1-j]``, the
output at time t is P_t = sum_j taps[j] * Δ_{t-j}.

Two engines share the same storage contract (see ``probe_lab.memory``):

* :class:`NaiveConvolver` recomputes the full inner product every step.
* :class:`PartitionedConvolver` splits the taps into {0} and doubling segments
  [B, 2B).  Whenever B divides t+1, the newest B inputs are convolved with
  segment [B, 2B) and the result is added into an accumulator ring at
  positions t+1 .. t+2B-1, i.e. strictly in the future.  Tap 0 is applied on
  arrival.  Amortised work per step is O(log n) block-products of total size
  O(n log n) over n steps.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .modring import FixedKernel, ModContext, ZqVector, as_zq_vector
from .probe_lab.memory import PlainStore

CLOCK_BITS = 63


def _pow2_at_least(n: int) -> int:
    return 1 << max(0, (n - 1).bit_length())


@dataclass(frozen=True)
class FlushEntry:
    block_size: int
    inputs: tuple[int, int]  # stream positions [start, stop)
    taps: tuple[int, int]  # tap indices [start, stop)


def flush_schedule(t: int, n: int) -> list[FlushEntry]:
    """Block products the partitioned engine performs at step ``t`` for window ``n``.

    One entry per B = 2**k with B <= n/2 and (t+1) % B == 0.  Tap 0 is applied
    directly every step and is never listed.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    n = _pow2_at_least(n)
    tau = t + 1
    out = []
    b = 1
    while 2 * b <= n:
        if tau % b == 0:
            out.append(FlushEntry(b, (t - b + 1, t + 1), (b, 2 * b)))
        b *= 2
    return out


class _ConvolverBase:
    def __init__(self, v: Sequence[int] | ZqVector, q: int | None = None, *, memory=None):
        vec = as_zq_vector(v, q)
        if len(vec) == 0:
            raise ValueError("V must be non-empty")
        self.ctx: ModContext = vec.ctx
        self.q = vec.q
        self.v = vec
        self.n = _pow2_at_least(len(vec))
        # Zero padding goes on the oldest end so outputs are unchanged.
        padded = np.zeros(self.n, dtype=np.int64)
        padded[self.n - len(vec) :] = vec.elems
        self.padded_v = padded
        self.taps = padded[::-1].copy()
        self.store = memory if memory is not None else PlainStore()
        delta = max(1, self.ctx.delta)
        self.digit_bits = delta
        self.clock = self.store.region("clock", 1, CLOCK_BITS)
        self.window = self.store.region("window", self.n, delta)

    @property
    def t(self) -> int:
        return int(self.clock.peek(0, 1)[0])

    def window_values(self) -> list[int]:
        """The current vector A (oldest first), read without charging probes."""
        t, n = self.t, self.n
        ring = self.window.peek(0, n)
        out = []
        for s in range(t - n, t):
            out.append(int(ring[s % n]) if s >= 0 else 0)
        return out

    def _begin(self, delta: int) -> int:
        if not 0 <= delta < self.q:
            raise ValueError(f"stream value {delta} outside [0, {self.q})")
        store = self.store
        store.begin_op()
        store.charge_input(self.digit_bits)
        return self.clock.get(0)

    def _finish(self, t: int) -> None:
        self.clock.set(0, t + 1)
        self.store.emit_output(self.digit_bits)
        self.store.end_op()

    def step(self, delta: int) -> int:
        return self.next(delta)

    def run(self, stream: Iterable[int]) -> list[int]:
        return [self.next(int(x)) for x in stream]


class NaiveConvolver(_ConvolverBase):
    """O(n) inner product per arriving value; the reference oracle."""

    def __init__(self, v, q=None, *, memory=None):
        super().__init__(v, q, memory=memory)
        self._wide = self.n * (self.q - 1) ** 2 > (1 << 62)
        self._v_obj = self.padded_v.astype(object) if self._wide else None

    def next(self, delta: int) -> int:
        delta = int(delta)
        t = self._begin(delta)
        n = self.n
        self.window.set(t % n, delta)
        # Ring slot s % n holds Δ_s; lay the window out oldest first.
        a = self.window.read_ring(t + 1, n)
        if self._wide:
            out = int(np.dot(a.astype(object), self._v_obj) % self.q)
        else:
            out = int(np.dot(a, self.padded_v) % self.q)
        self._finish(t)
        return out


class PartitionedConvolver(_ConvolverBase):
    """Doubling tap segments with block products flushed into an accumulator ring."""

    def __init__(self, v, q=None, *, memory=None):
        super().__init__(v, q, memory=memory)
        n = self.n
        self.acc = self.store.region("acc", 2 * n, self.digit_bits)
        self.tap0 = int(self.taps[0])
        self.kernels: dict[int, FixedKernel] = {}
        b = 1
        while 2 * b <= n:
            self.kernels[b] = FixedKernel(self.taps[b : 2 * b], self.q, b)
            b *= 2

    def next(self, delta: int) -> int:
        delta = int(delta)
        t = self._begin(delta)
        n, q = self.n, self.q
        self.window.set(t % n, delta)
        slot = t % (2 * n)
        out = (self.acc.get(slot) + self.tap0 * delta) % q
        self.acc.set(slot, 0)
        tau = t + 1
        b = 1
        while 2 * b <= n and tau % b == 0:
            kernel = self.kernels[b]
            if kernel.nonzero:
                block = self.window.read_ring(t - b + 1, b)
                self.acc.add_ring(t + 1, kernel.apply(block)[: 2 * b - 1], q)
            b *= 2
        self._finish(t)
        return out


ENGINES = {"naive": NaiveConvolver, "partitioned": PartitionedConvolver}


def make_convolver(kind: str, v, q=None, *, memory=None):
    try:
        cls = ENGINES[kind]
    except KeyError:
        raise ValueError(f"unknown convolution engine {kind!r}; expected one of {sorted(ENGINES)}") from None
    return cls(v, q, memory=memory)
