"""Online integer multiplication in base q.

At step t the pair (X[t], Y[t]) arrives and digit Z[t] of Z = X * Y is
emitted.  Z[t] depends only on the t+1 lowest digits of each factor, so it can
be finalised once every cross term X[a]*Y[b] with a + b = t has been added in.

The relaxed engine schedules cross terms as follows (τ = t + 1):

* base terms X[t]*Y[0] and X[0]*Y[t] (only X[0]*Y[0] at t = 0);
* for each B = 2**k dividing τ: if τ >= 2B the vertical square
  X[B..2B) x Y[τ-B..τ); if τ >= 3B the horizontal square Y[B..2B) x X[τ-B..τ).

Every index pair is covered exactly once, and each square lands at positions
>= τ, so the accumulator slot for position t is complete when t is emitted.
Carries are propagated one position per step on exact integers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .modring import FixedKernel, bit_width, convolve_exact
from .probe_lab.memory import PlainStore

CLOCK_BITS = 63
RELAXED_MAX_BITS = 31
NAIVE_MAX_BITS = 62


@dataclass(frozen=True)
class DigitStream:
    """Digits of a non-negative integer in base q, least significant first."""

    base: int
    digits: tuple[int, ...]

    def __post_init__(self):
        if self.base < 2:
            raise ValueError("base must be at least 2")
        for d in self.digits:
            if not 0 <= d < self.base:
                raise ValueError(f"digit {d} outside [0, {self.base})")

    @classmethod
    def from_int(cls, value: int, base: int, n: int | None = None) -> "DigitStream":
        if value < 0:
            raise ValueError("value must be non-negative")
        digits = []
        v = value
        while v:
            v, d = divmod(v, base)
            digits.append(d)
        if n is not None:
            if len(digits) > n:
                raise ValueError(f"{value} needs more than {n} base-{base} digits")
            digits.extend([0] * (n - len(digits)))
        return cls(base, tuple(digits))

    @property
    def value(self) -> int:
        v = 0
        for d in reversed(self.digits):
            v = v * self.base + d
        return v

    def __len__(self) -> int:
        return len(self.digits)

    def digit(self, i: int) -> int:
        """X[i]; zero beyond the stored digits."""
        return self.digits[i] if 0 <= i < len(self.digits) else 0

    def segment(self, i: int, j: int) -> int:
        """X[i..j]: the integer written X[j] ... X[i] in base q."""
        v = 0
        for k in range(j, i - 1, -1):
            v = v * self.base + self.digit(k)
        return v


def k_number(delta: int, n: int) -> DigitStream:
    """K_{q,n} for q = 2**delta: bit i is set iff i is a power of two below n*delta."""
    if delta < 1 or n < 1 or n * delta < 2:
        raise ValueError("need delta >= 1, n >= 1 and n*delta >= 2")
    total = n * delta
    value = 0
    i = 1
    while i < total:
        value |= 1 << i
        i *= 2
    return DigitStream.from_int(value, 1 << delta, n)


@dataclass(frozen=True)
class BlockProduct:
    """X[x_range] x Y[y_range], contributing from position x_range[0] + y_range[0]."""

    x_range: tuple[int, int]
    y_range: tuple[int, int]

    def pairs(self):
        for a in range(*self.x_range):
            for b in range(*self.y_range):
                yield a, b


def relaxed_schedule(t: int) -> list[BlockProduct]:
    """Cross-term blocks the relaxed engine computes at step t."""
    if t < 0:
        raise ValueError("t must be non-negative")
    if t == 0:
        return [BlockProduct((0, 1), (0, 1))]
    tau = t + 1
    out = [BlockProduct((t, t + 1), (0, 1)), BlockProduct((0, 1), (t, t + 1))]
    b = 1
    while 2 * b <= tau and tau % b == 0:
        out.append(BlockProduct((b, 2 * b), (tau - b, tau)))
        if tau >= 3 * b:
            out.append(BlockProduct((tau - b, tau), (b, 2 * b)))
        b *= 2
    return out


def fixed_y_schedule(t: int, y_len: int) -> list[BlockProduct]:
    """Blocks used when every digit of Y is known up front.

    Y is split like a tap vector into {0} and segments [B, 2B); when B divides
    t+1 the newest B digits of X meet segment [B, 2B).
    """
    tau = t + 1
    out = [BlockProduct((t, t + 1), (0, 1))]
    b = 1
    while b < y_len and tau % b == 0:
        out.append(BlockProduct((tau - b, tau), (b, 2 * b)))
        b *= 2
    return out


class _MultiplierBase:
    max_bits = NAIVE_MAX_BITS

    def __init__(self, q: int, n: int | None = None, *, y_fixed: Sequence[int] | DigitStream | None = None, memory=None):
        if q < 2:
            raise ValueError("base must be at least 2")
        self.delta = bit_width(q)
        if self.delta > self.max_bits:
            raise ValueError(f"{type(self).__name__} supports digits of at most {self.max_bits} bits")
        self.q = q
        if y_fixed is not None:
            digits = y_fixed.digits if isinstance(y_fixed, DigitStream) else tuple(int(d) for d in y_fixed)
            for d in digits:
                if not 0 <= d < q:
                    raise ValueError(f"digit {d} outside [0, {q})")
            self.y_fixed = np.array(digits, dtype=np.int64 if self.delta <= 62 else object)
            if n is None:
                n = len(digits)
        else:
            self.y_fixed = None
        self.n = n
        self.store = memory if memory is not None else PlainStore()
        if getattr(self.store, "instrumented", False) and n is None:
            raise ValueError("instrumented engines need the digit count n")
        growable = n is None
        cap = n if n is not None else 16
        # Every accumulated position and the carry stay below 2n * q**2.
        self.acc_bits = 2 * self.delta + (2 * cap).bit_length() + 1 if n is not None else 200
        self.clock = self.store.region("clock", 1, CLOCK_BITS)
        self.xs = self.store.region("x", cap, self.delta, growable=growable)
        self.ys = None if self.y_fixed is not None else self.store.region("y", cap, self.delta, growable=growable)
        self.carry = self.store.region("carry", 1, self.acc_bits)

    @property
    def t(self) -> int:
        return int(self.clock.peek(0, 1)[0])

    def _begin(self, x: int, y: int | None) -> tuple[int, int, int]:
        q = self.q
        if not 0 <= x < q:
            raise ValueError(f"digit {x} outside [0, {q})")
        if self.y_fixed is None:
            if y is None:
                raise ValueError("a Y digit is required unless Y is fixed")
            if not 0 <= y < q:
                raise ValueError(f"digit {y} outside [0, {q})")
        store = self.store
        store.begin_op()
        store.charge_input(self.delta if self.y_fixed is not None else 2 * self.delta)
        t = self.clock.get(0)
        if self.n is not None and t >= self.n and getattr(store, "instrumented", False):
            store.end_op()
            raise IndexError(f"engine sized for {self.n} digits")
        if self.y_fixed is not None:
            fixed = int(self.y_fixed[t]) if t < len(self.y_fixed) else 0
            if y is not None and int(y) != fixed:
                store.end_op()
                raise ValueError(f"Y is fixed: digit {t} is {fixed}, got {y}")
            y = fixed
        self.xs.set(t, x)
        if self.ys is not None:
            self.ys.set(t, y)
        return t, x, y

    def _y(self, i: int, j: int) -> np.ndarray:
        if self.y_fixed is not None:
            out = np.zeros(j - i, dtype=self.y_fixed.dtype)
            hi = min(j, len(self.y_fixed))
            if hi > i:
                out[: hi - i] = self.y_fixed[i:hi]
            return out
        return self.ys.read(i, j)

    def _emit(self, t: int, total: int) -> int:
        q = self.q
        digit = total % q
        self.carry.set(0, total // q)
        self.clock.set(0, t + 1)
        self.store.emit_output(self.delta)
        self.store.end_op()
        return int(digit)

    def next_digit(self, x_digit: int, y_digit: int | None = None) -> int:
        raise NotImplementedError

    def step(self, pair) -> int:
        if isinstance(pair, tuple):
            return self.next_digit(*pair)
        return self.next_digit(int(pair))

    def run(self, xs: Iterable[int], ys: Iterable[int] | None = None) -> list[int]:
        if ys is None:
            return [self.next_digit(int(x)) for x in xs]
        return [self.next_digit(int(x), int(y)) for x, y in zip(xs, ys)]


class NaiveMultiplier(_MultiplierBase):
    """Recomputes sum_{i<=t} X[i]*Y[t-i] at every step; the reference oracle."""

    def next_digit(self, x_digit: int, y_digit: int | None = None) -> int:
        t, x, y = self._begin(int(x_digit), y_digit)
        xs = self.xs.read(0, t + 1)
        ys = self._y(0, t + 1)
        if (t + 1) * (self.q - 1) ** 2 < (1 << 62) and xs.dtype != object:
            conv = int(np.dot(xs, ys[::-1]))
        else:
            conv = sum(int(a) * int(b) for a, b in zip(xs, ys[::-1]))
        total = conv + self.carry.get(0)
        return self._emit(t, total)


class RelaxedMultiplier(_MultiplierBase):
    """Block-scheduled online multiplier with O(log n) amortised block products."""

    max_bits = RELAXED_MAX_BITS

    def __init__(self, q: int, n: int | None = None, *, y_fixed=None, memory=None):
        super().__init__(q, n, y_fixed=y_fixed, memory=memory)
        cap = self.n if self.n is not None else 16
        size = self.n if self.n is not None else 2 * cap
        self.acc = self.store.region("acc", max(1, size), self.acc_bits, growable=self.n is None)
        if self.y_fixed is not None:
            self.kernels = {}
            b = 1
            while b < len(self.y_fixed):
                seg = self._y(b, 2 * b)
                self.kernels[b] = FixedKernel(seg, q, b, reduce=False)
                b *= 2

    def _accumulate(self, pos: int, values) -> None:
        # Positions at or past n are never emitted.
        if self.n is not None:
            values = values[: max(0, self.n - pos)]
        if len(values):
            self.acc.add(pos, values)

    def next_digit(self, x_digit: int, y_digit: int | None = None) -> int:
        t, x, y = self._begin(int(x_digit), y_digit)
        q = self.q
        tau = t + 1
        if self.y_fixed is not None:
            y0 = int(self.y_fixed[0]) if len(self.y_fixed) else 0
            self.acc.add(t, [x * y0])
            b = 1
            while b in self.kernels and tau % b == 0:
                kernel = self.kernels[b]
                if kernel.nonzero:
                    block = self.xs.read(tau - b, tau)
                    self._accumulate(tau, kernel.apply(block))
                b *= 2
        else:
            if t == 0:
                self.acc.add(0, [x * y])
            else:
                x0 = self.xs.get(0)
                y0 = self.ys.get(0)
                self.acc.add(t, [x * y0 + x0 * y])
            b = 1
            while 2 * b <= tau and tau % b == 0:
                xb = self.xs.read(b, 2 * b)
                yr = self.ys.read(tau - b, tau)
                self._accumulate(tau, convolve_exact(xb, yr, q, reduce=False))
                if tau >= 3 * b:
                    yb = self.ys.read(b, 2 * b)
                    xr = self.xs.read(tau - b, tau)
                    self._accumulate(tau, convolve_exact(yb, xr, q, reduce=False))
                b *= 2
        total = self.acc.get(t) + self.carry.get(0)
        self.acc.set(t, 0)
        return self._emit(t, total)


ENGINES = {"naive": NaiveMultiplier, "relaxed": RelaxedMultiplier}


def make_multiplier(kind: str, q: int, n: int | None = None, *, y_fixed=None, memory=None):
    try:
        cls = ENGINES[kind]
    except KeyError:
        raise ValueError(f"unknown multiplication engine {kind!r}; expected one of {sorted(ENGINES)}") from None
    return cls(q, n, y_fixed=y_fixed, memory=memory)


def multiply_online(xs: Sequence[int], ys: Sequence[int], q: int, *, engine: str = "relaxed") -> list[int]:
    """Low len(xs) digits of X*Y, produced online."""
    if len(xs) != len(ys):
        raise ValueError("X and Y must have the same number of digits")
    return make_multiplier(engine, q, len(xs)).run(xs, ys)
