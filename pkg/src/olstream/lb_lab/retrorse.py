"""Retrorse digit blocks of Y and the quantity I_{Y,ℓ}.

With X' = X[t0..t1], Y' = Y[0..2ℓ-1] and Z' = Z[t1+1..t2] (Z = X*Y, both
blocks of length ℓ), Y' is retrorse when, for every context, each value of Z'
comes from at most four values of X'.

Only part of the context can matter.  Digits of X above t1 add a multiple of
q**(t1+1) to Z and so shift Z' by a constant mod q**ℓ, and digits of Y above
t2 never reach Z'.  Writing A = (X[0..t0-1] * Y) mod q**(t0+2ℓ) and
a = A // q**t0, one gets exactly

    Z' = ((X' * Y' + a) // q**ℓ) mod q**ℓ,

so the search enumerates X[0..t0-1] and Y[2ℓ..t2], computes a with exact
integers and evaluates the map over all X' at once.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ..errors import BudgetExceeded
from ..mult_online import DigitStream
from ..rng import make_rng

RETRORSE_LIMIT = 4
SEARCH_BUDGET = 10**7
T0_MODES = ("aligned", "all")
Y_HIGH_MODES = ("quantify", "fixed")


@dataclass
class RetrorseResult:
    retrorse: bool
    max_class: int
    ell: int
    q: int
    n: int
    mode: str
    t0_values: tuple[int, ...]
    contexts: int
    samples: int | None = None
    seed: int | None = None
    caveat: str = ""
    witness: dict | None = field(default=None, repr=False)


def _digits_value(digits, q: int) -> int:
    v = 0
    for d in reversed(list(digits)):
        v = v * q + int(d)
    return v


def _t0_choices(n: int, ell: int, t0_mode: str) -> list[int]:
    if t0_mode == "aligned":
        return list(range(0, n - 2 * ell + 1, 2 * ell))
    if t0_mode == "all":
        return list(range(0, n - 2 * ell + 1))
    raise ValueError(f"unknown t0 mode {t0_mode!r}; expected one of {T0_MODES}")


def z_block(x: int, y: int, q: int, t0: int, ell: int) -> int:
    """Z[t1+1..t2] of x*y as an integer (reference for the reduced map)."""
    return (x * y // q ** (t0 + ell)) % q**ell


def _class_size(y_low: int, a: int, q: int, ell: int, xs: np.ndarray, wide: bool) -> int:
    ql = q**ell
    if wide:
        z = [((int(x) * y_low + a) // ql) % ql for x in xs]
        values, counts = np.unique(np.array(z, dtype=object).astype(str), return_counts=True)
        return int(counts.max())
    z = (xs * y_low + a) // ql % ql
    return int(np.bincount(z, minlength=1).max())


def _search_size(q: int, ell: int, t0s: list[int], y_high: str) -> int:
    total = 0
    for t0 in t0s:
        t2 = t0 + 2 * ell - 1
        yfree = max(0, t2 - 2 * ell + 1) if y_high == "quantify" else 0
        total += q ** (t0 + yfree) * q**ell
    return total


def is_retrorse(
    y,
    ell: int,
    q: int,
    n: int,
    mode: str = "exhaustive",
    *,
    t0_mode: str = "aligned",
    y_high: str = "quantify",
    samples: int = 0,
    seed: int | None = None,
    budget: int = SEARCH_BUDGET,
) -> RetrorseResult:
    """Check whether the low 2ℓ digits of ``y`` are retrorse.

    ``y`` gives at least the digits Y[0..2ℓ-1] (a DigitStream or a digit
    sequence, least significant first).  With ``y_high="quantify"`` the digits
    Y[2ℓ..] range over all values; with ``"fixed"`` they are taken from ``y``
    (zero past its end).  ``t0_mode`` chooses between tree-aligned block starts
    (multiples of 2ℓ) and every start 0..n-2ℓ.

    Exhaustive mode covers every context and decides the property.  Sampled
    mode draws ``samples`` random contexts per start; it can refute the
    property but a positive answer is only evidence.
    """
    digits = list(y.digits) if isinstance(y, DigitStream) else [int(d) for d in y]
    if ell < 1 or ell & (ell - 1):
        raise ValueError(f"ell must be a power of two, got {ell}")
    if q < 2:
        raise ValueError("q must be at least 2")
    if 2 * ell > n:
        raise ValueError(f"need 2*ell <= n, got ell={ell}, n={n}")
    if len(digits) < 2 * ell:
        raise ValueError(f"need at least {2 * ell} digits of Y")
    for d in digits:
        if not 0 <= d < q:
            raise ValueError(f"digit {d} outside [0, {q})")
    if y_high not in Y_HIGH_MODES:
        raise ValueError(f"unknown y_high mode {y_high!r}; expected one of {Y_HIGH_MODES}")
    t0s = _t0_choices(n, ell, t0_mode)
    y_low = _digits_value(digits[: 2 * ell], q)
    ql = q**ell
    wide = (3 * ell) * (q - 1).bit_length() + 2 > 62
    xs = np.arange(ql, dtype=np.int64) if not wide else np.arange(ql, dtype=object)

    cache: dict[int, int] = {}
    best = 0
    witness = None
    contexts = 0

    def visit(t0: int, x_lo: int, y_val: int) -> None:
        nonlocal best, witness, contexts
        contexts += 1
        a = (x_lo * y_val) % q ** (t0 + 2 * ell) // q**t0
        size = cache.get(a)
        if size is None:
            size = _class_size(y_low, a, q, ell, xs, wide)
            cache[a] = size
        if size > best:
            best = size
            witness = {"t0": t0, "x_low": x_lo, "y": y_val, "carry_in": a}

    def y_full(t0: int, high: int) -> int:
        return y_low + high * q ** (2 * ell)

    if mode == "exhaustive":
        size = _search_size(q, ell, t0s, y_high)
        if size > budget:
            raise BudgetExceeded(f"retrorse search space {size} exceeds budget {budget}")
        for t0 in t0s:
            t2 = t0 + 2 * ell - 1
            if y_high == "quantify":
                highs = range(q ** (t2 - 2 * ell + 1))
            else:
                highs = [_digits_value(digits[2 * ell : t2 + 1], q)]
            for high in highs:
                yv = y_full(t0, high)
                for x_lo in range(q**t0):
                    visit(t0, x_lo, yv)
        caveat = ""
    elif mode == "sampled":
        if seed is None or samples < 1:
            raise ValueError("sampled mode needs a seed and a positive sample count")
        for t0 in t0s:
            rng = make_rng(seed, ell, q, n, t0)
            t2 = t0 + 2 * ell - 1
            for _ in range(samples):
                x_lo = _digits_value(rng.integers(0, q, size=t0), q)
                if y_high == "quantify":
                    high = _digits_value(rng.integers(0, q, size=t2 - 2 * ell + 1), q)
                else:
                    high = _digits_value(digits[2 * ell : t2 + 1], q)
                visit(t0, x_lo, y_full(t0, high))
        caveat = "sampled contexts: a positive answer is not a proof"
    else:
        raise ValueError(f"unknown mode {mode!r}; expected 'exhaustive' or 'sampled'")

    return RetrorseResult(
        retrorse=best <= RETRORSE_LIMIT,
        max_class=best,
        ell=ell,
        q=q,
        n=n,
        mode=mode,
        t0_values=tuple(t0s),
        contexts=contexts,
        samples=samples if mode == "sampled" else None,
        seed=seed if mode == "sampled" else None,
        caveat=caveat,
        witness=witness,
    )


def i_value(y, ell: int, q: int, n: int, **kwargs) -> int:
    """I_{Y,ℓ}: ℓ if the low 2ℓ digits of Y are retrorse, else 0."""
    return ell if is_retrorse(y, ell, q, n, **kwargs).retrorse else 0


@dataclass(frozen=True)
class RetrorseFraction:
    ell: int
    q: int
    n: int
    retrorse: int
    total: int

    @property
    def value(self) -> Fraction:
        return Fraction(self.retrorse, self.total)


def retrorse_fraction(ell: int, q: int, n: int, **kwargs) -> RetrorseFraction:
    """Fraction of all q**(2ℓ) values of Y' that are retrorse (exhaustive over Y')."""
    total = q ** (2 * ell)
    cost = total * _search_size(q, ell, _t0_choices(n, ell, kwargs.get("t0_mode", "aligned")), kwargs.get("y_high", "quantify"))
    if cost > kwargs.get("budget", SEARCH_BUDGET):
        raise BudgetExceeded(f"retrorse fraction search space {cost} exceeds budget")
    count = 0
    for yv in range(total):
        digits = DigitStream.from_int(yv, q, 2 * ell).digits
        count += is_retrorse(digits, ell, q, n, **kwargs).retrorse
    return RetrorseFraction(ell, q, n, count, total)
