"""Toeplitz blocks of a fixed vector V and their recovery numbers.

For a block [t0, t1] of length ℓ followed by [t1+1, t2], output P_{t1+1+i}
splits into S_i, the part contributed by Δ_{t0..t1}, and S'_i, the rest.
S = M Δ_block with M(i, j) = V[n-1-(ℓ+i)+j], an ℓ x ℓ matrix that is constant
on descending diagonals.  The recovery number of M counts the block entries
that S determines uniquely.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product

import numpy as np

from ..errors import BudgetExceeded
from ..modring import ZqVector, as_zq_vector, is_prime
from ..rng import make_rng

BRUTE_FORCE_LIMIT = 10**6
EXHAUSTIVE_LIMIT = 10**7
SAMPLE_CHUNK = 20000


@dataclass(frozen=True)
class ToeplitzSystem:
    ell: int
    entries: np.ndarray
    v: tuple[int, ...]
    q: int

    @property
    def n(self) -> int:
        return len(self.v)

    @property
    def diagonals(self) -> np.ndarray:
        """d[k] with M(i, j) = d[ℓ-1+j-i]; d[0] is the bottom-left corner."""
        ell = self.ell
        d = np.empty(2 * ell - 1, dtype=np.int64)
        d[: ell] = self.entries[::-1, 0]
        d[ell - 1 :] = self.entries[0, :]
        return d

    def apply(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=object)
        return np.array([int(v) % self.q for v in self.entries.astype(object) @ x], dtype=np.int64)


def toeplitz_from_diagonals(d, q: int) -> np.ndarray:
    d = np.asarray(d, dtype=np.int64)
    if len(d) % 2 == 0:
        raise ValueError("need an odd number (2ℓ-1) of diagonal values")
    ell = (len(d) + 1) // 2
    i = np.arange(ell)
    return d[ell - 1 + i[None, :] - i[:, None]] % q


def build_toeplitz(v, ell: int, q: int | None = None) -> ToeplitzSystem:
    if isinstance(v, ZqVector):
        vec = as_zq_vector(v, q)
        q = vec.q
        vals = np.array(vec.elems, dtype=np.int64)
    else:
        vals = np.asarray(v, dtype=np.int64)
        if q is None:
            q = max(2, int(vals.max()) + 1) if len(vals) else 2
        if len(vals) and (vals.min() < 0 or vals.max() >= q):
            raise ValueError(f"entries of V must lie in [0, {q})")
    n = len(vals)
    if ell < 1:
        raise ValueError("block length must be at least 1")
    if n < 2 * ell:
        raise ValueError(f"need n >= 2*ell, got n={n}, ell={ell}")
    i = np.arange(ell)
    entries = vals[n - 1 - ell - i[:, None] + i[None, :]]
    return ToeplitzSystem(ell, entries, tuple(int(x) for x in vals), int(q))


def interval_contributions(v, delta_block, context, t0: int, q: int | None = None):
    """(S, S') for the block Δ_{t0..t1} = ``delta_block``.

    ``context`` is the stream Δ_0..Δ_{t2} (at least t0 + 2ℓ values); its
    entries inside [t0, t1] are ignored.
    """
    vec = as_zq_vector(v, q)
    q = vec.q
    vals = np.array(vec.elems, dtype=object)
    n = len(vals)
    block = [int(x) for x in delta_block]
    ell = len(block)
    if ell < 1 or t0 < 0:
        raise ValueError("block must be non-empty and start at t0 >= 0")
    t1, t2 = t0 + ell - 1, t0 + 2 * ell - 1
    if len(context) <= t2:
        raise ValueError(f"context must cover times 0..{t2}")
    for x in block:
        if not 0 <= x < q:
            raise ValueError(f"stream value {x} outside [0, {q})")
    m = build_toeplitz(vec, ell)
    s = m.apply(block)
    s_out = np.zeros(ell, dtype=np.int64)
    for i in range(ell):
        t = t1 + 1 + i
        acc = 0
        for j in range(n):
            s_idx = t - j
            if s_idx < 0:
                break
            if t0 <= s_idx <= t1:
                continue
            acc += int(vals[n - 1 - j]) * int(context[s_idx])
        s_out[i] = acc % q
    return s, s_out


# -- linear algebra over Z/pZ -------------------------------------------------


def rref_mod_p(a: np.ndarray, p: int) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form over the field with p elements, and the pivot columns."""
    m = np.array(a, dtype=object if p >= (1 << 31) else np.int64) % p
    rows, cols = m.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.nonzero(m[r:, c])[0]
        if len(nz) == 0:
            continue
        k = r + int(nz[0])
        if k != r:
            m[[r, k]] = m[[k, r]]
        inv = pow(int(m[r, c]), p - 2, p)
        m[r] = m[r] * inv % p
        col = m[:, c].copy()
        col[r] = 0
        nzr = np.nonzero(col)[0]
        if len(nzr):
            m[nzr] = (m[nzr] - col[nzr, None] * m[r][None, :]) % p
        pivots.append(c)
        r += 1
    return m, pivots


def recoverable_variables(a: np.ndarray, p: int) -> np.ndarray:
    """Boolean mask: x_i is the same in every solution of a x = y (consistent y).

    x_i is fixed iff every kernel vector has coordinate i equal to 0, i.e. i is
    a pivot column whose reduced row has no entry in a free column.
    """
    m, pivots = rref_mod_p(a, p)
    cols = m.shape[1]
    free = np.ones(cols, dtype=bool)
    free[pivots] = False
    mask = np.zeros(cols, dtype=bool)
    for r, c in enumerate(pivots):
        mask[c] = not np.any(m[r][free] != 0)
    return mask


_RECOVERY_CACHE: dict[tuple[int, int, bytes], int] = {}


def _matrix_of(m) -> np.ndarray:
    return m.entries if isinstance(m, ToeplitzSystem) else np.asarray(m, dtype=np.int64)


def recovery_number(m, q: int | None = None) -> int:
    """Number of variables of M x = y that are uniquely determined, over a prime field."""
    if q is None:
        if not isinstance(m, ToeplitzSystem):
            raise ValueError("a modulus is required for plain matrices")
        q = m.q
    if not is_prime(q):
        raise ValueError(f"exact recovery numbers need a prime modulus, got {q}")
    a = _matrix_of(m) % q
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("recovery numbers are defined here for square matrices")
    a = np.ascontiguousarray(a, dtype=np.int64)
    key = (q, a.shape[0], a.tobytes())
    hit = _RECOVERY_CACHE.get(key)
    if hit is None:
        hit = int(recoverable_variables(a, q).sum())
        if len(_RECOVERY_CACHE) > 4096:
            _RECOVERY_CACHE.clear()
        _RECOVERY_CACHE[key] = hit
    return hit


def recovery_number_bruteforce(m, q: int | None = None) -> int:
    """Enumerate every x, group by M x and count coordinates constant on every group."""
    if q is None:
        if not isinstance(m, ToeplitzSystem):
            raise ValueError("a modulus is required for plain matrices")
        q = m.q
    a = _matrix_of(m) % q
    ell = a.shape[1]
    if q**ell > BRUTE_FORCE_LIMIT:
        raise BudgetExceeded(f"q**ell = {q**ell} exceeds the brute-force limit {BRUTE_FORCE_LIMIT}")
    xs = np.array(list(product(range(q), repeat=ell)), dtype=np.int64).reshape(-1, ell)
    ys = xs @ a.T % q
    weights = q ** np.arange(a.shape[0], dtype=np.int64)
    keys = ys @ weights
    _, group = np.unique(keys, return_inverse=True)
    groups = group.max() + 1
    count = 0
    for i in range(ell):
        lo = np.full(groups, q, dtype=np.int64)
        hi = np.full(groups, -1, dtype=np.int64)
        np.minimum.at(lo, group, xs[:, i])
        np.maximum.at(hi, group, xs[:, i])
        count += bool(np.all(lo == hi))
    return count


# -- nonsingular fraction -------------------------------------------------------


def _inverse_table(p: int) -> np.ndarray | None:
    if p > (1 << 20):
        return None
    x = np.arange(p, dtype=np.int64)
    out = np.ones(p, dtype=np.int64)
    base, e = x.copy(), p - 2
    while e:
        if e & 1:
            out = out * base % p
        base = base * base % p
        e >>= 1
    out[0] = 0
    return out


def _inv_mod(x: np.ndarray, p: int, table) -> np.ndarray:
    if table is not None:
        return table[x]
    out = np.ones_like(x, dtype=object)
    base = x.astype(object)
    e = p - 2
    while e:
        if e & 1:
            out = out * base % p
        base = base * base % p
        e >>= 1
    return out.astype(np.int64)


def _bm_reaches_numpy(d: np.ndarray, p: int, ell: int) -> np.ndarray:
    batch, length = d.shape
    table = _inverse_table(p)
    size = length + 1
    c = np.zeros((batch, size), dtype=np.int64)
    c[:, 0] = 1
    b = c.copy()
    lin = np.zeros(batch, dtype=np.int64)
    shift = np.ones(batch, dtype=np.int64)
    bdisc = np.ones(batch, dtype=np.int64)
    hit = lin == ell
    cols = np.arange(size)
    for k in range(length):
        window = d[:, k::-1]
        disc = np.zeros(batch, dtype=np.int64)
        for j in range(0, k + 1, 512):
            part = c[:, j : min(k + 1, j + 512)] * window[:, j : min(k + 1, j + 512)] % p
            disc = (disc + part.sum(axis=1)) % p
        nz = disc != 0
        if np.any(nz):
            idx = np.nonzero(nz)[0]
            coef = disc[idx] * _inv_mod(bdisc[idx], p, table) % p
            src = cols[None, :] - shift[idx, None]
            shifted = np.where(src >= 0, np.take_along_axis(b[idx], np.clip(src, 0, None), axis=1), 0)
            new_c = (c[idx] - coef[:, None] * shifted) % p
            grow = 2 * lin[idx] <= k
            g = idx[grow]
            b[g] = c[g]
            bdisc[g] = disc[g]
            lin[g] = k + 1 - lin[g]
            shift[g] = 1
            shift[idx[~grow]] += 1
            c[idx] = new_c
        shift[~nz] += 1
        hit |= lin == ell
    return hit


try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

if numba is not None:

    @numba.njit(cache=True)
    def _bm_reaches_compiled(d, p, ell, inv):  # pragma: no cover - compiled
        batch, length = d.shape
        hit = np.zeros(batch, dtype=np.bool_)
        c = np.zeros(length + 1, dtype=np.int64)
        b = np.zeros(length + 1, dtype=np.int64)
        t = np.zeros(length + 1, dtype=np.int64)
        for r in range(batch):
            c[:] = 0
            b[:] = 0
            c[0] = 1
            b[0] = 1
            lin = 0
            shift = 1
            bd = 1
            for k in range(length):
                disc = d[r, k]
                for i in range(1, lin + 1):
                    disc = (disc + c[i] * d[r, k - i]) % p
                if disc == 0:
                    shift += 1
                    continue
                coef = disc * inv[bd] % p
                if 2 * lin <= k:
                    t[: lin + 1] = c[: lin + 1]
                    old = lin
                    for i in range(shift, k + 2):
                        c[i] = (c[i] - coef * b[i - shift]) % p
                    b[:] = 0
                    b[: old + 1] = t[: old + 1]
                    lin = k + 1 - lin
                    bd = disc
                    shift = 1
                else:
                    for i in range(shift, k + 2):
                        c[i] = (c[i] - coef * b[i - shift]) % p
                    shift += 1
                if lin == ell:
                    hit[r] = True
            if lin == ell:
                hit[r] = True
        return hit


def toeplitz_nonsingular(diagonals: np.ndarray, p: int, *, compiled: bool = True) -> np.ndarray:
    """Row-wise test whether the Toeplitz matrix with these 2ℓ-1 diagonals is invertible mod p.

    Reversing the rows gives the Hankel matrix H(i, j) = d[i+j].  Its
    determinant is non-zero iff the linear complexity of d_0, d_1, ...
    (Berlekamp-Massey over the field) takes the value ℓ at some prefix.
    """
    d = np.atleast_2d(np.asarray(diagonals, dtype=np.int64)) % p
    length = d.shape[1]
    ell = (length + 1) // 2
    if length != 2 * ell - 1:
        raise ValueError("need 2ℓ-1 diagonal values per row")
    if p >= (1 << 31):
        raise ValueError("batched test supports primes below 2**31")
    if compiled and numba is not None and p <= (1 << 20):
        return _bm_reaches_compiled(np.ascontiguousarray(d), p, ell, _inverse_table(p))
    return _bm_reaches_numpy(d, p, ell)


@dataclass(frozen=True)
class FractionResult:
    ell: int
    q: int
    mode: str
    nonsingular: int
    trials: int
    seed: int | None
    exact: Fraction | None

    @property
    def value(self) -> float:
        return self.nonsingular / self.trials

    @property
    def expected(self) -> Fraction:
        return 1 - Fraction(1, self.q)

    @property
    def stderr(self) -> float:
        p = float(self.expected)
        return (p * (1 - p) / self.trials) ** 0.5

    def within(self, sigmas: float = 3.0) -> bool:
        if self.exact is not None:
            return self.exact == self.expected
        return abs(self.value - float(self.expected)) <= sigmas * self.stderr


def singular_fraction(
    ell: int,
    q: int,
    mode: str = "exhaustive",
    *,
    samples: int = 0,
    seed: int | None = None,
    threads: int | None = None,
) -> FractionResult:
    """Fraction of nonsingular ℓ x ℓ Toeplitz matrices over Z/qZ (q prime).

    ``exhaustive`` enumerates all q**(2ℓ-1) diagonal tuples; ``sampled`` draws
    ``samples`` tuples uniformly with the given seed.
    """
    from ..rng import parallel_map

    if ell < 1:
        raise ValueError("ell must be at least 1")
    if not is_prime(q):
        raise ValueError(f"q must be prime, got {q}")
    length = 2 * ell - 1
    if mode == "exhaustive":
        total = q**length
        if total > EXHAUSTIVE_LIMIT:
            raise BudgetExceeded(f"q**(2*ell-1) = {total} exceeds the exhaustive limit {EXHAUSTIVE_LIMIT}")
        count = 0
        start = 0
        while start < total:
            stop = min(total, start + SAMPLE_CHUNK)
            idx = np.arange(start, stop, dtype=np.int64)
            digits = np.stack([(idx // q**k) % q for k in range(length)], axis=1)
            count += int(toeplitz_nonsingular(digits, q).sum())
            start = stop
        return FractionResult(ell, q, mode, count, total, None, Fraction(count, total))
    if mode == "sampled":
        if seed is None:
            raise ValueError("sampled mode needs a seed")
        if samples < 1:
            raise ValueError("sampled mode needs a positive sample count")
        chunks = [(i, min(SAMPLE_CHUNK, samples - i * SAMPLE_CHUNK)) for i in range(-(-samples // SAMPLE_CHUNK))]

        def run(chunk):
            i, size = chunk
            rng = make_rng(seed, ell, q, i)
            return int(toeplitz_nonsingular(rng.integers(0, q, size=(size, length)), q).sum())

        count = sum(parallel_map(run, chunks, threads))
        return FractionResult(ell, q, mode, count, samples, seed, None)
    raise ValueError(f"unknown mode {mode!r}; expected 'exhaustive' or 'sampled'")


nonsingular_fraction = singular_fraction
