"""Probe audits: run an engine on instrumented memory and summarise its probes."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from fractions import Fraction

from ..conv_online import make_convolver
from ..errors import ConfigError
from ..lb_lab import build_tree, k_vector, lower_bound_value
from ..modring import bit_width, is_prime
from ..mult_online import DigitStream, k_number, make_multiplier
from ..reports import rows_to_csv, rows_to_json
from ..rng import make_rng
from .memory import CellMemory
from .transfer import it_profile

CONV_KINDS = ("naive", "partitioned")
MULT_KINDS = ("mult-naive", "relaxed")
ENGINE_KINDS = CONV_KINDS + MULT_KINDS
VECTORS = ("k", "random")
NOTE = "input delivery charged as ceil(bits/w) reads; each output charged as ceil(delta/w) writes"


@dataclass
class AuditReport:
    engine: str
    n: int
    q: int
    w: int
    delta: int
    seed: int
    vector: str
    reads: int
    writes: int
    total_probes: int
    per_op: float
    ratio: float
    it_sum: int
    lower_bound: Fraction | None
    reads_exceed_bound: bool | None
    note: str = NOTE

    def row(self) -> dict:
        return asdict(self)

    def to_csv(self) -> str:
        return rows_to_csv([self.row()])

    def to_json(self) -> str:
        return rows_to_json([self.row()])


def normalizer(n: int, delta: int, w: int) -> float:
    """n * log2(n) * δ / w, the scale of the matching upper and lower bounds."""
    return n * math.log2(n) * delta / w


def _conv_run(kind: str, n: int, q: int, memory: CellMemory, seed: int, vector: str):
    if vector == "k":
        v = [int(x) % q for x in k_vector(n)]
    else:
        v = make_rng(seed, 1).integers(0, q, size=n).tolist()
    stream = make_rng(seed, 2).integers(0, q, size=n).tolist()
    engine = make_convolver(kind, v, q, memory=memory)
    engine.run(stream)
    return v


def _mult_run(kind: str, n: int, q: int, memory: CellMemory, seed: int, vector: str):
    delta = bit_width(q)
    if vector == "k":
        if q != 1 << delta:
            raise ConfigError("the K_{q,n} factor needs q to be a power of two")
        y = list(k_number(delta, n).digits)
    else:
        y = make_rng(seed, 1).integers(0, q, size=n).tolist()
    x = make_rng(seed, 2).integers(0, q, size=n).tolist()
    engine = make_multiplier("naive" if kind == "mult-naive" else "relaxed", q, n, memory=memory)
    engine.run(x, y)
    return y


def audit(kind: str, n: int, q: int, w: int = 64, seed: int = 0, vector: str = "k") -> AuditReport:
    """Instrumented run over n operations with seeded random inputs.

    For the convolution engines V is K_n (``vector="k"``) or uniform random,
    and the report compares the measured reads with the lower-bound formula
    when q is prime.  Multiplication engines use Y = K_{q,n} or a random Y and
    leave the bound empty.
    """
    if kind not in ENGINE_KINDS:
        raise ConfigError(f"unknown engine {kind!r}; expected one of {ENGINE_KINDS}")
    if vector not in VECTORS:
        raise ConfigError(f"unknown vector {vector!r}; expected one of {VECTORS}")
    if n < 2 or n & (n - 1):
        raise ConfigError(f"n must be a power of two >= 2, got {n}")
    if not 2 <= q < (1 << 63):
        raise ConfigError(f"q must satisfy 2 <= q < 2**63, got {q}")
    try:
        memory = CellMemory(w)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    delta = bit_width(q)
    try:
        if kind in CONV_KINDS:
            v = _conv_run(kind, n, q, memory, seed, vector)
        else:
            _mult_run(kind, n, q, memory, seed, vector)
            v = None
    except MemoryError as exc:
        raise ConfigError(f"{exc}; use a larger w") from None
    trace = memory.trace
    total = trace.reads + trace.writes
    profile = it_profile(trace, build_tree(n))
    bound = None
    exceeds = None
    if v is not None and is_prime(q):
        bound = lower_bound_value(n, q, w, v)
        exceeds = trace.reads > bound
    return AuditReport(
        engine=kind,
        n=n,
        q=q,
        w=w,
        delta=delta,
        seed=seed,
        vector=vector,
        reads=trace.reads,
        writes=trace.writes,
        total_probes=total,
        per_op=total / n,
        ratio=total / normalizer(n, delta, w),
        it_sum=profile.total,
        lower_bound=bound,
        reads_exceed_bound=exceeds,
    )
