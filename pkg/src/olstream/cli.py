"""Command-line front end.

Every subcommand parses its flags, calls the library and prints a report.
Reports go to stdout as CSV unless ``--json`` is given; ``--csv PATH`` and
``--json-out PATH`` additionally write files.  Exit codes: 0 success, 2 invalid
configuration, 3 resource budget exceeded, 4 internal invariant failure.
"""

from __future__ import annotations

import argparse
import sys
import time
from fractions import Fraction

import numpy as np

from . import __version__
from .conv_online import make_convolver
from .errors import BudgetExceeded, ConfigError, InvariantViolation, OlstreamError
from .lb_lab import (
    build_toeplitz,
    build_tree,
    is_retrorse,
    k_vector,
    recovery_number,
    recovery_number_bruteforce,
    retrorse_fraction,
    singular_fraction,
    toeplitz_from_diagonals,
)
from .modring import is_prime
from .mult_online import DigitStream, k_number, make_multiplier
from .reports import rows_to_csv, rows_to_json
from .rng import make_rng, parallel_map


# -- input files ----------------------------------------------------------------


def read_values(path: str, binary: bool = False) -> list[int]:
    """One decimal integer per line (blank lines and '#' comments skipped), or raw little-endian u64."""
    try:
        if binary:
            return [int(x) for x in np.fromfile(path, dtype="<u8")]
        out = []
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                try:
                    out.append(int(line))
                except ValueError:
                    raise ConfigError(f"{path}:{lineno}: not an integer: {line!r}") from None
        return out
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None


def read_digit_stream(path: str) -> DigitStream:
    """Header ``base q n`` then n digits, least significant first, one per line."""
    try:
        with open(path) as fh:
            lines = [ln.split("#", 1)[0].strip() for ln in fh]
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    lines = [ln for ln in lines if ln]
    if not lines:
        raise ConfigError(f"{path}: empty digit stream")
    head = lines[0].split()
    if len(head) != 3 or head[0] != "base":
        raise ConfigError(f"{path}: header must be 'base q n'")
    try:
        q, n = int(head[1]), int(head[2])
        digits = [int(x) for x in lines[1:]]
    except ValueError:
        raise ConfigError(f"{path}: malformed digit stream") from None
    if len(digits) != n:
        raise ConfigError(f"{path}: header announces {n} digits, found {len(digits)}")
    try:
        return DigitStream(q, tuple(digits))
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def format_digit_stream(stream: DigitStream) -> str:
    return f"base {stream.base} {len(stream)}\n" + "".join(f"{d}\n" for d in stream.digits)


# -- helpers -----------------------------------------------------------------------


def _power_of_two(n: int, name: str = "n") -> int:
    if n < 1 or n & (n - 1):
        raise ConfigError(f"--{name} must be a power of two, got {n}")
    return n


def _prime(q: int) -> int:
    if not is_prime(q):
        raise ConfigError(f"--q must be prime for this command, got {q}")
    return q


def _emit(args, rows: list[dict], columns=None) -> None:
    if getattr(args, "csv", None):
        with open(args.csv, "w", newline="") as fh:
            fh.write(rows_to_csv(rows, columns))
    if getattr(args, "json_out", None):
        with open(args.json_out, "w") as fh:
            fh.write(rows_to_json(rows))
    out = rows_to_json(rows) if getattr(args, "json", False) else rows_to_csv(rows, columns)
    sys.stdout.write(out)


def _write_lines(args, values) -> None:
    text = "".join(f"{v}\n" for v in values)
    if getattr(args, "output", None):
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _parse_ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.replace(",", " ").split()]
    except ValueError:
        raise ConfigError(f"expected comma-separated integers, got {text!r}") from None


# -- subcommands --------------------------------------------------------------------


def cmd_conv(args) -> int:
    n = _power_of_two(args.n)
    v = read_values(args.v_file)
    if not v or len(v) > n:
        raise ConfigError(f"V must have between 1 and n={n} entries, got {len(v)}")
    v = [0] * (n - len(v)) + v
    stream = read_values(args.stream_file, binary=args.binary)
    try:
        engine = make_convolver(args.engine, v, args.q)
        out = engine.run(stream)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    _write_lines(args, out)
    return 0


def cmd_mult(args) -> int:
    if args.x_file:
        xs = read_digit_stream(args.x_file)
        ys = read_digit_stream(args.y_file) if args.y_file else None
        q = xs.base
        if ys is not None and (ys.base != q or len(ys) != len(xs)):
            raise ConfigError("X and Y digit streams must share base and length")
    else:
        if args.x is None or args.y is None or args.q is None or args.n is None:
            raise ConfigError("give --x-file/--y-file or all of --x, --y, --q, --n")
        q = args.q
        try:
            xs = DigitStream.from_int(args.x, q, args.n)
            ys = DigitStream.from_int(args.y, q, args.n)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    if ys is None:
        raise ConfigError("a Y stream is required")
    try:
        if args.y_fixed:
            engine = make_multiplier(args.engine, q, len(xs), y_fixed=ys)
            out = engine.run(xs.digits)
        else:
            engine = make_multiplier(args.engine, q, len(xs))
            out = engine.run(xs.digits, ys.digits)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(format_digit_stream(DigitStream(q, tuple(out))))
    else:
        _write_lines(args, out)
    return 0


def cmd_recovery(args) -> int:
    q = args.q
    if args.diagonals:
        d = _parse_ints(args.diagonals)
        if len(d) % 2 == 0:
            raise ConfigError("--diagonals needs 2*ell-1 values")
        m = toeplitz_from_diagonals(d, q)
        ell = m.shape[0]
        source = "diagonals"
    else:
        if args.ell is None or args.n is None:
            raise ConfigError("--ell and --n are required unless --diagonals is given")
        ell = args.ell
        if args.v_file:
            v = read_values(args.v_file)
            source = "file"
        else:
            v = [int(x) % q for x in k_vector(args.n)]
            source = "k"
        if len(v) != args.n:
            raise ConfigError(f"V has {len(v)} entries, expected n={args.n}")
        try:
            m = build_toeplitz(v, ell, q).entries
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    if args.bruteforce:
        value = recovery_number_bruteforce(m, q)
        method = "bruteforce"
    else:
        _prime(q)
        value = recovery_number(m, q)
        method = "elimination"
    _emit(args, [{"ell": ell, "q": q, "n": args.n, "source": source, "method": method, "recovery": value}])
    return 0


def cmd_toeplitz_fraction(args) -> int:
    _prime(args.q)
    if args.mode == "sampled" and args.seed is None:
        raise ConfigError("--seed is required in sampled mode")
    try:
        r = singular_fraction(args.ell, args.q, args.mode, samples=args.samples or 0, seed=args.seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    value = r.exact if r.exact is not None else r.value
    row = {
        "ell": r.ell,
        "q": r.q,
        "mode": r.mode,
        "nonsingular": r.nonsingular,
        "trials": r.trials,
        "fraction": float(value),
        "exact": str(r.exact) if r.exact is not None else None,
        "expected": str(r.expected),
        "stderr": r.stderr if r.exact is None else 0.0,
        "within_3sd": r.within(3.0),
        "seed": r.seed,
    }
    _emit(args, [row])
    return 0


def cmd_tree(args) -> int:
    tree = build_tree(_power_of_two(args.n))
    if args.nodes:
        rows = [
            {"level": v.level, "index": v.index, "t0": v.t0, "t1": v.t1, "t2": v.t2, "L": v.L}
            for v in tree.nodes
        ]
        _emit(args, rows)
        return 0
    _emit(
        args,
        [
            {
                "n": tree.n,
                "internal_nodes": len(tree.nodes),
                "depth": tree.depth,
                "leaf_sum": tree.leaf_sum,
                "child_leaf_sum": tree.child_leaf_sum,
                "n_log2_n": tree.n * tree.depth,
            }
        ],
    )
    return 0


def _retrorse_y(args, q: int) -> list[int]:
    if args.y == "k":
        delta = (q - 1).bit_length()
        if q != 1 << delta:
            raise ConfigError("--y k needs q to be a power of two")
        return list(k_number(delta, args.n).digits)
    if args.y == "file":
        if not args.y_file:
            raise ConfigError("--y file needs --y-file")
        return list(read_digit_stream(args.y_file).digits)
    return _parse_ints(args.y)


def cmd_retrorse(args) -> int:
    q, n = args.q, args.n
    if args.mode == "sampled" and args.seed is None:
        raise ConfigError("--seed is required in sampled mode")
    opts = dict(t0_mode=args.t0_mode, y_high=args.y_high)
    try:
        if args.fraction:
            r = retrorse_fraction(args.ell, q, n, **opts)
            row = {"ell": args.ell, "q": q, "n": n, "retrorse": r.retrorse, "total": r.total, "fraction": str(r.value)}
            row.update(opts)
            _emit(args, [row])
            return 0
        y = _retrorse_y(args, q)
        r = is_retrorse(y, args.ell, q, n, args.mode, samples=args.samples or 0, seed=args.seed, **opts)
    except BudgetExceeded:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    row = {
        "ell": r.ell,
        "q": r.q,
        "n": r.n,
        "mode": r.mode,
        "t0_mode": args.t0_mode,
        "y_high": args.y_high,
        "retrorse": r.retrorse,
        "i_value": r.ell if r.retrorse else 0,
        "max_class": r.max_class,
        "contexts": r.contexts,
        "samples": r.samples,
        "seed": r.seed,
        "caveat": r.caveat,
    }
    _emit(args, [row])
    return 0


def cmd_audit(args) -> int:
    from .probe_lab.audits import audit

    r = audit(args.engine, args.n, args.q, args.w, args.seed, args.vector)
    _emit(args, [r.row()])
    return 0


def _bench_one(job):
    kind, n, q, seed, repeats = job
    rng = make_rng(seed, n)
    times = []
    for _ in range(repeats):
        if kind in ("naive", "partitioned"):
            v = rng.integers(0, q, size=n).tolist()
            stream = rng.integers(0, q, size=n).tolist()
            engine = make_convolver(kind, v, q)
            start = time.perf_counter()
            engine.run(stream)
        else:
            x = rng.integers(0, q, size=n).tolist()
            y = rng.integers(0, q, size=n).tolist()
            engine = make_multiplier("naive" if kind == "mult-naive" else "relaxed", q, n)
            start = time.perf_counter()
            engine.run(x, y)
        times.append(time.perf_counter() - start)
    best = min(times)
    return {"engine": kind, "n": n, "q": q, "seed": seed, "repeats": repeats, "best_s": best, "per_op_us": best / n * 1e6}


def cmd_bench(args) -> int:
    sizes = _parse_ints(args.sizes)
    for n in sizes:
        _power_of_two(n, "sizes")
    jobs = [(kind, n, args.q, args.seed, args.repeats) for kind in args.engine for n in sizes]
    try:
        rows = parallel_map(_bench_one, jobs, 1)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    _emit(args, rows)
    return 0


def cmd_kvec(args) -> int:
    if args.n < 2:
        raise ConfigError("--n must be at least 2")
    _write_lines(args, k_vector(args.n).tolist())
    return 0


def cmd_knum(args) -> int:
    if args.delta < 1 or args.n < 1 or args.delta * args.n < 2:
        raise ConfigError("need --delta >= 1, --n >= 1 and delta*n >= 2")
    k = k_number(args.delta, args.n)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(format_digit_stream(k))
    else:
        sys.stdout.write(format_digit_stream(k))
    return 0


# -- parser -------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _report_flags(p) -> None:
    p.add_argument("--csv", metavar="PATH", help="also write the report as CSV")
    p.add_argument("--json-out", metavar="PATH", help="also write the report as JSON")
    p.add_argument("--json", action="store_true", help="print JSON instead of CSV")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="olstream", description="Online convolution and multiplication engines with a cell-probe lab.")
    parser.add_argument("--version", action="version", version=f"olstream {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("conv", help="online convolution of a stream against a fixed vector")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--v-file", required=True, help="V, one value per line (padded to n at the oldest end)")
    p.add_argument("--stream-file", required=True)
    p.add_argument("--binary", action="store_true", help="stream file holds little-endian u64 values")
    p.add_argument("--engine", choices=("naive", "partitioned"), default="partitioned")
    p.add_argument("--output", metavar="PATH")
    p.set_defaults(func=cmd_conv)

    p = sub.add_parser("mult", help="online multiplication, one product digit per input pair")
    p.add_argument("--x-file")
    p.add_argument("--y-file")
    p.add_argument("--x", type=int, help="X as a decimal integer")
    p.add_argument("--y", type=int, help="Y as a decimal integer")
    p.add_argument("--q", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--engine", choices=("naive", "relaxed"), default="relaxed")
    p.add_argument("--y-fixed", action="store_true", help="give the engine all of Y up front")
    p.add_argument("--output", metavar="PATH", help="write a digit-stream file")
    p.set_defaults(func=cmd_mult)

    p = sub.add_parser("recovery", help="recovery number of a Toeplitz block")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--ell", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--v-file", help="V, one value per line (default K_n)")
    p.add_argument("--diagonals", help="2*ell-1 diagonal values, bottom-left first")
    p.add_argument("--bruteforce", action="store_true")
    _report_flags(p)
    p.set_defaults(func=cmd_recovery)

    p = sub.add_parser("toeplitz-fraction", help="fraction of nonsingular Toeplitz matrices")
    p.add_argument("--ell", type=int, required=True)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--mode", choices=("exhaustive", "sampled"), default="exhaustive")
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    _report_flags(p)
    p.set_defaults(func=cmd_toeplitz_fraction)

    p = sub.add_parser("tree", help="lower-bound tree summary")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--nodes", action="store_true", help="list every internal node")
    _report_flags(p)
    p.set_defaults(func=cmd_tree)

    p = sub.add_parser("retrorse", help="retrorse check for the low digits of Y")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--ell", type=int, required=True)
    p.add_argument("--y", default="k", help="'k' for K_{q,n}, 'file', or comma-separated digits")
    p.add_argument("--y-file")
    p.add_argument("--mode", choices=("exhaustive", "sampled"), default="exhaustive")
    p.add_argument("--t0-mode", choices=("aligned", "all"), default="aligned")
    p.add_argument("--y-high", choices=("quantify", "fixed"), default="quantify")
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--fraction", action="store_true", help="fraction of all Y' that are retrorse")
    _report_flags(p)
    p.set_defaults(func=cmd_retrorse)

    p = sub.add_parser("audit", help="instrumented probe audit of an engine")
    p.add_argument("--engine", choices=("naive", "partitioned", "mult-naive", "relaxed"), required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--w", type=int, default=64)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--vector", choices=("k", "random"), default="k")
    _report_flags(p)
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("bench", help="wall-clock timing of the engines")
    p.add_argument("--engine", nargs="+", choices=("naive", "partitioned", "mult-naive", "relaxed"), default=["partitioned"])
    p.add_argument("--sizes", default="256,1024,4096")
    p.add_argument("--q", type=int, default=65521)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--repeats", type=int, default=3)
    _report_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("kvec", help="print K_n")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--output", metavar="PATH")
    p.set_defaults(func=cmd_kvec)

    p = sub.add_parser("knum", help="print K_{q,n} as a digit stream (q = 2**delta)")
    p.add_argument("--delta", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--output", metavar="PATH")
    p.set_defaults(func=cmd_knum)
    return parser


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except OlstreamError as exc:
        print(f"olstream: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except MemoryError as exc:
        print(f"olstream: error: {exc}", file=sys.stderr)
        return BudgetExceeded.exit_code
    except (AssertionError, RuntimeError) as exc:
        print(f"olstream: internal error: {exc}", file=sys.stderr)
        return InvariantViolation.exit_code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
