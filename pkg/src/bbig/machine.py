"""Self-delimiting register-machine language and its step-bounded interpreter.

Programs are sequences of 3-bit opcodes terminated by ``HALT``::

    000 HALT   output the accumulator and stop
    001 INC    A <- A + 1
    010 ADD    A <- A + R
    011 STORE  R <- A
    100 DBL    A <- 2A
    101 LOADW  A <- input
    110 JNZ    followed by an Elias-gamma offset d >= 1; if A != 0 jump
               back d instructions (clamped to instruction 0)
    111 DEC    A <- max(A - 1, 0)

Because ``HALT`` terminates decoding and Elias-gamma is itself a complete
prefix code, the language is prefix-free and complete: every infinite fair
bit stream decodes to a program with probability 1, and program ``p`` is
drawn with probability ``2 ** -len(p)``.

Running a program with a step budget stands in for the halting oracle: a
run that does not reach ``HALT`` within the budget is reported as
``BudgetExceeded`` and callers treat its output as 0.
"""

from __future__ import annotations

import enum
import functools
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Sequence

from .seeding import BitSource

HALT, INC, ADD, STORE, DBL, LOADW, JNZ, DEC = range(8)
OPCODE_NAMES = ("HALT", "INC", "ADD", "STORE", "DBL", "LOADW", "JNZ", "DEC")
NAME_TO_OPCODE = {name: op for op, name in enumerate(OPCODE_NAMES)}
PLAIN_OPCODES = (INC, ADD, STORE, DBL, LOADW, DEC)

MAX_ENUM_BITS = 30
SAMPLE_BIT_CAP = 1 << 20
DEFAULT_BUDGET = 10_000
DEFAULT_EXACT_CAP = 24
PROXY_VERSION = "gamma+lz78/1"


class IncompleteProgram(ValueError):
    """The bit stream ended before a complete program was read."""


class SamplingError(RuntimeError):
    pass


class EnumerationTooLarge(ValueError):
    """Requested exhaustive enumeration beyond ``MAX_ENUM_BITS``."""


class EstimateUnavailable(LookupError):
    """No enumerated program up to the cap produces the value."""


# -- Elias-gamma ---------------------------------------------------------

def gamma_encode(n: int) -> str:
    if n < 1:
        raise ValueError(f"Elias-gamma encodes integers >= 1, got {n}")
    b = format(n, "b")
    return "0" * (len(b) - 1) + b


def gamma_decode(bits: Iterator[int]) -> int:
    zeros = 0
    try:
        while next(bits) == 0:
            zeros += 1
        n = 1
        for _ in range(zeros):
            n = (n << 1) | next(bits)
    except StopIteration:
        raise IncompleteProgram("stream ended inside an Elias-gamma code") from None
    return n


def encode_natural(n: int) -> str:
    """Self-delimiting code for a natural number: gamma(n + 1)."""
    return gamma_encode(n + 1)


def decode_natural(bits: Iterator[int]) -> int:
    return gamma_decode(bits) - 1


def _bit_iter(bits: str | Iterable[int]) -> Iterator[int]:
    if isinstance(bits, str):
        return (1 if ch == "1" else 0 for ch in bits if ch in "01")
    return iter(bits)


# -- programs ------------------------------------------------------------

@dataclass(frozen=True)
class Program:
    bits: str
    ops: tuple[int, ...]
    args: tuple[int, ...]

    @property
    def length(self) -> int:
        return len(self.bits)

    @property
    def instructions(self) -> tuple[tuple[str, int] | str, ...]:
        return tuple(
            (OPCODE_NAMES[op], arg) if op == JNZ else OPCODE_NAMES[op]
            for op, arg in zip(self.ops, self.args)
        )

    @classmethod
    def from_instructions(cls, instructions: Sequence) -> "Program":
        """Build from mnemonics, e.g. ``["INC", ("JNZ", 1), "HALT"]``."""
        ops, args, chunks = [], [], []
        for ins in instructions:
            if isinstance(ins, str):
                name, arg = ins.upper(), 0
            else:
                name, arg = ins[0].upper(), int(ins[1])
            op = NAME_TO_OPCODE[name]
            if op == JNZ and arg < 1:
                raise ValueError("JNZ offset must be >= 1")
            chunks.append(format(op, "03b"))
            if op == JNZ:
                chunks.append(gamma_encode(arg))
            ops.append(op)
            args.append(arg if op == JNZ else 0)
        if not ops or ops[-1] != HALT or HALT in ops[:-1]:
            raise ValueError("a program is non-HALT instructions followed by exactly one HALT")
        return cls("".join(chunks), tuple(ops), tuple(args))

    def __str__(self) -> str:
        return " ".join(
            f"JNZ{arg}" if op == JNZ else OPCODE_NAMES[op]
            for op, arg in zip(self.ops, self.args)
        )


def decode(bits: str | Iterable[int], max_bits: int | None = None) -> Program:
    """Read the minimal prefix of ``bits`` forming a program.

    Raises IncompleteProgram if the stream ends mid-program, and
    SamplingError if more than ``max_bits`` bits would be consumed.
    """
    it = _bit_iter(bits)
    out: list[str] = []
    ops: list[int] = []
    args: list[int] = []
    used = 0

    def take() -> int:
        nonlocal used
        try:
            b = next(it)
        except StopIteration:
            raise IncompleteProgram(f"stream ended after {used} bits") from None
        used += 1
        if max_bits is not None and used > max_bits:
            raise SamplingError(f"program exceeded {max_bits} bits")
        out.append("1" if b else "0")
        return b

    while True:
        op = (take() << 2) | (take() << 1) | take()
        arg = 0
        if op == JNZ:
            arg = gamma_decode(_Taker(take))
        ops.append(op)
        args.append(arg)
        if op == HALT:
            return Program("".join(out), tuple(ops), tuple(args))


class _Taker:
    __slots__ = ("_take",)

    def __init__(self, take: Callable[[], int]):
        self._take = take

    def __iter__(self):
        return self

    def __next__(self) -> int:
        return self._take()


def decode_prefix(bits: str, pos: int = 0) -> tuple[Program, int]:
    """Decode a program starting at ``bits[pos]``; return it and the end position."""
    p = decode(bits[pos:])
    return p, pos + p.length


def concat_sd(*parts: str) -> str:
    """Concatenate self-delimiting codewords; sequential decoding recovers them."""
    return "".join(parts)


def split_sd(bits: str, kinds: Sequence[str]) -> list:
    """Inverse of :func:`concat_sd` given the kind of each component.

    ``kinds`` holds ``"program"`` or ``"natural"`` per component.
    """
    it = _bit_iter(bits)
    parts = []
    for kind in kinds:
        if kind == "program":
            parts.append(decode(it))
        elif kind == "natural":
            parts.append(decode_natural(it))
        else:
            raise ValueError(f"unknown component kind {kind!r}")
    if next(it, None) is not None:
        raise ValueError("trailing bits after the last component")
    return parts


# -- interpreter ---------------------------------------------------------

@dataclass(frozen=True)
class ExecOutcome:
    halted: bool
    value: int = 0
    steps: int = 0

    @property
    def output(self) -> int:
        """Value under the oracle-machine convention: 0 when not halted."""
        return self.value if self.halted else 0


_HALTED, _STOPPED, _EXCEEDED = 0, 1, 2


def _execute(ops, args, inp, pc, a, r, steps, budget, stop):
    """Run from ``pc`` until HALT, until ``pc == stop``, or until the budget is spent.

    Returns ``(status, a, r, steps)``. Runs proven to loop forever (an exact
    repeated state, or a loop body that can never lower a non-zero
    accumulator) are reported as exceeded without burning the budget.
    """
    seen = None
    monotone = None
    while True:
        if pc == stop:
            return _STOPPED, a, r, steps
        if steps >= budget:
            return _EXCEEDED, a, r, steps
        op = ops[pc]
        steps += 1
        if op == INC:
            a += 1
        elif op == DBL:
            a <<= 1
        elif op == ADD:
            a += r
        elif op == STORE:
            r = a
        elif op == DEC:
            if a:
                a -= 1
        elif op == LOADW:
            a = inp
        elif op == JNZ:
            if a:
                target = pc - args[pc]
                if target < 0:
                    target = 0
                if monotone is None:
                    monotone = {}
                mono = monotone.get(pc)
                if mono is None:
                    body = ops[target:pc]
                    mono = DEC not in body and JNZ not in body and (inp > 0 or LOADW not in body)
                    monotone[pc] = mono
                if mono:
                    return _EXCEEDED, a, r, budget
                if seen is None:
                    seen = set()
                key = (pc, a, r)
                if key in seen:
                    return _EXCEEDED, a, r, budget
                seen.add(key)
                pc = target
                continue
        else:
            return _HALTED, a, r, steps
        pc += 1


def run_bounded(program: Program, inp: int = 0, budget: int = DEFAULT_BUDGET) -> ExecOutcome:
    if budget < 1:
        raise ValueError("budget must be >= 1")
    status, a, _, steps = _execute(program.ops, program.args, inp, 0, 0, 0, 0, budget, -1)
    if status == _HALTED:
        return ExecOutcome(True, a, steps)
    return ExecOutcome(False, 0, budget)


# -- sampling ------------------------------------------------------------

def sample_program(rng: random.Random | BitSource) -> Program:
    """Draw fair bits until a program is decoded (probability 2**-len(p))."""
    source = rng if isinstance(rng, BitSource) else BitSource(rng)
    return decode(source, max_bits=SAMPLE_BIT_CAP)


# -- enumeration ---------------------------------------------------------

def _check_enum(max_len: int) -> None:
    if max_len > MAX_ENUM_BITS:
        raise EnumerationTooLarge(f"exhaustive enumeration limited to {MAX_ENUM_BITS} bits, got {max_len}")


def enumerate_programs(max_len: int) -> Iterator[Program]:
    """Every valid program of at most ``max_len`` bits, shortest first by construction order."""
    _check_enum(max_len)

    def rec(prefix: str, ops: tuple, args: tuple):
        if len(prefix) + 3 <= max_len:
            yield Program(prefix + "000", ops + (HALT,), args + (0,))
        for op in PLAIN_OPCODES:
            if len(prefix) + 6 <= max_len:
                yield from rec(prefix + format(op, "03b"), ops + (op,), args + (0,))
        d = 1
        while len(prefix) + 3 + 2 * d.bit_length() - 1 + 3 <= max_len:
            yield from rec(prefix + "110" + gamma_encode(d), ops + (JNZ,), args + (d,))
            d += 1

    yield from rec("", (), ())


def _program_counts(max_len: int) -> list[int]:
    """counts[L] = number of programs of exactly L bits."""
    # seq[s]: number of non-HALT instruction sequences costing s bits
    seq = [0] * (max_len + 1)
    seq[0] = 1
    for s in range(1, max_len + 1):
        total = 6 * seq[s - 3] if s >= 3 else 0
        m = 1
        while 3 + 2 * m - 1 <= s:
            total += (1 << (m - 1)) * seq[s - 3 - (2 * m - 1)]
            m += 1
        seq[s] = total
    return [seq[L - 3] if L >= 3 else 0 for L in range(max_len + 1)]


def kraft_sum(max_len: int) -> Fraction:
    """Sum of 2**-len(p) over all programs with len(p) <= max_len."""
    _check_enum(max_len)
    counts = _program_counts(max_len)
    return sum((Fraction(c, 1 << L) for L, c in enumerate(counts) if c), Fraction(0))


def _walk_halting(max_len: int, inp: int, budget: int, visit: Callable[[int, int], None]) -> None:
    """Call ``visit(value, length)`` for each behaviourally distinct halting program.

    Execution of a prefix is shared by all its extensions, since jumps only go
    backwards; prefixes that never reach their end are pruned. JNZ offsets
    beyond the current position all clamp to 0, so only the shortest of them
    is explored.
    """
    ops: list[int] = []
    args: list[int] = []

    def rec(length: int, a: int, r: int, steps: int) -> None:
        if length + 3 > max_len:
            return
        if steps + 1 <= budget:
            visit(a, length + 3)
        if length + 6 <= max_len:
            for op in PLAIN_OPCODES:
                if steps + 1 > budget:
                    break
                if op == INC:
                    na, nr = a + 1, r
                elif op == ADD:
                    na, nr = a + r, r
                elif op == STORE:
                    na, nr = a, a
                elif op == DBL:
                    na, nr = a << 1, r
                elif op == LOADW:
                    na, nr = inp, r
                else:
                    na, nr = (a - 1 if a else 0), r
                ops.append(op)
                args.append(0)
                rec(length + 3, na, nr, steps + 1)
                ops.pop()
                args.pop()
        k = len(ops)
        for d in range(1, max(k, 1) + 1):
            cost = 3 + 2 * d.bit_length() - 1
            if length + cost + 3 > max_len:
                break
            if steps + 1 > budget:
                break
            ops.append(JNZ)
            args.append(d)
            if a == 0:
                rec(length + cost, a, r, steps + 1)
            else:
                status, na, nr, nsteps = _execute(
                    ops, args, inp, max(0, k - d), a, r, steps + 1, budget, k + 1
                )
                if status == _STOPPED:
                    rec(length + cost, na, nr, nsteps)
            ops.pop()
            args.pop()

    rec(0, 0, 0, 0)


@functools.lru_cache(maxsize=16)
def shortest_producers(max_len: int, budget: int = DEFAULT_BUDGET, inp: int = 0) -> dict[int, int]:
    """Map value -> length of the shortest program (<= max_len) halting with it on ``inp``."""
    _check_enum(max_len)
    table: dict[int, int] = {}

    def visit(value: int, length: int) -> None:
        old = table.get(value)
        if old is None or length < old:
            table[value] = length

    _walk_halting(max_len, inp, budget, visit)
    return table


def bb_bounded(k: int, budget: int = DEFAULT_BUDGET, inp: int = 0) -> int:
    """Largest value output within ``budget`` steps by any program of at most k bits."""
    table = shortest_producers(k, budget, inp)
    return max(table, default=0)


# -- complexity estimation -----------------------------------------------

class Backend(str, enum.Enum):
    EXACT_TINY = "exact"
    COMPRESS_PROXY = "compress"


@dataclass(frozen=True)
class ComplexityEstimate:
    bits: int
    backend: Backend


def lz78_bit_length(bits: str) -> int:
    """Length in bits of the LZ78 encoding of a binary string.

    Phrase i (1-based) is coded as an index into the i-entry dictionary
    (ceil(lg i) bits) plus one literal bit; a trailing phrase that matches an
    existing entry is coded by its index alone.
    """
    dictionary = {"": 0}
    total = 0
    phrase = ""
    for ch in bits:
        cand = phrase + ch
        if cand in dictionary:
            phrase = cand
            continue
        i = len(dictionary)
        total += (i - 1).bit_length() + 1
        dictionary[cand] = i
        phrase = ""
    if phrase:
        total += (len(dictionary) - 1).bit_length()
    return total


def compress_proxy(value: int) -> int:
    """Elias-gamma code of the value, then LZ78 over that bit string."""
    return lz78_bit_length(encode_natural(value))


def complexity_estimate(
    value: int,
    backend: Backend | str = Backend.EXACT_TINY,
    budget: int = DEFAULT_BUDGET,
    cap: int = DEFAULT_EXACT_CAP,
) -> ComplexityEstimate:
    backend = Backend(backend)
    if backend is Backend.COMPRESS_PROXY:
        return ComplexityEstimate(compress_proxy(value), backend)
    table = shortest_producers(cap, budget, 0)
    if value not in table:
        raise EstimateUnavailable(f"no program of <= {cap} bits outputs {value} within {budget} steps")
    return ComplexityEstimate(table[value], backend)


@dataclass(frozen=True)
class Estimator:
    """Complexity estimator with fixed backend and parameters.

    With the exact backend, values beyond the enumeration cap fall back to
    the compression proxy; :meth:`estimate` reports whether that happened.
    """

    backend: Backend = Backend.COMPRESS_PROXY
    budget: int = DEFAULT_BUDGET
    cap: int = DEFAULT_EXACT_CAP

    def __post_init__(self):
        object.__setattr__(self, "backend", Backend(self.backend))

    def estimate(self, value: int) -> tuple[ComplexityEstimate, bool]:
        try:
            return complexity_estimate(value, self.backend, self.budget, self.cap), False
        except EstimateUnavailable:
            return complexity_estimate(value, Backend.COMPRESS_PROXY), True

    def available(self, value: int) -> bool:
        if self.backend is Backend.COMPRESS_PROXY:
            return True
        return value in shortest_producers(self.cap, self.budget, 0)
