"""Expression and formula IR shared by every stage.

Numbers are exact ``gmpy2.mpq`` rationals.  A ``RoundFP`` node marks a
rounding point: its argument is the exact value and the node denotes the
rounded result.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator, Mapping, Union

from gmpy2 import mpfr, mpq

from .fpformat import DOUBLE, SINGLE, FloatFormat, RoundMode, round_to_format, round_to_int

Scalar = mpq

NEG_INF = mpfr("-inf")
POS_INF = mpfr("inf")


def scalar(x) -> mpq:
    """Coerce ints, Fractions, decimal strings ('1.5e-3', '-3/4') to mpq."""
    if isinstance(x, mpq):
        return x
    if isinstance(x, str):
        return mpq(Fraction(x.strip()))
    if isinstance(x, float):
        return mpq(Fraction(x))
    return mpq(x)


# ---------------------------------------------------------------- intervals


@dataclass(frozen=True)
class Interval:
    """Closed interval with rational endpoints or infinite ends.

    ``lo``/``hi`` are mpq, or the mpfr infinities ``NEG_INF``/``POS_INF``.
    """

    lo: object
    hi: object

    def __post_init__(self):
        lo, hi = self.lo, self.hi
        if not _is_inf(lo):
            object.__setattr__(self, "lo", scalar(lo))
        if not _is_inf(hi):
            object.__setattr__(self, "hi", scalar(hi))
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @classmethod
    def entire(cls) -> Interval:
        return cls(NEG_INF, POS_INF)

    @classmethod
    def point(cls, q) -> Interval:
        q = scalar(q)
        return cls(q, q)

    @property
    def is_finite(self) -> bool:
        return not (_is_inf(self.lo) or _is_inf(self.hi))

    @property
    def is_point(self) -> bool:
        return self.is_finite and self.lo == self.hi

    def width(self):
        if not self.is_finite:
            return POS_INF
        return self.hi - self.lo

    def midpoint(self) -> mpq:
        if not self.is_finite:
            raise ValueError("midpoint of an unbounded interval")
        return (self.lo + self.hi) / 2

    def contains(self, x) -> bool:
        return self.lo <= x <= self.hi

    def subset(self, other: Interval) -> bool:
        return other.lo <= self.lo and self.hi <= other.hi

    def intersect(self, other: Interval) -> Interval | None:
        lo = max(self.lo, other.lo)
        hi = min(self.hi, other.hi)
        if lo > hi:
            return None
        return Interval(lo, hi)

    def hull(self, other: Interval) -> Interval:
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))

    def __str__(self) -> str:
        return f"[{render_bound(self.lo)}, {render_bound(self.hi)}]"


def _is_inf(x) -> bool:
    return isinstance(x, type(POS_INF)) and x.is_infinite()


def render_bound(x) -> str:
    if _is_inf(x):
        return "-inf" if x < 0 else "inf"
    return render_scalar(x)


def render_scalar(q) -> str:
    """Short exact rendering: integer, short terminating decimal, or p/q."""
    q = scalar(q)
    dec = render_decimal_exact(q, max_digits=6)
    return dec if dec is not None else f"{q.numerator}/{q.denominator}"


def render_decimal_exact(q, max_digits: int | None = None) -> str | None:
    """Exact decimal expansion of ``q`` if it terminates, else None."""
    q = scalar(q)
    den = q.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    digits = max(twos, fives)
    if den != 1 or (max_digits is not None and digits > max_digits):
        return None
    if digits == 0:
        return str(q.numerator)
    scaled = abs(q.numerator) * (10**digits // q.denominator)
    s = str(scaled).rjust(digits + 1, "0")
    s = f"{s[:-digits]}.{s[-digits:]}".rstrip("0")
    return ("-" if q < 0 else "") + s


# -------------------------------------------------------------- expressions


class Expr:
    __slots__ = ()


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class Lit(Expr):
    value: mpq
    # source float format of a decoded literal; used only for type inference
    fmt: FloatFormat | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "value", scalar(self.value))


@dataclass(frozen=True)
class PiConst(Expr):
    pass


UNARY_OPS = ("neg", "abs", "sqrt", "sin", "cos", "exp", "log")
BINARY_OPS = ("add", "sub", "mul", "div", "min", "max", "mod")


@dataclass(frozen=True)
class Unary(Expr):
    op: str
    arg: Expr

    def __post_init__(self):
        if self.op not in UNARY_OPS:
            raise ValueError(f"unknown unary op {self.op}")


@dataclass(frozen=True)
class Binary(Expr):
    op: str
    left: Expr
    right: Expr

    def __post_init__(self):
        if self.op not in BINARY_OPS:
            raise ValueError(f"unknown binary op {self.op}")


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: int

    def __post_init__(self):
        if not isinstance(self.exponent, int) or self.exponent < 0:
            raise ValueError("Pow exponent must be a non-negative integer literal")


@dataclass(frozen=True)
class RoundFP(Expr):
    fmt: FloatFormat
    mode: RoundMode
    arg: Expr


@dataclass(frozen=True)
class RoundToInt(Expr):
    mode: RoundMode
    arg: Expr


PI = PiConst()


def lit(x) -> Lit:
    return Lit(scalar(x))


def _coerce(e) -> Expr:
    return e if isinstance(e, Expr) else lit(e)


def add(a, b) -> Binary:
    return Binary("add", _coerce(a), _coerce(b))


def sub(a, b) -> Binary:
    return Binary("sub", _coerce(a), _coerce(b))


def mul(a, b) -> Binary:
    return Binary("mul", _coerce(a), _coerce(b))


def div(a, b) -> Binary:
    return Binary("div", _coerce(a), _coerce(b))


def emin(a, b) -> Binary:
    return Binary("min", _coerce(a), _coerce(b))


def emax(a, b) -> Binary:
    return Binary("max", _coerce(a), _coerce(b))


def mod(a, b) -> Binary:
    return Binary("mod", _coerce(a), _coerce(b))


def neg(a) -> Unary:
    return Unary("neg", _coerce(a))


def eabs(a) -> Unary:
    return Unary("abs", _coerce(a))


def sqrt(a) -> Unary:
    return Unary("sqrt", _coerce(a))


def sin(a) -> Unary:
    return Unary("sin", _coerce(a))


def cos(a) -> Unary:
    return Unary("cos", _coerce(a))


def exp(a) -> Unary:
    return Unary("exp", _coerce(a))


def log(a) -> Unary:
    return Unary("log", _coerce(a))


def rnd32(a, mode: RoundMode = RoundMode.NEAREST_EVEN) -> RoundFP:
    return RoundFP(SINGLE, mode, _coerce(a))


def rnd64(a, mode: RoundMode = RoundMode.NEAREST_EVEN) -> RoundFP:
    return RoundFP(DOUBLE, mode, _coerce(a))


# ----------------------------------------------------------------- formulas


class Formula:
    __slots__ = ()


CMP_OPS = ("<=", "<", ">=", ">", "=")


@dataclass(frozen=True)
class Cmp(Formula):
    op: str
    left: Expr
    right: Expr

    def __post_init__(self):
        if self.op not in CMP_OPS:
            raise ValueError(f"unknown comparison {self.op}")


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula


@dataclass(frozen=True)
class And(Formula):
    args: tuple

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))


@dataclass(frozen=True)
class Or(Formula):
    args: tuple

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))


@dataclass(frozen=True)
class Implies(Formula):
    lhs: Formula
    rhs: Formula


@dataclass(frozen=True)
class Const(Formula):
    value: bool


TRUE = Const(True)
FALSE = Const(False)


def le(a, b) -> Cmp:
    return Cmp("<=", _coerce(a), _coerce(b))


def lt(a, b) -> Cmp:
    return Cmp("<", _coerce(a), _coerce(b))


def ge(a, b) -> Cmp:
    return Cmp(">=", _coerce(a), _coerce(b))


def gt(a, b) -> Cmp:
    return Cmp(">", _coerce(a), _coerce(b))


def eq(a, b) -> Cmp:
    return Cmp("=", _coerce(a), _coerce(b))


# ------------------------------------------------------------ traversal


def children(e: Expr) -> tuple:
    if isinstance(e, (Var, Lit, PiConst)):
        return ()
    if isinstance(e, Unary):
        return (e.arg,)
    if isinstance(e, Binary):
        return (e.left, e.right)
    if isinstance(e, Pow):
        return (e.base,)
    if isinstance(e, (RoundFP, RoundToInt)):
        return (e.arg,)
    raise TypeError(f"not an expression: {e!r}")


def rebuild(e: Expr, kids) -> Expr:
    if isinstance(e, Unary):
        return Unary(e.op, kids[0])
    if isinstance(e, Binary):
        return Binary(e.op, kids[0], kids[1])
    if isinstance(e, Pow):
        return Pow(kids[0], e.exponent)
    if isinstance(e, RoundFP):
        return RoundFP(e.fmt, e.mode, kids[0])
    if isinstance(e, RoundToInt):
        return RoundToInt(e.mode, kids[0])
    return e


def walk(e: Expr) -> Iterator[Expr]:
    stack = [e]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(children(n))


def map_expr(e: Expr, fn: Callable[[Expr], Expr]) -> Expr:
    """Bottom-up rewrite: children first, then ``fn`` on the rebuilt node."""
    kids = children(e)
    if kids:
        new = tuple(map_expr(k, fn) for k in kids)
        if any(a is not b for a, b in zip(new, kids)):
            e = rebuild(e, new)
    return fn(e)


def free_vars(obj) -> set[str]:
    out: set[str] = set()
    for e in exprs_of(obj):
        out.update(n.name for n in walk(e) if isinstance(n, Var))
    return out


def node_count(obj) -> int:
    if isinstance(obj, Expr):
        return sum(1 for _ in walk(obj))
    return sum(1 for _ in formula_nodes(obj)) + sum(node_count(e) for e in exprs_of(obj))


def formula_nodes(f: Formula) -> Iterator[Formula]:
    stack = [f]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(formula_children(n))


def formula_children(f: Formula) -> tuple:
    if isinstance(f, Not):
        return (f.arg,)
    if isinstance(f, (And, Or)):
        return f.args
    if isinstance(f, Implies):
        return (f.lhs, f.rhs)
    return ()


def exprs_of(obj) -> Iterator[Expr]:
    """Atom sides of a formula (or the expression itself)."""
    if isinstance(obj, Expr):
        yield obj
        return
    for n in formula_nodes(obj):
        if isinstance(n, Cmp):
            yield n.left
            yield n.right


def map_atoms(f: Formula, fn: Callable[[Cmp], Formula]) -> Formula:
    if isinstance(f, Cmp):
        return fn(f)
    if isinstance(f, Not):
        return Not(map_atoms(f.arg, fn))
    if isinstance(f, And):
        return And(tuple(map_atoms(a, fn) for a in f.args))
    if isinstance(f, Or):
        return Or(tuple(map_atoms(a, fn) for a in f.args))
    if isinstance(f, Implies):
        return Implies(map_atoms(f.lhs, fn), map_atoms(f.rhs, fn))
    return f


def map_formula_exprs(f: Formula, fn: Callable[[Expr], Expr]) -> Formula:
    return map_atoms(f, lambda a: Cmp(a.op, fn(a.left), fn(a.right)))


def substitute(obj, mapping: Mapping[str, Expr]):
    def sub_var(n: Expr) -> Expr:
        if isinstance(n, Var) and n.name in mapping:
            return mapping[n.name]
        return n

    if isinstance(obj, Expr):
        return map_expr(obj, sub_var)
    return map_formula_exprs(obj, lambda e: map_expr(e, sub_var))


def has_rounding(e: Expr) -> bool:
    return any(isinstance(n, RoundFP) for n in walk(e))


def strip_rounding(e: Expr) -> Expr:
    return map_expr(e, lambda n: n.arg if isinstance(n, RoundFP) else n)


def conjuncts(f: Formula) -> list[Formula]:
    if isinstance(f, And):
        out = []
        for a in f.args:
            out.extend(conjuncts(a))
        return out
    if f == TRUE:
        return []
    return [f]


# ------------------------------------------------------------ exact values


class NotRational(ValueError):
    """Raised when exact evaluation meets a transcendental operation."""


def eval_exact(e: Expr, point: Mapping[str, object]) -> mpq:
    """Exact value of a rational-closed expression at a point.

    RoundFP and RoundToInt use exact IEEE / tie-rule semantics here, so this
    doubles as a floating-point emulator.
    """
    if isinstance(e, Var):
        return scalar(point[e.name])
    if isinstance(e, Lit):
        return e.value
    if isinstance(e, Unary):
        a = eval_exact(e.arg, point)
        if e.op == "neg":
            return -a
        if e.op == "abs":
            return abs(a)
        if e.op == "sqrt":
            if a >= 0:
                r = _exact_sqrt(a)
                if r is not None:
                    return r
        raise NotRational(e.op)
    if isinstance(e, Binary):
        a = eval_exact(e.left, point)
        b = eval_exact(e.right, point)
        if e.op == "add":
            return a + b
        if e.op == "sub":
            return a - b
        if e.op == "mul":
            return a * b
        if e.op == "div":
            if b == 0:
                raise ZeroDivisionError("division by zero")
            return a / b
        if e.op == "min":
            return min(a, b)
        if e.op == "max":
            return max(a, b)
        if e.op == "mod":
            if b == 0:
                raise ZeroDivisionError("mod by zero")
            m = abs(b)
            return a - m * (a.numerator * m.denominator // (m.numerator * a.denominator))
    if isinstance(e, Pow):
        return eval_exact(e.base, point) ** e.exponent
    if isinstance(e, RoundFP):
        return round_to_format(eval_exact(e.arg, point), e.fmt, e.mode)
    if isinstance(e, RoundToInt):
        return round_to_int(eval_exact(e.arg, point), e.mode)
    if isinstance(e, PiConst):
        raise NotRational("pi")
    raise TypeError(f"not an expression: {e!r}")


def _exact_sqrt(q: mpq) -> mpq | None:
    import gmpy2

    n, d = q.numerator, q.denominator
    rn, en = gmpy2.iroot(n, 2)
    rd, ed = gmpy2.iroot(d, 2)
    if en and ed:
        return mpq(int(rn), int(rd))
    return None


def holds_exact(f: Formula, point: Mapping[str, object]) -> bool:
    if isinstance(f, Const):
        return f.value
    if isinstance(f, Cmp):
        a = eval_exact(f.left, point)
        b = eval_exact(f.right, point)
        return {
            "<=": a <= b,
            "<": a < b,
            ">=": a >= b,
            ">": a > b,
            "=": a == b,
        }[f.op]
    if isinstance(f, Not):
        return not holds_exact(f.arg, point)
    if isinstance(f, And):
        return all(holds_exact(a, point) for a in f.args)
    if isinstance(f, Or):
        return any(holds_exact(a, point) for a in f.args)
    if isinstance(f, Implies):
        return (not holds_exact(f.lhs, point)) or holds_exact(f.rhs, point)
    raise TypeError(f"not a formula: {f!r}")


# ---------------------------------------------------------------- NVC


@dataclass(frozen=True)
class Sort:
    kind: str  # "real" | "int" | "float"
    fmt: FloatFormat | None = None

    def __str__(self) -> str:
        if self.kind == "float":
            return "float32" if self.fmt.name == SINGLE.name else "float64"
        return self.kind


REAL = Sort("real")
INT = Sort("int")
FLOAT32 = Sort("float", SINGLE)
FLOAT64 = Sort("float", DOUBLE)


@dataclass(frozen=True)
class VarSpec:
    name: str
    sort: Sort = REAL
    bounds: Interval = field(default_factory=Interval.entire)

    @property
    def is_int(self) -> bool:
        return self.sort.kind == "int"


@dataclass(frozen=True)
class TraceRecord:
    name: str
    before: str
    after: str


@dataclass(frozen=True)
class ProcessedNVC:
    """Declarations plus an implicit conjunction of assertions."""

    vars: tuple = ()
    assertions: tuple = ()
    trace: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "vars", tuple(self.vars))
        object.__setattr__(self, "assertions", tuple(self.assertions))
        object.__setattr__(self, "trace", tuple(self.trace))

    def var(self, name: str) -> VarSpec:
        for v in self.vars:
            if v.name == name:
                return v
        raise KeyError(name)

    @property
    def box(self) -> dict[str, Interval]:
        return {v.name: v.bounds for v in self.vars}

    @property
    def conjunction(self) -> Formula:
        return And(self.assertions)

    def digest(self) -> str:
        from .printing import nvc_to_text

        return hashlib.sha256(nvc_to_text(self).encode()).hexdigest()[:16]

    def replace(self, vars=None, assertions=None) -> ProcessedNVC:
        return ProcessedNVC(
            self.vars if vars is None else vars,
            self.assertions if assertions is None else assertions,
            self.trace,
        )

    def record(self, name: str, before: ProcessedNVC) -> ProcessedNVC:
        """Append a trace entry describing the step ``before`` -> self."""
        rec = TraceRecord(name, before.digest(), self.digest())
        return ProcessedNVC(self.vars, self.assertions, self.trace + (rec,))


ExprLike = Union[Expr, int, str, Fraction]
