"""Outward-rounded interval evaluation of expressions and formulas.

Internally an enclosure is a pair of ``mpfr`` numbers at the working
precision; every operation rounds its lower end down and its upper end up
with MPFR's correctly rounded primitives.  Results are handed back as
:class:`~fpnvc.ir.Interval` with exact (dyadic) rational endpoints.
"""

from __future__ import annotations

import enum
from functools import lru_cache
from typing import Mapping

import gmpy2
from gmpy2 import mpfr, mpq

from .fpformat import FloatOverflow, round_to_format, round_to_int
from .ir import (
    NEG_INF,
    POS_INF,
    And,
    Binary,
    Cmp,
    Const,
    Expr,
    Formula,
    Implies,
    Interval,
    Lit,
    Not,
    Or,
    PiConst,
    Pow,
    RoundFP,
    RoundToInt,
    Unary,
    Var,
)

DEFAULT_PREC = 113

ZERO = mpfr(0)
ONE = mpfr(1)


class Truth(enum.Enum):
    TRUE = "CertainlyTrue"
    FALSE = "CertainlyFalse"
    UNKNOWN = "Unknown"

    def negate(self) -> Truth:
        if self is Truth.TRUE:
            return Truth.FALSE
        if self is Truth.FALSE:
            return Truth.TRUE
        return self


CertainlyTrue = Truth.TRUE
CertainlyFalse = Truth.FALSE
Unknown = Truth.UNKNOWN


def to_mpq(x: mpfr):
    """Exact rational value of a finite mpfr; infinities pass through."""
    if x.is_infinite():
        return NEG_INF if x < 0 else POS_INF
    return mpq(*x.as_integer_ratio())


class Evaluator:
    """Interval evaluator bound to one working precision.

    With ``fp_exact`` set, rounding nodes are enclosed by rounding both
    endpoints into the target format (rounding is monotone), which is exact
    IEEE semantics on point arguments.  Otherwise they use the relative
    error model x*(1 +- eps) +- zeta.
    """

    def __init__(self, prec: int = DEFAULT_PREC, fp_exact: bool = False):
        self.prec = prec
        self.fp_exact = fp_exact
        self.dn = gmpy2.context(precision=prec, round=gmpy2.RoundDown)
        self.up = gmpy2.context(precision=prec, round=gmpy2.RoundUp)
        self.pi = (self.dn.const_pi(), self.up.const_pi())
        self.half_pi = (self.dn.div_2exp(self.pi[0], 1), self.up.div_2exp(self.pi[1], 1))
        self.two_pi = (self.dn.mul_2exp(self.pi[0], 1), self.up.mul_2exp(self.pi[1], 1))
        self._fmt_cache: dict = {}

    # ---------------------------------------------------------- conversion

    def enclose(self, iv: Interval) -> tuple:
        lo, hi = iv.lo, iv.hi
        lo = lo if isinstance(lo, mpfr) else self.dn.add(lo, ZERO)
        hi = hi if isinstance(hi, mpfr) else self.up.add(hi, ZERO)
        return lo, hi

    def enclose_q(self, q) -> tuple:
        return self.dn.add(q, ZERO), self.up.add(q, ZERO)

    def to_interval(self, r: tuple) -> Interval:
        return Interval(to_mpq(r[0]), to_mpq(r[1]))

    def enclose_box(self, box: Mapping[str, Interval]) -> dict:
        return {k: self.enclose(v) for k, v in box.items()}

    # ---------------------------------------------------------- expressions

    def expr(self, e: Expr, env: dict, memo: dict | None = None) -> tuple:
        """Enclosure of ``e`` where ``env`` maps names to mpfr pairs."""
        if memo is None:
            memo = {}
        key = id(e)
        hit = memo.get(key)
        if hit is not None:
            return hit
        r = self._expr(e, env, memo)
        memo[key] = r
        return r

    def _expr(self, e: Expr, env: dict, memo: dict) -> tuple:
        if isinstance(e, Var):
            return env[e.name]
        if isinstance(e, Lit):
            return self.enclose_q(e.value)
        if isinstance(e, Binary):
            a = self.expr(e.left, env, memo)
            b = self.expr(e.right, env, memo)
            return getattr(self, "_" + e.op)(a, b)
        if isinstance(e, Unary):
            a = self.expr(e.arg, env, memo)
            return getattr(self, "_" + e.op)(a)
        if isinstance(e, Pow):
            return self._pow(self.expr(e.base, env, memo), e.exponent)
        if isinstance(e, RoundFP):
            return self._roundfp(self.expr(e.arg, env, memo), e.fmt, e.mode)
        if isinstance(e, RoundToInt):
            return self._roundint(self.expr(e.arg, env, memo), e.mode)
        if isinstance(e, PiConst):
            return self.pi
        raise TypeError(f"not an expression: {e!r}")

    def _add(self, a, b):
        return self.dn.add(a[0], b[0]), self.up.add(a[1], b[1])

    def _sub(self, a, b):
        return self.dn.sub(a[0], b[1]), self.up.sub(a[1], b[0])

    def _mul(self, a, b):
        dn, up = self.dn, self.up
        if b[0] == b[1]:
            a, b = b, a
        if a[0] == a[1] and not a[0].is_infinite():
            # scaling by a point, the common literal * term case
            c = a[0]
            if c == 0:
                return ZERO, ZERO
            if c > 0:
                return dn.mul(c, b[0]), up.mul(c, b[1])
            return dn.mul(c, b[1]), up.mul(c, b[0])
        los = []
        his = []
        for x in a:
            for y in b:
                if x == 0 or y == 0:
                    los.append(ZERO)
                    his.append(ZERO)
                else:
                    los.append(dn.mul(x, y))
                    his.append(up.mul(x, y))
        return min(los), max(his)

    def _div(self, a, b):
        if b[0] <= 0 <= b[1]:
            return NEG_INF, POS_INF
        dn, up = self.dn, self.up
        los = []
        his = []
        for x in a:
            for y in b:
                if x.is_infinite() and y.is_infinite():
                    los.append(NEG_INF if (x < 0) != (y < 0) else ZERO)
                    his.append(ZERO if (x < 0) != (y < 0) else POS_INF)
                    continue
                los.append(dn.div(x, y))
                his.append(up.div(x, y))
        return min(los), max(his)

    def _min(self, a, b):
        return min(a[0], b[0]), min(a[1], b[1])

    def _max(self, a, b):
        return max(a[0], b[0]), max(a[1], b[1])

    def _mod(self, a, b):
        # Euclidean remainder, result in [0, |b|)
        if b[0] <= 0 <= b[1]:
            return NEG_INF, POS_INF
        m_hi = max(self.up.abs(b[0]), self.up.abs(b[1]))
        if b[0] == b[1] and not a[0].is_infinite() and not a[1].is_infinite():
            m = abs(to_mpq(b[0]))
            lo_q, hi_q = to_mpq(a[0]), to_mpq(a[1])
            k0 = (lo_q / m).numerator // (lo_q / m).denominator
            k1 = (hi_q / m).numerator // (hi_q / m).denominator
            if k0 == k1:
                shift = k0 * m
                return self.dn.add(lo_q - shift, ZERO), self.up.add(hi_q - shift, ZERO)
        return ZERO, m_hi

    # plain unary minus and abs() would round in the global context
    def _neg(self, a):
        return self.dn.minus(a[1]), self.up.minus(a[0])

    def _abs(self, a):
        if a[0] >= 0:
            return a
        if a[1] <= 0:
            return self._neg(a)
        return ZERO, max(self.up.minus(a[0]), a[1])

    def _pow(self, a, n: int):
        if n == 0:
            return ONE, ONE
        if n % 2 == 1:
            return self.dn.pow(a[0], n), self.up.pow(a[1], n)
        lo, hi = self._abs(a)
        return self.dn.pow(lo, n), self.up.pow(hi, n)

    def _sqrt(self, a):
        # evaluated on the part of the argument where sqrt is defined
        if a[1] < 0:
            return NEG_INF, POS_INF
        return self.dn.sqrt(max(a[0], ZERO)), self.up.sqrt(a[1])

    def _log(self, a):
        if a[1] <= 0:
            return NEG_INF, POS_INF
        lo = NEG_INF if a[0] <= 0 else self.dn.log(a[0])
        return lo, self.up.log(a[1])

    def _exp(self, a):
        return self.dn.exp(a[0]), self.up.exp(a[1])

    def _periodic_hit(self, lo, hi, offset) -> bool:
        """May [lo, hi] contain a point offset + 2*k*pi for an integer k?"""
        t0 = self._div(self._sub((lo, lo), offset), self.two_pi)[0]
        t1 = self._div(self._sub((hi, hi), offset), self.two_pi)[1]
        return gmpy2.floor(t1) >= gmpy2.ceil(t0)

    def _sin(self, a):
        lo, hi = a
        if lo.is_infinite() or hi.is_infinite() or self.up.sub(hi, lo) >= self.two_pi[0]:
            return -ONE, ONE
        r_lo = min(self.dn.sin(lo), self.dn.sin(hi))
        r_hi = max(self.up.sin(lo), self.up.sin(hi))
        if self._periodic_hit(lo, hi, self.half_pi):
            r_hi = ONE
        if self._periodic_hit(lo, hi, self._neg(self.half_pi)):
            r_lo = -ONE
        return max(r_lo, -ONE), min(r_hi, ONE)

    def _cos(self, a):
        lo, hi = a
        if lo.is_infinite() or hi.is_infinite() or self.up.sub(hi, lo) >= self.two_pi[0]:
            return -ONE, ONE
        r_lo = min(self.dn.cos(lo), self.dn.cos(hi))
        r_hi = max(self.up.cos(lo), self.up.cos(hi))
        if self._periodic_hit(lo, hi, (ZERO, ZERO)):
            r_hi = ONE
        if self._periodic_hit(lo, hi, self.pi):
            r_lo = -ONE
        return max(r_lo, -ONE), min(r_hi, ONE)

    def _fmt_consts(self, fmt):
        c = self._fmt_cache.get(fmt)
        if c is None:
            c = (self.up.add(fmt.eps, ZERO), self.up.add(fmt.zeta, ZERO))
            self._fmt_cache[fmt] = c
        return c

    def _roundfp(self, a, fmt, mode):
        if self.fp_exact:
            return self._round_endpoints(a, fmt, mode)
        # x*(1 +- eps) +- zeta
        eps, zeta = self._fmt_consts(fmt)
        dn, up = self.dn, self.up
        lo, hi = a
        if not lo.is_infinite():
            lo = dn.sub(dn.sub(lo, up.mul(eps, up.abs(lo))), zeta)
        if not hi.is_infinite():
            hi = up.add(up.add(hi, up.mul(eps, up.abs(hi))), zeta)
        return lo, hi

    def _round_endpoints(self, a, fmt, mode):
        out = []
        for x, ctx in ((a[0], self.dn), (a[1], self.up)):
            if x.is_infinite():
                out.append(x)
                continue
            try:
                out.append(ctx.add(round_to_format(to_mpq(x), fmt, mode), ZERO))
            except FloatOverflow:
                out.append(NEG_INF if x < 0 else POS_INF)
        return out[0], out[1]

    def _roundint(self, a, mode):
        lo, hi = a
        if not lo.is_infinite():
            lo = self.dn.add(round_to_int(to_mpq(lo), mode), ZERO)
        if not hi.is_infinite():
            hi = self.up.add(round_to_int(to_mpq(hi), mode), ZERO)
        return lo, hi

    # ------------------------------------------------------------ formulas

    def formula(self, f: Formula, env: dict, memo: dict | None = None) -> Truth:
        if memo is None:
            memo = {}
        if isinstance(f, Cmp):
            return self.atom(f, env, memo)
        if isinstance(f, And):
            result = Truth.TRUE
            for g in f.args:
                t = self.formula(g, env, memo)
                if t is Truth.FALSE:
                    return t
                if t is Truth.UNKNOWN:
                    result = t
            return result
        if isinstance(f, Or):
            result = Truth.FALSE
            for g in f.args:
                t = self.formula(g, env, memo)
                if t is Truth.TRUE:
                    return t
                if t is Truth.UNKNOWN:
                    result = t
            return result
        if isinstance(f, Not):
            return self.formula(f.arg, env, memo).negate()
        if isinstance(f, Implies):
            t = self.formula(f.lhs, env, memo)
            if t is Truth.FALSE:
                return Truth.TRUE
            r = self.formula(f.rhs, env, memo)
            if r is Truth.TRUE:
                return r
            if t is Truth.TRUE:
                return r
            return Truth.UNKNOWN
        if isinstance(f, Const):
            return Truth.TRUE if f.value else Truth.FALSE
        raise TypeError(f"not a formula: {f!r}")

    def atom(self, f: Cmp, env: dict, memo: dict) -> Truth:
        return compare(f.op, self.expr(f.left, env, memo), self.expr(f.right, env, memo))

    def compile(self, f: Formula) -> CompiledFormula:
        return CompiledFormula(self, f)


def compare(op: str, a: tuple, b: tuple) -> Truth:
    """Three-valued ``a op b`` for two enclosures."""
    if op in (">=", ">"):
        a, b = b, a
        op = "<=" if op == ">=" else "<"
    if op == "<=":
        if a[1] <= b[0]:
            return Truth.TRUE
        if a[0] > b[1]:
            return Truth.FALSE
        return Truth.UNKNOWN
    if op == "<":
        if a[1] < b[0]:
            return Truth.TRUE
        if a[0] >= b[1]:
            return Truth.FALSE
        return Truth.UNKNOWN
    # equality
    if a[0] == a[1] == b[0] == b[1] and not a[0].is_infinite():
        return Truth.TRUE
    if a[1] < b[0] or b[1] < a[0]:
        return Truth.FALSE
    return Truth.UNKNOWN


class CompiledFormula:
    """A formula lowered to a straight-line program over enclosures.

    Structurally equal sub-expressions share one slot, so a term repeated
    across atoms is evaluated once per box.  Meant for evaluating the same
    formula on many boxes.
    """

    def __init__(self, ev: Evaluator, f: Formula):
        self.ev = ev
        self.formula = f
        self._slots: dict[Expr, int] = {}
        self.init: list = []
        self.vars: list[tuple[int, str]] = []
        self.code: list[tuple] = []
        self.tree = self._lower(f)

    def _slot(self, e: Expr) -> int:
        k = self._slots.get(e)
        if k is not None:
            return k
        ev = self.ev
        if isinstance(e, Var):
            k = self._new(None)
            self.vars.append((k, e.name))
        elif isinstance(e, Lit):
            k = self._new(ev.enclose_q(e.value))
        elif isinstance(e, PiConst):
            k = self._new(ev.pi)
        elif isinstance(e, Binary):
            a, b = self._slot(e.left), self._slot(e.right)
            k = self._new(None)
            self.code.append((k, getattr(ev, "_" + e.op), a, b))
        elif isinstance(e, Unary):
            a = self._slot(e.arg)
            k = self._new(None)
            self.code.append((k, getattr(ev, "_" + e.op), a))
        elif isinstance(e, Pow):
            a = self._slot(e.base)
            k = self._new(None)
            n = e.exponent
            self.code.append((k, lambda v: ev._pow(v, n), a))
        elif isinstance(e, RoundFP):
            a = self._slot(e.arg)
            k = self._new(None)
            fmt, mode = e.fmt, e.mode
            self.code.append((k, lambda v: ev._roundfp(v, fmt, mode), a))
        elif isinstance(e, RoundToInt):
            a = self._slot(e.arg)
            k = self._new(None)
            mode = e.mode
            self.code.append((k, lambda v: ev._roundint(v, mode), a))
        else:
            raise TypeError(f"not an expression: {e!r}")
        self._slots[e] = k
        return k

    def _new(self, value) -> int:
        self.init.append(value)
        return len(self.init) - 1

    def _lower(self, f: Formula):
        if isinstance(f, Cmp):
            return ("cmp", f.op, self._slot(f.left), self._slot(f.right))
        if isinstance(f, (And, Or)):
            return ("and" if isinstance(f, And) else "or", tuple(self._lower(g) for g in f.args))
        if isinstance(f, Not):
            return ("not", self._lower(f.arg))
        if isinstance(f, Implies):
            return ("implies", self._lower(f.lhs), self._lower(f.rhs))
        if isinstance(f, Const):
            return ("const", Truth.TRUE if f.value else Truth.FALSE)
        raise TypeError(f"not a formula: {f!r}")

    def values(self, env: Mapping[str, tuple]) -> list:
        vals = list(self.init)
        for k, name in self.vars:
            vals[k] = env[name]
        for ins in self.code:
            if len(ins) == 3:
                vals[ins[0]] = ins[1](vals[ins[2]])
            else:
                vals[ins[0]] = ins[1](vals[ins[2]], vals[ins[3]])
        return vals

    def truth(self, env: Mapping[str, tuple]) -> Truth:
        return self._eval(self.tree, self.values(env))

    def _eval(self, node, vals) -> Truth:
        tag = node[0]
        if tag == "cmp":
            return compare(node[1], vals[node[2]], vals[node[3]])
        if tag == "and":
            result = Truth.TRUE
            for g in node[1]:
                t = self._eval(g, vals)
                if t is Truth.FALSE:
                    return t
                if t is Truth.UNKNOWN:
                    result = t
            return result
        if tag == "or":
            result = Truth.FALSE
            for g in node[1]:
                t = self._eval(g, vals)
                if t is Truth.TRUE:
                    return t
                if t is Truth.UNKNOWN:
                    result = t
            return result
        if tag == "not":
            return self._eval(node[1], vals).negate()
        if tag == "implies":
            t = self._eval(node[1], vals)
            if t is Truth.FALSE:
                return Truth.TRUE
            r = self._eval(node[2], vals)
            if r is Truth.TRUE or t is Truth.TRUE:
                return r
            return Truth.UNKNOWN
        return node[1]


@lru_cache(maxsize=None)
def evaluator(prec: int = DEFAULT_PREC, fp_exact: bool = False) -> Evaluator:
    return Evaluator(prec, fp_exact)


def eval_expr_interval(e: Expr, box: Mapping[str, Interval], prec: int = DEFAULT_PREC) -> Interval:
    """Sound enclosure of the range of ``e`` over ``box``."""
    ev = evaluator(prec)
    return ev.to_interval(ev.expr(e, ev.enclose_box(box)))


def eval_formula_interval(f: Formula, box: Mapping[str, Interval], prec: int = DEFAULT_PREC) -> Truth:
    """Three-valued truth of ``f`` over every point of ``box``."""
    ev = evaluator(prec)
    return ev.formula(f, ev.enclose_box(box))
