"""Replacing floating-point rounding by exact arithmetic plus an error
cushion.

A *context* is a maximal atom side that contains at least one rounding
node.  Each context gets an absolute bound δ on |rounded − exact| over the
box, computed here by first-order error propagation or imported from an
external analyser.  ``eliminate_fp`` then swaps every context for its
exact counterpart shifted by ±δ in whichever direction makes the atom
easier to satisfy, so the result has at least the models of the input.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, replace
from fractions import Fraction

from gmpy2 import mpfr, mpq

from .errors import (
    DenominatorMayVanish,
    UnboundedContext,
    UnboundedVariable,
    UncertifiedOperation,
    UnparsableOutput,
)
from .fpformat import DOUBLE, SINGLE, RoundMode, is_representable
from .interval import DEFAULT_PREC, evaluator, to_mpq
from .ir import (
    FLOAT32,
    FLOAT64,
    PI,
    REAL,
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
    ProcessedNVC,
    RoundFP,
    RoundToInt,
    Unary,
    Var,
    VarSpec,
    formula_nodes,
    free_vars,
    has_rounding,
    strip_rounding,
)
from .printing import expr_to_infix, expr_to_sexpr, infix_number

INTERNAL = "internal"
EXTERNAL = "external"


@dataclass(frozen=True)
class FPContext:
    expr: Expr
    exact: Expr
    bound: mpq | None = None
    source: str | None = None
    tool: str | None = None
    raw: str | None = None

    @property
    def ident(self) -> str:
        """Stable short id derived from the printed expression."""
        return context_id(self.expr)

    def with_bound(self, bound, source: str = INTERNAL, tool: str | None = None, raw: str | None = None) -> FPContext:
        return replace(self, bound=mpq(bound), source=source, tool=tool, raw=raw)


def context_id(e: Expr) -> str:
    return hashlib.sha256(expr_to_sexpr(e).encode()).hexdigest()[:10]


def make_context(e: Expr) -> FPContext:
    return FPContext(e, strip_rounding(e))


# ------------------------------------------------------------- collection


def collect_fp_contexts(nvc_or_formulas) -> list[FPContext]:
    """One context per distinct atom side containing a rounding node, in
    order of first appearance."""
    formulas = nvc_or_formulas.assertions if isinstance(nvc_or_formulas, ProcessedNVC) else nvc_or_formulas
    seen: dict[Expr, FPContext] = {}
    for f in formulas:
        # formula_nodes is depth-first from the right; gather then order
        atoms = [n for n in formula_nodes(f) if isinstance(n, Cmp)]
        for atom in reversed(atoms):
            for side in (atom.left, atom.right):
                if side not in seen and has_rounding(side):
                    seen[side] = make_context(side)
    return list(seen.values())


# ---------------------------------------------------------- error engine


class _ErrorEngine:
    """Propagates (enclosure of the exact value, bound on the error)."""

    def __init__(self, box: dict[str, Interval], prec: int, known: dict[Expr, mpq] | None = None):
        self.ev = evaluator(prec)
        self.known = known or {}
        self.used_known = False
        self.env = self.ev.enclose_box(box)
        self.up = self.ev.up
        self.memo: dict = {}

    def _mag(self, r) -> mpq:
        m = max(self.up.abs(r[0]), self.up.abs(r[1]))
        if m.is_infinite():
            raise UncertifiedOperation("unbounded intermediate value")
        return to_mpq(m)

    def _up(self, x: mpfr) -> mpq:
        if x.is_infinite() or x.is_nan():
            raise UncertifiedOperation("unbounded error term")
        return to_mpq(x)

    def _q(self, q: mpq) -> mpfr:
        return self.up.add(q, mpfr(0))

    def run(self, e: Expr):
        key = id(e)
        hit = self.memo.get(key)
        if hit is None:
            hit = self._node(e)
            if e in self.known:
                # a sub-expression with a bound established elsewhere
                self.used_known = True
                hit = (hit[0], self.known[e])
            self.memo[key] = hit
        return hit

    def _node(self, e: Expr):
        ev = self.ev
        if isinstance(e, Var):
            return self.env[e.name], mpq(0)
        if isinstance(e, Lit):
            return ev.enclose_q(e.value), mpq(0)
        if isinstance(e, PiConst):
            return ev.pi, mpq(0)
        if isinstance(e, RoundFP):
            v, err = self.run(e.arg)
            if err == 0 and isinstance(e.arg, Lit) and is_representable(e.arg.value, e.fmt):
                return v, mpq(0)
            mag = self._mag(v) + err
            if mag > e.fmt.max_finite:
                raise UncertifiedOperation(f"rounding to {e.fmt.name} may overflow")
            return v, err + e.fmt.eps * mag + e.fmt.zeta
        if isinstance(e, RoundToInt):
            v, err = self.run(e.arg)
            return ev._roundint(v, e.mode), (err + 1 if err > 0 else mpq(0))
        if isinstance(e, Pow):
            v, err = self.run(e.base)
            out = ev._pow(v, e.exponent)
            if err == 0 or e.exponent == 0:
                return out, mpq(0)
            n = e.exponent
            m = self._mag(v) + err
            return out, n * m ** (n - 1) * err
        if isinstance(e, Unary):
            v, err = self.run(e.arg)
            out = getattr(ev, "_" + e.op)(v)
            return out, self._unary_err(e.op, v, err)
        if isinstance(e, Binary):
            va, ea = self.run(e.left)
            vb, eb = self.run(e.right)
            out = getattr(ev, "_" + e.op)(va, vb)
            return out, self._binary_err(e.op, va, ea, vb, eb)
        raise TypeError(f"not an expression: {e!r}")

    def _unary_err(self, op: str, v, err: mpq) -> mpq:
        if err == 0 or op in ("neg", "abs"):
            return err
        ev, up = self.ev, self.up
        lo = to_mpq(v[0])
        if op == "sqrt":
            crude = self._up(up.sqrt(self._q(err)))
            if lo - err > 0:
                root = ev.dn.sqrt(ev.dn.add(lo - err, mpfr(0)))
                fine = self._up(up.div(self._q(err), ev.dn.mul(root, 2)))
                return min(crude, fine)
            return crude
        if op in ("sin", "cos"):
            wide = (ev.dn.sub(v[0], self._q(err)), up.add(v[1], self._q(err)))
            deriv = ev._cos(wide) if op == "sin" else ev._sin(wide)
            slope = min(self._mag(deriv), mpq(1))
            return min(err * slope, mpq(2))
        if op == "exp":
            return err * self._up(up.exp(up.add(v[1], self._q(err))))
        if op == "log":
            if lo - err <= 0:
                raise DenominatorMayVanish("log argument may reach zero after rounding")
            return self._up(up.div(self._q(err), ev.dn.add(lo - err, mpfr(0))))
        raise TypeError(op)

    def _binary_err(self, op: str, va, ea: mpq, vb, eb: mpq) -> mpq:
        if ea == 0 and eb == 0:
            return mpq(0)
        if op in ("add", "sub"):
            return ea + eb
        if op in ("min", "max"):
            return max(ea, eb)
        if op == "mul":
            return self._mag(va) * eb + self._mag(vb) * ea + ea * eb
        if op == "div":
            if va[0].is_infinite() or va[1].is_infinite():
                raise UncertifiedOperation("unbounded numerator")
            if vb[0] <= 0 <= vb[1]:
                raise DenominatorMayVanish("denominator interval contains zero")
            bmin = min(abs(to_mpq(vb[0])), abs(to_mpq(vb[1])))
            margin = bmin - eb
            if margin <= 0:
                raise DenominatorMayVanish("denominator may vanish after rounding")
            quotient = self._mag(self.ev._div(va, vb))
            return (ea + quotient * eb) / margin
        if op == "mod":
            raise UncertifiedOperation("mod of an inexact operand")
        raise TypeError(op)


def compute_error_bound_internal(
    ctx: FPContext,
    box: dict[str, Interval],
    prec: int = DEFAULT_PREC,
    known: dict[Expr, mpq] | None = None,
) -> mpq:
    """Sound bound on |ctx.expr − ctx.exact| over ``box``.

    ``known`` maps rounded sub-expressions to error bounds that are taken
    as given instead of being recomputed.
    """
    return _internal(ctx, box, prec, known)[0]


def _internal(ctx: FPContext, box, prec: int, known) -> tuple[mpq, bool]:
    for name in sorted(free_vars(ctx.expr)):
        iv = box.get(name)
        if iv is None or not iv.is_finite:
            raise UnboundedVariable(name)
    engine = _ErrorEngine(box, prec, {k: v for k, v in (known or {}).items() if k != ctx.expr})
    return round_up_decimal(engine.run(ctx.expr)[1]), engine.used_known


def round_up_decimal(q: mpq, digits: int = 7) -> mpq:
    """Smallest decimal with ``digits`` significant digits that is >= q."""
    if q <= 0:
        return mpq(0)
    exp10 = len(str(q.numerator // q.denominator)) if q >= 1 else -len(str(q.denominator // q.numerator)) + 1
    scale = mpq(10) ** (digits - exp10)
    n = -((-q.numerator * scale.numerator) // (q.denominator * scale.denominator))
    return mpq(n) / scale


def bound_contexts(
    contexts: list[FPContext],
    box: dict[str, Interval],
    prec: int = DEFAULT_PREC,
    injected: dict[str, object] | None = None,
) -> list[FPContext]:
    """Attach a bound to every context: an injected value when one matches
    the context id (prefixes accepted), otherwise the internal engine.

    Injected bounds are reused inside other contexts that contain the same
    rounded expression, e.g. ``-1 * e`` inherits the bound given for ``e``.
    """
    injected = injected or {}
    given: dict[Expr, FPContext] = {}
    for ctx in contexts:
        for key, v in injected.items():
            if ctx.ident.startswith(key):
                q = _parse_decimal(v) if isinstance(v, str) else mpq(v)
                given[ctx.expr] = ctx.with_bound(q, EXTERNAL, "injected", str(v))
                break
    known = {e: c.bound for e, c in given.items()}
    out = []
    for ctx in contexts:
        if ctx.expr in given:
            out.append(given[ctx.expr])
            continue
        bound, derived = _internal(ctx, box, prec, known)
        out.append(ctx.with_bound(bound, INTERNAL, "derived" if derived else None))
    return out


# ------------------------------------------------------------- FPTaylor


def export_fptaylor(contexts, box: dict[str, Interval]) -> str:
    """FPTaylor input: a ``Variables`` and an ``Expressions`` section."""
    if isinstance(contexts, FPContext):
        contexts = [contexts]
    names = set()
    for ctx in contexts:
        names |= free_vars(ctx.expr)
    if not contexts:
        names = set(box)
    lines = ["Variables"]
    for name in sorted(names):
        iv = box[name]
        if not iv.is_finite:
            raise UnboundedVariable(name)
        lines.append(f"  real {name} in [{infix_number(iv.lo)}, {infix_number(iv.hi)}];")
    lines.append("")
    lines.append("Expressions")
    for ctx in contexts:
        lines.append(f"  {expr_to_infix(ctx.expr)};")
    return "\n".join(lines) + "\n"


_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_EXACT_LINE = re.compile(r"absolute error[^:\n]*exact[^:\n]*:\s*(" + _NUM + ")", re.IGNORECASE)
_ANY_LINE = re.compile(r"absolute error[^:\n]*:\s*(" + _NUM + ")", re.IGNORECASE)
_BARE = re.compile(r"^\s*(" + _NUM + r")\s*$")


def _parse_decimal(text: str) -> mpq:
    q = mpq(Fraction(text.strip()))
    if q < 0:
        raise UnparsableOutput(f"negative error bound {text}")
    return q


def parse_error_bound(text: str) -> mpq:
    """Extract an absolute error bound from analyser output (exact decimal)."""
    for pattern in (_EXACT_LINE, _ANY_LINE, _BARE):
        m = pattern.search(text)
        if m:
            return _parse_decimal(m.group(1))
    raise UnparsableOutput("no absolute error bound found")


def import_external_bound(ctx: FPContext, tool_output: str, tool: str = "fptaylor") -> FPContext:
    return ctx.with_bound(parse_error_bound(tool_output), EXTERNAL, tool, tool_output)


class _InfixParser:
    """Reader for the infix dialect written by :func:`export_fptaylor`."""

    _TOKEN = re.compile(r"\s*(?:(\d+\.?\d*(?:[eE][-+]?\d+)?|\.\d+(?:[eE][-+]?\d+)?)|([A-Za-z_][A-Za-z0-9_]*)|(.))")

    def __init__(self, text: str):
        self.toks = []
        for m in self._TOKEN.finditer(text.strip()):
            num, ident, sym = m.groups()
            if num is not None:
                self.toks.append(("num", num))
            elif ident is not None:
                self.toks.append(("id", ident))
            elif sym is not None and not sym.isspace():
                self.toks.append(("sym", sym))
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None)

    def take(self, sym=None):
        tok = self.peek()
        if sym is not None and tok != ("sym", sym):
            raise UnparsableOutput(f"expected {sym!r}, got {tok[1]!r}")
        self.i += 1
        return tok

    def parse(self) -> Expr:
        e = self.sum()
        if self.peek()[0] is not None:
            raise UnparsableOutput(f"trailing input at {self.peek()[1]!r}")
        return e

    def sum(self) -> Expr:
        e = self.product()
        while self.peek() in (("sym", "+"), ("sym", "-")):
            op = "add" if self.take()[1] == "+" else "sub"
            e = Binary(op, e, self.product())
        return e

    def product(self) -> Expr:
        e = self.unary()
        while self.peek() in (("sym", "*"), ("sym", "/")):
            op = "mul" if self.take()[1] == "*" else "div"
            e = Binary(op, e, self.unary())
        return e

    def unary(self) -> Expr:
        if self.peek() == ("sym", "-"):
            self.take()
            if self.peek()[0] == "num":
                return Lit(-mpq(Fraction(self.take()[1])))
            return Unary("neg", self.unary())
        return self.atom()

    def atom(self) -> Expr:
        kind, val = self.take()
        if kind == "num":
            return Lit(mpq(Fraction(val)))
        if kind == "sym" and val == "(":
            e = self.sum()
            self.take(")")
            return e
        if kind == "id":
            if self.peek() != ("sym", "("):
                return PI if val == "pi" else Var(val)
            self.take("(")
            args = [self.sum()]
            while self.peek() == ("sym", ","):
                self.take()
                args.append(self.sum())
            self.take(")")
            if val in ("rnd32", "rnd64"):
                return RoundFP(SINGLE if val == "rnd32" else DOUBLE, _RNE, args[0])
            if val in ("round_even", "round_away"):
                return RoundToInt(_RNE if val == "round_even" else _RNA, args[0])
            if len(args) == 1 and val in ("sin", "cos", "exp", "log", "sqrt", "abs"):
                return Unary(val, args[0])
            if len(args) == 2 and val in ("min", "max", "mod"):
                return Binary(val, args[0], args[1])
        raise UnparsableOutput(f"unexpected token {val!r}")


_RNE = RoundMode.NEAREST_EVEN
_RNA = RoundMode.NEAREST_AWAY


def parse_infix(text: str) -> Expr:
    return _InfixParser(text).parse()


def parse_fptaylor(text: str) -> tuple[dict[str, Interval], list[Expr]]:
    """Read back a file produced by :func:`export_fptaylor`."""
    box: dict[str, Interval] = {}
    exprs: list[Expr] = []
    section = None
    for raw in text.splitlines():
        line = raw.split("//", 1)[0].strip()
        if not line:
            continue
        if line in ("Variables", "Expressions"):
            section = line
            continue
        if section == "Variables":
            m = re.match(r"^(?:real|float32|float64)\s+(\w+)\s+in\s*\[(.*),(.*)\]\s*;$", line)
            if not m:
                raise UnparsableOutput(line)
            lo, hi = parse_infix(m.group(2)), parse_infix(m.group(3))
            box[m.group(1)] = Interval(_lit_value(lo), _lit_value(hi))
        elif section == "Expressions":
            exprs.append(parse_infix(line.rstrip(";")))
        else:
            raise UnparsableOutput(line)
    return box, exprs


def _lit_value(e: Expr) -> mpq:
    if isinstance(e, Lit):
        return e.value
    if isinstance(e, Binary) and e.op == "div" and isinstance(e.left, Lit) and isinstance(e.right, Lit):
        return e.left.value / e.right.value
    if isinstance(e, Unary) and e.op == "neg":
        return -_lit_value(e.arg)
    raise UnparsableOutput("variable bound is not a number")


# ----------------------------------------------------------- elimination


def _shift(exact: Expr, delta: mpq, up: bool) -> Expr:
    if delta == 0:
        return exact
    return Binary("add" if up else "sub", exact, Lit(delta))


def eliminate_fp(nvc: ProcessedNVC, contexts: list[FPContext]) -> ProcessedNVC:
    """Weaken every atom by replacing rounded sides with exact ± δ.

    At positive polarity the smaller side moves down and the larger side
    moves up; at negative polarity the opposite.  Equalities with rounded
    sides are split into two inequalities first.
    """
    table: dict[Expr, FPContext] = {}
    for ctx in contexts:
        if ctx.bound is None:
            raise UnboundedContext(f"context {ctx.ident} has no error bound")
        table[ctx.expr] = ctx

    def side(e: Expr, lower: bool, positive: bool) -> Expr:
        if not has_rounding(e):
            return e
        ctx = table.get(e)
        if ctx is None:
            raise UnboundedContext(f"no error bound for {expr_to_sexpr(e)}")
        # the smaller side drops when weakening a positive atom
        return _shift(ctx.exact, ctx.bound, up=(lower != positive))

    def atom(a: Cmp, positive: bool) -> Formula:
        if not (has_rounding(a.left) or has_rounding(a.right)):
            return a
        op, left, right = a.op, a.left, a.right
        if op in (">=", ">"):
            op, left, right = ("<=" if op == ">=" else "<"), right, left
        if op == "=":
            return And((atom(Cmp("<=", left, right), positive), atom(Cmp("<=", right, left), positive)))
        return Cmp(op, side(left, True, positive), side(right, False, positive))

    def go(f: Formula, positive: bool) -> Formula:
        if isinstance(f, Cmp):
            return atom(f, positive)
        if isinstance(f, Not):
            return Not(go(f.arg, not positive))
        if isinstance(f, And):
            return And(tuple(go(a, positive) for a in f.args))
        if isinstance(f, Or):
            return Or(tuple(go(a, positive) for a in f.args))
        if isinstance(f, Implies):
            return Implies(go(f.lhs, not positive), go(f.rhs, positive))
        if isinstance(f, Const):
            return f
        raise TypeError(f"not a formula: {f!r}")

    before = nvc
    assertions = [go(f, True) for f in nvc.assertions]
    specs = [VarSpec(v.name, REAL if v.sort in (FLOAT32, FLOAT64) else v.sort, v.bounds) for v in nvc.vars]
    return nvc.replace(vars=specs, assertions=assertions).record("eliminate-fp", before)
