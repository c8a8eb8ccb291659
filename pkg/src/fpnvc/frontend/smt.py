"""Translation of SMT-LIB assertions into the formula IR.

Only assertions and declarations matter; every other command is skipped.
Function symbols are interpreted by name, so axioms that Why3 emits for
``sin``, ``sqrt`` and friends are ignored in favour of the built-in
meaning.  An assertion that uses anything outside the supported fragment
is dropped (never the whole file), which can only weaken the conjunction.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from fractions import Fraction

from ..errors import NoAssertions, NonFiniteLiteral, Unsupported
from ..fpformat import SINGLE, FloatFormat, RoundMode, decode_fp_literal, format_for_widths
from ..ir import (
    FALSE,
    FLOAT32,
    FLOAT64,
    INT,
    PI,
    REAL,
    TRUE,
    And,
    Binary,
    Cmp,
    Expr,
    Formula,
    Implies,
    Interval,
    Lit,
    Not,
    Or,
    Pow,
    ProcessedNVC,
    RoundFP,
    RoundToInt,
    Sort,
    Unary,
    Var,
    VarSpec,
    scalar,
)
from .sexpr import Atom, List, SExpr, to_text

log = logging.getLogger(__name__)

UNSUPPORTED = "UnsupportedFunction"
MIXED = "MixedPrecision"
UNKNOWN_SORT = "UnknownSort"


class _Mixed:
    """Sentinel returned by :func:`infer_fp_format` on disagreeing formats."""

    def __repr__(self):
        return "MixedPrecision"


MixedPrecision = _Mixed()


@dataclass
class ParseReport:
    kept: int = 0
    dropped: list = field(default_factory=list)  # (assert index, reason, detail)
    warnings: list = field(default_factory=list)

    @property
    def total(self) -> int:
        return self.kept + len(self.dropped)

    def as_dict(self) -> dict:
        return {
            "kept": self.kept,
            "dropped": [{"index": i, "reason": r, "detail": d} for i, r, d in self.dropped],
            "warnings": list(self.warnings),
        }


@dataclass
class Declarations:
    """Symbols visible to assertions: variables, function signatures, macros."""

    vars: dict = field(default_factory=dict)  # name -> Sort
    funs: dict = field(default_factory=dict)  # name -> (arg sort tokens, return sort or None)
    macros: dict = field(default_factory=dict)  # zero-arity define-fun bodies
    order: list = field(default_factory=list)


# ------------------------------------------------------------------ sorts


def parse_sort(s: SExpr):
    """Sort of a declaration: a ``Sort``, the strings 'Bool'/'RoundingMode',
    or None for anything unknown."""
    if isinstance(s, Atom):
        t = s.token
        return {
            "Real": REAL,
            "Int": INT,
            "Float32": FLOAT32,
            "Float64": FLOAT64,
            "Bool": "Bool",
            "RoundingMode": "RoundingMode",
        }.get(t)
    parts = [c.token if isinstance(c, Atom) else None for c in s]
    if len(parts) == 4 and parts[0] == "_" and parts[1] == "FloatingPoint":
        try:
            fmt = format_for_widths(int(parts[2]), int(parts[3]) - 1)
        except (TypeError, ValueError):
            return None
        return FLOAT32 if fmt is SINGLE else FLOAT64
    return None


# ----------------------------------------------------------------- names

_ROUND_MODES = {
    "RNE": RoundMode.NEAREST_EVEN,
    "roundNearestTiesToEven": RoundMode.NEAREST_EVEN,
    "NearestTiesToEven": RoundMode.NEAREST_EVEN,
    "RNA": RoundMode.NEAREST_AWAY,
    "roundNearestTiesToAway": RoundMode.NEAREST_AWAY,
    "NearestTiesToAway": RoundMode.NEAREST_AWAY,
}
_OTHER_MODES = {"RTZ", "RTP", "RTN", "roundTowardZero", "roundTowardPositive", "roundTowardNegative", "ToZero", "Up", "Down"}

_UNARY = {
    "abs": "abs",
    "sin": "sin",
    "cos": "cos",
    "exp": "exp",
    "log": "log",
    "ln": "log",
    "sqrt": "sqrt",
    "square_root": "sqrt",
}
_BINARY = {"min": "min", "max": "max", "mod": "mod"}
_CMP = {"<=": "<=", "<": "<", ">=": ">=", ">": ">", "=": "="}
_FP_CMP = {"fp.leq": "<=", "fp.lt": "<", "fp.geq": ">=", "fp.gt": ">", "fp.eq": "="}
_FP_ARITH = {"fp.add": "add", "fp.sub": "sub", "fp.mul": "mul", "fp.div": "div"}
_FINITE = {"isfinitefloat", "fp.isfinite", "is_finite", "isfinite", "isfinitedouble"}
_CONVERT = {"to_float", "of_int", "of_real", "to_float32", "to_float64"}

_NUMBER = re.compile(r"^[-+]?(\d+(\.\d*)?|\.\d+)([eE][-+]?\d+)?$|^[-+]?\d+/\d+$")


def normalize_name(name: str) -> str:
    """Strip quoting and Why3 decorations from an interpreted-function name."""
    if len(name) >= 2 and name[0] == "|" and name[-1] == "|":
        name = name[1:-1]
    for suffix in ("__logic", "__function_guard"):
        if name.endswith(suffix):
            name = name[: -len(suffix)]
    if name.startswith("real_"):
        name = name[5:]
    elif name.startswith("Real_"):
        name = name[5:].lower()
    return name


def unquote(name: str) -> str:
    if len(name) >= 2 and name[0] == "|" and name[-1] == "|":
        return name[1:-1]
    return name


def parse_number(tok: str):
    """Exact value of a numeral token, or None."""
    if _NUMBER.match(tok):
        return scalar(Fraction(tok))
    return None


def _bits(tok: str) -> str:
    if tok.startswith("#b"):
        return tok[2:]
    if tok.startswith("#x"):
        return "".join(format(int(c, 16), "04b") for c in tok[2:])
    raise Unsupported(tok, UNSUPPORTED)


# ------------------------------------------------------------ inference


def infer_fp_format(operands, env: Declarations | dict):
    """Common float format of the operand trees.

    Returns SINGLE/DOUBLE when every float-typed leaf agrees, the
    ``MixedPrecision`` sentinel when they disagree, and None when the
    operands carry no float type at all.
    """
    var_sorts = env.vars if isinstance(env, Declarations) else env
    found: set[str] = set()
    formats: dict[str, FloatFormat] = {}
    for op in operands:
        stack = [op]
        while stack:
            n = stack.pop()
            fmt = None
            if isinstance(n, RoundFP):
                fmt = n.fmt
            elif isinstance(n, Lit):
                fmt = n.fmt
            elif isinstance(n, Var):
                sort = var_sorts.get(n.name)
                if isinstance(sort, Sort) and sort.kind == "float":
                    fmt = sort.fmt
            if fmt is not None:
                found.add(fmt.name)
                formats[fmt.name] = fmt
            if not isinstance(n, RoundFP):
                if isinstance(n, Unary):
                    stack.append(n.arg)
                elif isinstance(n, Binary):
                    stack.extend((n.left, n.right))
                elif isinstance(n, (Pow,)):
                    stack.append(n.base)
                elif isinstance(n, RoundToInt):
                    stack.append(n.arg)
    if not found:
        return None
    if len(found) > 1:
        return MixedPrecision
    return formats[found.pop()]


# ------------------------------------------------------------- translation


class _ModeValue:
    __slots__ = ("mode",)

    def __init__(self, mode: RoundMode):
        self.mode = mode


class Translator:
    def __init__(self, env: Declarations, warnings: list | None = None):
        self.env = env
        self.warnings = warnings if warnings is not None else []
        self._macro_stack: set[str] = set()

    # -- typed entry points

    def formula(self, s: SExpr, scope: dict | None = None) -> Formula:
        v = self.tr(s, scope or {})
        if not isinstance(v, Formula):
            raise Unsupported(to_text(s), UNKNOWN_SORT)
        return v

    def expr(self, s: SExpr, scope: dict) -> Expr:
        v = self.tr(s, scope)
        if not isinstance(v, Expr):
            raise Unsupported(to_text(s), UNKNOWN_SORT)
        return v

    def mode(self, s: SExpr, scope: dict) -> RoundMode:
        v = self.tr(s, scope)
        if not isinstance(v, _ModeValue):
            raise Unsupported(to_text(s), UNKNOWN_SORT)
        return v.mode

    # -- generic dispatcher

    def tr(self, s: SExpr, scope: dict):
        if isinstance(s, Atom):
            return self._atom(s.token, scope)
        if not s.children:
            raise Unsupported("()", UNSUPPORTED)
        head = s[0]
        args = s.children[1:]
        if isinstance(head, List):
            return self._indexed_app(head, args, scope)
        name = head.token
        if name == "let":
            return self._let(s, scope)
        if name == "!":
            return self.tr(args[0], scope)
        if name == "_":
            return self._indexed_const(s)
        if name == "fp":
            return self._fp_literal(args)
        return self._app(name, args, scope, s)

    def _atom(self, tok: str, scope: dict):
        if tok in scope:
            return scope[tok]
        if tok == "true":
            return TRUE
        if tok == "false":
            return FALSE
        q = parse_number(tok)
        if q is not None:
            return Lit(q)
        if tok in _ROUND_MODES:
            return _ModeValue(_ROUND_MODES[tok])
        if tok in _OTHER_MODES:
            self.warnings.append(f"rounding mode {tok} treated as RNE")
            log.warning("rounding mode %s treated as RNE", tok)
            return _ModeValue(RoundMode.NEAREST_EVEN)
        name = unquote(tok)
        if name in self.env.vars:
            if isinstance(self.env.vars[name], Sort):
                return Var(name)
            raise Unsupported(name, UNKNOWN_SORT)
        if name in self.env.macros:
            return self._macro(name)
        if normalize_name(tok) == "pi":
            return PI
        raise Unsupported(name, UNKNOWN_SORT)

    def _macro(self, name: str):
        if name in self._macro_stack:
            raise Unsupported(name, UNSUPPORTED)
        self._macro_stack.add(name)
        try:
            return self.tr(self.env.macros[name], {})
        finally:
            self._macro_stack.discard(name)

    def _let(self, s: List, scope: dict):
        if len(s) != 3 or not isinstance(s[1], List):
            raise Unsupported("let", UNSUPPORTED)
        inner = dict(scope)
        for b in s[1]:
            if not isinstance(b, List) or len(b) != 2 or not isinstance(b[0], Atom):
                raise Unsupported("let", UNSUPPORTED)
            # parallel binding: values see the outer scope only
            inner[b[0].token] = self.tr(b[1], scope)
        return self.tr(s[2], inner)

    def _indexed_const(self, s: List):
        toks = [c.token if isinstance(c, Atom) else "" for c in s]
        if len(toks) == 4 and toks[1] in ("+zero", "-zero"):
            fmt = format_for_widths(int(toks[2]), int(toks[3]) - 1)
            return Lit(0, fmt)
        if len(toks) >= 2 and toks[1] in ("+oo", "-oo", "NaN"):
            raise Unsupported(toks[1], UNSUPPORTED)
        raise Unsupported(to_text(s), UNSUPPORTED)

    def _fp_literal(self, args):
        if len(args) != 3 or not all(isinstance(a, Atom) for a in args):
            raise Unsupported("fp", UNSUPPORTED)
        sign, e, m = (_bits(a.token) for a in args)
        try:
            fmt = format_for_widths(len(e), len(m))
            value = decode_fp_literal(sign, e, m)
        except NonFiniteLiteral:
            raise Unsupported("non-finite fp literal", UNSUPPORTED) from None
        except ValueError:
            raise Unsupported("fp literal width", UNKNOWN_SORT) from None
        return Lit(value, fmt)

    def _indexed_app(self, head: List, args, scope: dict):
        toks = [c.token if isinstance(c, Atom) else "" for c in head]
        if len(toks) == 4 and toks[0] == "_" and toks[1] == "to_fp":
            try:
                fmt = format_for_widths(int(toks[2]), int(toks[3]) - 1)
            except ValueError:
                raise Unsupported(to_text(head), UNKNOWN_SORT) from None
            if len(args) == 2:
                return RoundFP(fmt, self.mode(args[0], scope), self.expr(args[1], scope))
            if len(args) == 1:
                # reinterpretation of a bit-vector, or an already exact value
                return self.expr(args[0], scope)
        raise Unsupported(to_text(head), UNSUPPORTED)

    def _fmt_for(self, operands, name: str) -> FloatFormat:
        fmt = infer_fp_format(operands, self.env)
        if fmt is MixedPrecision:
            raise Unsupported(name, MIXED)
        if fmt is None:
            raise Unsupported(name, UNKNOWN_SORT)
        return fmt

    def _app(self, raw: str, args, scope: dict, whole: SExpr):
        name = normalize_name(raw)
        n = len(args)

        # --- propositional structure
        if name in ("and", "or"):
            parts = tuple(self.formula(a, scope) for a in args)
            return And(parts) if name == "and" else Or(parts)
        if name == "not" and n == 1:
            return Not(self.formula(args[0], scope))
        if name == "=>" and n >= 2:
            parts = [self.formula(a, scope) for a in args]
            out = parts[-1]
            for p in reversed(parts[:-1]):
                out = Implies(p, out)
            return out
        if name == "xor" and n == 2:
            a, b = (self.formula(x, scope) for x in args)
            return Or((And((a, Not(b))), And((Not(a), b))))
        if name == "ite" and n == 3:
            c = self.formula(args[0], scope)
            a = self.tr(args[1], scope)
            b = self.tr(args[2], scope)
            if isinstance(a, Formula) and isinstance(b, Formula):
                return Or((And((c, a)), And((Not(c), b))))
            raise Unsupported("ite", UNSUPPORTED)

        # --- comparisons (chainable)
        if name in _CMP or name in _FP_CMP:
            if n < 2:
                raise Unsupported(name, UNSUPPORTED)
            op = _CMP.get(name) or _FP_CMP[name]
            vals = [self.tr(a, scope) for a in args]
            if op == "=" and all(isinstance(v, Formula) for v in vals):
                return And(tuple(And((Implies(a, b), Implies(b, a))) for a, b in zip(vals, vals[1:])))
            if not all(isinstance(v, Expr) for v in vals):
                raise Unsupported(name, UNKNOWN_SORT)
            if name in _FP_CMP:
                fmt = infer_fp_format(vals, self.env)
                if fmt is MixedPrecision:
                    raise Unsupported(name, MIXED)
            atoms = tuple(Cmp(op, a, b) for a, b in zip(vals, vals[1:]))
            return atoms[0] if len(atoms) == 1 else And(atoms)
        if name == "distinct" and n >= 2:
            vals = [self.expr(a, scope) for a in args]
            return And(tuple(Not(Cmp("=", vals[i], vals[j])) for i in range(n) for j in range(i + 1, n)))

        # --- exact arithmetic
        if name == "+" and n >= 1:
            return self._fold("add", args, scope)
        if name == "*" and n >= 1:
            return self._fold("mul", args, scope)
        if name == "-" and n == 1:
            return Unary("neg", self.expr(args[0], scope))
        if name == "-" and n >= 2:
            return self._fold("sub", args, scope)
        if name == "/" and n >= 2:
            return self._fold("div", args, scope)
        if name in _UNARY and n == 1:
            return Unary(_UNARY[name], self.expr(args[0], scope))
        if name in _BINARY and n == 2:
            return Binary(_BINARY[name], self.expr(args[0], scope), self.expr(args[1], scope))
        if name in ("^", "pow", "power", "expt") and n == 2:
            base = self.expr(args[0], scope)
            ex = self.expr(args[1], scope)
            if isinstance(ex, Lit) and ex.value.denominator == 1 and ex.value >= 0:
                return Pow(base, int(ex.value))
            raise Unsupported(name, UNSUPPORTED)
        if name in ("to_real", "fp.to_real", "from_int") and n == 1:
            return self.expr(args[0], scope)
        if name == "pi" and n <= 1:
            # Why3 exports pi as a function of one void argument
            return PI

        # --- floating point
        if name in _FP_ARITH and n == 3:
            mode = self.mode(args[0], scope)
            a, b = self.expr(args[1], scope), self.expr(args[2], scope)
            fmt = self._fmt_for([a, b], name)
            return RoundFP(fmt, mode, Binary(_FP_ARITH[name], a, b))
        if name == "fp.sqrt" and n == 2:
            mode = self.mode(args[0], scope)
            a = self.expr(args[1], scope)
            return RoundFP(self._fmt_for([a], name), mode, Unary("sqrt", a))
        if name == "fp.fma" and n == 4:
            mode = self.mode(args[0], scope)
            a, b, c = (self.expr(x, scope) for x in args[1:])
            fmt = self._fmt_for([a, b, c], name)
            return RoundFP(fmt, mode, Binary("add", Binary("mul", a, b), c))
        if name in ("fp.neg", "fp.abs") and n == 1:
            return Unary(name[3:], self.expr(args[0], scope))
        if name in ("fp.min", "fp.max") and n == 2:
            a, b = self.expr(args[0], scope), self.expr(args[1], scope)
            if infer_fp_format([a, b], self.env) is MixedPrecision:
                raise Unsupported(name, MIXED)
            return Binary(name[3:], a, b)
        if name in ("fp.roundtointegral", "fp.roundToIntegral", "round", "rounding") and n == 2:
            return RoundToInt(self.mode(args[0], scope), self.expr(args[1], scope))
        if name.lower() in _FINITE and n == 1:
            a = self.expr(args[0], scope)
            fmt = infer_fp_format([a], self.env)
            if fmt is MixedPrecision:
                raise Unsupported(name, MIXED)
            fmt = fmt or SINGLE
            return And((Cmp("<=", Lit(fmt.min_finite), a), Cmp("<=", a, Lit(fmt.max_finite))))

        # --- declared conversion functions, typed by their return sort
        sig = self.env.funs.get(unquote(raw))
        if sig is not None:
            ret = sig[1]
            if name in _CONVERT and isinstance(ret, Sort) and ret.kind == "float" and n == 2:
                return RoundFP(ret.fmt, self.mode(args[0], scope), self.expr(args[1], scope))
            raise Unsupported(unquote(raw), UNSUPPORTED)
        if name in _CONVERT and n == 2:
            raise Unsupported(unquote(raw), UNKNOWN_SORT)
        raise Unsupported(unquote(raw), UNSUPPORTED)

    def _fold(self, op: str, args, scope: dict) -> Expr:
        vals = [self.expr(a, scope) for a in args]
        out = vals[0]
        for v in vals[1:]:
            out = Binary(op, out, v)
        return out


def translate_assertion(s: SExpr, env: Declarations, warnings: list | None = None) -> Formula:
    """Translate the body of one ``assert``; raises Unsupported on anything
    outside the fragment."""
    return Translator(env, warnings).formula(s)


# ---------------------------------------------------------------- commands


def _declare(env: Declarations, name: str, arg_sorts: list, ret):
    name = unquote(name)
    if arg_sorts:
        env.funs[name] = (arg_sorts, ret)
        return
    env.vars[name] = ret
    if name not in env.order:
        env.order.append(name)


def extract_nvc(forest, preset_bounds: dict | None = None, require_asserts: bool = True):
    """Collect declarations and translate every ``assert``.

    ``preset_bounds`` lets text-format inputs attach known bounds to
    variables.  Returns (ProcessedNVC, ParseReport).
    """
    env = Declarations()
    asserts = []
    for cmd in forest:
        if not isinstance(cmd, List) or not cmd.children or not isinstance(cmd[0], Atom):
            continue
        head = cmd[0].token
        if head == "declare-fun" and len(cmd) == 4 and isinstance(cmd[1], Atom):
            arg_sorts = list(cmd[2]) if isinstance(cmd[2], List) else []
            _declare(env, cmd[1].token, arg_sorts, parse_sort(cmd[3]))
        elif head == "declare-const" and len(cmd) == 3 and isinstance(cmd[1], Atom):
            _declare(env, cmd[1].token, [], parse_sort(cmd[2]))
        elif head == "define-fun" and len(cmd) == 5 and isinstance(cmd[1], Atom):
            params = cmd[2]
            if isinstance(params, List) and len(params) == 0:
                env.macros[unquote(cmd[1].token)] = cmd[4]
            else:
                # axiomatised helper: keep the signature, ignore the body
                env.funs[unquote(cmd[1].token)] = (list(params), parse_sort(cmd[3]))
        elif head == "assert" and len(cmd) == 2:
            asserts.append(cmd[1])
    if require_asserts and not asserts:
        raise NoAssertions("input contains no assert commands")

    report = ParseReport()
    translator = Translator(env, report.warnings)
    kept = []
    for i, body in enumerate(asserts):
        try:
            kept.append(translator.formula(body))
            report.kept += 1
        except Unsupported as exc:
            report.dropped.append((i, exc.reason, exc.name))
            log.info("dropping assertion %d: %s", i, exc)

    preset = preset_bounds or {}
    specs = []
    for name in env.order:
        sort = env.vars[name]
        if not isinstance(sort, Sort):
            continue
        specs.append(VarSpec(name, sort, preset.get(name, Interval.entire())))
    return ProcessedNVC(specs, kept), report
