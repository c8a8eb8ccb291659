"""Exports of exact NVCs for external provers, and parsing of their answers.

Two targets are supported: a QF_NRA SMT-LIB script in the dialect dReal
reads, and a TPTP first-order conjecture for MetiTarski.  Neither binary is
needed by anything else in the package.
"""

from __future__ import annotations

import re
from fractions import Fraction
from dataclasses import dataclass
from typing import Mapping

from gmpy2 import mpq

from .errors import UnparsableOutput, UnsupportedForBackend
from .interval import DEFAULT_PREC, evaluator, to_mpq
from .ir import (
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
    _is_inf,
    formula_nodes,
    render_decimal_exact,
    walk,
)
from .printing import formula_to_sexpr, smt_number, symbol

DREAL = "dreal"
METITARSKI = "metitarski"
PI_VAR = "pi_"


def _expr_nodes(nvc: ProcessedNVC):
    for f in nvc.assertions:
        for n in formula_nodes(f):
            if isinstance(n, Cmp):
                yield from walk(n.left)
                yield from walk(n.right)


def _uses_pi(nvc: ProcessedNVC) -> bool:
    return any(isinstance(n, PiConst) for n in _expr_nodes(nvc))


def _outward(q, up: bool, digit_limit: int, backend: str) -> mpq:
    """Round ``q`` outward to a decimal whose numerator and denominator
    both stay within ``digit_limit`` digits."""
    q = mpq(q)
    int_digits = len(str(abs(q.numerator) // q.denominator))
    if int_digits > digit_limit - 1:
        raise UnsupportedForBackend(backend, "LargeInteger")
    if len(str(abs(q.numerator))) <= digit_limit and len(str(q.denominator)) <= digit_limit:
        return q
    scale = 10 ** max(0, digit_limit - 1 - int_digits)
    s = q * scale
    n = s.numerator // s.denominator
    if up and n * s.denominator != s.numerator:
        n += 1
    return mpq(n, scale)


def pi_enclosure(prec: int = DEFAULT_PREC, digit_limit: int = 18) -> Interval:
    ev = evaluator(prec)
    lo, hi = (to_mpq(x) for x in ev.pi)
    return Interval(_outward(lo, False, digit_limit, DREAL), _outward(hi, True, digit_limit, DREAL))


def _box_for(nvc: ProcessedNVC, box: Mapping[str, Interval] | None) -> dict[str, Interval]:
    return dict(nvc.box if box is None else box)


# ------------------------------------------------------------------ dReal


def _check_dreal(nvc: ProcessedNVC, digit_limit: int) -> None:
    for n in _expr_nodes(nvc):
        if isinstance(n, RoundFP):
            raise UnsupportedForBackend(DREAL, "RoundFP")
        if isinstance(n, RoundToInt):
            raise UnsupportedForBackend(DREAL, "RoundToInt")
        if isinstance(n, Binary) and n.op == "mod":
            raise UnsupportedForBackend(DREAL, "mod")
        if isinstance(n, Lit):
            v = n.value
            if max(len(str(abs(v.numerator))), len(str(v.denominator))) > digit_limit:
                raise UnsupportedForBackend(DREAL, "LargeInteger")


def _delta_text(delta) -> str:
    delta = mpq(delta)
    if delta <= 0:
        raise ValueError("delta must be positive")
    text = render_decimal_exact(delta)
    if text is None:
        # a smaller delta is only stricter
        text = render_decimal_exact(_outward(delta, False, 40, DREAL)) or "0.001"
    return text


def export_dreal_smt2(
    nvc: ProcessedNVC,
    box: Mapping[str, Interval] | None = None,
    delta=mpq(1, 10**100),
    digit_limit: int = 18,
    prec: int = DEFAULT_PREC,
) -> str:
    """QF_NRA script: declarations, box bounds, one assert per formula."""
    _check_dreal(nvc, digit_limit)
    box = _box_for(nvc, box)
    lines = ["(set-logic QF_NRA)", f"(set-option :precision {_delta_text(delta)})"]
    bounds: list[str] = []
    for v in nvc.vars:
        sort = "Int" if v.is_int else "Real"
        lines.append(f"(declare-fun {symbol(v.name)} () {sort})")
        iv = box.get(v.name, v.bounds)
        name = symbol(v.name)
        if not _is_inf(iv.lo):
            bounds.append(f"(assert (<= {smt_number(_outward(iv.lo, False, digit_limit, DREAL))} {name}))")
        if not _is_inf(iv.hi):
            bounds.append(f"(assert (<= {name} {smt_number(_outward(iv.hi, True, digit_limit, DREAL))}))")
    if _uses_pi(nvc):
        pi = pi_enclosure(prec, digit_limit)
        lines.append(f"(declare-fun {PI_VAR} () Real)")
        bounds.append(f"(assert (<= {smt_number(pi.lo)} {PI_VAR}))")
        bounds.append(f"(assert (<= {PI_VAR} {smt_number(pi.hi)}))")
    lines += bounds
    lines += [f"(assert {formula_to_sexpr(f, PI_VAR)})" for f in nvc.assertions]
    lines.append("(check-sat)")
    lines.append("(exit)")
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------- MetiTarski


_TPTP_FUN = {"sqrt": "sqrt", "sin": "sin", "cos": "cos", "exp": "exp", "log": "ln", "abs": "abs"}
_TPTP_OP = {"add": "+", "sub": "-", "mul": "*", "div": "/"}


def tptp_names(names) -> dict[str, str]:
    """Upper-case TPTP variable names, unique and alphanumeric."""
    out: dict[str, str] = {}
    used: set[str] = set()
    for name in names:
        base = re.sub(r"[^A-Za-z0-9_]", "_", name)
        base = base[:1].upper() + base[1:] if base[:1].isalpha() else "V" + base
        cand, k = base, 1
        while cand in used:
            k += 1
            cand = f"{base}_{k}"
        used.add(cand)
        out[name] = cand
    return out


def _tptp_number(q) -> str:
    q = mpq(q)
    body = str(abs(q.numerator)) if q.denominator == 1 else f"{abs(q.numerator)}/{q.denominator}"
    return f"(-{body})" if q < 0 else (body if q.denominator == 1 else f"({body})")


def _tptp_expr(e: Expr, names: dict) -> str:
    if isinstance(e, Var):
        return names[e.name]
    if isinstance(e, Lit):
        return _tptp_number(e.value)
    if isinstance(e, PiConst):
        return "pi"
    if isinstance(e, Unary):
        if e.op == "neg":
            return f"(-{_tptp_expr(e.arg, names)})"
        return f"{_TPTP_FUN[e.op]}({_tptp_expr(e.arg, names)})"
    if isinstance(e, Binary):
        if e.op in _TPTP_OP:
            return f"({_tptp_expr(e.left, names)} {_TPTP_OP[e.op]} {_tptp_expr(e.right, names)})"
        raise UnsupportedForBackend(METITARSKI, e.op)
    if isinstance(e, Pow):
        return f"({_tptp_expr(e.base, names)} ^ {e.exponent})"
    if isinstance(e, RoundToInt):
        raise UnsupportedForBackend(METITARSKI, "RoundToInt")
    if isinstance(e, RoundFP):
        raise UnsupportedForBackend(METITARSKI, "RoundFP")
    raise TypeError(f"not an expression: {e!r}")


def _tptp_formula(f: Formula, names: dict) -> str:
    if isinstance(f, Const):
        return "$true" if f.value else "$false"
    if isinstance(f, Cmp):
        op = "=" if f.op == "=" else f.op
        return f"{_tptp_expr(f.left, names)} {op} {_tptp_expr(f.right, names)}"
    if isinstance(f, Not):
        return f"~({_tptp_formula(f.arg, names)})"
    if isinstance(f, (And, Or)):
        if not f.args:
            return "$true" if isinstance(f, And) else "$false"
        sep = " & " if isinstance(f, And) else " | "
        return "(" + sep.join(f"({_tptp_formula(a, names)})" for a in f.args) + ")"
    if isinstance(f, Implies):
        return f"(({_tptp_formula(f.lhs, names)}) => ({_tptp_formula(f.rhs, names)}))"
    raise TypeError(f"not a formula: {f!r}")


def export_metitarski_tptp(nvc: ProcessedNVC, box: Mapping[str, Interval] | None = None, name: str = "nvc") -> str:
    """TPTP conjecture stating that the NVC conjunction fails everywhere in
    the box.  Integer variables are exported as reals, which only adds
    models and so keeps a proof valid."""
    box = _box_for(nvc, box)
    names = tptp_names(v.name for v in nvc.vars)
    hyps = []
    for v in nvc.vars:
        iv = box.get(v.name, v.bounds)
        if not _is_inf(iv.lo):
            hyps.append(f"{_tptp_number(iv.lo)} <= {names[v.name]}")
        if not _is_inf(iv.hi):
            hyps.append(f"{names[v.name]} <= {_tptp_number(iv.hi)}")
    body = _tptp_formula(And(tuple(nvc.assertions)), names) if nvc.assertions else "$true"
    goal = f"~{body}" if body.startswith("(") else f"~({body})"
    if hyps:
        goal = f"(({' & '.join(hyps)}) => {goal})"
    if names:
        goal = f"![{','.join(names.values())}] : {goal}"
    return f"fof({name}, conjecture, {goal}).\n"


# ---------------------------------------------------------------- answers


@dataclass(frozen=True)
class ProverAnswer:
    kind: str  # "Proved" | "Refuted" | "Unknown"
    model: dict | None = None
    delta: bool = False
    certified: bool = False


_MODEL_LINE = re.compile(r"^\s*([^\s:]+)\s*:\s*\[\s*([^,\]]+)\s*,\s*([^\]]+)\s*\]")


def _model_number(tok: str) -> mpq:
    tok = tok.strip()
    if tok in ("-inf", "inf", "+inf", "-INFTY", "INFTY"):
        raise UnparsableOutput(f"unbounded model value {tok!r}")
    try:
        return mpq(Fraction(tok))
    except ValueError as exc:
        raise UnparsableOutput(f"bad number {tok!r}") from exc


def parse_prover_answer(tool: str, text: str) -> ProverAnswer:
    """Map captured prover output to Proved / Refuted / Unknown."""
    tool = tool.lower()
    lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
    if not lines:
        raise UnparsableOutput("empty prover output")
    if tool == DREAL:
        head = lines[0].lower()
        if head == "unsat":
            return ProverAnswer("Proved")
        if head.startswith("delta-sat") or head == "sat":
            model = {}
            for ln in lines[1:]:
                m = _MODEL_LINE.match(ln)
                if m:
                    lo, hi = _model_number(m[2]), _model_number(m[3])
                    model[m[1]] = (lo + hi) / 2
            return ProverAnswer("Refuted", model or None, delta=True)
        if head == "unknown":
            return ProverAnswer("Unknown")
        raise UnparsableOutput(f"unrecognised dReal output: {lines[0]!r}")
    if tool == METITARSKI:
        status = re.search(r"SZS status (\w+)", text)
        if status is None:
            raise UnparsableOutput("no SZS status line")
        word = status[1]
        if word == "Theorem":
            return ProverAnswer("Proved")
        if word in ("GaveUp", "Timeout", "ResourceOut", "Unknown", "CounterSatisfiable"):
            return ProverAnswer("Unknown")
        raise UnparsableOutput(f"unrecognised SZS status {word!r}")
    raise ValueError(f"unknown tool {tool!r}")
