"""Text renderings of the IR: SMT-style s-expressions, corpus files, infix."""

from __future__ import annotations

import re

from .fpformat import RoundMode
from .ir import (
    And,
    Binary,
    Cmp,
    Const,
    Expr,
    Formula,
    Implies,
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
    render_decimal_exact,
    scalar,
)

SMT_BINARY = {"add": "+", "sub": "-", "mul": "*", "div": "/", "min": "min", "max": "max", "mod": "mod"}
SMT_UNARY = {"neg": "-", "abs": "abs", "sqrt": "sqrt", "sin": "sin", "cos": "cos", "exp": "exp", "log": "log"}

_SIMPLE_SYMBOL = re.compile(r"^[A-Za-z~!@$%^&*_+=<>.?/\-][A-Za-z0-9~!@$%^&*_+=<>.?/\-]*$")


def symbol(name: str) -> str:
    return name if _SIMPLE_SYMBOL.match(name) else f"|{name}|"


def smt_number(q) -> str:
    q = scalar(q)
    a = abs(q)
    if a.denominator == 1:
        body = str(a.numerator)
    else:
        body = f"(/ {a.numerator} {a.denominator})"
    return f"(- {body})" if q < 0 else body


def expr_to_sexpr(e: Expr, pi_name: str = "pi") -> str:
    def go(n: Expr) -> str:
        if isinstance(n, Var):
            return symbol(n.name)
        if isinstance(n, Lit):
            return smt_number(n.value)
        if isinstance(n, PiConst):
            return pi_name
        if isinstance(n, Unary):
            return f"({SMT_UNARY[n.op]} {go(n.arg)})"
        if isinstance(n, Binary):
            return f"({SMT_BINARY[n.op]} {go(n.left)} {go(n.right)})"
        if isinstance(n, Pow):
            return f"(^ {go(n.base)} {n.exponent})"
        if isinstance(n, RoundFP):
            return f"((_ to_fp {n.fmt.exp_bits} {n.fmt.precision}) {n.mode.value} {go(n.arg)})"
        if isinstance(n, RoundToInt):
            return f"(round {n.mode.value} {go(n.arg)})"
        raise TypeError(f"not an expression: {n!r}")

    return go(e)


def formula_to_sexpr(f: Formula, pi_name: str = "pi") -> str:
    def go(n: Formula) -> str:
        if isinstance(n, Const):
            return "true" if n.value else "false"
        if isinstance(n, Cmp):
            return f"({n.op} {expr_to_sexpr(n.left, pi_name)} {expr_to_sexpr(n.right, pi_name)})"
        if isinstance(n, Not):
            return f"(not {go(n.arg)})"
        if isinstance(n, (And, Or)):
            if not n.args:
                return "true" if isinstance(n, And) else "false"
            tag = "and" if isinstance(n, And) else "or"
            return f"({tag} {' '.join(go(a) for a in n.args)})"
        if isinstance(n, Implies):
            return f"(=> {go(n.lhs)} {go(n.rhs)})"
        raise TypeError(f"not a formula: {n!r}")

    return go(f)


def nvc_to_text(nvc: ProcessedNVC) -> str:
    """Corpus text format: a bounds section followed by assert lines."""
    lines = ["Bounds on variables:"]
    for v in sorted(nvc.vars, key=lambda v: v.name):
        lines.append(f"{v.name} ({v.sort}) ∈ {v.bounds}")
    lines.append("")
    lines.append("NVC:")
    for a in nvc.assertions:
        lines.append(f"assert {formula_to_sexpr(a)}")
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------------ infix

_INFIX = {"add": "+", "sub": "-", "mul": "*", "div": "/"}


def infix_number(q) -> str:
    q = scalar(q)
    dec = render_decimal_exact(q)
    if dec is not None:
        return dec
    return f"({q.numerator} / {q.denominator})"


def expr_to_infix(e: Expr, pi_name: str = "pi", top: bool = True) -> str:
    """FPTaylor-style infix; every binary operation is parenthesized
    except at the top level."""

    def go(n: Expr, top: bool) -> str:
        if isinstance(n, Var):
            return n.name
        if isinstance(n, Lit):
            return infix_number(n.value)
        if isinstance(n, PiConst):
            return pi_name
        if isinstance(n, Unary):
            if n.op == "neg":
                return f"(-{go(n.arg, False)})"
            return f"{n.op}({go(n.arg, True)})"
        if isinstance(n, Binary):
            if n.op in _INFIX:
                s = f"{go(n.left, False)} {_INFIX[n.op]} {go(n.right, False)}"
                return s if top else f"({s})"
            return f"{n.op}({go(n.left, True)}, {go(n.right, True)})"
        if isinstance(n, Pow):
            if n.exponent == 0:
                return "1"
            s = " * ".join([go(n.base, False)] * n.exponent)
            return s if top or n.exponent == 1 else f"({s})"
        if isinstance(n, RoundFP):
            return f"{n.fmt.rnd_name}({go(n.arg, False)})"
        if isinstance(n, RoundToInt):
            tag = "round_even" if n.mode is RoundMode.NEAREST_EVEN else "round_away"
            return f"{tag}({go(n.arg, True)})"
        raise TypeError(f"not an expression: {n!r}")

    return go(e, top)


def formula_to_infix(f: Formula) -> str:
    if isinstance(f, Const):
        return "true" if f.value else "false"
    if isinstance(f, Cmp):
        op = "==" if f.op == "=" else f.op
        return f"{expr_to_infix(f.left)} {op} {expr_to_infix(f.right)}"
    if isinstance(f, Not):
        return f"!({formula_to_infix(f.arg)})"
    if isinstance(f, (And, Or)):
        sep = " && " if isinstance(f, And) else " || "
        return "(" + sep.join(formula_to_infix(a) for a in f.args) + ")"
    if isinstance(f, Implies):
        return f"({formula_to_infix(f.lhs)} -> {formula_to_infix(f.rhs)})"
    raise TypeError(f"not a formula: {f!r}")
