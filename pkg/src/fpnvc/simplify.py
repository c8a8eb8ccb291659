"""Symbolic simplification: propositional reduction, definition
substitution and arithmetic rewrites, iterated to a fixpoint.

Arithmetic and propositional rewrites preserve the truth value at every
point.  Definition substitution preserves it at every point where each
eliminated variable equals its definition.
"""

from __future__ import annotations

from dataclasses import dataclass

from gmpy2 import mpq

from .fpformat import round_to_int
from .ir import (
    FALSE,
    TRUE,
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
    Pow,
    ProcessedNVC,
    RoundToInt,
    Unary,
    Var,
    _exact_sqrt,
    _is_inf,
    conjuncts,
    eval_exact,
    free_vars,
    map_expr,
    map_formula_exprs,
    node_count,
    substitute,
    walk,
)
from .printing import expr_to_sexpr

MAX_ROUNDS = 50

_PARTIAL = frozenset({"div", "mod", "log", "sqrt"})


def is_total(e: Expr) -> bool:
    """True when ``e`` is defined everywhere (no division, mod, log or sqrt)."""
    for n in walk(e):
        if isinstance(n, Binary) and n.op in _PARTIAL:
            return False
        if isinstance(n, Unary) and n.op in _PARTIAL:
            return False
    return True


# -------------------------------------------------------------- arithmetic


def _is_lit(e: Expr, value=None) -> bool:
    return isinstance(e, Lit) and (value is None or e.value == value)


def _fold_binary(op: str, a: mpq, b: mpq):
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b if b != 0 else None
    if op == "min":
        return min(a, b)
    if op == "max":
        return max(a, b)
    if op == "mod":
        if b == 0:
            return None
        m = abs(b)
        return a - m * (a.numerator * m.denominator // (m.numerator * a.denominator))
    return None


def _arith_step(e: Expr) -> Expr:
    if isinstance(e, Binary):
        a, b, op = e.left, e.right, e.op
        if isinstance(a, Lit) and isinstance(b, Lit):
            v = _fold_binary(op, a.value, b.value)
            if v is not None:
                return Lit(v)
        if op == "add":
            if _is_lit(b, 0):
                return a
            if _is_lit(a, 0):
                return b
        elif op == "sub":
            if _is_lit(b, 0):
                return a
            if _is_lit(a, 0):
                return Unary("neg", b)
            if a == b and is_total(a):
                return Lit(0)
        elif op == "mul":
            if _is_lit(b, 1):
                return a
            if _is_lit(a, 1):
                return b
            if _is_lit(b, 0) and is_total(a):
                return Lit(0)
            if _is_lit(a, 0) and is_total(b):
                return Lit(0)
        elif op == "div":
            if _is_lit(b, 1):
                return a
        elif op in ("min", "max"):
            if a == b:
                return a
        return e
    if isinstance(e, Unary):
        a = e.arg
        if e.op == "neg":
            if isinstance(a, Lit):
                return Lit(-a.value)
            if isinstance(a, Unary) and a.op == "neg":
                return a.arg
        elif e.op == "abs":
            if isinstance(a, Lit):
                return Lit(abs(a.value))
            if isinstance(a, Unary) and a.op == "abs":
                return a
            if isinstance(a, Unary) and a.op == "neg":
                return Unary("abs", a.arg)
        elif e.op == "sqrt" and isinstance(a, Lit) and a.value >= 0:
            r = _exact_sqrt(a.value)
            if r is not None:
                return Lit(r)
        elif isinstance(a, Lit) and a.value == 0:
            if e.op == "sin":
                return Lit(0)
            if e.op in ("cos", "exp"):
                return Lit(1)
        elif e.op == "log" and _is_lit(a, 1):
            return Lit(0)
        return e
    if isinstance(e, Pow):
        if isinstance(e.base, Lit):
            return Lit(e.base.value**e.exponent)
        if e.exponent == 1:
            return e.base
        if e.exponent == 0 and is_total(e.base):
            return Lit(1)
        return e
    if isinstance(e, RoundToInt) and isinstance(e.arg, Lit):
        return Lit(round_to_int(e.arg.value, e.mode))
    # RoundFP is deliberately never folded: the rounding points stay visible
    # for the error analysis even when the argument is a literal.
    return e


def simplify_arith(e: Expr) -> Expr:
    """Value-preserving rewrites, applied bottom-up in one pass."""
    return map_expr(e, _arith_step)


# -------------------------------------------------------------- booleans


def _decide_literals(op: str, a: mpq, b: mpq) -> bool:
    return {"<=": a <= b, "<": a < b, "=": a == b}[op]


def _atom(f: Cmp) -> Formula:
    op, a, b = f.op, f.left, f.right
    if op == ">=":
        op, a, b = "<=", b, a
    elif op == ">":
        op, a, b = "<", b, a
    if isinstance(a, Lit) and isinstance(b, Lit):
        return TRUE if _decide_literals(op, a.value, b.value) else FALSE
    if a == b:
        # e = e and e <= e hold wherever e is defined
        return FALSE if op == "<" else TRUE
    if op == f.op and a is f.left:
        return f
    return Cmp(op, a, b)


def _negation_of(f: Formula) -> Formula:
    return f.arg if isinstance(f, Not) else Not(f)


def _junction(cls, args, unit: Const, zero: Const) -> Formula:
    flat: list = []
    seen: set = set()
    for a in args:
        parts = a.args if isinstance(a, cls) else (a,)
        for p in parts:
            if p == zero:
                return zero
            if p == unit or p in seen:
                continue
            seen.add(p)
            flat.append(p)
    for p in flat:
        if _negation_of(p) in seen:
            return zero
    if not flat:
        return unit
    if len(flat) == 1:
        return flat[0]
    return cls(tuple(flat))


def simplify_bool(f: Formula) -> Formula:
    """Propositional reduction plus normalisation of >=/> to <=/<."""
    if isinstance(f, Cmp):
        return _atom(f)
    if isinstance(f, Const):
        return f
    if isinstance(f, Not):
        a = simplify_bool(f.arg)
        if isinstance(a, Const):
            return FALSE if a.value else TRUE
        if isinstance(a, Not):
            return a.arg
        return Not(a)
    if isinstance(f, And):
        return _junction(And, [simplify_bool(a) for a in f.args], TRUE, FALSE)
    if isinstance(f, Or):
        return _junction(Or, [simplify_bool(a) for a in f.args], FALSE, TRUE)
    if isinstance(f, Implies):
        lhs = simplify_bool(f.lhs)
        rhs = simplify_bool(f.rhs)
        if lhs == TRUE:
            return rhs
        if lhs == FALSE or rhs == TRUE or lhs == rhs:
            return TRUE
        if rhs == FALSE:
            return simplify_bool(Not(lhs))
        return Implies(lhs, rhs)
    raise TypeError(f"not a formula: {f!r}")


def simplify_formula(f: Formula) -> Formula:
    return simplify_bool(map_formula_exprs(f, simplify_arith))


# ------------------------------------------------------- definitions


_INT_OPS = frozenset({"add", "sub", "mul", "min", "max", "mod"})


def _integer_valued(e: Expr, int_vars: set[str]) -> bool:
    if isinstance(e, RoundToInt):
        return True
    if isinstance(e, Var):
        return e.name in int_vars
    if isinstance(e, Lit):
        return e.value.denominator == 1
    if isinstance(e, Binary):
        return e.op in _INT_OPS and _integer_valued(e.left, int_vars) and _integer_valued(e.right, int_vars)
    if isinstance(e, Unary):
        return e.op in ("neg", "abs") and _integer_valued(e.arg, int_vars)
    if isinstance(e, Pow):
        return e.exponent >= 0 and _integer_valued(e.base, int_vars)
    return False


def _definition(atom: Formula, int_vars: set[str]):
    """Yield (var, rhs) pairs for an equation usable as a definition."""
    if not isinstance(atom, Cmp) or atom.op != "=":
        return
    for v, rhs in ((atom.left, atom.right), (atom.right, atom.left)):
        if not isinstance(v, Var) or v.name in free_vars(rhs):
            continue
        if v.name in int_vars and not _integer_valued(rhs, int_vars):
            continue
        yield v.name, rhs


def find_definitions(nvc: ProcessedNVC) -> dict[str, Expr]:
    """Shortest non-circular definition per variable among the positive
    top-level conjuncts."""
    int_vars = {v.name for v in nvc.vars if v.is_int}
    best: dict[str, tuple] = {}
    for a in nvc.assertions:
        for c in conjuncts(a):
            for name, rhs in _definition(c, int_vars):
                key = (node_count(rhs), expr_to_sexpr(rhs))
                if name not in best or key < best[name][0]:
                    best[name] = (key, rhs)
    return {k: v[1] for k, v in best.items()}


def _bound_atoms(spec, rhs: Expr) -> list[Formula]:
    out = []
    if not _is_inf(spec.bounds.lo):
        out.append(Cmp("<=", Lit(spec.bounds.lo), rhs))
    if not _is_inf(spec.bounds.hi):
        out.append(Cmp("<=", rhs, Lit(spec.bounds.hi)))
    return out


def substitute_definitions(nvc: ProcessedNVC, log: list | None = None) -> ProcessedNVC:
    """Eliminate variables that have a defining equation.

    One variable at a time: its shortest definition is substituted
    everywhere (the definition itself degenerates to ``rhs = rhs``), and
    any declared bounds of the variable are kept as atoms on ``rhs``.
    Each elimination is appended to ``log`` as ``(name, rhs)``.
    """
    current = nvc
    while True:
        defs = find_definitions(current)
        if not defs:
            return current
        order = [v.name for v in current.vars if v.name in defs] or sorted(defs)
        name = order[0]
        rhs = defs[name]
        if log is not None:
            log.append((name, rhs))
        assertions = [substitute(a, {name: rhs}) for a in current.assertions]
        try:
            assertions.extend(_bound_atoms(current.var(name), rhs))
        except KeyError:
            pass
        used = set()
        for a in assertions:
            used |= free_vars(a)
        specs = [v for v in current.vars if v.name in used]
        current = current.replace(vars=specs, assertions=assertions)


# ------------------------------------------------------------ fixpoint


@dataclass(frozen=True)
class FixpointResult:
    nvc: ProcessedNVC
    rounds: int
    converged: bool
    # eliminated variables in elimination order; later right-hand sides
    # never mention earlier names
    definitions: tuple = ()

    def complete(self, point: dict) -> dict:
        """Extend a point of the simplified NVC with values for the
        eliminated variables (requires rational-closed definitions)."""
        full = dict(point)
        for name, rhs in reversed(self.definitions):
            full[name] = eval_exact(rhs, full)
        return full


def _normalize_assertions(assertions) -> list[Formula]:
    out: list[Formula] = []
    for a in assertions:
        a = simplify_formula(a)
        if a == FALSE:
            return [FALSE]
        for c in conjuncts(a):
            if c not in out:
                out.append(c)
    return out


def _drop_unused(nvc: ProcessedNVC) -> ProcessedNVC:
    used = set()
    for a in nvc.assertions:
        used |= free_vars(a)
    if all(v.name in used for v in nvc.vars):
        return nvc
    return nvc.replace(vars=[v for v in nvc.vars if v.name in used])


def simplify_step(nvc: ProcessedNVC, log: list | None = None) -> ProcessedNVC:
    nvc = nvc.replace(assertions=_normalize_assertions(nvc.assertions))
    nvc = substitute_definitions(nvc, log)
    nvc = nvc.replace(assertions=_normalize_assertions(nvc.assertions))
    return _drop_unused(nvc)


def run_fixpoint(nvc: ProcessedNVC, max_rounds: int = MAX_ROUNDS) -> FixpointResult:
    digest = nvc.digest()
    log: list = []
    for rnd in range(1, max_rounds + 1):
        nxt = simplify_step(nvc, log)
        new_digest = nxt.digest()
        nvc = nxt
        if new_digest == digest:
            return FixpointResult(nvc, rnd, True, tuple(log))
        digest = new_digest
    return FixpointResult(nvc, max_rounds, False, tuple(log))


def simplify_fixpoint(nvc: ProcessedNVC, max_rounds: int = MAX_ROUNDS) -> ProcessedNVC:
    """Repeat simplification until the NVC stops changing (at most
    ``max_rounds`` rounds)."""
    before = nvc
    result = run_fixpoint(nvc, max_rounds).nvc
    return result.record("simplify", before)
