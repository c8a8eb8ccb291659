"""Variable bound derivation over the interval domain, and pruning of atoms
that the derived box already decides.

Bounds come from conjuncts that isolate a variable on one side of a
comparison.  Each round re-evaluates the other side over the current box
and intersects; the loop stops when nothing improves by more than a
relative tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import gmpy2
from gmpy2 import mpq

from .errors import EmptyBox
from .interval import DEFAULT_PREC, Truth, evaluator, to_mpq
from .ir import (
    FALSE,
    NEG_INF,
    POS_INF,
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
    ProcessedNVC,
    Unary,
    Var,
    VarSpec,
    _is_inf,
    map_atoms,
)
from .simplify import simplify_fixpoint

MAX_ROUNDS = 20
REL_TOL = mpq(1, 10**6)


@dataclass(frozen=True)
class BoundsResult:
    box: dict = field(default_factory=dict)
    rounds: int = 0
    converged: bool = True


# ------------------------------------------------------------ fact sources


def _flip(a: Cmp) -> Cmp:
    """Negation of a normalised atom, as an atom (closure taken for <)."""
    op = {"<=": "<", "<": "<=", ">=": "<", ">": "<="}.get(a.op)
    if op is None:
        return None
    if a.op in ("<=", "<"):
        return Cmp(op, a.right, a.left)
    return Cmp(op, a.left, a.right)


def positive_atoms(f: Formula) -> list[Cmp]:
    """Atoms implied by ``f`` as a whole (conjunctive positions only)."""
    out: list[Cmp] = []
    stack = [(f, True)]
    while stack:
        g, pos = stack.pop()
        if isinstance(g, Cmp):
            if pos:
                out.append(g)
            else:
                flipped = _flip(g)
                if flipped is not None:
                    out.append(flipped)
        elif isinstance(g, Not):
            stack.append((g.arg, not pos))
        elif isinstance(g, And) and pos:
            stack.extend((a, True) for a in g.args)
        elif isinstance(g, Or) and not pos:
            stack.extend((a, False) for a in g.args)
        elif isinstance(g, Implies) and not pos:
            stack.append((g.lhs, True))
            stack.append((g.rhs, False))
    return out


# --------------------------------------------------------- interval helpers


class _Box:
    """Mutable box of mpfr pairs used while iterating."""

    def __init__(self, ev, box: dict[str, Interval], ints: set[str]):
        self.ev = ev
        self.exact = dict(box)
        self.ints = ints

    def env(self) -> dict:
        return self.ev.enclose_box(self.exact)

    def restrict(self, name: str, lo, hi) -> bool:
        """Intersect ``name`` with [lo, hi] (exact mpq or infinities)."""
        cur = self.exact[name]
        new_lo = cur.lo if _is_inf(lo) or lo <= cur.lo else lo
        new_hi = cur.hi if _is_inf(hi) or hi >= cur.hi else hi
        if name in self.ints:
            if not _is_inf(new_lo):
                new_lo = mpq(gmpy2.ceil(new_lo))
            if not _is_inf(new_hi):
                new_hi = mpq(gmpy2.floor(new_hi))
        if new_lo > new_hi:
            raise EmptyBox(name)
        if new_lo == cur.lo and new_hi == cur.hi:
            return False
        self.exact[name] = Interval(new_lo, new_hi)
        return True


def _value(ev, e: Expr, env: dict, memo: dict):
    """Exact bounds of ``e``: literal values stay exact."""
    if isinstance(e, Lit):
        return e.value, e.value
    r = ev.expr(e, env, memo)
    return to_mpq(r[0]), to_mpq(r[1])


def _project(ev, side: Expr, lo, hi, env: dict, memo: dict, box: _Box, depth: int = 0) -> bool:
    """Constrain ``side`` to [lo, hi] and push that back to the variable
    it isolates, through +, -, negation, scaling by literals and abs."""
    if isinstance(side, Var):
        if side.name in box.exact:
            return box.restrict(side.name, lo, hi)
        return False
    if depth > 4:
        return False
    if isinstance(side, Unary):
        if side.op == "neg":
            return _project(ev, side.arg, -hi, -lo, env, memo, box, depth + 1)
        if side.op == "abs" and not _is_inf(hi):
            # |a| <= hi  gives  -hi <= a <= hi
            return _project(ev, side.arg, -hi, hi, env, memo, box, depth + 1)
        return False
    if not isinstance(side, Binary):
        return False
    a, b = side.left, side.right
    if side.op in ("add", "sub"):
        changed = False
        blo, bhi = _value(ev, b, env, memo)
        if side.op == "add":
            # a = side - b
            changed |= _project(ev, a, _sub(lo, bhi), _sub(hi, blo), env, memo, box, depth + 1)
            alo, ahi = _value(ev, a, env, memo)
            changed |= _project(ev, b, _sub(lo, ahi), _sub(hi, alo), env, memo, box, depth + 1)
        else:
            # a = side + b ; b = a - side
            changed |= _project(ev, a, _add(lo, blo), _add(hi, bhi), env, memo, box, depth + 1)
            alo, ahi = _value(ev, a, env, memo)
            changed |= _project(ev, b, _sub(alo, hi), _sub(ahi, lo), env, memo, box, depth + 1)
        return changed
    if side.op in ("mul", "div"):
        if side.op == "mul" and isinstance(a, Lit) and a.value != 0:
            c, inner = a.value, b
        elif isinstance(b, Lit) and b.value != 0:
            c, inner = (b.value if side.op == "mul" else 1 / b.value), a
        else:
            return False
        nlo, nhi = _scale(lo, 1 / c), _scale(hi, 1 / c)
        if c < 0:
            nlo, nhi = nhi, nlo
        return _project(ev, inner, nlo, nhi, env, memo, box, depth + 1)
    return False


def _add(x, y):
    if _is_inf(x):
        return x
    if _is_inf(y):
        return y
    return x + y


def _sub(x, y):
    if _is_inf(x):
        return x
    if _is_inf(y):
        return -y
    return x - y


def _scale(x, c):
    if _is_inf(x):
        return x if c > 0 else -x
    return x * c


# ---------------------------------------------------------------- engine


def _progress(old: Interval, new: Interval) -> bool:
    for a, b in ((old.lo, new.lo), (old.hi, new.hi)):
        if _is_inf(a) and not _is_inf(b):
            return True
        if _is_inf(b) or _is_inf(a):
            continue
        if abs(a - b) > REL_TOL * max(1, abs(a)):
            return True
    return False


def _facts(f: Formula, atoms: list, alternatives: list, pos: bool = True) -> None:
    """Split ``f`` into atoms it implies and disjunctions it implies.

    A disjunction is a list of formulas at least one of which holds.
    """
    if isinstance(f, Cmp):
        a = f if pos else _flip(f)
        if a is not None:
            atoms.append(a)
    elif isinstance(f, Not):
        _facts(f.arg, atoms, alternatives, not pos)
    elif isinstance(f, And):
        if pos:
            for g in f.args:
                _facts(g, atoms, alternatives, True)
            _complementary_pairs(f.args, alternatives)
        else:
            alternatives.append([Not(g) for g in f.args])
    elif isinstance(f, Or):
        if pos:
            alternatives.append(list(f.args))
        else:
            for g in f.args:
                _facts(g, atoms, alternatives, False)
    elif isinstance(f, Implies):
        if pos:
            alternatives.append([Not(f.lhs), f.rhs])
        else:
            _facts(f.lhs, atoms, alternatives, True)
            _facts(f.rhs, atoms, alternatives, False)


def _complementary_pairs(formulas, alternatives: list) -> None:
    """(p => a) and (not p => b) together give the case split [p & a, not p & b]."""
    imps = [g for g in formulas if isinstance(g, Implies)]
    for i, g in enumerate(imps):
        for h in imps[i + 1 :]:
            if h.lhs == Not(g.lhs) or g.lhs == Not(h.lhs):
                alternatives.append([And((g.lhs, g.rhs)), And((h.lhs, h.rhs))])


def _apply_atom(ev, box: _Box, atom: Cmp) -> None:
    op, left, right = atom.op, atom.left, atom.right
    if op in (">=", ">"):
        left, right = right, left
    env = box.env()
    memo: dict = {}
    llo, lhi = _value(ev, left, env, memo)
    rlo, rhi = _value(ev, right, env, memo)
    if op == "=":
        _project(ev, left, rlo, rhi, env, memo, box)
        env, memo = box.env(), {}
        _project(ev, right, llo, lhi, env, memo, box)
    else:
        # left <= right: left <= right.hi, right >= left.lo
        _project(ev, left, NEG_INF, rhi, env, memo, box)
        env, memo = box.env(), {}
        _project(ev, right, llo, POS_INF, env, memo, box)


MAX_CASE_DEPTH = 3


def _apply(ev, box: _Box, atoms: list, alternatives: list, depth: int) -> None:
    for atom in atoms:
        _apply_atom(ev, box, atom)
    if depth >= MAX_CASE_DEPTH:
        return
    for alts in alternatives:
        _apply_cases(ev, box, alts, depth + 1)


def _apply_cases(ev, box: _Box, alts: list, depth: int) -> None:
    """Narrow ``box`` to the hull of what each alternative allows."""
    hull: dict | None = None
    for alt in alts:
        sub = _Box(ev, box.exact, box.ints)
        atoms: list = []
        nested: list = []
        _facts(alt, atoms, nested)
        try:
            _apply(ev, sub, atoms, nested, depth)
        except EmptyBox:
            continue
        if hull is None:
            hull = dict(sub.exact)
        else:
            for k, iv in sub.exact.items():
                h = hull[k]
                lo = NEG_INF if _is_inf(h.lo) or _is_inf(iv.lo) else min(h.lo, iv.lo)
                hi = POS_INF if _is_inf(h.hi) or _is_inf(iv.hi) else max(h.hi, iv.hi)
                hull[k] = Interval(lo, hi)
    if hull is None:
        raise EmptyBox(next(iter(box.exact), "?"))
    for k, iv in hull.items():
        box.restrict(k, iv.lo, iv.hi)


def derive_bounds(nvc: ProcessedNVC, prec: int = DEFAULT_PREC, max_rounds: int = MAX_ROUNDS) -> BoundsResult:
    """Iteratively tighten each variable's interval from the conjuncts.

    Starts from the declared bounds (unbounded unless stated).  Besides
    atoms in conjunctive position, case splits (disjunctions, implications
    and complementary implication pairs) narrow a variable to the hull of
    its ranges over the feasible cases.  Raises EmptyBox when some interval
    becomes empty, which means the conjunction has no model at all.
    """
    ev = evaluator(prec)
    box = _Box(ev, nvc.box, {v.name for v in nvc.vars if v.is_int})
    # initial integer trimming
    for name in list(box.exact):
        box.restrict(name, NEG_INF, POS_INF)
    atoms: list = []
    alternatives: list = []
    for f in nvc.assertions:
        _facts(f, atoms, alternatives)
    _complementary_pairs(nvc.assertions, alternatives)
    converged = False
    rounds = 0
    for rounds in range(1, max_rounds + 1):
        before = dict(box.exact)
        _apply(ev, box, atoms, alternatives, 0)
        if not any(_progress(before[k], box.exact[k]) for k in box.exact):
            converged = True
            break
    return BoundsResult(dict(box.exact), rounds, converged)


def with_box(nvc: ProcessedNVC, box: dict[str, Interval]) -> ProcessedNVC:
    specs = [VarSpec(v.name, v.sort, box.get(v.name, v.bounds)) for v in nvc.vars]
    return nvc.replace(vars=specs)


def prune_with_bounds(nvc: ProcessedNVC, box: dict[str, Interval] | None = None, prec: int = DEFAULT_PREC) -> ProcessedNVC:
    """Replace atoms decided over the box by constants, then simplify."""
    if box is None:
        box = nvc.box
    ev = evaluator(prec)
    env = ev.enclose_box(box)
    memo: dict = {}

    def decide(a: Cmp) -> Formula:
        t = ev.atom(a, env, memo)
        if t is Truth.TRUE:
            return TRUE
        if t is Truth.FALSE:
            return FALSE
        return a

    before = nvc
    pruned = nvc.replace(assertions=[map_atoms(f, decide) for f in nvc.assertions])
    pruned = with_box(pruned, box)
    return simplify_fixpoint(pruned).record("prune", before)


def refine(nvc: ProcessedNVC, prec: int = DEFAULT_PREC, max_rounds: int = MAX_ROUNDS, max_outer: int = 20):
    """Alternate bound derivation, pruning and simplification until the NVC
    stops changing.  Returns (nvc with derived bounds, last BoundsResult)."""
    result = BoundsResult(nvc.box, 0, True)
    digest = nvc.digest()
    for _ in range(max_outer):
        result = derive_bounds(nvc, prec, max_rounds)
        nvc = prune_with_bounds(with_box(nvc, result.box), result.box, prec)
        new = nvc.digest()
        if new == digest:
            break
        digest = new
    return nvc, result


def unsatisfiable(nvc: ProcessedNVC) -> bool:
    return any(a == FALSE for a in nvc.assertions)
