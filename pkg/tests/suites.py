"""Randomized property suites shared by the unit tests (small sizes) and the
acceptance run (full sizes).  Each returns a SuiteResult; ``violations``
must be empty for the property to hold."""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field

from fpnvc.bounds import derive_bounds
from fpnvc.errors import EmptyBox, FpnvcError
from fpnvc.fpelim import (
    bound_contexts,
    collect_fp_contexts,
    compute_error_bound_internal,
    eliminate_fp,
    make_context,
)
from fpnvc.fpformat import SINGLE, FloatOverflow, RoundMode, round_to_format
from fpnvc.interval import Truth, evaluator
from fpnvc.ir import (
    FLOAT32,
    INT,
    REAL,
    And,
    Binary,
    Cmp,
    Implies,
    Interval,
    Lit,
    Not,
    Or,
    Pow,
    ProcessedNVC,
    RoundFP,
    Unary,
    Var,
    VarSpec,
    eval_exact,
    holds_exact,
)
from fpnvc.prover import (
    PotentialCounterexample,
    ProveConfig,
    Proved,
    certify_point,
    decide,
)
from fpnvc.simplify import run_fixpoint, simplify_formula
from gmpy2 import mpq

from randgen import atom, float_point, formula, rand_point, rational_expr

UNDEFINED = (ZeroDivisionError, FloatOverflow)

# expected FPTaylor listing for the main Taylor sine rounding context
TAYLOR_LISTING = """Variables
  real x in [-0.5, 0.5];

Expressions
  sin(x) + (-1 * rnd32((x - rnd32((rnd32((rnd32((x*x))*x)) / 6)))));
"""


def listing_tokens(text: str) -> list[str]:
    return re.findall(r"\d+\.\d+|\w+|\S", text)


@dataclass
class SuiteResult:
    trials: int = 0
    skipped: int = 0
    violations: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.violations


def _truth(f, point):
    try:
        return holds_exact(f, point)
    except UNDEFINED:
        return None


def _in_box(nvc: ProcessedNVC, point) -> bool:
    return all(v.bounds.contains(point[v.name]) for v in nvc.vars)


def _meaning(nvc: ProcessedNVC, point):
    """Truth of the conjunction restricted to the declared box."""
    if not _in_box(nvc, point):
        return False
    return _truth(nvc.conjunction, point)


# ------------------------------------------------------------- simplifier


def random_simplifier_nvc(rng: random.Random) -> ProcessedNVC:
    names = ["x", "y", "z", "k"]
    specs = [VarSpec(n, INT if n == "k" else REAL) for n in names]
    if rng.random() < 0.3:
        specs[0] = VarSpec("x", REAL, Interval(-3, 3))
    assertions = [formula(rng, names, 2, 2) for _ in range(rng.randint(1, 3))]
    # definitions for the substitution step, sometimes chained or circular
    for _ in range(rng.randint(0, 2)):
        v = rng.choice(["x", "y", "z"])
        rhs = rational_expr(rng, names, 2, partial=False)
        assertions.insert(rng.randint(0, len(assertions)), Cmp("=", Var(v), rhs))
    return ProcessedNVC(specs, assertions)


def simplifier_equivalence(pairs: int, seed: int = 0, points_per_nvc: int = 4) -> SuiteResult:
    """Truth value before and after simplification at random points.

    Variables removed through definitions take their defined value, since
    only then do the two NVCs speak about the same point.
    """
    rng = random.Random(seed)
    res = SuiteResult()
    rounds = []
    while res.trials < pairs:
        nvc = random_simplifier_nvc(rng)
        fix = run_fixpoint(nvc)
        rounds.append(fix.rounds)
        if not fix.converged:
            res.violations.append(("no fixpoint", nvc))
        for _ in range(points_per_nvc):
            p = rand_point(rng, ["x", "y", "z"], -3, 3)
            p["k"] = mpq(rng.randint(-3, 3))
            try:
                q = fix.complete(p)
            except UNDEFINED:
                res.skipped += 1
                continue
            before = _meaning(nvc, q)
            # each assertion on its own, at the raw point
            for a in nvc.assertions:
                t0 = _truth(a, p)
                if t0 is not None and _truth(simplify_formula(a), p) != t0:
                    res.violations.append(("simplify_formula", a, p))
            if before is None:
                res.skipped += 1
                continue
            after = _meaning(fix.nvc, q)
            res.trials += 1
            if after != before:
                res.violations.append(("fixpoint", nvc, fix.nvc, q, before, after))
    res.extra["max_rounds"] = max(rounds)
    return res


# ------------------------------------------------------------- bounds


def planted_bounds(trials: int, seed: int = 0) -> SuiteResult:
    """Random NVCs built to hold at a known point; that point must lie in
    the derived box."""
    rng = random.Random(seed)
    res = SuiteResult()
    names = ["x", "y", "n"]
    while res.trials < trials:
        p = rand_point(rng, ["x", "y"], -5, 5)
        p["n"] = mpq(rng.randint(-6, 6))
        specs = [VarSpec("x"), VarSpec("y"), VarSpec("n", INT)]
        if rng.random() < 0.5:
            specs[0] = VarSpec("x", REAL, Interval(p["x"] - rng.randint(0, 3), p["x"] + rng.randint(0, 3)))
        assertions = []
        while len(assertions) < rng.randint(2, 6):
            kind = rng.random()
            if kind < 0.4:
                # single-variable bound atoms, the main bounds source
                v = rng.choice(names)
                a = Cmp(rng.choice(["<=", "<", ">=", ">"]), Var(v), rational_expr(rng, names, 1, partial=False))
            elif kind < 0.7:
                a = atom(rng, names, 2, partial=False)
            else:
                a = formula(rng, names, 2, 1, partial=False)
            t = _truth(a, p)
            if t is None:
                continue
            assertions.append(a if t else Not(a))
        nvc = ProcessedNVC(specs, assertions)
        res.trials += 1
        try:
            box = derive_bounds(nvc).box
        except EmptyBox as e:
            res.violations.append(("EmptyBox", nvc, p, e.name))
            continue
        res.extra["finite_sides"] = res.extra.get("finite_sides", 0) + sum(
            (iv.lo > -10**9) + (iv.hi < 10**9) for iv in box.values()
        )
        for k, iv in box.items():
            if not iv.contains(p[k]):
                res.violations.append(("outside", nvc, p, k, iv))
    return res



# ------------------------------------------------------------- weakening

FP_LITS = [mpq(1), mpq(2), mpq(6), mpq(1, 2), mpq(3, 4), round_to_format(mpq(1, 10), SINGLE), mpq(-3)]


def fp_expr(rng: random.Random, names, depth: int, transcendental: bool):
    """Random single-precision computation, optionally mixed with exact
    real sub-terms."""
    if depth <= 0 or rng.random() < 0.2:
        if rng.random() < 0.7:
            return Var(rng.choice(names))
        return Lit(rng.choice(FP_LITS), SINGLE)
    k = rng.random()
    sub = lambda: fp_expr(rng, names, depth - 1, transcendental)  # noqa: E731
    if k < 0.7:
        op = rng.choice(["add", "sub", "mul", "mul", "div"])
        b = sub()
        if op == "div":
            # keep the denominator away from zero
            b = Binary("add", Lit(mpq(5)), Pow(b, 2))
        return RoundFP(SINGLE, rng.choice([RoundMode.NEAREST_EVEN, RoundMode.NEAREST_AWAY]), Binary(op, sub(), b))
    if k < 0.8:
        return Unary("neg", sub())
    if transcendental and k < 0.9:
        return Unary(rng.choice(["sin", "cos", "exp"]), Binary("mul", Lit(mpq(1, 4)), sub()))
    return RoundFP(SINGLE, RoundMode.NEAREST_EVEN, Binary("mul", sub(), sub()))


def fp_formula(rng: random.Random, names, transcendental: bool):
    def cmp_():
        left = fp_expr(rng, names, rng.randint(1, 3), transcendental)
        right = fp_expr(rng, names, 2, transcendental) if rng.random() < 0.5 else rational_expr(rng, names, 1, partial=False)
        return Cmp(rng.choice(["<=", "<", ">=", ">", "="]), left, right)

    def go(d):
        if d == 0 or rng.random() < 0.35:
            return cmp_()
        k = rng.random()
        if k < 0.3:
            return Not(go(d - 1))
        if k < 0.6:
            return And((go(d - 1), go(d - 1)))
        if k < 0.85:
            return Or((go(d - 1), go(d - 1)))
        return Implies(go(d - 1), go(d - 1))

    return go(2)


def _point_truth(f, point, transcendental: bool):
    """Exact truth for rational-closed formulas; otherwise a 300-bit
    interval evaluation with exact IEEE rounding (None when undecided)."""
    if not transcendental:
        return _truth(f, point)
    ev = evaluator(300, True)
    t = ev.formula(f, ev.enclose_box({k: Interval.point(v) for k, v in point.items()}))
    return None if t is Truth.UNKNOWN else t is Truth.TRUE


def weakening_soundness(trials: int, seed: int = 0, points_per_formula: int = 25) -> SuiteResult:
    """A point that satisfies the floating-point NVC must satisfy its
    weakened exact form."""
    rng = random.Random(seed)
    res = SuiteResult()
    names = ["x", "y"]
    res.extra["satisfied"] = 0
    while res.trials < trials:
        transcendental = rng.random() < 0.2
        box = {}
        for n in names:
            a, b = sorted(round_to_format(mpq(rng.randint(-400, 400), 100), SINGLE) for _ in range(2))
            box[n] = Interval(a, b)
        f = fp_formula(rng, names, transcendental)
        nvc = ProcessedNVC([VarSpec(n, FLOAT32, box[n]) for n in names], [f])
        try:
            contexts = bound_contexts(collect_fp_contexts(nvc), box)
        except FpnvcError:
            res.skipped += 1
            continue
        weak = eliminate_fp(nvc, contexts).conjunction
        for _ in range(points_per_formula):
            p = float_point(rng, box) if rng.random() < 0.8 else rand_point_in(rng, box)
            before = _point_truth(f, p, transcendental)
            if before is None:
                res.skipped += 1
                continue
            res.trials += 1
            if not before:
                continue
            res.extra["satisfied"] += 1
            after = _point_truth(weak, p, transcendental)
            if after is False:
                res.violations.append((f, weak, p))
    return res


def rand_point_in(rng: random.Random, box) -> dict:
    return {k: iv.lo + (iv.hi - iv.lo) * mpq(rng.randint(0, 999), 999) for k, iv in box.items()}


# ------------------------------------------------------------- prover


def _poly(rng: random.Random, names, terms: int):
    """Random polynomial of degree <= 3, sometimes with a sine term."""
    out = Lit(mpq(rng.randint(-3, 3), 2))
    for _ in range(terms):
        mono = Lit(mpq(rng.randint(-9, 9), rng.choice([1, 2, 4])))
        for n in names:
            d = rng.randint(0, 2)
            if d:
                mono = Binary("mul", mono, Pow(Var(n), d))
        out = Binary("add", out, mono)
    if rng.random() < 0.3:
        out = Binary("add", out, Unary("sin", Binary("mul", Lit(mpq(rng.randint(1, 3))), Var(rng.choice(names)))))
    return out


def _sos(rng: random.Random, names, gap: mpq):
    """Expanded sum of squares plus a positive gap: positive everywhere, but
    naive interval evaluation needs bisection to see it."""
    total = Lit(gap)
    for _ in range(rng.randint(1, 3)):
        a, b, c = (mpq(rng.randint(-4, 4), 2) for _ in range(3))
        x, y = (Var(n) for n in names)
        # (a x + b y + c)^2 expanded
        parts = [
            (a * a, Pow(x, 2)), (b * b, Pow(y, 2)), (2 * a * b, Binary("mul", x, y)),
            (2 * a * c, x), (2 * b * c, y),
        ]
        total = Binary("add", total, Lit(c * c))
        for coef, mono in parts:
            if coef:
                total = Binary("add", total, Binary("mul", Lit(coef), mono))
    return total


def constructed_unsat(rng: random.Random) -> ProcessedNVC:
    names = ["x", "y"]
    specs = [VarSpec(n, REAL, Interval(-2, 2)) for n in names]
    kind = rng.randrange(3)
    if kind == 0:
        f = Cmp("<=", _sos(rng, names, mpq(rng.randint(10, 50), 100)), Lit(mpq(0)))
        return ProcessedNVC(specs, [f])
    if kind == 1:
        # p <= c - g and p >= c + g
        p = _poly(rng, names, rng.randint(2, 4))
        c, g = mpq(rng.randint(-20, 20), 4), mpq(rng.randint(5, 25), 100)
        return ProcessedNVC(specs, [Cmp("<=", p, Lit(c - g)), Cmp(">=", p, Lit(c + g))])
    # a disc and a half-plane that miss each other
    r2, off = mpq(rng.randint(1, 9), 10), mpq(rng.randint(1, 20), 100)
    x, y = Var("x"), Var("y")
    disc = Cmp("<=", Binary("add", Pow(x, 2), Pow(y, 2)), Lit(r2))
    # x + y >= sqrt(2 r2) + off is outside the disc
    bound = Lit(mpq(int((2 * float(r2)) ** 0.5 * 10**6) + 1, 10**6) + off)
    return ProcessedNVC(specs, [disc, Cmp(">=", Binary("add", x, y), bound)])


def constructed_sat(rng: random.Random) -> tuple[ProcessedNVC, dict]:
    names = ["x", "y"]
    p = {n: mpq(rng.randint(-15, 15), 8) for n in names}
    specs = [VarSpec(n, REAL, Interval(-2, 2)) for n in names]
    f = _poly(rng, names, rng.randint(2, 4))
    ev = evaluator(200, True)
    val = ev.expr(f, ev.enclose_box({k: Interval.point(v) for k, v in p.items()}))
    c = (mpq(val[0]) + mpq(val[1])) / 2
    g = mpq(rng.randint(1, 50), 1000)
    assertions = [Cmp("<=", f, Lit(c + g)), Cmp(">=", f, Lit(c - g))]
    if rng.random() < 0.5:
        v = rng.choice(names)
        assertions.append(Or((Cmp("<=", Var(v), Lit(p[v] + mpq(1, 10))), Cmp(">", Pow(Var(v), 2), Lit(mpq(100))))))
    return ProcessedNVC(specs, assertions), p


def prover_soundness(n_unsat: int, n_sat: int, seed: int = 0, sat_timeout: float = 10.0, unsat_timeout: float = 2.0) -> SuiteResult:
    rng = random.Random(seed)
    res = SuiteResult()
    counts = {"unsat_proved": 0, "unsat_gave_up": 0, "sat_certified": 0, "sat_gave_up": 0}
    for _ in range(n_unsat):
        nvc = constructed_unsat(rng)
        v = decide(nvc, cfg=ProveConfig(timeout=unsat_timeout))
        res.trials += 1
        if isinstance(v, PotentialCounterexample):
            if v.certified:
                res.violations.append(("certified CE on unsat", nvc, v.point))
        elif isinstance(v, Proved):
            counts["unsat_proved"] += 1
        else:
            counts["unsat_gave_up"] += 1
    for _ in range(n_sat):
        nvc, planted = constructed_sat(rng)
        assert certify_point(nvc, planted), "planted point must satisfy its NVC"
        v = decide(nvc, cfg=ProveConfig(timeout=sat_timeout))
        res.trials += 1
        if isinstance(v, Proved):
            res.violations.append(("Proved a satisfiable NVC", nvc, planted))
        elif isinstance(v, PotentialCounterexample) and v.certified:
            counts["sat_certified"] += 1
            if not certify_point(nvc, v.point, 512):
                res.violations.append(("certified point fails at 512 bits", nvc, v.point))
        else:
            counts["sat_gave_up"] += 1
    res.extra.update(counts)
    res.extra["sat_rate"] = counts["sat_certified"] / n_sat if n_sat else 1.0
    return res


def internal_bound_soundness(trials: int, seed: int = 0, points_per_expr: int = 20) -> SuiteResult:
    """Emulated single-precision value vs exact value, against the internal
    engine's bound."""
    rng = random.Random(seed)
    res = SuiteResult()
    names = ["x", "y"]
    res.extra["tightest_ratio"] = 0.0
    while res.trials < trials:
        box = {}
        for n in names:
            a, b = sorted(round_to_format(mpq(rng.randint(-800, 800), 100), SINGLE) for _ in range(2))
            box[n] = Interval(a, b)
        e = fp_expr(rng, names, rng.randint(1, 4), False)
        ctx = make_context(e)
        try:
            delta = compute_error_bound_internal(ctx, box)
        except FpnvcError:
            res.skipped += 1
            continue
        for _ in range(points_per_expr):
            p = float_point(rng, box)
            try:
                err = abs(eval_exact(ctx.expr, p) - eval_exact(ctx.exact, p))
            except UNDEFINED:
                res.skipped += 1
                continue
            res.trials += 1
            if err > delta:
                res.violations.append((e, box, p, err, delta))
            elif delta:
                res.extra["tightest_ratio"] = max(res.extra["tightest_ratio"], float(err / delta))
    return res
