from fpnvc.frontend import load_nvc
from fpnvc.ir import (
    FALSE,
    INT,
    TRUE,
    And,
    Binary,
    Cmp,
    Implies,
    Lit,
    Not,
    Or,
    ProcessedNVC,
    Unary,
    Var,
    VarSpec,
    add,
    div,
    emax,
    emin,
    eq,
    free_vars,
    ge,
    le,
    lit,
    mul,
    sqrt,
    sub,
)
from fpnvc.simplify import (
    find_definitions,
    run_fixpoint,
    simplify_arith,
    simplify_bool,
    simplify_fixpoint,
    substitute_definitions,
)
from gmpy2 import mpq

from suites import simplifier_equivalence

x, y, i, i1 = Var("x"), Var("y"), Var("i"), Var("i1")
phi = le(x, lit(3))


def test_bool_examples():
    assert simplify_bool(And((Or((Not(phi), TRUE)), Or((phi, FALSE))))) == phi
    assert simplify_bool(eq(add(x, y), add(x, y))) == TRUE
    assert simplify_bool(Not(Not(phi))) == phi
    assert simplify_bool(Implies(TRUE, phi)) == phi
    assert simplify_bool(Implies(FALSE, phi)) == TRUE
    assert simplify_bool(Implies(phi, FALSE)) == simplify_bool(Not(phi))
    assert simplify_bool(Implies(phi, TRUE)) == TRUE


def test_arith_examples():
    assert simplify_arith(div(add(x, y), lit(1))) == add(x, y)
    assert simplify_arith(add(lit(0), lit(1))) == Lit(mpq(1))
    assert simplify_arith(emin(x, x)) == x
    assert simplify_arith(emax(x, x)) == x
    assert simplify_arith(mul(x, lit(1))) == x
    assert simplify_arith(add(x, lit(0))) == x
    assert simplify_arith(Unary("neg", Unary("neg", x))) == x


def test_times_zero_respects_partiality():
    assert simplify_arith(mul(add(x, y), lit(0))) == Lit(mpq(0))
    # may be undefined, so it must survive
    assert simplify_arith(mul(div(lit(1), x), lit(0))) != Lit(mpq(0))
    assert simplify_arith(mul(sqrt(x), lit(0))) != Lit(mpq(0))


def _nvc(*assertions, ints=()):
    names = sorted(set().union(*(free_vars(a) for a in assertions)))
    return ProcessedNVC([VarSpec(n, INT) if n in ints else VarSpec(n) for n in names], list(assertions))


def test_definition_examples():
    P = lambda e: le(e, lit(10))  # noqa: E731
    out = substitute_definitions(_nvc(eq(i, add(i1, lit(1))), P(i)))
    assert P(add(i1, lit(1))) in out.assertions
    assert "i" not in {v.name for v in out.vars}

    out = substitute_definitions(_nvc(eq(x, lit(1)), eq(x, add(lit(0), lit(1))), P(x)))
    assert P(lit(1)) in out.assertions

    circular = _nvc(eq(x, add(x, lit(1))))
    assert find_definitions(circular) == {}
    assert substitute_definitions(circular).assertions == circular.assertions


def test_int_variables_need_integer_definitions():
    n, m = Var("n"), Var("m")
    nvc = _nvc(eq(n, div(m, lit(2))), le(n, lit(3)), ints=("n", "m"))
    assert "n" not in find_definitions(nvc)
    nvc = _nvc(eq(n, add(m, lit(2))), le(n, lit(3)), ints=("n", "m"))
    assert "n" in find_definitions(nvc)


def test_chain_resolves_within_two_rounds():
    a, b = Var("a"), Var("b")
    P = le(mul(a, a), lit(7))
    fix = run_fixpoint(_nvc(eq(a, b), eq(b, lit(1)), P))
    assert fix.converged and fix.rounds <= 3
    assert fix.nvc.assertions == (FALSE,) or all("a" not in repr(f) for f in fix.nvc.assertions)
    # 1*1 <= 7 folds to true: nothing left but an empty conjunction
    assert fix.nvc.assertions in ((), (TRUE,))


def test_ge_becomes_le():
    out = simplify_fixpoint(_nvc(ge(x, y), Cmp(">", x, lit(2))))
    ops = {a.op for a in out.assertions if isinstance(a, Cmp)}
    assert ops <= {"<=", "<"}


def test_minimal_nvc_is_fixed_in_one_round():
    nvc = _nvc(le(mul(x, y), lit(1)))
    fix = run_fixpoint(nvc)
    assert fix.rounds == 1 and fix.nvc.assertions == nvc.assertions


def test_corpus_fixpoint_and_idempotence(corpus):
    for path in sorted(corpus.iterdir()):
        nvc, _ = load_nvc(path)
        fix = run_fixpoint(nvc, 50)
        assert fix.converged and fix.rounds <= 50, path
        again = simplify_fixpoint(fix.nvc)
        assert again.assertions == fix.nvc.assertions, path


def test_taylor_goal_survives(corpus):
    nvc, _ = load_nvc(corpus / "taylor_sin.nvc")
    out = simplify_fixpoint(nvc)
    goals = [a for a in out.assertions if isinstance(a, Not)]
    assert len(goals) == 1
    assert "sin" in repr(goals[0])


def test_complete_fills_eliminated_variables():
    fix = run_fixpoint(_nvc(eq(y, add(x, lit(2))), le(y, lit(5))))
    full = fix.complete({"x": mpq(1)})
    assert full["y"] == 3


def test_point_equivalence_small():
    res = simplifier_equivalence(1_500, seed=1)
    assert res.ok, res.violations[:3]
    assert res.extra["max_rounds"] <= 50


def test_simplify_keeps_binary_shape():
    e = Binary("sub", x, sub(y, lit(0)))
    assert simplify_arith(e) == sub(x, y)
