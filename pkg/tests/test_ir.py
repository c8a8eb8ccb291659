from fractions import Fraction

import pytest
from fpnvc.ir import (
    FALSE,
    NEG_INF,
    POS_INF,
    TRUE,
    And,
    Implies,
    Interval,
    Not,
    NotRational,
    Or,
    Var,
    add,
    conjuncts,
    div,
    eq,
    eval_exact,
    free_vars,
    has_rounding,
    holds_exact,
    le,
    lit,
    mod,
    mul,
    node_count,
    render_decimal_exact,
    render_scalar,
    rnd32,
    scalar,
    sin,
    sqrt,
    strip_rounding,
    substitute,
)
from gmpy2 import mpq

x, y = Var("x"), Var("y")


def test_scalar_coercion():
    assert scalar("1.5e-3") == mpq(3, 2000)
    assert scalar("-3/4") == mpq(-3, 4)
    assert scalar(0.1) == mpq(Fraction(0.1))
    assert scalar(7) == 7


def test_interval_operations():
    a, b = Interval(0, 2), Interval(1, 3)
    assert a.intersect(b) == Interval(1, 2)
    assert a.intersect(Interval(5, 6)) is None
    assert a.hull(b) == Interval(0, 3)
    assert Interval(1, 2).subset(b) and not a.subset(b)
    assert a.midpoint() == 1 and a.width() == 2
    assert Interval.point("1/3").is_point
    e = Interval.entire()
    assert not e.is_finite and e.width() == POS_INF and e.contains(10**100)
    assert str(Interval(NEG_INF, mpq(1, 2))) == "[-inf, 0.5]"
    with pytest.raises(ValueError):
        Interval(2, 1)
    with pytest.raises(ValueError):
        e.midpoint()


def test_rendering():
    assert render_decimal_exact(mpq(-1, 8)) == "-0.125"
    assert render_decimal_exact(mpq(1, 3)) is None
    assert render_scalar(mpq(1, 3)) == "1/3"
    assert render_scalar(mpq(1, 2**30)) == f"1/{2**30}"
    assert render_scalar(42) == "42"


def test_traversal_helpers():
    e = add(mul(x, y), rnd32(sin(x)))
    assert free_vars(e) == {"x", "y"}
    assert free_vars(And((le(x, lit(1)), Not(eq(y, x))))) == {"x", "y"}
    assert node_count(e) == 7
    assert has_rounding(e) and not has_rounding(strip_rounding(e))
    assert substitute(e, {"y": lit(2)}) == add(mul(x, lit(2)), rnd32(sin(x)))
    f = And((le(x, y), And((TRUE, eq(x, lit(0))))))
    assert conjuncts(f) == [le(x, y), eq(x, lit(0))]


def test_exact_evaluation():
    p = {"x": mpq(3, 2), "y": mpq(-2)}
    assert eval_exact(div(mul(x, y), add(x, lit(1))), p) == mpq(-6, 5)
    assert eval_exact(sqrt(lit(mpq(9, 4))), p) == mpq(3, 2)
    assert eval_exact(mod(lit(-7), lit(3)), p) == 2
    assert eval_exact(rnd32(div(lit(1), lit(3))), p) == mpq(11184811, 33554432)
    with pytest.raises(NotRational):
        eval_exact(sqrt(lit(2)), p)
    with pytest.raises(NotRational):
        eval_exact(sin(x), p)
    with pytest.raises(ZeroDivisionError):
        eval_exact(div(x, lit(0)), p)


def test_exact_truth():
    p = {"x": 1, "y": 2}
    assert holds_exact(Implies(le(y, x), FALSE), p)
    assert holds_exact(Or((FALSE, le(x, y))), p)
    assert not holds_exact(And((le(x, y), Not(le(x, y)))), p)
