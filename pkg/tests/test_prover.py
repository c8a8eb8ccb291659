import pytest
from fpnvc.ir import (
    INT,
    Cmp,
    Interval,
    Not,
    ProcessedNVC,
    Var,
    VarSpec,
    div,
    eq,
    ge,
    le,
    lit,
    mul,
    rnd32,
    sin,
    sub,
)
from fpnvc.prover import (
    GaveUp,
    PotentialCounterexample,
    ProveConfig,
    Proved,
    bisect,
    certify_point,
    decide,
    midpoint,
)
from gmpy2 import mpq

from suites import constructed_sat, constructed_unsat, prover_soundness

x, n = Var("x"), Var("n")


def one_var(*assertions, iv=Interval(-1, 1), sort=None):
    spec = VarSpec("x", sort, iv) if sort else VarSpec("x", bounds=iv)
    return ProcessedNVC([spec], list(assertions))


def test_square_nonnegative():
    v = decide(one_var(Not(le(lit(0), mul(x, x)))))
    assert isinstance(v, Proved)


def test_needs_splitting():
    nvc = one_var(ge(mul(x, sub(lit(1), x)), lit(mpq(3, 10))), iv=Interval(0, 1))
    v = decide(nvc)
    assert isinstance(v, Proved)
    assert v.stats["boxes"] > 1


def test_sine_counterexample():
    v = decide(one_var(le(lit(mpq(4, 10)), sin(x))))
    assert isinstance(v, PotentialCounterexample) and v.certified
    assert certify_point(one_var(le(lit(mpq(4, 10)), sin(x))), v.point, 512)


def test_certify_point_examples():
    nvc = one_var(eq(mul(x, x), lit(2)))
    assert not certify_point(nvc, {"x": mpq(1414, 1000)})
    nvc = one_var(le(lit(mpq(4, 10)), sin(x)))
    assert certify_point(nvc, {"x": mpq(1, 2)})
    assert not certify_point(nvc, {"x": mpq(0)})
    # rounding nodes take exact IEEE semantics at points
    third = div(lit(1), lit(3))
    nvc = one_var(Not(eq(rnd32(third), third)))
    assert certify_point(nvc, {"x": mpq(0)})


def test_unbounded_box():
    v = decide(ProcessedNVC([VarSpec("x")], [le(x, lit(1))]))
    assert isinstance(v, GaveUp) and v.reason == "UnboundedBox"
    assert v.stats["unbounded"] == ["x"]


def test_limits():
    # a touching constraint: 0 < x*x has no interval proof near 0 and no model at x = 0
    hard = one_var(Cmp("<", mul(x, x), lit(0)), le(lit(0), x))
    v = decide(hard, cfg=ProveConfig(max_depth=8))
    assert isinstance(v, (Proved, GaveUp))
    touching = one_var(le(mul(x, x), lit(0)), Not(eq(x, lit(0))))
    v = decide(touching, cfg=ProveConfig(max_depth=10))
    assert isinstance(v, GaveUp) and v.reason == "DepthLimit"
    assert v.point is not None
    v = decide(touching, cfg=ProveConfig(max_boxes=5))
    assert isinstance(v, GaveUp) and v.reason == "BoxLimit"
    v = decide(touching, cfg=ProveConfig(timeout=0.0))
    assert isinstance(v, GaveUp) and v.reason == "Timeout"
    v = decide(touching, cfg=ProveConfig(min_box_width=mpq(1, 100)))
    assert isinstance(v, GaveUp) and v.reason == "WidthLimit"


def test_integer_variables_split_on_integers():
    box = {"n": Interval(0, 5)}
    left, right = bisect(box, "n", frozenset({"n"}))
    assert left["n"] == Interval(0, 2) and right["n"] == Interval(3, 5)
    assert midpoint(box, frozenset({"n"}))["n"] == 2
    nvc = ProcessedNVC([VarSpec("n", INT, Interval(0, 10))], [eq(mul(n, n), lit(49))])
    v = decide(nvc)
    assert isinstance(v, PotentialCounterexample) and v.point["n"] == 7
    nvc = ProcessedNVC([VarSpec("n", INT, Interval(0, 10))], [eq(mul(n, n), lit(50))])
    assert isinstance(decide(nvc), Proved)


def test_config_validation():
    with pytest.raises(ValueError):
        ProveConfig(min_box_width=mpq(0))
    with pytest.raises(ValueError):
        ProveConfig(strategy="DepthFirstRandom")


@pytest.mark.parametrize("seed", range(3))
def test_parallel_agrees_with_sequential(seed):
    import random

    rng = random.Random(seed)
    cases = [constructed_unsat(rng) for _ in range(2)] + [constructed_sat(rng)[0] for _ in range(2)]
    for nvc in cases:
        seq = decide(nvc, cfg=ProveConfig(timeout=20))
        par = decide(nvc, cfg=ProveConfig(timeout=20, jobs=2))
        assert seq.kind == par.kind


def test_soundness_small():
    res = prover_soundness(40, 40, seed=9)
    assert res.ok, res.violations[:2]
    assert res.extra["sat_rate"] >= 0.95
