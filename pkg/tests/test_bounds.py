import random

import pytest
from fpnvc.bounds import derive_bounds, prune_with_bounds, refine, with_box
from fpnvc.errors import EmptyBox
from fpnvc.frontend import load_nvc
from fpnvc.interval import Truth, evaluator
from fpnvc.ir import (
    INT,
    TRUE,
    Interval,
    Or,
    ProcessedNVC,
    Var,
    VarSpec,
    add,
    eabs,
    eq,
    le,
    lit,
    sub,
)
from fpnvc.simplify import simplify_fixpoint
from gmpy2 import mpq

from suites import planted_bounds

x, y, n = Var("x"), Var("y"), Var("n")


def nvc(*assertions, specs=None):
    return ProcessedNVC(specs or [VarSpec("x"), VarSpec("y")], list(assertions))


def test_listing_box():
    r = derive_bounds(nvc(le(lit(mpq(-1, 2)), x), le(x, lit(mpq(1, 2)))))
    assert r.box["x"] == Interval(mpq(-1, 2), mpq(1, 2))


def test_no_constraints_stay_unbounded():
    r = derive_bounds(nvc(le(add(x, y), lit(1))))
    assert not r.box["x"].is_finite


def test_chain_of_bounds():
    r = derive_bounds(nvc(le(lit(1), x), le(x, y), le(y, lit(3))))
    assert r.box["x"] == Interval(1, 3) and r.box["y"] == Interval(1, 3)
    assert r.converged


def test_abs_pattern():
    r = derive_bounds(nvc(le(eabs(sub(x, lit(2))), lit(mpq(1, 4)))))
    assert r.box["x"] == Interval(mpq(7, 4), mpq(9, 4))


def test_equality_and_integer_trimming():
    specs = [VarSpec("n", INT)]
    r = derive_bounds(ProcessedNVC(specs, [le(lit(mpq(6, 5)), n), le(n, lit(mpq(49, 10)))]))
    assert r.box["n"] == Interval(2, 4)
    r = derive_bounds(nvc(eq(x, lit(3))))
    assert r.box["x"] == Interval.point(3)


def test_empty_box():
    with pytest.raises(EmptyBox) as err:
        derive_bounds(nvc(le(lit(2), x), le(x, lit(1))))
    assert err.value.name == "x"


def test_case_split_hull():
    f = Or((le(x, lit(-5)), le(lit(5), x)))
    r = derive_bounds(nvc(f, le(lit(-7), x), le(x, lit(6))))
    assert r.box["x"] == Interval(-7, 6)
    f = Or((eq(x, lit(1)), eq(x, lit(2))))
    assert derive_bounds(nvc(f)).box["x"] == Interval(1, 2)


def test_rounds_shrink_monotonically():
    rng = random.Random(2)
    for _ in range(100):
        a, b, c = (mpq(rng.randint(-50, 50), 7) for _ in range(3))
        system = nvc(le(lit(a), x), le(x, add(y, lit(b))), le(y, sub(lit(c), x)), le(lit(a - 3), y))
        previous = None
        for k in range(1, 6):
            try:
                box = derive_bounds(system, max_rounds=k).box
            except EmptyBox:
                break
            if previous is not None:
                for name, iv in box.items():
                    assert iv.subset(previous[name])
            previous = box


def test_prune_examples():
    box = {"x": Interval(mpq(-1, 2), mpq(1, 2))}
    system = ProcessedNVC([VarSpec("x", bounds=box["x"])], [le(lit(mpq(-1, 2)), x), le(x, lit(2)), le(add(x, x), lit(mpq(1, 2)))])
    out = prune_with_bounds(system, box)
    assert out.assertions == (le(add(x, x), lit(mpq(1, 2))),)
    assert prune_with_bounds(nvc(eq(add(lit(1), lit(0)), lit(1)))).assertions in ((), (TRUE,))


def test_planted_points_small():
    res = planted_bounds(200, seed=5)
    assert res.ok, res.violations[:3]


def _truth(ev, f, point):
    return ev.formula(f, ev.enclose_box({k: Interval.point(v) for k, v in point.items()}))


def test_prune_soundness_on_corpus(corpus):
    """A pruning step keeps exactly the models inside the derived box."""
    ev = evaluator(300, True)
    rng = random.Random(0)
    checked = 0
    for path in sorted(corpus.iterdir()):
        source = simplify_fixpoint(load_nvc(path)[0])
        try:
            box = derive_bounds(source).box
        except EmptyBox:
            continue
        if not all(iv.is_finite for iv in box.values()):
            continue
        pruned = prune_with_bounds(with_box(source, box), box)
        ints = {v.name for v in source.vars if v.is_int}
        for _ in range(100):
            p = {k: iv.lo + (iv.hi - iv.lo) * mpq(rng.randint(0, 1000), 1000) for k, iv in box.items()}
            p = {k: mpq(int(v)) if k in ints else v for k, v in p.items()}
            before = _truth(ev, source.conjunction, p)
            after = _truth(ev, pruned.conjunction, p)
            if Truth.UNKNOWN in (before, after):
                continue
            checked += 1
            assert before == after, (path, p)
    assert checked >= 300


def test_corpus_boxes(corpus):
    refined, result = refine(simplify_fixpoint(load_nvc(corpus / "sin_ge.nvc")[0]))
    assert result.box["r1"] == Interval(0, 511)
    refined, result = refine(simplify_fixpoint(load_nvc(corpus / "approx_sin_le.nvc")[0]))
    assert result.box["x"] == Interval(mpq(-6851933, 8388608), mpq(6851933, 8388608))
