"""Branch-and-prune decision procedure for exact NVCs.

A box is discarded when the conjunction is certainly false on it.  Surviving
boxes have their midpoint tested under exact semantics; if that fails the
box is bisected along the dimension that has shrunk least relative to its
starting width.  Integer variables are split at an integer boundary.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import FIRST_COMPLETED, ProcessPoolExecutor, wait
from dataclasses import dataclass, field
from typing import Mapping

import gmpy2
from gmpy2 import mpq

from .interval import DEFAULT_PREC, Truth, evaluator
from .ir import FALSE, And, Cmp, Const, Formula, Implies, Interval, Not, Or, ProcessedNVC, _is_inf


@dataclass(frozen=True)
class ProveConfig:
    max_depth: int = 200
    timeout: float = 60.0
    min_box_width: mpq = mpq(1, 10**30)
    prec: int = DEFAULT_PREC
    strategy: str = "WidestFirst"
    jobs: int = 1
    max_boxes: int | None = None

    def __post_init__(self):
        if self.min_box_width <= 0:
            raise ValueError("min_box_width must be positive")
        if self.strategy != "WidestFirst":
            raise ValueError(f"unknown strategy {self.strategy!r}")


@dataclass(frozen=True)
class Proved:
    stats: dict = field(default_factory=dict)
    kind = "Proved"


@dataclass(frozen=True)
class PotentialCounterexample:
    point: dict
    certified: bool
    stats: dict = field(default_factory=dict)
    kind = "PotentialCounterexample"


@dataclass(frozen=True)
class GaveUp:
    reason: str
    stats: dict = field(default_factory=dict)
    point: dict | None = None
    kind = "GaveUp"


Verdict = Proved | PotentialCounterexample | GaveUp


# ------------------------------------------------------------ point checks


def _point_env(ev, point: Mapping[str, mpq]) -> dict:
    return ev.enclose_box({k: Interval.point(v) for k, v in point.items()})


class _Certifier:
    """Point check at prec, 2*prec and 4*prec with programs compiled on
    first use."""

    def __init__(self, f: Formula, prec: int):
        self.f = f
        self.precs = (prec, 2 * prec, 4 * prec)
        self.programs: dict[int, object] = {}

    def program(self, prec: int):
        prog = self.programs.get(prec)
        if prog is None:
            prog = self.programs[prec] = evaluator(prec, True).compile(self.f)
        return prog

    def __call__(self, point: Mapping[str, mpq]) -> bool:
        for p in self.precs:
            prog = self.program(p)
            t = prog.truth(_point_env(prog.ev, point))
            if t is Truth.TRUE:
                return True
            if t is Truth.FALSE:
                return False
        return False


def certify_point(nvc: ProcessedNVC, point: Mapping[str, mpq], prec: int = DEFAULT_PREC) -> bool:
    """Does ``point`` certainly satisfy every assertion?

    Rounding nodes get exact IEEE semantics.  An undecided result is retried
    at twice and four times the precision before giving up.
    """
    return _Certifier(nvc.conjunction, prec)(point)


def _gap(lo: float, hi: float) -> float:
    return max(0.0, lo - hi)


def violation(ev, f: Formula, env: dict, memo: dict, want: bool = True) -> float:
    """How far the enclosures are from making ``f`` take value ``want``;
    0 means the intervals already overlap the wanted outcome."""
    if isinstance(f, Const):
        return 0.0 if f.value == want else math.inf
    if isinstance(f, Not):
        return violation(ev, f.arg, env, memo, not want)
    if isinstance(f, Implies):
        return violation(ev, Or((Not(f.lhs), f.rhs)), env, memo, want)
    if isinstance(f, (And, Or)):
        parts = [violation(ev, g, env, memo, want) for g in f.args]
        if (isinstance(f, And)) == want:
            return sum(parts)
        return min(parts) if parts else 0.0
    assert isinstance(f, Cmp)
    a = ev.expr(f.left, env, memo)
    b = ev.expr(f.right, env, memo)
    if f.op in (">=", ">"):
        a, b = b, a
    alo, ahi, blo, bhi = (float(x) for x in (a[0], a[1], b[0], b[1]))
    if f.op == "=":
        return max(_gap(alo, bhi), _gap(blo, ahi)) if want else 0.0
    # a <= b (or a < b) wanted true: need a.lo <= b.hi ; wanted false: need a.hi >= b.lo
    return _gap(alo, bhi) if want else _gap(blo, ahi)


# ------------------------------------------------------------ boxes


def _width(iv: Interval):
    return iv.hi - iv.lo


def midpoint(box: Mapping[str, Interval], ints: frozenset) -> dict:
    out = {}
    for k, iv in box.items():
        m = (iv.lo + iv.hi) / 2
        out[k] = mpq(gmpy2.floor(m)) if k in ints else m
    return out


def _split_dim(box, init, ints, min_width):
    best, best_score = None, None
    for k, iv in box.items():
        w = _width(iv)
        if k in ints:
            if w < 1:
                continue
        elif w <= min_width:
            continue
        w0 = _width(init[k])
        score = w / w0 if w0 > 0 else w
        if best_score is None or score > best_score:
            best, best_score = k, score
    return best


def bisect(box: dict, name: str, ints: frozenset) -> tuple[dict, dict]:
    iv = box[name]
    if name in ints:
        m = mpq(gmpy2.floor((iv.lo + iv.hi) / 2))
        left, right = Interval(iv.lo, m), Interval(m + 1, iv.hi)
    else:
        m = (iv.lo + iv.hi) / 2
        left, right = Interval(iv.lo, m), Interval(m, iv.hi)
    return {**box, name: left}, {**box, name: right}


def _unbounded(box: Mapping[str, Interval]) -> list[str]:
    return [k for k, iv in box.items() if _is_inf(iv.lo) or _is_inf(iv.hi)]


# ------------------------------------------------------------ search


def _search(nvc: ProcessedNVC, boxes: list, init: dict, cfg: ProveConfig, deadline: float) -> Verdict:
    ints = frozenset(v.name for v in nvc.vars if v.is_int)
    certify = _Certifier(nvc.conjunction, cfg.prec)
    prog = certify.program(cfg.prec)
    ev = prog.ev
    stack = [(b, d) for b, d in reversed(boxes)]
    stats = {"boxes": 0, "pruned": 0, "max_depth": 0, "stuck": 0}
    stuck: list[dict] = []
    reason = None
    while stack:
        if time.monotonic() > deadline:
            reason = "Timeout"
            break
        if cfg.max_boxes is not None and stats["boxes"] >= cfg.max_boxes:
            reason = "BoxLimit"
            break
        box, depth = stack.pop()
        stats["boxes"] += 1
        stats["max_depth"] = max(stats["max_depth"], depth)
        t = prog.truth(ev.enclose_box(box))
        if t is Truth.FALSE:
            stats["pruned"] += 1
            continue
        mid = midpoint(box, ints)
        if t is Truth.TRUE or certify(mid):
            return PotentialCounterexample(mid, True, stats)
        name = _split_dim(box, init, ints, cfg.min_box_width) if depth < cfg.max_depth else None
        if name is None:
            stats["stuck"] += 1
            stuck.append(box)
            continue
        left, right = bisect(box, name, ints)
        stack.append((right, depth + 1))
        stack.append((left, depth + 1))
    live = stuck + [b for b, _ in stack[-1000:]]
    if not live:
        return Proved(stats)
    if reason is None:
        reason = "DepthLimit" if stats["max_depth"] >= cfg.max_depth else "WidthLimit"
    stats["live"] = len(stuck) + len(stack)
    return GaveUp(reason, stats, best_point(nvc, live, ints, cfg.prec))


def best_point(nvc: ProcessedNVC, boxes: list, ints: frozenset, prec: int = DEFAULT_PREC) -> dict | None:
    """Midpoint of the live box whose midpoint comes closest to satisfying
    the conjunction."""
    ev = evaluator(prec, True)
    f = nvc.conjunction
    best, best_v = None, math.inf
    for box in boxes:
        mid = midpoint(box, ints)
        v = violation(ev, f, _point_env(ev, mid), {})
        if best is None or v < best_v:
            best, best_v = mid, v
    return best


def _presplit(box: dict, init: dict, ints: frozenset, cfg: ProveConfig, n: int) -> list:
    boxes = [(box, 0)]
    while len(boxes) < n:
        b, d = boxes.pop(0)
        name = _split_dim(b, init, ints, cfg.min_box_width)
        if name is None:
            boxes.append((b, d))
            break
        left, right = bisect(b, name, ints)
        boxes += [(left, d + 1), (right, d + 1)]
    return boxes


def _merge(results: list, n_total: int) -> Verdict:
    stats = {"boxes": 0, "pruned": 0, "max_depth": 0, "stuck": 0}
    for r in results:
        for k in stats:
            if k == "max_depth":
                stats[k] = max(stats[k], r.stats.get(k, 0))
            else:
                stats[k] += r.stats.get(k, 0)
    for r in results:
        if isinstance(r, PotentialCounterexample):
            return PotentialCounterexample(r.point, r.certified, stats)
    gave_up = [r for r in results if isinstance(r, GaveUp)]
    if gave_up or len(results) < n_total:
        first = gave_up[0] if gave_up else None
        return GaveUp(first.reason if first else "Timeout", stats, first.point if first else None)
    return Proved(stats)


def decide(nvc: ProcessedNVC, box: Mapping[str, Interval] | None = None, cfg: ProveConfig | None = None) -> Verdict:
    """Prove the conjunction unsatisfiable over ``box`` or find a point."""
    cfg = cfg or ProveConfig()
    start = time.monotonic()
    box = dict(nvc.box if box is None else box)
    if any(a == FALSE for a in nvc.assertions):
        return Proved({"boxes": 0, "elapsed": 0.0})
    missing = _unbounded(box)
    if missing:
        return GaveUp("UnboundedBox", {"unbounded": missing})
    ints = frozenset(v.name for v in nvc.vars if v.is_int)
    deadline = start + cfg.timeout
    if cfg.jobs <= 1:
        verdict = _search(nvc, [(box, 0)], box, cfg, deadline)
    else:
        parts = _presplit(box, box, ints, cfg, 4 * cfg.jobs)
        results = []
        pool = ProcessPoolExecutor(cfg.jobs)
        try:
            pending = {pool.submit(_search, nvc, [p], box, cfg, deadline) for p in parts}
            while pending:
                budget = max(0.0, deadline - time.monotonic()) + 5
                done, pending = wait(pending, timeout=budget, return_when=FIRST_COMPLETED)
                if not done:
                    break
                results += [d.result() for d in done]
                if any(isinstance(r, PotentialCounterexample) for r in results):
                    break
        finally:
            # first certified point wins; remaining workers stop at the deadline
            pool.shutdown(wait=False, cancel_futures=True)
        verdict = _merge(results, len(parts))
    verdict.stats["elapsed"] = time.monotonic() - start
    return verdict
