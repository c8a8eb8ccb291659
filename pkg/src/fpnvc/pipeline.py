"""Stage orchestration: read, simplify, bound, eliminate rounding, decide."""

from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

from .bounds import refine
from .config import RunConfig
from .errors import EmptyBox
from .fpelim import FPContext, bound_contexts, collect_fp_contexts, eliminate_fp
from .frontend import load_nvc
from .frontend.smt import ParseReport
from .ir import FALSE, Interval, ProcessedNVC, _is_inf
from .printing import infix_number
from .prover import GaveUp, PotentialCounterexample, Proved, Verdict, decide
from .simplify import simplify_fixpoint


@dataclass
class PipelineResult:
    source: ProcessedNVC
    parse: ParseReport
    nvc: ProcessedNVC | None = None
    contexts: list[FPContext] = field(default_factory=list)
    box: dict[str, Interval] = field(default_factory=dict)
    fp_box: dict[str, Interval] = field(default_factory=dict)
    timings: dict[str, float] = field(default_factory=dict)
    empty_box: str | None = None
    verdict: Verdict | None = None

    @property
    def infeasible(self) -> bool:
        return self.empty_box is not None or (self.nvc is not None and FALSE in self.nvc.assertions)


@contextmanager
def _timed(timings: dict, name: str):
    start = time.perf_counter()
    try:
        yield
    finally:
        timings[name] = timings.get(name, 0.0) + time.perf_counter() - start


def _infeasible(result: PipelineResult, nvc: ProcessedNVC, name: str) -> PipelineResult:
    result.empty_box = name
    result.nvc = nvc.replace(assertions=[FALSE])
    return result


def process_nvc(source: ProcessedNVC, cfg: RunConfig | None = None, parse: ParseReport | None = None) -> PipelineResult:
    """Everything up to and including rounding elimination, followed by a
    second simplify/bounds pass on the exact NVC."""
    cfg = cfg or RunConfig()
    result = PipelineResult(source, parse or ParseReport())
    t = result.timings
    nvc = source
    try:
        with _timed(t, "simplify"):
            nvc = simplify_fixpoint(nvc, cfg.simplify_rounds)
        with _timed(t, "bounds"):
            nvc, _ = refine(nvc, cfg.prec, cfg.bounds_rounds)
        result.fp_box = nvc.box
        with _timed(t, "error-bounds"):
            contexts = collect_fp_contexts(nvc)
            contexts = bound_contexts(contexts, nvc.box, cfg.prec, cfg.injected)
        result.contexts = contexts
        with _timed(t, "eliminate-fp"):
            nvc = eliminate_fp(nvc, contexts)
        with _timed(t, "simplify"):
            nvc = simplify_fixpoint(nvc, cfg.simplify_rounds)
        with _timed(t, "bounds"):
            nvc, _ = refine(nvc, cfg.prec, cfg.bounds_rounds)
    except EmptyBox as e:
        return _infeasible(result, nvc, e.name)
    result.nvc = nvc
    result.box = nvc.box
    return result


def process_file(path: str | Path, cfg: RunConfig | None = None) -> PipelineResult:
    timings: dict = {}
    with _timed(timings, "frontend"):
        source, parse = load_nvc(path)
    result = process_nvc(source, cfg, parse)
    result.timings = {**timings, **result.timings}
    return result


def prove_result(result: PipelineResult, cfg: RunConfig | None = None) -> PipelineResult:
    cfg = cfg or RunConfig()
    with _timed(result.timings, "prove"):
        if result.infeasible:
            result.verdict = Proved({"boxes": 0, "reason": "infeasible"})
        else:
            result.verdict = decide(result.nvc, result.nvc.box, cfg.prove_config())
    return result


def prove_file(path: str | Path, cfg: RunConfig | None = None) -> PipelineResult:
    return prove_result(process_file(path, cfg), cfg)


# ------------------------------------------------------------------ report


def _num(q) -> str:
    if _is_inf(q):
        return "-inf" if q < 0 else "inf"
    return infix_number(q)


def _point(point: dict | None) -> dict | None:
    if point is None:
        return None
    return {k: {"exact": _num(v), "approx": float(v)} for k, v in point.items()}


def verdict_dict(v: Verdict | None) -> dict | None:
    if v is None:
        return None
    out: dict = {"kind": v.kind, "stats": {k: (float(x) if isinstance(x, float) else x) for k, x in v.stats.items()}}
    if isinstance(v, PotentialCounterexample):
        out["point"] = _point(v.point)
        out["certified"] = v.certified
    elif isinstance(v, GaveUp):
        out["reason"] = v.reason
        out["point"] = _point(v.point)
        out["certified"] = False
    return out


def report_dict(result: PipelineResult, path: str | None = None) -> dict:
    """JSON-ready summary with a fixed set of top-level keys."""
    return {
        "input": path,
        "parse": result.parse.as_dict(),
        "timings": {k: round(v, 6) for k, v in result.timings.items()},
        "bounds": {k: [_num(iv.lo), _num(iv.hi)] for k, iv in sorted(result.box.items())},
        "infeasible": result.infeasible,
        "contexts": [
            {
                "id": c.ident,
                "delta": _num(c.bound) if c.bound is not None else None,
                "delta_approx": float(c.bound) if c.bound is not None else None,
                "source": c.source,
                "tool": c.tool,
            }
            for c in result.contexts
        ],
        "verdict": verdict_dict(result.verdict),
    }
