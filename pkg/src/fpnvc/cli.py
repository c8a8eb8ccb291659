"""Command-line entry point: ``fpnvc prove|process|bounds``.

Exit codes
  prove    0 proved, 10 potential counter-example, 20 gave up
  process  0 on success
  bounds   0 when every variable is bounded, 1 otherwise
  all      2 unreadable or unsupported input, 3 failure in a later stage
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import subprocess
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from gmpy2 import mpq

from .backends import export_dreal_smt2, export_metitarski_tptp, parse_prover_answer
from .config import RunConfig, load_config
from .errors import FpnvcError
from .fpelim import export_fptaylor
from .ir import Interval, _is_inf, render_scalar
from .pipeline import PipelineResult, process_file, prove_result, report_dict
from .printing import nvc_to_text
from .prover import GaveUp, PotentialCounterexample, Proved

EXIT_PROVED = 0
EXIT_CE = 10
EXIT_GAVE_UP = 20
EXIT_INPUT = 2
EXIT_STAGE = 3
EXIT_UNBOUNDED = 1

_INPUT_STAGES = {"frontend"}

log = logging.getLogger("fpnvc")


# ------------------------------------------------------------------ args


def _injection(text: str) -> tuple[str, str]:
    key, sep, value = text.partition("=")
    if not sep or not key or not value:
        raise argparse.ArgumentTypeError("expected ID=DECIMAL")
    try:
        mpq(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a number: {value}") from exc
    return key.strip(), value.strip()


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("inputs", nargs="+", type=Path, help=".smt2 or text-format NVC files")
    p.add_argument("--config", type=Path, help="key = value settings file")
    p.add_argument("--prec", type=int, help="working precision in bits")
    p.add_argument("--inject-bound", action="append", type=_injection, default=[], metavar="ID=DEC",
                   help="use an externally computed error bound for a context")
    p.add_argument("--report", type=Path, help="write a JSON report here")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fpnvc", description="Process and decide floating-point NVCs.")
    sub = parser.add_subparsers(dest="command", required=True)

    prove = sub.add_parser("prove", help="run the full pipeline and the built-in prover")
    _common(prove)
    prove.add_argument("--timeout", type=float, help="prover wall-clock budget per file (s)")
    prove.add_argument("--max-depth", type=int, help="bisection depth limit")
    prove.add_argument("--jobs", type=int, help="worker processes")
    prove.add_argument("--run-external", nargs=2, metavar=("TOOL", "PATH"),
                       help="also export for TOOL (dreal|metitarski) and run the binary at PATH")

    process = sub.add_parser("process", help="simplify, bound and remove rounding; no proving")
    _common(process)
    process.add_argument("-o", "--output", type=Path, help="write the exact NVC here (single input)")
    process.add_argument("--emit", action="append", default=[], metavar="FMT[=PATH]",
                         help="also export: dreal, metitarski or fptaylor")

    bounds = sub.add_parser("bounds", help="print derived variable bounds")
    _common(bounds)
    return parser


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    injected = dict(cfg.injected)
    injected.update(dict(args.inject_bound))
    return cfg.replace(
        prec=args.prec,
        timeout=getattr(args, "timeout", None),
        max_depth=getattr(args, "max_depth", None),
        jobs=getattr(args, "jobs", None),
        injected=injected,
    )


# ---------------------------------------------------------------- output


def _bound_text(iv: Interval) -> str:
    lo = "(-∞" if _is_inf(iv.lo) else f"[{render_scalar(iv.lo)}"
    hi = "∞)" if _is_inf(iv.hi) else f"{render_scalar(iv.hi)}]"
    return f"{lo}, {hi}"


def _print_timings(result: PipelineResult, out) -> None:
    parts = ", ".join(f"{k} {v:.3f}s" for k, v in result.timings.items())
    print(f"  stages: {parts}", file=out)


def _print_contexts(result: PipelineResult, out, prefix: str = "  ") -> None:
    for c in result.contexts:
        tool = f" ({c.tool})" if c.tool else ""
        print(f"{prefix}context {c.ident}  delta={render_scalar(c.bound)} ~ {float(c.bound):.6e}  {c.source}{tool}", file=out)


def _point_text(point: dict) -> str:
    return ", ".join(f"{k}={render_scalar(v)} (~{float(v):.9g})" for k, v in sorted(point.items()))


def _verdict_line(result: PipelineResult) -> str:
    v = result.verdict
    if isinstance(v, Proved):
        return "Proved"
    if isinstance(v, PotentialCounterexample):
        tag = "certified" if v.certified else "uncertified"
        return f"PotentialCounterexample ({tag}): {_point_text(v.point)}"
    assert isinstance(v, GaveUp)
    tail = f"; best point {_point_text(v.point)} (uncertified)" if v.point else ""
    return f"GaveUp ({v.reason}){tail}"


def _exit_for(result: PipelineResult) -> int:
    v = result.verdict
    if isinstance(v, Proved):
        return EXIT_PROVED
    if isinstance(v, PotentialCounterexample):
        return EXIT_CE
    return EXIT_GAVE_UP


def _error(path: Path, exc: Exception) -> tuple[int, str]:
    stage = getattr(exc, "stage", "frontend")
    code = EXIT_INPUT if stage in _INPUT_STAGES or isinstance(exc, OSError) else EXIT_STAGE
    return code, f"{path}: error in {stage}: {exc}"


def _error_exit(path: Path, exc: Exception) -> int:
    code, message = _error(path, exc)
    print(message, file=sys.stderr)
    return code


def _write_report(path: Path | None, reports: list[dict]) -> None:
    if path is None:
        return
    payload = reports[0] if len(reports) == 1 else {"files": reports}
    path.write_text(json.dumps(payload, indent=2) + "\n")


# ---------------------------------------------------------------- commands


def _run_external(result: PipelineResult, tool: str, binary: str, cfg: RunConfig) -> dict:
    tool = tool.lower()
    if tool == "dreal":
        text, suffix = export_dreal_smt2(result.nvc, delta=cfg.dreal_delta, digit_limit=cfg.digit_limit), ".smt2"
    else:
        text, suffix = export_metitarski_tptp(result.nvc), ".tptp"
    with tempfile.TemporaryDirectory() as tmp:
        script = Path(tmp) / f"nvc{suffix}"
        script.write_text(text)
        proc = subprocess.run([binary, str(script)], capture_output=True, text=True, timeout=cfg.timeout)
    answer = parse_prover_answer(tool, proc.stdout)
    return {"tool": tool, "kind": answer.kind, "delta": answer.delta,
            "model": {k: render_scalar(v) for k, v in (answer.model or {}).items()}}


def _prove_one(path: Path, cfg: RunConfig, external) -> tuple[int, dict | None, str]:
    """Run one file; returns (exit code, report, printable summary)."""
    try:
        result = prove_result(process_file(path, cfg), cfg)
    except (FpnvcError, OSError) as exc:
        code, message = _error(path, exc)
        return code, None, message
    report = report_dict(result, str(path))
    if external:
        try:
            report["external"] = _run_external(result, *external, cfg)
        except (FpnvcError, OSError, subprocess.SubprocessError) as exc:
            report["external"] = {"error": str(exc)}
    buf = io.StringIO()
    print(f"{path}: {_verdict_line(result)}", file=buf)
    _print_contexts(result, buf)
    _print_timings(result, buf)
    return _exit_for(result), report, buf.getvalue()


def _combine(codes: list[int]) -> int:
    for code in (EXIT_INPUT, EXIT_STAGE, EXIT_CE, EXIT_GAVE_UP):
        if code in codes:
            return code
    return EXIT_PROVED


def cmd_prove(args) -> int:
    cfg = _config(args)
    paths = args.inputs
    if len(paths) > 1 and cfg.jobs > 1:
        # one pipeline per file; the prover itself then runs serially
        inner = cfg.replace(jobs=1)
        with ProcessPoolExecutor(min(cfg.jobs, len(paths))) as pool:
            outcomes = list(pool.map(_prove_one, paths, [inner] * len(paths), [args.run_external] * len(paths)))
    else:
        outcomes = [_prove_one(p, cfg, args.run_external) for p in paths]
    reports = []
    codes = []
    for code, report, text in outcomes:
        stream = sys.stdout if report is not None else sys.stderr
        print(text.rstrip("\n"), file=stream)
        codes.append(code)
        if report is not None:
            reports.append(report)
    _write_report(args.report, reports)
    return _combine(codes)


def _emit(result: PipelineResult, spec: str, cfg: RunConfig) -> tuple[str, Path | None]:
    fmt, _, target = spec.partition("=")
    fmt = fmt.strip().lower()
    if fmt == "dreal":
        text = export_dreal_smt2(result.nvc, delta=cfg.dreal_delta, digit_limit=cfg.digit_limit, prec=cfg.prec)
    elif fmt == "metitarski":
        text = export_metitarski_tptp(result.nvc)
    elif fmt == "fptaylor":
        text = export_fptaylor(result.contexts, result.fp_box)
    else:
        raise ValueError(f"unknown export format {fmt!r}")
    return text, Path(target) if target else None


def cmd_process(args) -> int:
    cfg = _config(args)
    if args.output and len(args.inputs) > 1:
        print("-o needs a single input", file=sys.stderr)
        return EXIT_INPUT
    codes, reports = [], []
    for path in args.inputs:
        try:
            result = process_file(path, cfg)
            header = [f"-- {path}"]
            header += [f"-- context {c.ident} delta={render_scalar(c.bound)} source={c.source}" for c in result.contexts]
            text = "\n".join(header) + "\n" + nvc_to_text(result.nvc)
            if args.output:
                args.output.write_text(text)
            else:
                sys.stdout.write(text)
            for spec in args.emit:
                body, target = _emit(result, spec, cfg)
                if target:
                    target.write_text(body)
                else:
                    sys.stdout.write(f"\n-- {spec.split('=')[0]} export\n{body}")
            if args.output:
                _print_contexts(result, sys.stderr, prefix="")
            reports.append(report_dict(result, str(path)))
            codes.append(0)
        except (FpnvcError, OSError, ValueError) as exc:
            codes.append(_error_exit(path, exc))
    _write_report(args.report, reports)
    return max(codes) if codes else 0


def cmd_bounds(args) -> int:
    cfg = _config(args)
    code = 0
    reports = []
    for path in args.inputs:
        try:
            result = process_file(path, cfg)
        except (FpnvcError, OSError) as exc:
            code = max(code, _error_exit(path, exc))
            continue
        reports.append(report_dict(result, str(path)))
        if len(args.inputs) > 1:
            print(f"{path}:")
        if result.infeasible:
            print(f"  assertions are contradictory over the declared ranges ({result.empty_box or 'pruned'})")
            continue
        for v in sorted(result.nvc.vars, key=lambda v: v.name):
            iv = result.box[v.name]
            print(f"{v.name} ({v.sort}) ∈ {_bound_text(iv)}")
            if not iv.is_finite:
                log.warning("%s: %s is not bounded on both sides", path, v.name)
                code = max(code, EXIT_UNBOUNDED)
    _write_report(args.report, reports)
    return code


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.config and not args.config.exists():
            print(f"config file not found: {args.config}", file=sys.stderr)
            return EXIT_INPUT
        handler = {"prove": cmd_prove, "process": cmd_process, "bounds": cmd_bounds}[args.command]
        return handler(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
