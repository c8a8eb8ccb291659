"""Prove every NVC in a corpus directory and print a verdict table.

    python scripts/run_corpus.py [corpus-dir] [--timeout S] [--json out.json]
"""

from __future__ import annotations

import argparse
import json
import time
from pathlib import Path

from fpnvc.config import RunConfig
from fpnvc.errors import FpnvcError
from fpnvc.pipeline import prove_file, report_dict

ROOT = Path(__file__).resolve().parent.parent


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("corpus", nargs="?", type=Path, default=ROOT / "corpus")
    ap.add_argument("--timeout", type=float, default=60.0)
    ap.add_argument("--json", type=Path)
    args = ap.parse_args()

    cfg = RunConfig(timeout=args.timeout)
    rows, reports = [], []
    for path in sorted(args.corpus.iterdir()):
        if path.suffix not in (".nvc", ".smt2"):
            continue
        start = time.perf_counter()
        try:
            result = prove_file(path, cfg)
        except FpnvcError as exc:
            rows.append((path.name, f"error ({exc.stage})", "", time.perf_counter() - start))
            continue
        v = result.verdict
        delta = max((c.bound for c in result.contexts), default=0)
        detail = getattr(v, "reason", "") or ("certified" if getattr(v, "certified", False) else "")
        rows.append((path.name, v.kind, detail, time.perf_counter() - start, float(delta)))
        reports.append(report_dict(result, str(path)))

    width = max(len(r[0]) for r in rows)
    print(f"{'file':<{width}}  {'verdict':<24} {'detail':<14} {'max delta':>10}  time")
    for name, kind, detail, secs, *delta in rows:
        d = f"{delta[0]:.3e}" if delta else "-"
        print(f"{name:<{width}}  {kind:<24} {detail:<14} {d:>10}  {secs:6.2f}s")
    if args.json:
        args.json.write_text(json.dumps(reports, indent=2) + "\n")


if __name__ == "__main__":
    main()
