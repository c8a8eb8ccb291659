"""Search the mutated Taylor sine NVCs for counter-examples and classify each
point as actual (holds under exact IEEE rounding at 512 bits) or potential
(holds only for the rounding-free weakened form)."""

from __future__ import annotations

import argparse
from pathlib import Path

from fpnvc.pipeline import prove_file
from fpnvc.prover import PotentialCounterexample, certify_point

CORPUS = Path(__file__).resolve().parent.parent / "corpus"
DEFAULT = ["taylor_sin_plus.nvc", "taylor_sin_swap.nvc", "taylor_sin_tight.nvc"]


def classify(path: Path, prec: int) -> str:
    result = prove_file(path)
    v = result.verdict
    if not isinstance(v, PotentialCounterexample):
        return f"{v.kind} (no counter-example)"
    point = ", ".join(f"{k}={float(q):.9g}" for k, q in v.point.items())
    weak = certify_point(result.nvc, v.point, prec)
    actual = certify_point(result.source, v.point, prec)
    label = "actual" if actual else "potential" if weak else "spurious"
    return f"{label:<9} at {point}"


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("files", nargs="*", type=Path)
    ap.add_argument("--prec", type=int, default=512)
    args = ap.parse_args()
    for path in args.files or [CORPUS / name for name in DEFAULT]:
        print(f"{path.name:<26} {classify(path, args.prec)}")


if __name__ == "__main__":
    main()
