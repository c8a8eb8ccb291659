"""Compare the computed error bound of the Taylor sine rounding context with
the largest error seen by evaluating x - x^3/6 in numpy float32."""

from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np

from fpnvc.pipeline import process_file

CORPUS = Path(__file__).resolve().parent.parent / "corpus"


def sampled_error(samples: int, lo: float = -0.5, hi: float = 0.5) -> tuple[float, float]:
    xs = np.linspace(lo, hi, samples).astype(np.float32)
    fl = xs - ((xs * xs) * xs) / np.float32(6)
    x64 = xs.astype(np.float64)
    err = np.abs(fl.astype(np.float64) - (x64 - x64**3 / 6))
    i = int(err.argmax())
    return float(err[i]), float(xs[i])


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=10_000_001)
    args = ap.parse_args()
    result = process_file(CORPUS / "taylor_sin.nvc")
    delta = max(c.bound for c in result.contexts)
    worst, at = sampled_error(args.samples)
    print(f"computed bound   {float(delta):.6e}")
    print(f"sampled maximum  {worst:.6e} at x = {at:.9g} ({args.samples} float32 points)")
    print(f"cushion ratio    {float(delta) / worst:.3f}")


if __name__ == "__main__":
    main()
