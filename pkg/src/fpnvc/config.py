"""Run configuration and a small ``key = value`` file loader."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields
from fractions import Fraction
from pathlib import Path

from gmpy2 import mpq

from .interval import DEFAULT_PREC
from .prover import ProveConfig


@dataclass(frozen=True)
class RunConfig:
    prec: int = DEFAULT_PREC
    timeout: float = 60.0
    max_depth: int = 200
    min_box_width: mpq = mpq(1, 10**30)
    jobs: int = 1
    simplify_rounds: int = 50
    bounds_rounds: int = 20
    dreal_delta: mpq = mpq(1, 10**100)
    digit_limit: int = 18
    injected: dict = field(default_factory=dict)

    def prove_config(self) -> ProveConfig:
        return ProveConfig(
            max_depth=self.max_depth,
            timeout=self.timeout,
            min_box_width=self.min_box_width,
            prec=self.prec,
            jobs=self.jobs,
        )

    def replace(self, **changes) -> RunConfig:
        return dataclasses.replace(self, **{k: v for k, v in changes.items() if v is not None})


def _coerce(kind, raw: str):
    if kind is int or kind == "int":
        return int(raw)
    if kind is float or kind == "float":
        return float(raw)
    return mpq(Fraction(raw))


def parse_config_text(text: str, base: RunConfig | None = None) -> RunConfig:
    """Read ``key = value`` lines; ``#`` starts a comment, section headers
    and quotes are ignored.  ``inject.<ctx-id> = <decimal>`` entries add
    external error bounds."""
    base = base or RunConfig()
    types = {f.name: f.type for f in fields(RunConfig)}
    changes: dict = {}
    injected = dict(base.injected)
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line or line.startswith("["):
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        value = value.strip("\"'")
        key = key.replace("-", "_")
        if key.startswith("inject."):
            injected[key[len("inject."):]] = value
        elif key in types and key != "injected":
            changes[key] = _coerce(types[key], value)
        else:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
    return dataclasses.replace(base, injected=injected, **changes)


def load_config(path: str | Path, base: RunConfig | None = None) -> RunConfig:
    return parse_config_text(Path(path).read_text(), base)
