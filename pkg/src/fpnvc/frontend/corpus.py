"""Reader for the plain-text NVC format.

A file has a ``Bounds on variables:`` section with lines such as
``x (real) ∈ [-0.5, 0.5]`` and an ``NVC:`` section holding
``assert <s-expression>`` items.  Raw SMT commands (``declare-fun`` and the
like) may appear in the NVC section too.  ``--`` and ``;`` start comments.
"""

from __future__ import annotations

import re
from fractions import Fraction

from ..errors import InvalidToken
from ..ir import FLOAT32, FLOAT64, INT, NEG_INF, POS_INF, REAL, Interval, scalar
from .sexpr import Atom, List, parse_sexprs
from .smt import extract_nvc

SORTS = {"real": REAL, "int": INT, "float32": FLOAT32, "float64": FLOAT64}

_BOUND_LINE = re.compile(
    r"^\s*(?P<name>[^\s(]+)\s*\((?P<sort>\w+)\)\s*(?:∈|in)\s*"
    r"(?P<lopen>[\[(])\s*(?P<lo>[^,]+?)\s*,\s*(?P<hi>[^\])]+?)\s*[\])]\s*$"
)


def _strip_comment(line: str) -> str:
    for marker in ("--", ";"):
        k = line.find(marker)
        if k >= 0:
            line = line[:k]
    return line


def parse_endpoint(tok: str):
    tok = tok.strip().replace("−", "-").replace(" ", "")
    if tok in ("-inf", "-∞", "-oo"):
        return NEG_INF
    if tok in ("inf", "+inf", "∞", "+∞", "oo"):
        return POS_INF
    return scalar(Fraction(tok))


def parse_bounds_line(line: str):
    m = _BOUND_LINE.match(line)
    if not m:
        return None
    sort = SORTS.get(m["sort"].lower())
    if sort is None:
        raise InvalidToken(0, 0, m["sort"])
    return m["name"], sort, Interval(parse_endpoint(m["lo"]), parse_endpoint(m["hi"]))


def read_corpus_text(text: str):
    """Parse the text format into (ProcessedNVC, ParseReport)."""
    bounds: dict = {}
    sorts: dict = {}
    body: list[str] = []
    section = None
    for raw in text.splitlines():
        stripped = raw.strip()
        if stripped.lower().startswith("bounds on variables"):
            section = "bounds"
            continue
        if stripped.upper().startswith("NVC:"):
            section = "nvc"
            rest = stripped[4:]
            if rest.strip():
                body.append(rest)
            continue
        if section == "bounds":
            line = raw.split("--", 1)[0]
            if not line.strip():
                continue
            parsed = parse_bounds_line(line)
            if parsed is None:
                raise InvalidToken(0, 0, line.strip())
            name, sort, iv = parsed
            bounds[name] = iv
            sorts[name] = sort
        elif section == "nvc":
            body.append(_strip_comment(raw))

    forest = parse_sexprs("\n".join(body))
    commands = [List((Atom("declare-const"), Atom(name), Atom(_sort_token(s)))) for name, s in sorts.items()]
    items = list(forest)
    k = 0
    while k < len(items):
        item = items[k]
        if isinstance(item, Atom) and item.token.startswith("assert"):
            if k + 1 >= len(items):
                raise InvalidToken(item.line, item.col, item.token)
            commands.append(List((Atom("assert"), items[k + 1])))
            k += 2
            continue
        if isinstance(item, List):
            commands.append(item)
        else:
            raise InvalidToken(item.line, item.col, item.token)
        k += 1
    return extract_nvc(commands, preset_bounds=bounds)


def _sort_token(sort) -> str:
    return {"real": "Real", "int": "Int", "float32": "Float32", "float64": "Float64"}[str(sort)]
