"""Readers that turn SMT-LIB files and the plain-text NVC format into IR."""

from __future__ import annotations

from pathlib import Path

from .corpus import read_corpus_text
from .sexpr import Atom, List, parse_sexprs
from .smt import MixedPrecision, ParseReport, extract_nvc, infer_fp_format, translate_assertion


def read_smt2_text(text: str | bytes):
    return extract_nvc(parse_sexprs(text))


def load_nvc(path: str | Path):
    """Read a file by extension: ``.smt2`` via the SMT reader, anything
    else as the plain-text format.  Returns (ProcessedNVC, ParseReport)."""
    path = Path(path)
    data = path.read_bytes()
    if path.suffix in (".smt2", ".smt"):
        return read_smt2_text(data)
    return read_corpus_text(data.decode("utf-8"))


__all__ = [
    "Atom",
    "List",
    "MixedPrecision",
    "ParseReport",
    "extract_nvc",
    "infer_fp_format",
    "load_nvc",
    "parse_sexprs",
    "read_corpus_text",
    "read_smt2_text",
    "translate_assertion",
]
