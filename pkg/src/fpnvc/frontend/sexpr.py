"""S-expression reader and printer for the SMT-LIB surface syntax."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import InvalidToken, UnbalancedParens


@dataclass(frozen=True)
class Atom:
    token: str
    line: int = 0
    col: int = 0

    def __eq__(self, other):
        return isinstance(other, Atom) and other.token == self.token

    def __hash__(self):
        return hash(self.token)

    def __repr__(self):
        return f"Atom({self.token!r})"


@dataclass(frozen=True)
class List:
    children: tuple
    line: int = 0
    col: int = 0

    def __eq__(self, other):
        return isinstance(other, List) and other.children == self.children

    def __hash__(self):
        return hash(self.children)

    def __len__(self):
        return len(self.children)

    def __getitem__(self, i):
        return self.children[i]

    def __iter__(self):
        return iter(self.children)

    def __repr__(self):
        return f"List{list(self.children)!r}"


SExpr = Atom | List

_DELIMS = set("()\";|") | set(" \t\r\n\f\v")


def parse_sexprs(text: bytes | str) -> list[SExpr]:
    """Parse a whole file into a forest of s-expressions.

    ``;`` comments run to end of line; ``"..."`` strings (with SMT-LIB's
    doubled-quote escape) and ``|quoted symbols|`` become single atoms.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    forest: list = []
    stack: list[tuple[list, int, int]] = []
    current = forest
    i, n = 0, len(text)
    line, col = 1, 1

    def advance(k: int):
        nonlocal i, line, col
        for ch in text[i : i + k]:
            if ch == "\n":
                line += 1
                col = 1
            else:
                col += 1
        i += k

    while i < n:
        ch = text[i]
        if ch in " \t\r\n\f\v":
            advance(1)
        elif ch == ";":
            j = text.find("\n", i)
            advance((n if j < 0 else j) - i)
        elif ch == "(":
            stack.append((current, line, col))
            current = []
            advance(1)
        elif ch == ")":
            if not stack:
                raise UnbalancedParens(line, col, "unexpected ')'")
            parent, l0, c0 = stack.pop()
            parent.append(List(tuple(current), l0, c0))
            current = parent
            advance(1)
        elif ch == '"':
            j = i + 1
            while True:
                j = text.find('"', j)
                if j < 0:
                    raise InvalidToken(line, col, text[i : i + 20])
                if j + 1 < n and text[j + 1] == '"':
                    j += 2
                    continue
                break
            current.append(Atom(text[i : j + 1], line, col))
            advance(j + 1 - i)
        elif ch == "|":
            j = text.find("|", i + 1)
            if j < 0:
                raise InvalidToken(line, col, text[i : i + 20])
            current.append(Atom(text[i : j + 1], line, col))
            advance(j + 1 - i)
        else:
            j = i
            while j < n and text[j] not in _DELIMS:
                j += 1
            tok = text[i:j]
            if not tok.isprintable():
                raise InvalidToken(line, col, tok)
            current.append(Atom(tok, line, col))
            advance(j - i)
    if stack:
        _, l0, c0 = stack[-1]
        raise UnbalancedParens(l0, c0, "unclosed '('")
    return forest


def to_text(s: SExpr) -> str:
    if isinstance(s, Atom):
        return s.token
    return "(" + " ".join(to_text(c) for c in s.children) + ")"


def parse_one(text: str) -> SExpr:
    forest = parse_sexprs(text)
    if len(forest) != 1:
        raise InvalidToken(1, 1, text[:20])
    return forest[0]
