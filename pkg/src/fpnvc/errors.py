"""Exception hierarchy shared by all pipeline stages."""

from __future__ import annotations


class FpnvcError(Exception):
    """Base class for every error raised by the toolchain."""

    stage = "unknown"


class NonFiniteLiteral(FpnvcError, ValueError):
    stage = "frontend"


class UnbalancedParens(FpnvcError, ValueError):
    stage = "frontend"

    def __init__(self, line: int, col: int, msg: str = "unbalanced parentheses"):
        super().__init__(f"{msg} at {line}:{col}")
        self.line = line
        self.col = col


class InvalidToken(FpnvcError, ValueError):
    stage = "frontend"

    def __init__(self, line: int, col: int, token: str = ""):
        super().__init__(f"invalid token {token!r} at {line}:{col}")
        self.line = line
        self.col = col


class NoAssertions(FpnvcError):
    stage = "frontend"


class Unsupported(FpnvcError):
    """A symbol or construct outside the supported fragment."""

    stage = "frontend"

    def __init__(self, name: str, reason: str = "UnsupportedFunction"):
        super().__init__(f"{reason}: {name}")
        self.name = name
        self.reason = reason


class EmptyBox(FpnvcError):
    stage = "bounds"

    def __init__(self, name: str):
        super().__init__(f"bounds for {name} became empty")
        self.name = name


class UnboundedVariable(FpnvcError):
    stage = "fp-eliminate"

    def __init__(self, name: str):
        super().__init__(f"variable {name} has no finite bounds")
        self.name = name


class DenominatorMayVanish(FpnvcError):
    stage = "fp-eliminate"


class UnboundedContext(FpnvcError):
    stage = "fp-eliminate"


class UnparsableOutput(FpnvcError):
    stage = "backend"


class UnsupportedForBackend(FpnvcError):
    stage = "backend"

    def __init__(self, backend: str, feature: str):
        super().__init__(f"{backend} does not support {feature}")
        self.backend = backend
        self.feature = feature


class UncertifiedOperation(FpnvcError):
    """The error engine cannot bound an operation (discontinuity, overflow)."""

    stage = "fp-eliminate"
