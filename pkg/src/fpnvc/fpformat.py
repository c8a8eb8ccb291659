"""IEEE-754 binary32/binary64 formats with exact rational rounding.

All values are ``gmpy2.mpq``; nothing here touches hardware floats.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from gmpy2 import mpq

from .errors import NonFiniteLiteral


class RoundMode(enum.Enum):
    """Round-to-nearest tie rules (also used for rounding to integers)."""

    NEAREST_EVEN = "RNE"
    NEAREST_AWAY = "RNA"


IntRoundMode = RoundMode


@dataclass(frozen=True)
class FloatFormat:
    name: str
    exp_bits: int
    frac_bits: int
    eps: mpq
    zeta: mpq
    max_finite: mpq
    min_finite: mpq

    @property
    def precision(self) -> int:
        return self.frac_bits + 1

    @property
    def bias(self) -> int:
        return (1 << (self.exp_bits - 1)) - 1

    @property
    def emin(self) -> int:
        return 1 - self.bias

    @property
    def emax(self) -> int:
        return self.bias

    @property
    def rnd_name(self) -> str:
        return "rnd32" if self.name == "Single" else "rnd64"

    def __repr__(self) -> str:
        return self.name


def _make(name: str, exp_bits: int, frac_bits: int) -> FloatFormat:
    p = frac_bits + 1
    bias = (1 << (exp_bits - 1)) - 1
    largest = (2 - mpq(1, 2**frac_bits)) * mpq(2) ** bias
    return FloatFormat(
        name=name,
        exp_bits=exp_bits,
        frac_bits=frac_bits,
        eps=mpq(1, 2**p),
        # half of the smallest subnormal
        zeta=mpq(1, 2 ** (bias - 1 + frac_bits + 1)),
        max_finite=largest,
        min_finite=-largest,
    )


SINGLE = _make("Single", 8, 23)
DOUBLE = _make("Double", 11, 52)
FORMATS = {"Single": SINGLE, "Double": DOUBLE}


class FloatOverflow(ArithmeticError):
    pass


def _round_ratio(num: int, den: int, mode: RoundMode) -> int:
    """Round the non-negative rational num/den to an integer."""
    q, r = divmod(num, den)
    twice = 2 * r
    if twice < den:
        return q
    if twice > den:
        return q + 1
    if mode is RoundMode.NEAREST_AWAY:
        return q + 1
    return q + (q & 1)


def round_to_int(value, mode: RoundMode) -> mpq:
    """Round a rational to the nearest integer with the given tie rule."""
    v = mpq(value)
    n = _round_ratio(abs(v.numerator), v.denominator, mode)
    return mpq(-n if v < 0 else n)


def round_to_format(value, fmt: FloatFormat, mode: RoundMode = RoundMode.NEAREST_EVEN) -> mpq:
    """Correctly round a rational into ``fmt`` (subnormals included).

    Raises FloatOverflow when the rounded magnitude exceeds the largest
    finite number of the format.
    """
    v = mpq(value)
    if v == 0:
        return mpq(0)
    num, den = abs(v.numerator), v.denominator
    e = num.bit_length() - den.bit_length()
    # fix e so that 2**e <= num/den < 2**(e+1)
    if (num << max(0, -e)) < (den << max(0, e)):
        e -= 1
    e = max(e, fmt.emin)
    shift = e - fmt.frac_bits  # quantum = 2**shift
    if shift >= 0:
        n = _round_ratio(num, den << shift, mode)
        mag = mpq(n << shift)
    else:
        n = _round_ratio(num << -shift, den, mode)
        mag = mpq(n, 1 << -shift)
    if mag > fmt.max_finite:
        raise FloatOverflow(f"{v} overflows {fmt.name}")
    return -mag if v < 0 else mag


def is_representable(value, fmt: FloatFormat) -> bool:
    v = mpq(value)
    try:
        return round_to_format(v, fmt) == v
    except FloatOverflow:
        return False


def format_for_widths(exp_bits: int, frac_bits: int) -> FloatFormat:
    for fmt in FORMATS.values():
        if fmt.exp_bits == exp_bits and fmt.frac_bits == frac_bits:
            return fmt
    raise ValueError(f"unsupported float format ({exp_bits}, {frac_bits})")


def decode_fp_literal(sign: str, exponent: str, mantissa: str) -> mpq:
    """Exact value of an IEEE-754 bit pattern given as '0'/'1' strings."""
    if len(sign) != 1:
        raise ValueError("sign must be a single bit")
    fmt = format_for_widths(len(exponent), len(mantissa))
    e = int(exponent, 2)
    m = int(mantissa, 2)
    if e == (1 << fmt.exp_bits) - 1:
        raise NonFiniteLiteral("infinity or NaN bit pattern")
    if e == 0:
        mag = mpq(m) * mpq(2) ** (fmt.emin - fmt.frac_bits)
    else:
        mag = mpq((1 << fmt.frac_bits) | m) * mpq(2) ** (e - fmt.bias - fmt.frac_bits)
    return -mag if sign == "1" else mag


def encode_fp_literal(value, fmt: FloatFormat, negative_zero: bool = False) -> tuple[str, str, str]:
    """Inverse of :func:`decode_fp_literal` for representable values."""
    v = mpq(value)
    if not is_representable(v, fmt):
        raise ValueError(f"{v} is not representable in {fmt.name}")
    sign = "1" if v < 0 or (v == 0 and negative_zero) else "0"
    a = abs(v)
    if a == 0:
        return sign, "0" * fmt.exp_bits, "0" * fmt.frac_bits
    num, den = a.numerator, a.denominator
    e = num.bit_length() - den.bit_length()
    if (num << max(0, -e)) < (den << max(0, e)):
        e -= 1
    if e < fmt.emin:
        m = a / mpq(2) ** (fmt.emin - fmt.frac_bits)
        biased = 0
    else:
        m = a / mpq(2) ** (e - fmt.frac_bits) - (1 << fmt.frac_bits)
        biased = e + fmt.bias
    assert m.denominator == 1
    return (
        sign,
        format(biased, f"0{fmt.exp_bits}b"),
        format(int(m), f"0{fmt.frac_bits}b"),
    )
