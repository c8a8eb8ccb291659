import gmpy2
import numpy as np
import pytest
from fpnvc.errors import NonFiniteLiteral
from fpnvc.fpformat import (
    DOUBLE,
    SINGLE,
    FloatOverflow,
    RoundMode,
    decode_fp_literal,
    encode_fp_literal,
    is_representable,
    round_to_format,
    round_to_int,
)
from gmpy2 import mpq
from hypothesis import given
from hypothesis import strategies as st

IEEE = {SINGLE: gmpy2.ieee(32), DOUBLE: gmpy2.ieee(64)}


def mpfr_round(q: mpq, fmt) -> mpq:
    """Independent RNE rounding through MPFR with subnormal emulation."""
    with gmpy2.context(IEEE[fmt]):
        r = gmpy2.mpfr(q)
    if gmpy2.is_infinite(r):
        raise FloatOverflow(str(q))
    return mpq(r)


rationals = st.builds(
    lambda n, d, e: mpq(n, d) * mpq(2) ** e,
    st.integers(-(10**12), 10**12),
    st.integers(1, 10**12),
    st.integers(-160, 120),
)


@pytest.mark.parametrize("fmt", [SINGLE, DOUBLE])
def test_format_constants(fmt):
    assert fmt.eps == mpq(1, 2 ** fmt.precision)
    assert fmt.zeta == mpq(2) ** (fmt.emin - fmt.frac_bits) / 2
    assert is_representable(fmt.max_finite, fmt)
    assert fmt.min_finite == -fmt.max_finite
    smallest = 2 * fmt.zeta
    assert is_representable(smallest, fmt)
    assert round_to_format(smallest / 2, fmt) == 0  # tie to even


def _outcome(fn, *args):
    try:
        return fn(*args)
    except FloatOverflow:
        return "overflow"


@given(rationals)
def test_single_rounding_matches_mpfr(q):
    assert _outcome(round_to_format, q, SINGLE) == _outcome(mpfr_round, q, SINGLE)


@given(rationals)
def test_double_rounding_matches_mpfr(q):
    assert _outcome(round_to_format, q, DOUBLE) == _outcome(mpfr_round, q, DOUBLE)


@given(st.floats(width=32, allow_nan=False, allow_infinity=False), st.floats(width=32, allow_nan=False, allow_infinity=False))
def test_single_products_match_numpy(a, b):
    exact = mpq(a) * mpq(b)
    with np.errstate(all="ignore"):
        hw = np.float32(a) * np.float32(b)
    if not np.isfinite(hw):
        with pytest.raises(FloatOverflow):
            round_to_format(exact, SINGLE)
    else:
        assert round_to_format(exact, SINGLE) == mpq(float(hw))


@given(rationals)
def test_nearest_away_picks_a_nearest_neighbour(q):
    try:
        r = round_to_format(q, SINGLE, RoundMode.NEAREST_AWAY)
        e = round_to_format(q, SINGLE, RoundMode.NEAREST_EVEN)
    except FloatOverflow:
        return
    assert abs(r - q) == abs(e - q)
    if r != e:
        assert abs(r) > abs(e)


def test_overflow_and_half_ulp_boundary():
    top = SINGLE.max_finite
    half_ulp = mpq(2) ** (SINGLE.emax - SINGLE.frac_bits) / 2
    assert round_to_format(top + half_ulp / 2, SINGLE) == top
    with pytest.raises(FloatOverflow):
        round_to_format(top + half_ulp, SINGLE)


@pytest.mark.parametrize(
    "value,mode,expected",
    [(mpq(5, 2), RoundMode.NEAREST_EVEN, 2), (mpq(5, 2), RoundMode.NEAREST_AWAY, 3),
     (mpq(-5, 2), RoundMode.NEAREST_AWAY, -3), (mpq(-7, 2), RoundMode.NEAREST_EVEN, -4),
     (mpq(13, 10), RoundMode.NEAREST_EVEN, 1)],
)
def test_round_to_int(value, mode, expected):
    assert round_to_int(value, mode) == expected


def test_decode_known_patterns():
    assert decode_fp_literal("0", "01111111", "0" * 23) == 1
    assert decode_fp_literal("0", "10000001", "1" + "0" * 22) == 6
    assert decode_fp_literal("1", "00000000", "0" * 22 + "1") == -mpq(2) ** -149
    assert decode_fp_literal("0", "10000111", "11111111" + "0" * 15) == 511
    with pytest.raises(NonFiniteLiteral):
        decode_fp_literal("0", "11111111", "0" * 23)


@given(st.floats(width=32, allow_nan=False, allow_infinity=False))
def test_encode_decode_round_trip_single(x):
    bits = np.array([x], dtype=np.float32).view(np.uint32)[0]
    word = format(int(bits), "032b")
    expected = (word[0], word[1:9], word[9:])
    if x == 0:
        assert decode_fp_literal(*expected) == 0
        return
    assert encode_fp_literal(mpq(x), SINGLE) == expected
    assert decode_fp_literal(*expected) == mpq(x)
