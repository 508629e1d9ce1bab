import math
from fractions import Fraction

import gmpy2
import pytest
from hypothesis import given, strategies as st

from sudler.quadfield import (
    FieldMismatchError,
    QuadExt,
    qx_arith,
    qx_floor,
    qx_frac,
    qx_to_float,
    sqrt_to_mpfr,
)


def qx(p, q, r, D=12):
    return QuadExt(p, q, r, D)


# ----------------------------------------------------------------------
# construction and canonical form

def test_canonical_form():
    x = qx(2, 4, -6)
    assert x.as_tuple() == (-1, -2, 3, 12)
    assert x.r > 0


def test_rejects_square_discriminant():
    with pytest.raises(ValueError):
        QuadExt(1, 1, 1, 9)
    with pytest.raises(ValueError):
        QuadExt(1, 1, 1, 1)


def test_rejects_zero_denominator():
    with pytest.raises(ZeroDivisionError):
        QuadExt(1, 1, 0, 12)


def test_immutable():
    x = qx(1, 1, 1)
    with pytest.raises(AttributeError):
        x.p = 5


# ----------------------------------------------------------------------
# frozen arithmetic examples

def test_add_example():
    assert qx(1, 0, 1) + qx(0, 1, 1) == qx(1, 1, 1)


def test_mul_sqrt_is_integer():
    assert QuadExt.sqrt_of(12) * QuadExt.sqrt_of(12) == 12


def test_conjugate_product_is_unit():
    a = qx(4, 1, 2)
    b = qx(4, -1, 2)
    assert a * b == 1


def test_div_by_zero():
    with pytest.raises(ZeroDivisionError):
        qx(1, 1, 1) / qx(0, 0, 1)


def test_mismatched_discriminants():
    with pytest.raises(FieldMismatchError):
        qx(1, 1, 1, 12) + qx(1, 1, 1, 5)
    with pytest.raises(FieldMismatchError):
        qx_arith("mul", qx(1, 1, 1, 12), qx(1, 1, 1, 8))


def test_qx_arith_dispatch():
    a, b = qx(3, 1, 2), qx(1, 1, 3)
    assert qx_arith("add", a, b) == a + b
    assert qx_arith("sub", a, b) == a - b
    assert qx_arith("mul", a, b) == a * b
    assert qx_arith("div", a, b) == a / b
    with pytest.raises(ValueError):
        qx_arith("pow", a, b)


# ----------------------------------------------------------------------
# floor / frac, frozen values

def test_floor_examples():
    assert qx_floor(QuadExt.sqrt_of(12)) == 3
    assert qx_floor(qx(7, 0, 2)) == 3
    assert qx_floor(qx(-2, 1, 1)) == 1


def test_floor_negative():
    assert qx_floor(qx(-7, 0, 2)) == -4
    assert qx_floor(-QuadExt.sqrt_of(12)) == -4
    assert qx_floor(qx(2, -1, 1)) == -2  # 2 - 3.46..


def test_frac_example():
    f = qx_frac(QuadExt.sqrt_of(12))
    assert f.as_tuple() == (-3, 1, 1, 12)


# ----------------------------------------------------------------------
# float conversion, frozen values

def test_to_float_sqrt12():
    assert float(qx_to_float(QuadExt.sqrt_of(12), 53)) == 3.4641016151377544


def test_to_float_small_unit():
    assert float(qx_to_float(qx(4, -1, 2), 53)) == 0.2679491924311227


def test_to_float_rational():
    assert float(qx_to_float(qx(7, 0, 2), 53)) == 3.5


def test_to_float_heavy_cancellation():
    # p and q*sqrt(D) agree to 12 digits; the result must still be accurate
    big = 10 ** 12
    p = -int(gmpy2.isqrt(2 * big * big))
    x = QuadExt(p, big, 1, 2)
    got = x.to_float(53)
    with gmpy2.context(precision=220):
        want = p + big * sqrt_to_mpfr(2, 220)
    assert 0 < float(got) < 1
    assert float(got) == pytest.approx(float(want), rel=1e-14)


def test_to_float_precision_param():
    x = qx(1, 1, 3)
    v64 = x.to_float(64)
    assert v64.precision == 64


def test_sqrt_to_mpfr_reference():
    v = sqrt_to_mpfr(12, 53)
    assert float(v) == 3.4641016151377544


# ----------------------------------------------------------------------
# properties

small_ints = st.integers(min_value=-50, max_value=50)
denoms = st.integers(min_value=1, max_value=30)
discs = st.sampled_from([2, 3, 5, 12, 40, 60, 148])


@st.composite
def elements(draw, D=None):
    if D is None:
        D = draw(discs)
    return QuadExt(draw(small_ints), draw(small_ints), draw(denoms), D)


@given(elements(D=12), elements(D=12), elements(D=12))
def test_field_axioms(x, y, z):
    assert (x + y) + z == x + (y + z)
    assert (x * y) * z == x * (y * z)
    assert x * (y + z) == x * y + x * z
    assert x + y == y + x
    assert x * y == y * x
    assert x + 0 == x
    assert x * 1 == x
    assert x - x == QuadExt(0, 0, 1, 12)


@given(elements())
def test_inverse_roundtrip(x):
    if x:
        assert x * x.inverse() == 1
        assert x.inverse().inverse() == x


@given(elements())
def test_floor_frac_recompose(x):
    n = qx_floor(x)
    f = qx_frac(x)
    assert 0 <= f < 1
    assert f + n == x


@given(elements())
def test_neg_floor_relation(x):
    # floor(-x) = -floor(x) - 1 unless x is an integer
    if x.q == 0 and x.r == 1:
        assert qx_floor(-x) == -qx_floor(x)
    else:
        assert qx_floor(-x) == -qx_floor(x) - 1


@given(elements(D=40), elements(D=40))
def test_order_compatibility(x, y):
    if x < y:
        assert not y < x
        assert x + 1 < y + 1
        assert float(x.to_float(80)) <= float(y.to_float(80))


@given(elements())
def test_float_precisions_agree(x):
    """Values at p and 2p bits agree to p - 2 bits."""
    p = 60
    v1 = x.to_float(p)
    v2 = x.to_float(2 * p)
    if v2 == 0:
        assert v1 == 0
    else:
        with gmpy2.context(precision=4 * p):
            rel = abs(gmpy2.mpfr(v1) - gmpy2.mpfr(v2)) / abs(gmpy2.mpfr(v2))
        assert rel <= gmpy2.mpfr(2) ** (-(p - 2))


@given(elements())
def test_float_sign_matches_exact_sign(x):
    f = float(x.to_float(80))
    if x.sign() > 0:
        assert f > 0
    elif x.sign() < 0:
        assert f < 0
    else:
        assert f == 0


def test_unit_power_parity():
    # a*b = 1 here, so a^n * b^n = 1 for every n
    a, b = qx(4, 1, 2), qx(4, -1, 2)
    for n in range(1, 8):
        assert (a ** n) * (b ** n) == 1
    # and in a field with a*b = -1 the sign alternates
    a5 = QuadExt(1, 1, 2, 5)
    b5 = QuadExt(1, -1, 2, 5)
    for n in range(1, 8):
        assert (a5 ** n) * (b5 ** n) == (-1) ** n


def test_fraction_interop():
    x = qx(1, 1, 2)
    assert x + Fraction(1, 2) == qx(2, 1, 2)
    assert x * Fraction(2, 3) == qx(2, 2, 6)
