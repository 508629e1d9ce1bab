"""Exact arithmetic in a real quadratic extension Q(sqrt(D)).

Elements are stored as (p + q*sqrt(D)) / r with integer p, q, r and a fixed
positive non-square integer D.  The representation is kept canonical:
r > 0 and gcd(p, q, r) = 1, so equality is plain coordinate equality.
All arithmetic, comparisons, floor and fractional part are exact; the only
rounding happens in ``to_float``, which converts to a binary float of a
requested precision with at most one unit of error in the last place.

Every element carries its D.  Operations never mix discriminants; combining
elements of different fields raises :class:`FieldMismatchError`.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd
from typing import Union

import gmpy2
from gmpy2 import isqrt, mpfr, mpz

__all__ = [
    "FieldMismatchError",
    "QuadExt",
    "qx_arith",
    "qx_floor",
    "qx_frac",
    "qx_to_float",
    "sqrt_to_mpfr",
]


class FieldMismatchError(ValueError):
    """Raised when two elements with different discriminants are combined."""


def _check_discriminant(D: int) -> None:
    if D < 2:
        raise ValueError(f"discriminant must be >= 2, got {D}")
    s = isqrt(D)
    if s * s == D:
        raise ValueError(f"discriminant must not be a perfect square, got {D}")


# Scaled integer square roots floor(sqrt(D) * 2**shift), keyed by (D, shift).
_SQRT_CACHE: dict[tuple[int, int], mpz] = {}


def _scaled_isqrt(D: int, shift: int) -> mpz:
    key = (D, shift)
    got = _SQRT_CACHE.get(key)
    if got is None:
        got = isqrt(mpz(D) << (2 * shift))
        if len(_SQRT_CACHE) > 256:
            _SQRT_CACHE.clear()
        _SQRT_CACHE[key] = got
    return got


def sqrt_to_mpfr(D: int, precision_bits: int) -> mpfr:
    """sqrt(D) as an mpfr with ``precision_bits`` bits, correct to < 1 ulp.

    The root is obtained by integer square-root refinement: an exact
    floor(sqrt(D * 4**shift)) with a few guard bits, then one rounding.
    """
    _check_discriminant(D)
    shift = precision_bits + 12
    s = _scaled_isqrt(D, shift)
    with gmpy2.context(precision=precision_bits):
        return mpfr(s) / (mpz(1) << shift)


def _sign_p_plus_q_sqrt(p, q, D) -> int:
    """Exact sign of p + q*sqrt(D)."""
    if q == 0:
        return (p > 0) - (p < 0)
    if p == 0:
        return 1 if q > 0 else -1
    if p > 0 and q > 0:
        return 1
    if p < 0 and q < 0:
        return -1
    # Opposite signs; the larger square decides.  p*p == q*q*D is impossible
    # because D is not a perfect square.
    if p * p > q * q * D:
        return 1 if p > 0 else -1
    return 1 if q > 0 else -1


Coercible = Union["QuadExt", int, Fraction]


class QuadExt:
    """An immutable element (p + q*sqrt(D)) / r of Q(sqrt(D))."""

    __slots__ = ("p", "q", "r", "D")

    def __init__(self, p: int, q: int, r: int, D: int, *, _canonical: bool = False):
        if _canonical:
            object.__setattr__(self, "p", p)
            object.__setattr__(self, "q", q)
            object.__setattr__(self, "r", r)
            object.__setattr__(self, "D", D)
            return
        _check_discriminant(D)
        p = int(p)
        q = int(q)
        r = int(r)
        if r == 0:
            raise ZeroDivisionError("denominator r must be nonzero")
        if r < 0:
            p, q, r = -p, -q, -r
        g = gcd(gcd(p, q), r)
        if g > 1:
            p //= g
            q //= g
            r //= g
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "D", int(D))

    def __setattr__(self, name, value):
        raise AttributeError("QuadExt is immutable")

    # ------------------------------------------------------------------
    # construction helpers

    @classmethod
    def from_int(cls, n: int, D: int) -> "QuadExt":
        return cls(n, 0, 1, D)

    @classmethod
    def from_fraction(cls, f: Fraction, D: int) -> "QuadExt":
        return cls(f.numerator, 0, f.denominator, D)

    @classmethod
    def sqrt_of(cls, D: int) -> "QuadExt":
        """The element sqrt(D) itself."""
        return cls(0, 1, 1, D)

    def _coerce(self, other: Coercible) -> "QuadExt":
        if isinstance(other, QuadExt):
            if other.D != self.D:
                raise FieldMismatchError(
                    f"cannot combine sqrt({self.D}) with sqrt({other.D})"
                )
            return other
        if isinstance(other, int):
            return QuadExt(other, 0, 1, self.D, _canonical=True)
        if isinstance(other, Fraction):
            return QuadExt.from_fraction(other, self.D)
        raise TypeError(f"cannot combine QuadExt with {type(other).__name__}")

    # ------------------------------------------------------------------
    # arithmetic

    def __add__(self, other: Coercible) -> "QuadExt":
        o = self._coerce(other)
        return QuadExt(
            self.p * o.r + o.p * self.r,
            self.q * o.r + o.q * self.r,
            self.r * o.r,
            self.D,
        )

    __radd__ = __add__

    def __neg__(self) -> "QuadExt":
        return QuadExt(-self.p, -self.q, self.r, self.D, _canonical=True)

    def __sub__(self, other: Coercible) -> "QuadExt":
        return self + (-self._coerce(other))

    def __rsub__(self, other: Coercible) -> "QuadExt":
        return (-self) + other

    def __mul__(self, other: Coercible) -> "QuadExt":
        o = self._coerce(other)
        return QuadExt(
            self.p * o.p + self.q * o.q * self.D,
            self.p * o.q + self.q * o.p,
            self.r * o.r,
            self.D,
        )

    __rmul__ = __mul__

    def inverse(self) -> "QuadExt":
        """1 / self, exact.  Raises ZeroDivisionError on zero."""
        if self.p == 0 and self.q == 0:
            raise ZeroDivisionError("division by zero QuadExt")
        # r / (p + q sqrt D) = r (p - q sqrt D) / (p^2 - q^2 D)
        norm = self.p * self.p - self.q * self.q * self.D
        return QuadExt(self.r * self.p, -self.r * self.q, norm, self.D)

    def __truediv__(self, other: Coercible) -> "QuadExt":
        return self * self._coerce(other).inverse()

    def __rtruediv__(self, other: Coercible) -> "QuadExt":
        return self.inverse() * other

    def __pow__(self, n: int) -> "QuadExt":
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.inverse() ** (-n)
        result = QuadExt(1, 0, 1, self.D, _canonical=True)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base if n > 1 else base
            n >>= 1
        return result

    def conjugate(self) -> "QuadExt":
        return QuadExt(self.p, -self.q, self.r, self.D, _canonical=True)

    # ------------------------------------------------------------------
    # sign, comparison, absolute value

    def sign(self) -> int:
        return _sign_p_plus_q_sqrt(self.p, self.q, self.D)

    def __abs__(self) -> "QuadExt":
        return -self if self.sign() < 0 else self

    def __bool__(self) -> bool:
        return not (self.p == 0 and self.q == 0)

    def __eq__(self, other) -> bool:
        if isinstance(other, QuadExt):
            return (
                self.D == other.D
                and self.p == other.p
                and self.q == other.q
                and self.r == other.r
            )
        if isinstance(other, int):
            return self.q == 0 and self.r == 1 and self.p == other
        if isinstance(other, Fraction):
            return self.q == 0 and Fraction(self.p, self.r) == other
        return NotImplemented

    def __hash__(self):
        if self.q == 0:
            return hash(Fraction(self.p, self.r))
        return hash((self.p, self.q, self.r, self.D))

    def _cmp_sign(self, other: Coercible) -> int:
        return (self - self._coerce(other)).sign()

    def __lt__(self, other) -> bool:
        return self._cmp_sign(other) < 0

    def __le__(self, other) -> bool:
        return self._cmp_sign(other) <= 0

    def __gt__(self, other) -> bool:
        return self._cmp_sign(other) > 0

    def __ge__(self, other) -> bool:
        return self._cmp_sign(other) >= 0

    # ------------------------------------------------------------------
    # floor, fractional part, conversion

    def __floor__(self) -> int:
        if self.q == 0:
            return self.p // self.r
        # q*sqrt(D) lies strictly between consecutive integers because
        # q^2 D is not a perfect square.
        s = isqrt(self.q * self.q * self.D)
        if self.q > 0:
            # p + q sqrt D in (p + s, p + s + 1); the open interval of width
            # 1/r contains no integer, so any point shares this floor.
            return int((self.p + s) // self.r)
        return int((self.p - s - 1) // self.r)

    def floor(self) -> int:
        return self.__floor__()

    def frac(self) -> "QuadExt":
        """self - floor(self), exactly; lies in [0, 1)."""
        n = self.__floor__()
        return QuadExt(self.p - n * self.r, self.q, self.r, self.D, _canonical=True)

    def to_float(self, precision_bits: int = 53) -> mpfr:
        """Round to a binary float with ``precision_bits`` bits, error < 1 ulp.

        Cancellation between p and q*sqrt(D) is detected and the working
        precision enlarged until the guard bits cover the loss.
        """
        if precision_bits < 2:
            raise ValueError("precision_bits must be at least 2")
        if self.q == 0:
            with gmpy2.context(precision=precision_bits):
                return mpfr(self.p) / self.r
        extra = 32
        while True:
            work = precision_bits + extra
            with gmpy2.context(precision=work):
                sd = sqrt_to_mpfr(self.D, work)
                num = self.p + self.q * sd
                if num != 0:
                    lost = int(max(abs(mpz(self.p)).bit_length(),
                                   (abs(mpz(self.q)) * isqrt(mpz(self.D))).bit_length() + 1)
                               ) - int(gmpy2.get_exp(num))
                else:
                    lost = extra + 1
                if lost + 8 <= extra:
                    with gmpy2.context(precision=precision_bits):
                        return num / self.r
                extra = max(2 * extra, lost + 40)

    def __float__(self) -> float:
        return float(self.to_float(53))

    # ------------------------------------------------------------------

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.p, self.q, self.r, self.D)

    def __repr__(self) -> str:
        return f"QuadExt({self.p}, {self.q}, {self.r}, D={self.D})"

    def __str__(self) -> str:
        if self.q == 0:
            return f"{self.p}/{self.r}" if self.r != 1 else str(self.p)
        core = f"{self.p} + {self.q}*sqrt({self.D})"
        return f"({core})/{self.r}" if self.r != 1 else f"({core})"


# ----------------------------------------------------------------------
# functional wrappers

_OPS = {
    "add": QuadExt.__add__,
    "sub": QuadExt.__sub__,
    "mul": QuadExt.__mul__,
    "div": QuadExt.__truediv__,
}


def qx_arith(op: str, a: QuadExt, b: Coercible) -> QuadExt:
    """Apply one of ``add, sub, mul, div`` to exact field elements."""
    try:
        fn = _OPS[op]
    except KeyError:
        raise ValueError(f"unknown operation {op!r}") from None
    return fn(a, b)


def qx_floor(x: QuadExt) -> int:
    return x.__floor__()


def qx_frac(x: QuadExt) -> QuadExt:
    return x.frac()


def qx_to_float(x: QuadExt, precision_bits: int = 53) -> mpfr:
    return x.to_float(precision_bits)
