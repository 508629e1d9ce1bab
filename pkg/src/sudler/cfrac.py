"""Convergents and spectral constants of purely periodic continued fractions.

A period (a_1, ..., a_l) of positive integers defines the purely periodic
continued fraction alpha = [0; a_1, ..., a_l, a_1, ...].  This module builds
the convergent tables, the associated quadratic field data, and the exact
constants that drive the limit behaviour of the sine products taken along
the subsequence q_{m*l + k} of denominators:

* convergent tables p_n, q_n with the shifted seed p_0 = 1, p_1 = 0,
  q_0 = 0, q_1 = 1 and recurrence x_{n+1} = a_n x_n + x_{n-1}, the digits
  repeating with period l;
* the trace constant c = q_{l+1} + p_l, the discriminant D = c^2 + 4*(-1)^(l-1)
  and the spectral pair a = (c + sqrt(D))/2, b = (c - sqrt(D))/2;
* alpha itself as the root in (0, 1) of q_l x^2 + (q_{l+1} - p_l) x - p_{l+1};
* the digit rotations tau_k and reversals sigma_k of the period, and the
  constants c_k, e_k controlling q_n alpha - p_n = e_k b^m along n = m*l + k.

Everything here is exact; values are QuadExt elements or integers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import log

from gmpy2 import isqrt, mpz

from .quadfield import QuadExt

__all__ = [
    "PeriodSpec",
    "SpectralData",
    "SpectralConsistencyError",
    "RtValue",
    "FracStream",
    "convergents",
    "permute",
    "spectral",
    "lambda_n",
    "u_of_t",
    "r_of_t",
    "nearest_int",
    "dist_to_nearest_int",
    "discrepancy_sum_bound",
]


class SpectralConsistencyError(RuntimeError):
    """Internal cross-validation of exact identities failed."""


@dataclass(frozen=True)
class PeriodSpec:
    """A purely periodic continued fraction period plus a subsequence offset.

    ``digits`` are the partial quotients of one period, each at least 1.
    ``k`` in 1..len(digits) selects the subsequence n = m*len + k along
    which limit constants are taken.
    """

    digits: tuple[int, ...]
    k: int = 1

    def __post_init__(self):
        if not self.digits:
            raise ValueError("period must have at least one digit")
        for d in self.digits:
            if not isinstance(d, int) or d < 1:
                raise ValueError(f"digits must be integers >= 1, got {self.digits}")
        if not 1 <= self.k <= len(self.digits):
            raise ValueError(
                f"k must lie in 1..{len(self.digits)}, got {self.k}"
            )

    @property
    def ell(self) -> int:
        return len(self.digits)

    @property
    def a_k(self) -> int:
        """The digit a_k selected by the offset k."""
        return self.digits[self.k - 1]

    @property
    def digit_max(self) -> int:
        return max(self.digits)

    @property
    def golden(self) -> bool:
        """True for the golden ratio period (1)."""
        return self.digits == (1,)

    def with_k(self, k: int) -> "PeriodSpec":
        return PeriodSpec(self.digits, k)


def convergents(period: PeriodSpec, n_max: int) -> tuple[list[int], list[int]]:
    """Convergent tables (p, q) for indices 0..n_max.

    Seeds p_0 = 1, p_1 = 0, q_0 = 0, q_1 = 1; the digit used at step n is
    a_n = digits[(n-1) mod l].  With this indexing p_n / q_n is the value of
    the finite continued fraction [0; a_1, ..., a_{n-1}] and q is strictly
    increasing from index 2 on.
    """
    if n_max < 2:
        raise ValueError(f"n_max must be at least 2, got {n_max}")
    digits = period.digits
    ell = len(digits)
    p = [1, 0]
    q = [0, 1]
    for n in range(1, n_max):
        a = digits[(n - 1) % ell]
        p.append(a * p[n] + p[n - 1])
        q.append(a * q[n] + q[n - 1])
    return p, q


def permute(period: PeriodSpec, kind: str, k: int) -> PeriodSpec:
    """Rotation tau_k or reversal sigma_k of the period digits.

    tau_k(a_1..a_l) = (a_{k+1}, ..., a_l, a_1, ..., a_k), defined for any k
    and periodic in k mod l; tau_0 is the identity.
    sigma_k(a_1..a_l) = (a_{k-1}, ..., a_1, a_l, ..., a_k), periodic in k
    mod l; sigma_1 is the full reversal.
    The offset k of the result is carried over unchanged from ``period``.
    """
    digits = period.digits
    ell = len(digits)
    if kind == "tau":
        j = k % ell
        new = digits[j:] + digits[:j]
    elif kind == "sigma":
        j = ((k - 1) % ell) + 1
        new = tuple(reversed(digits[:j - 1])) + tuple(reversed(digits[j - 1:]))
    else:
        raise ValueError(f"kind must be 'tau' or 'sigma', got {kind!r}")
    return PeriodSpec(new, period.k)


def _alpha_from_tables(p: list[int], q: list[int], ell: int, D: int) -> QuadExt:
    """The purely periodic value as the positive root of its fixed-point
    quadratic q_l x^2 + (q_{l+1} - p_l) x - p_{l+1} = 0."""
    return QuadExt(p[ell] - q[ell + 1], 1, 2 * q[ell], D)


@dataclass
class SpectralData:
    """Exact spectral constants attached to a period and offset k."""

    period: PeriodSpec
    c: int
    D: int
    a: QuadExt
    b: QuadExt
    alpha: QuadExt
    alpha_tau_k: QuadExt
    alpha_sigma_k: QuadExt
    c_k: QuadExt
    e_k: QuadExt
    abs_ckek: QuadExt
    inv_ckek: QuadExt
    A: QuadExt
    q_table: list[int]
    p_table: list[int]
    period_tau: PeriodSpec
    period_sigma: PeriodSpec
    q_ell_perm: int
    p_ell_tau: int
    p_ell_sigma: int
    _caches: dict = field(default_factory=dict, repr=False)

    @property
    def ell(self) -> int:
        return self.period.ell

    @property
    def k(self) -> int:
        return self.period.k

    @property
    def a_k(self) -> int:
        return self.period.a_k

    @property
    def even_period(self) -> bool:
        return self.period.ell % 2 == 0

    def cache(self, name: str, build):
        got = self._caches.get(name)
        if got is None:
            got = build()
            self._caches[name] = got
        return got


def _check(cond: bool, what: str) -> None:
    if not cond:
        raise SpectralConsistencyError(f"exact identity failed: {what}")


def spectral(period: PeriodSpec, n_max: int | None = None) -> SpectralData:
    """All spectral constants for ``period``, cross-validated exactly.

    The value alpha is computed twice, from the fixed-point quadratic of its
    own convergent table and as (p_l - b)/q_l; the same is done for the
    rotated and reversed periods.  Any disagreement raises
    :class:`SpectralConsistencyError`, since it can only come from an
    internal error, not from the input.
    """
    ell = period.ell
    k = period.k
    if n_max is None:
        n_max = 2 * ell + 2
    n_max = max(n_max, 2 * ell + 2)
    p, q = convergents(period, n_max)

    c = q[ell + 1] + p[ell]
    sign_l = 1 if ell % 2 == 1 else -1  # (-1)^(l-1)
    D = c * c + 4 * sign_l
    _check(D >= 2 and isqrt(D) ** 2 != D, "discriminant must not be square")
    _check(p[ell + 1] * q[ell] - p[ell] * q[ell + 1] == sign_l,
           "determinant of the period matrix")

    a = QuadExt(c, 1, 2, D)
    b = QuadExt(c, -1, 2, D)
    _check(a * b == QuadExt.from_int(-sign_l, D), "a*b = (-1)^l")

    alpha = _alpha_from_tables(p, q, ell, D)
    _check(0 < alpha < 1, "alpha in (0, 1)")
    _check(
        alpha * alpha * q[ell] + alpha * (q[ell + 1] - p[ell]) - p[ell + 1] == 0,
        "alpha solves its fixed-point quadratic",
    )
    _check(alpha == (QuadExt.from_int(p[ell], D) - b) / q[ell],
           "alpha = (p_l - b)/q_l")

    period_tau = permute(period, "tau", k)
    period_sigma = permute(period, "sigma", k)
    pt, qt = convergents(period_tau, ell + 1)
    ps, qs = convergents(period_sigma, ell + 1)
    _check(qt[ell + 1] + pt[ell] == c, "c invariant under rotation")
    _check(qs[ell + 1] + ps[ell] == c, "c invariant under reversal")
    alpha_tau = _alpha_from_tables(pt, qt, ell, D)
    alpha_sigma = _alpha_from_tables(ps, qs, ell, D)
    _check(alpha_tau == (QuadExt.from_int(pt[ell], D) - b) / qt[ell],
           "alpha_tau cross-validation")
    _check(alpha_sigma == (QuadExt.from_int(ps[ell], D) - b) / qs[ell],
           "alpha_sigma cross-validation")
    _check(qt[ell] == qs[ell], "q_l equal for rotation and reversal")
    _check(pt[ell] == qs[ell - 1] and ps[ell] == qt[ell - 1],
           "p_l of one permutation is q_{l-1} of the other")

    k0 = k % ell
    sqrt_d = QuadExt.sqrt_of(D)
    c_k = (QuadExt.from_int(q[ell + k0], D) - b * q[k0]) / sqrt_d
    e_inner = a * q[k0] - q[ell + k0]
    e_sign = 1 if (k0 - 1) % 2 == 0 else -1
    e_k = abs(e_inner) * Fraction(e_sign, q[ell])
    _check(c_k > 0, "c_k positive")

    abs_ckek = abs(c_k * e_k)
    _check(abs_ckek * (c - 2 * b) == QuadExt.from_int(qt[ell], D),
           "|c_k e_k| (c - 2b) = q_l of the rotated period")
    inv_ckek = abs_ckek.inverse()
    digit_k = period.a_k
    _check(digit_k < inv_ckek < digit_k + 2, "a_k < 1/|c_k e_k| < a_k + 2")
    _check(
        inv_ckek
        == digit_k
        + Fraction(ps[ell], qs[ell])
        + Fraction(pt[ell], qt[ell])
        - (2 * b) / qt[ell],
        "closed form of 1/|c_k e_k|",
    )

    return SpectralData(
        period=period,
        c=c,
        D=D,
        a=a,
        b=b,
        alpha=alpha,
        alpha_tau_k=alpha_tau,
        alpha_sigma_k=alpha_sigma,
        c_k=c_k,
        e_k=e_k,
        abs_ckek=abs_ckek,
        inv_ckek=inv_ckek,
        A=2 * inv_ckek,
        q_table=q,
        p_table=p,
        period_tau=period_tau,
        period_sigma=period_sigma,
        q_ell_perm=qt[ell],
        p_ell_tau=pt[ell],
        p_ell_sigma=ps[ell],
    )


def lambda_n(period: PeriodSpec, n: int) -> QuadExt:
    """The signed error Lambda_n = q_n alpha - p_n, exactly.

    Along n = m*l + k this equals e_{n mod l} b^m, alternates in sign as
    (-1)^(n+1), and contracts by |b| from one period to the next.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    ell = period.ell
    n_tab = max(n, 2 * ell + 2)
    p, q = convergents(period, n_tab)
    c = q[ell + 1] + p[ell]
    sign_l = 1 if ell % 2 == 1 else -1
    D = c * c + 4 * sign_l
    alpha = _alpha_from_tables(p, q, ell, D)
    return alpha * q[n] - p[n]


def u_of_t(spec: SpectralData, t: int) -> QuadExt:
    """The lattice point u_k(t) = 2 (t/|c_k e_k| - {t alpha_sigma_k} + 1/2).

    Writing u_k(t) = A t + delta_t with A = 2/|c_k e_k|, the offset
    delta_t = 1 - 2 {t alpha_sigma_k} lies in (-1, 1].
    """
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    frac = (spec.alpha_sigma_k * t).frac()
    return spec.A * t - 2 * frac + 1


def nearest_int(x: QuadExt) -> int:
    """The integer nearest to x (ties cannot occur for irrational x)."""
    return (x + Fraction(1, 2)).floor()


def dist_to_nearest_int(x: QuadExt) -> QuadExt:
    """The distance ||x|| from x to the nearest integer, exactly."""
    return abs(x - nearest_int(x))


@dataclass(frozen=True)
class RtValue:
    """The rotation remainder R_t with its two lattice distances."""

    R: QuadExt
    norm: QuadExt          # ||R_t||
    norm_shift: QuadExt    # ||R_t + b||


def r_of_t(spec: SpectralData, t: int) -> RtValue:
    """The remainder R_t built from the permuted-period convergents.

    R_t = {t p_l(tau)/q_l} + t (p_l(sigma)/q_l - alpha_sigma) - 2 b t / q_l
    with q_l = q_l(tau) = q_l(sigma).  The last two summands collapse to
    -b t / q_l, which keeps R_t irrational for every t >= 1.
    """
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    Q = spec.q_ell_perm
    frac_part = Fraction(t * spec.p_ell_tau % Q, Q)
    drift = (QuadExt.from_int(spec.p_ell_sigma, spec.D) / Q - spec.alpha_sigma_k) * t
    shift = (2 * spec.b * t) / Q
    R = QuadExt.from_fraction(frac_part, spec.D) + drift - shift
    return RtValue(
        R=R,
        norm=dist_to_nearest_int(R),
        norm_shift=dist_to_nearest_int(R + spec.b),
    )


def discrepancy_sum_bound(a_max: int, N: int) -> float:
    """Upper bound for |sum of (1 - 2{t alpha})| over any N consecutive t.

    Valid for alpha with partial quotients bounded by a_max; monotone in
    a_max, so digits equal to 1 may use the a_max = 2 value.
    """
    if N <= 0:
        return 0.0
    if N == 1:
        return 1.0
    a = max(a_max, 2)
    return min(float(N), log(N) * (a / (4 * log(a)) + 12) + a / 4 + 11.5)


class FracStream:
    """Exact iterator over the fractional parts {t alpha}, t = 1, 2, ...

    alpha must have the shape (P + sqrt(D))/R.  The state keeps
    {t alpha} = (Fp + t sqrt(D))/R with integers only; each step is one
    addition and one exact comparison.  Views of the current value are
    available as a correctly rounded float and as an exact QuadExt.
    """

    __slots__ = ("P", "R", "D", "t", "Fp", "_S64", "_R64")

    def __init__(self, alpha: QuadExt):
        if alpha.q != 1:
            raise ValueError("FracStream needs an element (P + sqrt(D))/R")
        if not 0 < alpha < 1:
            raise ValueError("FracStream needs alpha in (0, 1)")
        self.P = alpha.p
        self.R = alpha.r
        self.D = alpha.D
        self.t = 0
        self.Fp = 0
        self._S64 = int(isqrt(mpz(alpha.D) << 128))
        self._R64 = alpha.r << 64

    def step(self) -> None:
        """Advance to the next multiple; exact reduction mod 1."""
        self.t += 1
        Fp = self.Fp + self.P
        # value >= 1 iff t*sqrt(D) >= R - Fp; alpha < 1 so one subtraction
        # is enough
        lhs = self.R - Fp
        if lhs <= 0 or self.t * self.t * self.D >= lhs * lhs:
            Fp -= self.R
        self.Fp = Fp

    def frac_float(self) -> float:
        """Current {t alpha} as a float, correct to about 2 ulp."""
        return ((self.Fp << 64) + self.t * self._S64) / self._R64

    def frac_exact(self) -> QuadExt:
        return QuadExt(self.Fp, self.t, self.R, self.D)

    def delta_float(self) -> float:
        """Current offset delta_t = 1 - 2 {t alpha}."""
        return 1.0 - 2.0 * self.frac_float()
