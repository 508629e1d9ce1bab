"""Envelopes and certified upper bounds for the limit functions.

Three layers live here.  ``sandwich`` encloses a single value G_k(alpha, x)
between explicit lower and upper envelopes built from the distance of x to
the lattice of zeros.  ``ck_upper`` turns the same envelope calculus into a
closed-form upper bound for the constant C_k = G_k(alpha, 0) that depends
only on the digit a_k, the trace constant c and the denominator q_l of the
reversed period.  ``scan`` sweeps all periods of a given length and digit
range, reports every C_k numerically, and marks the periods whose constant
is certified below one by the closed-form bound alone.

The envelope exponents ``f_of`` and ``g_of`` are decreasing in a, so every
bound is monotone in the digit and the certified verdicts are stable under
digit growth.  All closed-form bounds are evaluated in log-space to keep
them finite for very large trace constants.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from itertools import product as _iter_product

import gmpy2
from gmpy2 import mpfr

from .cfrac import PeriodSpec, SpectralData, spectral, u_of_t
from .limitfn import DEFAULT_TOL, c_k_closed, g_of_x

MIN_DIGIT_CERTIFIED = 6

# Smallest digit a_k for which each reduced single-variable bound drops
# below one: the odd-length form at 22, the even-length form with q_l = 1
# at 21, and the even-length form with q_l >= 2 at 23.
THRESHOLD_ODD = 22
THRESHOLD_EVEN_Q1 = 21
THRESHOLD_EVEN_Q2 = 23


def f_of(a: float) -> float:
    """Envelope exponent 13.7/a + 1/(20 log a) + 1/100 + 2/a^2.

    Controls the two-sided envelope constants away from the first lattice
    cell.  Decreasing for a >= 2; rejects a <= 1 where the log term blows
    up.
    """
    if a <= 1:
        raise ValueError(f"envelope exponent needs a > 1, got {a}")
    return 13.7 / a + 1.0 / (20.0 * math.log(a)) + 0.01 + 2.0 / (a * a)


def g_of(a: float) -> float:
    """Sharper envelope exponent 3.3/a + 1/(80 log a) + 1/400 + 2/a^2.

    Valid for the first lattice cell (|x| <= 3A/2) and for the q_l = 1
    closed-form bound; smaller than ``f_of`` for every a > 1.
    """
    if a <= 1:
        raise ValueError(f"envelope exponent needs a > 1, got {a}")
    return 3.3 / a + 1.0 / (80.0 * math.log(a)) + 0.0025 + 2.0 / (a * a)


@dataclass(frozen=True)
class SandwichResult:
    """Two-sided envelope around one value of a limit function.

    ``lower <= abs(g_value) <= upper`` is checked at construction time.
    ``m_of_x`` is the index of the multiple of A nearest to |x| (at least
    1), ``dist_to_U`` the distance from |x| to the zero lattice, and
    ``branch`` records which envelope regime applied: ``small_x`` for
    |x| < A/2, ``m_equals_1`` for the first cell, ``large_x`` beyond it.
    """

    x: float
    m_of_x: int
    dist_to_U: float
    lower: float
    upper: float
    g_value: float
    branch: str


def _dist_to_lattice(spec: SpectralData, x_abs: mpfr, prec: int) -> mpfr:
    """Distance from x_abs >= 0 to the set {u(t) : t >= 1}.

    Consecutive lattice points are A t + delta_t with |delta_t| <= 1, so
    the minimiser lies within a few steps of round((x + 1)/A).
    """
    A_f = spec.A.to_float(prec)
    t_star = int(gmpy2.rint((x_abs + 1) / A_f))
    best = None
    for t in range(max(1, t_star - 4), t_star + 5):
        d = abs(x_abs - u_of_t(spec, t).to_float(prec))
        if best is None or d < best:
            best = d
    return best


def sandwich(spec: SpectralData, x, tol: float = DEFAULT_TOL,
             precision_bits: int = 128) -> SandwichResult:
    """Enclose G_k(alpha, x) between explicit envelopes and verify it.

    Requires k to select a largest digit of the period and a_k >= 6; the
    envelope constants are only proven in that range, so other inputs are
    refused rather than silently given an invalid certificate.  Raises
    ``ArithmeticError`` if the numerically evaluated value escapes the
    envelope by more than its own error budget.
    """
    digits = spec.period.digits
    if spec.a_k != max(digits):
        raise ValueError(
            f"envelopes need a maximal digit: a_k = {spec.a_k}, "
            f"period {digits}"
        )
    if spec.a_k < MIN_DIGIT_CERTIFIED:
        raise ValueError(
            f"envelopes are proven for a_k >= {MIN_DIGIT_CERTIFIED}, "
            f"got a_k = {spec.a_k}"
        )
    prec = precision_bits
    with gmpy2.context(precision=prec):
        if isinstance(x, Fraction):
            x_abs = abs(mpfr(gmpy2.mpq(x.numerator, x.denominator)))
        else:
            x_abs = abs(mpfr(x))
        A_f = spec.A.to_float(prec)
        dist = _dist_to_lattice(spec, x_abs, prec)
        m = max(1, int(gmpy2.rint(x_abs / A_f)))
        a_k = spec.a_k
        if x_abs < A_f / 2:
            branch = "small_x"
            lower = (2.0 / math.pi) * math.exp(-g_of(a_k))
            upper = 1.0
        else:
            if m == 1:
                branch = "m_equals_1"
                expo = g_of(a_k)
            else:
                branch = "large_x"
                expo = f_of(a_k)
            Am = A_f * m
            shape = (1 - 2 / (3 * Am)) * (1 - 1 / Am) ** 2
            lower = float(
                (2.0 / math.pi) * math.exp(-expo) * shape * dist / x_abs
            )
            upper = float((14.0 / 9.0) * A_f * math.exp(expo) / x_abs)
        lower = max(0.0, lower)
        res = g_of_x(spec, x, tol=tol, precision_bits=prec)
        g_abs = abs(res.value)
        slack = 4.0 * res.corrected_error + 1e-12 * (1.0 + upper)
        if g_abs + slack < lower or g_abs - slack > upper:
            raise ArithmeticError(
                f"envelope violated at x = {x}: "
                f"{lower} <= {g_abs} <= {upper} fails beyond slack {slack}"
            )
        return SandwichResult(
            x=float(x),
            m_of_x=m,
            dist_to_U=float(dist),
            lower=lower,
            upper=float(upper),
            g_value=res.value,
            branch=branch,
        )


def _require_certifiable(spec: SpectralData) -> None:
    digits = spec.period.digits
    if spec.a_k != max(digits):
        raise ValueError(
            f"closed-form bound needs a maximal digit: a_k = {spec.a_k}, "
            f"period {digits}"
        )
    if spec.a_k < MIN_DIGIT_CERTIFIED:
        raise ValueError(
            f"closed-form bound is proven for a_k >= {MIN_DIGIT_CERTIFIED}, "
            f"got a_k = {spec.a_k}"
        )


def ck_upper(spec: SpectralData) -> float:
    """Closed-form upper bound for C_k from (a_k, c, q_l) alone.

    k must select a largest digit with a_k >= 6.  For even period length
    the raw bound controls C_k^((c-2)/c) and is inverted here, with the
    q_l = 1 case (only possible for period length 2 with a digit equal to
    1) taking a separate sharper form; for odd length the bound applies to
    C_k directly.  Evaluation is in log-space so very large trace
    constants stay finite.
    """
    _require_certifiable(spec)
    a_k = spec.a_k
    c = spec.c
    q_l = spec.q_ell_perm
    if spec.even_period:
        if q_l == 1:
            log_b = (
                math.log(math.pi) - math.log(a_k) + 1.0 + g_of(a_k)
                + (math.log(6.2) + 4.0 * math.log(a_k + 2)) / (a_k + 2)
            )
        else:
            log_b = (
                math.log(math.pi) - math.log(2 * a_k) + 1.0 + f_of(a_k)
                + (math.log(200.0) + 2.4 + 2.0 * math.log(c)) / c
                + math.log(2.0) / q_l
                + (2.5 * math.log(a_k) - 1.0) / a_k
            )
        return math.exp(log_b * c / (c - 2))
    log_b = (
        math.log(math.pi) - math.log(2 * a_k) + 1.0 + f_of(a_k)
        + (math.log(40.0) + 1.5 * math.log(c)) / c
        + math.log(2.0) / q_l
        + 2.5 * math.log(a_k) / a_k
    )
    return math.exp(log_b)


def reduced_odd(a_k: int) -> float:
    """Digit-only form of the odd-length bound; below 1 iff a_k >= 22."""
    if a_k <= 1:
        raise ValueError(f"reduced bound needs a_k > 1, got {a_k}")
    log_b = (
        math.log(math.pi) - math.log(math.sqrt(2.0) * a_k)
        + 1.0 + f_of(a_k)
        + (math.log(160.0) + 6.5 * math.log(a_k)) / (2 * a_k)
    )
    return math.exp(log_b)


def reduced_even_q1(a_k: int) -> float:
    """Digit-only even-length bound for q_l = 1; below 1 iff a_k >= 21."""
    if a_k <= 1:
        raise ValueError(f"reduced bound needs a_k > 1, got {a_k}")
    log_b = (
        math.log(math.pi) - math.log(a_k) + 1.0 + g_of(a_k)
        + (math.log(6.2) + 4.0 * math.log(a_k + 2)) / (a_k + 2)
    )
    return math.exp(log_b)


def reduced_even_q2(a_k: int) -> float:
    """Digit-only even-length bound for q_l >= 2; below 1 iff a_k >= 23."""
    if a_k <= 1:
        raise ValueError(f"reduced bound needs a_k > 1, got {a_k}")
    log_b = (
        math.log(math.pi) - math.log(math.sqrt(2.0) * a_k)
        + 1.0 + f_of(a_k)
        + (math.log(200.0) + 2.4 + 7.0 * math.log(a_k)) / (2 * a_k)
    )
    return math.exp(log_b)


@dataclass(frozen=True)
class ScanRecord:
    """All limit constants of one period plus the certification verdict.

    ``c_values[j]`` is the numerical C_{j+1}; ``k_max`` is the first
    offset selecting a largest digit; ``upper_bound`` is the closed-form
    bound at k_max when the largest digit is at least 6, else None.
    ``verdict`` is one of ``certified_lt_1`` (closed-form bound below 1),
    ``lt_1_numeric`` (smallest constant below 1 by more than 10 tol) or
    ``ge_1_numeric``; ``near_boundary`` flags a smallest constant within
    10 tol of 1, where the numerical verdict should not be trusted.
    """

    period: tuple[int, ...]
    k_max: int
    q_ell: int
    c_values: tuple[float, ...]
    upper_bound: float | None
    verdict: str
    near_boundary: bool

    @property
    def c_kmax(self) -> float:
        return self.c_values[self.k_max - 1]


def _canonical_periods(ell: int, digit_max: int) -> list[tuple[int, ...]]:
    """Lexicographic list of rotation-minimal digit tuples."""
    out = []
    for digits in _iter_product(range(1, digit_max + 1), repeat=ell):
        rotations = [digits[i:] + digits[:i] for i in range(ell)]
        if digits == min(rotations):
            out.append(digits)
    return out


def _scan_one(args) -> ScanRecord:
    digits, tol = args
    ell = len(digits)
    values = []
    for k in range(1, ell + 1):
        sp = spectral(PeriodSpec(digits, k))
        values.append(c_k_closed(sp, tol=tol).value)
    a_max = max(digits)
    k_max = 1 + digits.index(a_max)
    sp_max = spectral(PeriodSpec(digits, k_max))
    upper = ck_upper(sp_max) if a_max >= MIN_DIGIT_CERTIFIED else None
    c_min = min(values)
    near = abs(c_min - 1.0) < 10.0 * tol
    if upper is not None and upper < 1.0:
        verdict = "certified_lt_1"
    elif c_min < 1.0 - 10.0 * tol:
        verdict = "lt_1_numeric"
    else:
        verdict = "ge_1_numeric"
    return ScanRecord(
        period=digits,
        k_max=k_max,
        q_ell=sp_max.q_ell_perm,
        c_values=tuple(values),
        upper_bound=upper,
        verdict=verdict,
        near_boundary=near,
    )


def scan(ell: int, digit_max: int, tol: float = DEFAULT_TOL,
         workers: int = 1) -> list[ScanRecord]:
    """Constants and verdicts for every canonical period of length ell.

    Periods are deduplicated up to rotation (the rotation-minimal tuple
    represents its class; its c_values still cover every offset, which is
    every constant of the class) and emitted in lexicographic order, so
    repeated runs produce identical output byte for byte.
    """
    if ell < 1:
        raise ValueError(f"period length must be >= 1, got {ell}")
    if digit_max < 1:
        raise ValueError(f"digit_max must be >= 1, got {digit_max}")
    periods = _canonical_periods(ell, digit_max)
    jobs = [(digits, tol) for digits in periods]
    if workers <= 1 or len(jobs) <= 1:
        return [_scan_one(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        chunk = max(1, len(jobs) // (4 * workers))
        return list(pool.map(_scan_one, jobs, chunksize=chunk))
