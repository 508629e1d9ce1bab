"""Limit functions of the perturbed sine products along q_{m*l+k}.

For a period of length l with trace constant c and spectral pair (a, b),
the perturbed products at N = q_{m*l+k} converge to a limit function of the
perturbation.  With u(t) = A t + delta_t, A = 2/|c_k e_k|, the limit is an
infinite product over t >= 1 of grouped brackets |1 - w^2/u(t)^2| raised to
case exponents, times an elementary prefactor:

* even l:  |1 + eps/|c_k e_k||
           * (1 + 1/|b|^2)^(1/(c-2)) / (c!)^(1/(c-2))
           * prod_t |1 - w_eps^2/u^2| |1 - w_b^2/u^2|^(1/(c-2))
                    prod_{s=1..c-1} |1 - (1+2s)^2/u^2|^(-1/(c-2))
  with w_eps = 1 + 2 eps/|c_k e_k| and w_b = 1 + 2/|b|^2;

* odd l:   |1 + eps/|c_k e_k|| / prod_{s=1..c} (a-s)^(1/c)
           * prod_t |1 - w_eps^2/u^2|
                    prod_{s=0..c-1} |1 - (1+2s-2a)^2/u^2|^(-1/c).

Setting eps = 0 gives the limit constant C_k of the unperturbed products.

Evaluation runs in three tiers.  Terms up to T_head are evaluated at full
working precision with exact lattice points u(t).  From T_head to T the
log of each group is replaced by its expansion -(k1/u^2 + ... + k4/u^8),
summed in floats against exactly tracked u(t).  Beyond T the expansion is
summed analytically with u ~ A t; the influence of the bounded offsets
delta_t is controlled rigorously through the discrepancy bound on their
partial sums, and everything neglected is accumulated into error fields.
All horizons are chosen deterministically from the period data and the
tolerance, on a fixed geometric grid, so repeated runs agree bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import log

import gmpy2
from gmpy2 import mpfr

from .cfrac import FracStream, PeriodSpec, discrepancy_sum_bound, spectral, \
    SpectralData, u_of_t
from .quadfield import QuadExt, sqrt_to_mpfr

__all__ = [
    "DEFAULT_TOL",
    "T_CAP",
    "TruncatedProduct",
    "g_of_x",
    "g_limit",
    "c_k_closed",
    "functional_residual",
    "gauss_invariance_residual",
]

DEFAULT_TOL = 1e-8
T_CAP = 10 ** 8
_GRID_BASE = 256
_ZERO_CUTOFF = 1e-300


@dataclass(frozen=True)
class TruncatedProduct:
    """An infinite product truncated at T with a corrected tail.

    ``value`` includes the analytic tail correction; ``raw_value`` is the
    plain truncation at T.  ``tail_bound`` bounds the absolute log of the
    raw remainder beyond T, so raw truncations at T and at any larger
    horizon differ by less than it.  ``corrected_error`` bounds the log
    error left after the correction.  ``kappa`` is the 1/u^2 coefficient
    driving the tail.  A vanished factor or prefactor short-circuits to
    value 0 with ``zero_flag`` set.
    """

    value: mpfr
    raw_value: mpfr
    log_abs: mpfr | None
    sign: int
    T: int
    T_head: int
    tail_bound: float
    kappa: float
    corrected_error: float
    zero_flag: bool


# ----------------------------------------------------------------------
# cached per-period streams

def _u_cache(spec: SpectralData, prec: int) -> dict:
    def build():
        return {
            "stream": FracStream(spec.alpha_sigma_k),
            "A": spec.A.to_float(prec),
            "u": [],
            "u2": [],
        }
    return spec.cache(("u", prec), build)


def _extend_u(spec: SpectralData, prec: int, T: int) -> dict:
    cache = _u_cache(spec, prec)
    if len(cache["u"]) >= T:
        return cache
    stream: FracStream = cache["stream"]
    with gmpy2.context(precision=prec):
        sd = sqrt_to_mpfr(stream.D, prec)
        A_m = cache["A"]
        R = stream.R
        u_list = cache["u"]
        u2_list = cache["u2"]
        while len(u_list) < T:
            stream.step()
            frac = (stream.Fp + stream.t * sd) / R
            u = A_m * stream.t - 2 * frac + 1
            u_list.append(u)
            u2_list.append(u * u)
    return cache


def _mid_cache(spec: SpectralData) -> dict:
    def build():
        return {
            "stream": FracStream(spec.alpha_sigma_k),
            "A": float(spec.A.to_float(64)),
            "grid": [_GRID_BASE],
            "cum": {_GRID_BASE: (0.0, 0.0, 0.0, 0.0)},
        }
    return spec.cache("mid", build)


def _extend_mid(spec: SpectralData, T: int) -> dict:
    """Cumulative sums of u^(-2i), i = 1..4, from _GRID_BASE+1 up to each
    grid point (grid points are _GRID_BASE * 2^j)."""
    cache = _mid_cache(spec)
    stream: FracStream = cache["stream"]
    A = cache["A"]
    while cache["grid"][-1] < T:
        lo = cache["grid"][-1]
        hi = lo * 2
        while stream.t < lo:
            stream.step()
        s2, s4, s6, s8 = cache["cum"][lo]
        c2 = c4 = c6 = c8 = 0.0
        while stream.t < hi:
            stream.step()
            u = A * stream.t + 1.0 - 2.0 * stream.frac_float()
            iu2 = 1.0 / (u * u)
            iu4 = iu2 * iu2
            c2 += iu2
            c4 += iu4
            c6 += iu4 * iu2
            c8 += iu4 * iu4
        cache["cum"][hi] = (s2 + c2, s4 + c4, s6 + c6, s8 + c8)
        cache["grid"].append(hi)
    return cache


def _mid_sums(spec: SpectralData, t_lo: int, t_hi: int):
    """Power sums over (t_lo, t_hi]; both ends must be grid points."""
    if t_hi <= t_lo:
        return (0.0, 0.0, 0.0, 0.0)
    cache = _extend_mid(spec, t_hi)
    a = cache["cum"][t_lo]
    b = cache["cum"][t_hi]
    return tuple(b[i] - a[i] for i in range(4))


# ----------------------------------------------------------------------
# analytic helpers

def _h_tail(s: int, T: float) -> float:
    """sum_{t>T} t^-s by Euler-Maclaurin, rounded up a touch."""
    T = float(T)
    val = 1.0 / ((s - 1) * T ** (s - 1)) - 1.0 / (2 * T ** s) \
        + s / (12.0 * T ** (s + 1))
    rem = s * (s + 1) * (s + 2) / (720.0 * T ** (s + 3))
    return val + rem


@lru_cache(maxsize=16384)
def _delta_moment_bound(a_max: int, T: int, s: int) -> float:
    """Rigorous bound for |sum_{t>T} delta_t / t^s|.

    Abel summation against the discrepancy bound B(N) for partial sums of
    the offsets over windows starting at T: the weight drops of t^-s
    contribute B(j) * s/(T+j)^(s+1), summed explicitly for a while and
    closed off with the integral of the logarithmic envelope of B.
    """
    total = 0.0
    J = 1500
    for j in range(1, J + 1):
        total += discrepancy_sum_bound(a_max, j) * s / float(T + j) ** (s + 1)
    a = max(a_max, 2)
    K = a / (4 * log(a)) + 12.0
    C = a / 4 + 11.5
    X = float(T + J)
    total += (K * log(X) + C) / X ** s + K / (s * X ** s)
    return total


def _grid_round_up(T: float) -> int:
    g = _GRID_BASE
    while g < T:
        g *= 2
    return g


# ----------------------------------------------------------------------
# bracket sets

class _Brackets:
    """The fixed bracket weights of one period at one precision.

    ``fixed`` lists the eps-independent (w^2, exponent) pairs; ``pref_log``
    is the log of the case prefactor that goes with them.  The eps bracket
    always carries exponent one and is supplied per call.
    """

    def __init__(self, spec: SpectralData, prec: int):
        c = spec.c
        self.even = spec.even_period
        with gmpy2.context(precision=prec):
            if self.even:
                expo = mpfr(1) / (c - 2)
                inv_b2 = (spec.b * spec.b).inverse()
                w_b = 1 + 2 * inv_b2
                fixed = [((w_b * w_b).to_float(prec), expo)]
                for s in range(1, c):
                    fixed.append((mpfr((1 + 2 * s) ** 2), -expo))
                pref = expo * (gmpy2.log((1 + inv_b2).to_float(prec))
                               - gmpy2.lgamma(mpfr(c + 1))[0])
            else:
                expo = mpfr(1) / c
                a_m = spec.a.to_float(prec)
                fixed = []
                for s in range(0, c):
                    w = (1 + 2 * s) - 2 * a_m
                    fixed.append((w * w, -expo))
                pref = -expo * (gmpy2.lgamma(a_m)[0]
                                - gmpy2.lgamma(a_m - c)[0])
        self.fixed = fixed
        self.pref_log = pref
        self.w_max_fixed = max(float(gmpy2.sqrt(w2)) for w2, _ in fixed)
        self.E_abs_fixed = sum(abs(float(e)) for _, e in fixed)

    def kappas(self, w_eps2: mpfr, prec: int) -> list[mpfr]:
        """kappa_i = sum_j e_j w_j^(2i) / i for i = 1..4, eps included."""
        with gmpy2.context(precision=prec):
            out = []
            for i in range(1, 5):
                acc = w_eps2 ** i
                for w2, e in self.fixed:
                    acc += e * w2 ** i
                out.append(acc / i)
        return out


def _brackets_for(spec: SpectralData, prec: int) -> _Brackets:
    return spec.cache(("brackets", prec), lambda: _Brackets(spec, prec))


def _sblock_logs(spec: SpectralData, prec: int, T: int) -> list[mpfr]:
    """Per-t logs of the eps-independent bracket group, t = 1..T."""
    cache = spec.cache(("sblock", prec), lambda: {"logs": []})
    logs = cache["logs"]
    if len(logs) >= T:
        return logs
    br = _brackets_for(spec, prec)
    u2 = _extend_u(spec, prec, T)["u2"]
    with gmpy2.context(precision=prec):
        for t in range(len(logs) + 1, T + 1):
            u2t = u2[t - 1]
            acc = mpfr(0)
            for w2, e in br.fixed:
                f = abs(1 - w2 / u2t)
                if f < _ZERO_CUTOFF:
                    raise ArithmeticError(
                        "fixed bracket vanished on a lattice point")
                acc += e * gmpy2.log(f)
            logs.append(acc)
    return logs


# ----------------------------------------------------------------------
# evaluation core

def _plan_T(A: float, w_all: float, E_abs: float, kappas_f: list[float],
            a_max: int, tol: float) -> tuple[int, int]:
    """Pick (T_head, T) on the grid for the target tolerance."""
    t1 = _GRID_BASE
    need = (1.5 * w_all + 2.0) / A
    while t1 < need:
        t1 *= 2
    while True:
        e3 = 0.8 * max(E_abs, 1.0) * (w_all ** 10) / (9.0 * A ** 10
                                                      * float(t1 - 1) ** 9)
        if e3 <= tol / 8 or t1 >= T_CAP:
            break
        t1 *= 2
    k1 = abs(kappas_f[0])
    k2 = abs(kappas_f[1])
    t2 = t1
    while True:
        e1 = 2.0 * k1 / A ** 3 * _delta_moment_bound(a_max, t2, 3) \
            + 4.0 * k2 / A ** 5 * _delta_moment_bound(a_max, t2, 5)
        e2 = 3.0 * k1 / A ** 4 * _h_tail(4, t2 - 1) \
            + 10.0 * k2 / A ** 6 * _h_tail(6, t2 - 1)
        if e1 + e2 <= tol / 4 or t2 >= T_CAP:
            break
        t2 *= 2
    return t1, min(t2, T_CAP)


def _to_mpfr(x, prec: int) -> mpfr:
    with gmpy2.context(precision=prec):
        if isinstance(x, QuadExt):
            return x.to_float(prec)
        if isinstance(x, Fraction):
            return mpfr(gmpy2.mpq(x.numerator, x.denominator))
        return mpfr(x)


def _lattice_hit(spec: SpectralData, w_exact) -> bool:
    """Whether |w| equals a lattice point u(t) exactly.

    Rounding never reveals this (the two computations agree only to a few
    ulps), so exact arguments are compared against the exact u(t) in a
    small window around the predicted index.
    """
    if isinstance(w_exact, QuadExt):
        wf = abs(float(w_exact.to_float(64)))
        w2 = w_exact * w_exact
    else:
        wf = abs(float(w_exact))
        w2 = Fraction(w_exact) ** 2
    A_f = float(spec.A.to_float(64))
    t_star = int((wf + 1.0) / A_f + 0.5)
    for t in range(max(1, t_star - 3), t_star + 4):
        u = u_of_t(spec, t)
        if u * u == w2:
            return True
    return False


def _eval_product(spec: SpectralData, w_eps2, pref_logs, *,
                  with_sblock: bool, tol: float, prec: int,
                  sign_track: bool = False, T_override: int | None = None,
                  zero_pref: bool = False, exact_w=None) -> TruncatedProduct:
    """exp(sum pref_logs) * prod_t |1 - w_eps^2/u^2| (* the fixed block).

    w_eps2 may be exact (QuadExt or Fraction) or a binary float; pref_logs
    is a list of mpfr log prefactors.  zero_pref short-circuits for an
    exactly vanished elementary prefactor; exact_w, when available, lets a
    perturbation sitting exactly on a lattice point vanish exactly.
    """
    a_max = spec.period.digit_max
    w_eps2_m = _to_mpfr(w_eps2, prec)
    if with_sblock:
        br = _brackets_for(spec, prec)
        kappas = br.kappas(w_eps2_m, prec)
        w_all = max(br.w_max_fixed, float(gmpy2.sqrt(w_eps2_m)))
        E_abs = br.E_abs_fixed + 1.0
    else:
        with gmpy2.context(precision=prec):
            kappas = [w_eps2_m ** i / i for i in range(1, 5)]
        w_all = float(gmpy2.sqrt(w_eps2_m))
        E_abs = 1.0

    A_f = float(spec.A.to_float(64))
    kappas_f = [float(k) for k in kappas]
    T1, T2 = _plan_T(A_f, w_all, E_abs, kappas_f, a_max, tol)
    if T_override is not None:
        T2 = max(_grid_round_up(T_override), T1)

    zero = zero_pref
    if not zero and exact_w is not None and _lattice_hit(spec, exact_w):
        zero = True
    sign = 1
    with gmpy2.context(precision=prec):
        head = mpfr(0)
        comp = mpfr(0)
        if not zero:
            u2 = _extend_u(spec, prec, T1)["u2"]
            sblock = _sblock_logs(spec, prec, T1) if with_sblock else None
            for t in range(1, T1 + 1):
                f = 1 - w_eps2_m / u2[t - 1]
                if sign_track and f < 0:
                    sign = -sign
                f = abs(f)
                if f < _ZERO_CUTOFF:
                    zero = True
                    break
                term = gmpy2.log(f)
                if sblock is not None:
                    term = term + sblock[t - 1]
                y = head + term
                comp += (head - y) + term
                head = y
        if zero:
            z = mpfr(0)
            return TruncatedProduct(
                value=z, raw_value=z, log_abs=None, sign=0, T=T2, T_head=T1,
                tail_bound=0.0, kappa=kappas_f[0], corrected_error=0.0,
                zero_flag=True)

        head_log = head + comp
        s2, s4, s6, s8 = _mid_sums(spec, T1, T2)
        mid_log = -(kappas[0] * s2 + kappas[1] * s4
                    + kappas[2] * s6 + kappas[3] * s8)
        A_m = spec.A.to_float(prec)
        tail_log = mpfr(0)
        for i, kap in enumerate(kappas, start=1):
            tail_log -= kap * _h_tail(2 * i, T2) / A_m ** (2 * i)

        pref_log = mpfr(0)
        for part in pref_logs:
            pref_log += part

        raw_log = pref_log + head_log + mid_log
        corr_log = raw_log + tail_log
        raw_value = gmpy2.exp(raw_log) * sign
        value = gmpy2.exp(corr_log) * sign

    # rigorous error accounting, floats are plenty here
    k_abs = [abs(k) for k in kappas_f]
    e_delta = 0.0
    for i in (1, 2):
        e_delta += k_abs[i - 1] * (2 * i) / A_f ** (2 * i + 1) \
            * _delta_moment_bound(a_max, T2, 2 * i + 1)
        e_delta += k_abs[i - 1] * (2 * i) * (2 * i + 1) / A_f ** (2 * i + 2) \
            * _h_tail(2 * i + 2, T2 - 1)
    for i in (3, 4):
        e_delta += k_abs[i - 1] * (2 * i) / A_f ** (2 * i + 1) \
            * _h_tail(2 * i + 1, T2 - 1) * 2.0
    e_high = 0.8 * max(E_abs, 1.0) * (w_all ** 10) / (9.0 * A_f ** 10
                                                      * float(T1 - 1) ** 9)
    mid_mag = sum(k_abs[i] * s for i, s in enumerate((s2, s4, s6, s8)))
    e_float = 1e-15 * (mid_mag + 1.0)
    e_head = (T1 * (E_abs + 2.0) + 8.0) * (2.0 ** (-prec + 6)) \
        * (1.0 + abs(float(head_log)) + abs(float(pref_log)))
    corrected_error = 2.0 * (e_delta + e_high + e_float + e_head)

    tail_raw = sum(k_abs[i - 1] * _h_tail(2 * i, T2 - 1) / A_f ** (2 * i)
                   for i in (1, 2, 3, 4)) * 1.05 + e_delta + e_high
    return TruncatedProduct(
        value=value, raw_value=raw_value, log_abs=corr_log, sign=sign,
        T=T2, T_head=T1, tail_bound=tail_raw, kappa=kappas_f[0],
        corrected_error=corrected_error, zero_flag=False)


# ----------------------------------------------------------------------
# public operations

def _as_spec(spec_or_period) -> SpectralData:
    if isinstance(spec_or_period, SpectralData):
        return spec_or_period
    return spectral(spec_or_period)


def _unit_product(prec: int) -> TruncatedProduct:
    one = _to_mpfr(1, prec)
    return TruncatedProduct(value=one, raw_value=one, log_abs=one - 1,
                            sign=1, T=0, T_head=0, tail_bound=0.0,
                            kappa=0.0, corrected_error=0.0, zero_flag=False)


def g_of_x(spec, x, tol: float = DEFAULT_TOL,
           precision_bits: int = 128, T: int | None = None) -> TruncatedProduct:
    """The bare lattice product G(x) = prod_t (1 - x^2/u(t)^2).

    Even in x by construction, since only x^2 enters; signed, with one
    sign flip per lattice point below |x|.  x = 0 gives exactly 1; x on a
    lattice point gives 0 with the zero flag set.
    """
    spec = _as_spec(spec)
    exact = None
    if isinstance(x, QuadExt):
        if not x:
            return _unit_product(precision_bits)
        exact = x
        x2 = x * x
    elif isinstance(x, (int, Fraction)):
        xq = Fraction(x)
        if xq == 0:
            return _unit_product(precision_bits)
        exact = xq
        x2 = xq * xq
    else:
        xm = _to_mpfr(x, precision_bits)
        if xm == 0:
            return _unit_product(precision_bits)
        with gmpy2.context(precision=precision_bits):
            x2 = xm * xm
    return _eval_product(spec, x2, [], with_sblock=False, tol=tol,
                         prec=precision_bits, sign_track=True, T_override=T,
                         exact_w=exact)


def _eps_parts(spec: SpectralData, eps, prec: int):
    """(w_eps^2, exact w or None, prefactor log, zero?) for the eps bracket.

    The prefactor is |1 + eps/|c_k e_k|| = |(1 + w_eps)/2|; exact eps
    stays exact all the way to the bracket weight.
    """
    if isinstance(eps, (int, Fraction)):
        eps = QuadExt.from_fraction(Fraction(eps), spec.D)
    if isinstance(eps, QuadExt):
        w = 1 + 2 * eps * spec.inv_ckek
        if w == -1:
            return w * w, w, None, True
        half = (w + 1) / 2
        with gmpy2.context(precision=prec):
            pref = gmpy2.log(abs(half.to_float(prec)))
        return w * w, w, pref, False
    with gmpy2.context(precision=prec):
        w = 1 + 2 * mpfr(eps) * spec.inv_ckek.to_float(prec)
        half = (w + 1) / 2
        if half == 0:
            return w * w, None, None, True
        return w * w, None, gmpy2.log(abs(half)), False


def g_limit(spec, eps, tol: float = DEFAULT_TOL,
            precision_bits: int = 128) -> TruncatedProduct:
    """The limit of the perturbed products at perturbation eps.

    eps may be a float, Fraction, or exact QuadExt over the same field;
    eps = -|c_k e_k| gives exactly 0 with the zero flag set, and so does
    an exact eps that lands the bracket weight on a lattice point.
    """
    spec = _as_spec(spec)
    w_eps2, w_exact, pref, zero = _eps_parts(spec, eps, precision_bits)
    pref_logs = [] if pref is None else \
        [_brackets_for(spec, precision_bits).pref_log, pref]
    return _eval_product(spec, w_eps2, pref_logs, with_sblock=True, tol=tol,
                         prec=precision_bits, zero_pref=zero,
                         exact_w=w_exact)


def c_k_closed(spec, tol: float = DEFAULT_TOL,
               precision_bits: int = 128) -> TruncatedProduct:
    """The limit constant C_k through its closed unperturbed form.

    This is the eps = 0 case assembled independently: the even-period
    prefactor is built from (1 + a^2)/c! where the perturbed form carries
    1 + 1/|b|^2 (equal because a b = 1 there), so agreement with
    ``g_limit(spec, 0)`` crosses two different prefactor computations.
    """
    spec = _as_spec(spec)
    prec = precision_bits
    with gmpy2.context(precision=prec):
        if spec.even_period:
            expo = mpfr(1) / (spec.c - 2)
            a2 = (spec.a * spec.a).to_float(prec)
            pref = expo * (gmpy2.log1p(a2)
                           - gmpy2.lgamma(mpfr(spec.c + 1))[0])
        else:
            a_m = spec.a.to_float(prec)
            pref = -(gmpy2.lgamma(a_m)[0]
                     - gmpy2.lgamma(a_m - spec.c)[0]) / spec.c
    return _eval_product(spec, Fraction(1), [pref], with_sblock=True,
                         tol=tol, prec=prec)


def functional_residual(spec, tol: float = DEFAULT_TOL,
                        precision_bits: int = 128) -> float:
    """Deviation |LHS/RHS - 1| of the c-fold multiplication law.

    Even period: prod_{s=0..c-1} G(s |c_k e_k|) = G(0) G(|c_k e_k|/|b|^2).
    Odd period, c = 1 included: prod_{s=0..c-1} G(|c_k e_k| (s - a)) = 1,
    using 1/|b| = a.  All perturbations pass through exactly.
    """
    spec = _as_spec(spec)
    c = spec.c
    tol_each = tol / (2 * c + 6)
    prec = precision_bits

    def log_g(eps) -> mpfr:
        r = g_limit(spec, eps, tol=tol_each, precision_bits=prec)
        if r.zero_flag or r.sign <= 0:
            raise ArithmeticError(
                "limit function vanished inside the multiplication law")
        return r.log_abs

    with gmpy2.context(precision=prec):
        lhs = mpfr(0)
        if spec.even_period:
            for s in range(c):
                lhs += log_g(spec.abs_ckek * s)
            rhs = log_g(Fraction(0)) \
                + log_g(spec.abs_ckek / (spec.b * spec.b))
        else:
            for s in range(c):
                lhs += log_g(spec.abs_ckek * (s - spec.a))
            rhs = mpfr(0)
        return abs(float(gmpy2.expm1(lhs - rhs)))


def gauss_invariance_residual(period: PeriodSpec, eps,
                              tol: float = DEFAULT_TOL,
                              precision_bits: int = 128) -> float:
    """|G_{k+1}(alpha, eps) - G_k(beta, eps)| for beta the digit rotation.

    beta has digits (a_2, ..., a_l, a_1): one application of the shift map
    to alpha.  The limit functions of beta are those of alpha moved along
    by one offset, cyclically in k.  Needs a period of length >= 2.
    """
    if period.ell < 2:
        raise ValueError("rotation invariance needs a period of length >= 2")
    k = period.k
    k_next = (k % period.ell) + 1
    rotated = PeriodSpec(period.digits[1:] + period.digits[:1], k)
    left = g_limit(spectral(period.with_k(k_next)), eps, tol=tol,
                   precision_bits=precision_bits)
    right = g_limit(spectral(rotated), eps, tol=tol,
                    precision_bits=precision_bits)
    return abs(float(left.value) - float(right.value))
