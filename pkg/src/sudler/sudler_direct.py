"""Direct high-precision evaluation of the sine products.

P_N(alpha) = prod_{r=1..N} |2 sin(pi r alpha)| is evaluated in log space
with MPFR arithmetic.  The fractional parts {r alpha} are tracked exactly:
for alpha = (P + sqrt(D))/R the state (F + t sqrt(D))/R stays in [0, 1)
using integer additions and one exact square comparison per step, so no
rounding error ever accumulates in the angles themselves.  The only float
work per term is one sine and one log at the working precision, combined
by compensated summation.

The perturbed products shift every angle by +/- eps / q_n and are what the
limit functions along the subsequence n = m*l + k converge against.
"""

from __future__ import annotations

from dataclasses import dataclass

import gmpy2
from gmpy2 import mpfr

from .cfrac import PeriodSpec, convergents, lambda_n, spectral
from .quadfield import QuadExt, sqrt_to_mpfr

__all__ = [
    "DEFAULT_PRECISION",
    "ProductValue",
    "Decomposition",
    "SubseqPoint",
    "ZeroTermError",
    "sudler",
    "perturbed",
    "decompose",
    "sudler_at_convergents",
]

DEFAULT_PRECISION = 128


class ZeroTermError(ArithmeticError):
    """A sine factor vanished exactly; the product is 0 and has no log."""


@dataclass(frozen=True)
class ProductValue:
    """A finite sine product in log space.

    ``value`` equals exp(log_value) up to the relative error ``est_error``,
    which accumulates one per-term rounding bound per factor (so it is at
    most n_terms times the worst per-term bound).
    """

    log_value: mpfr
    value: mpfr
    n_terms: int
    est_error: float


@dataclass(frozen=True)
class SubseqPoint:
    """Product values at a convergent denominator q_n and just before it."""

    n: int
    q: int
    at: ProductValue        # P_{q_n}
    before: ProductValue    # P_{q_n - 1}


@dataclass(frozen=True)
class Decomposition:
    """The three-factor split of a perturbed product at N = q_n.

    A_n carries the single nearly-vanishing factor, B_n the deterministic
    lattice distortion and C_n the coupling between them; the product
    A_n * B_n * C_n reproduces the perturbed product.
    """

    A_n: mpfr
    B_n: mpfr
    C_n: mpfr
    s0: mpfr
    s_samples: tuple[tuple[int, mpfr], ...]
    product: mpfr
    n: int
    q_n: int
    eps: float


def _alpha_of(period: PeriodSpec) -> QuadExt:
    return spectral(period).alpha


def _empty_product() -> ProductValue:
    with gmpy2.context(precision=DEFAULT_PRECISION):
        return ProductValue(mpfr(0), mpfr(1), 0, 0.0)


def _product_log(alpha: QuadExt, n_terms: int, prec: int, *,
                 shift: mpfr | None = None, t0: int = 0, F0: int = 0,
                 checkpoints: set[int] | None = None):
    """Compensated sum of log|2 sin(pi (t alpha + shift))| for t = t0+1 .. t0+n_terms.

    F0 must be the exact numerator of {t0 alpha}, i.e. {t0 alpha} =
    (F0 + t0 sqrt(D))/R.  Returns (log_sum, err_units, records) where
    err_units counts accumulated rounding in units of 2^-prec and records
    maps each checkpoint index t to its (log_sum, err_units) snapshot.
    """
    P, R, D = alpha.p, alpha.r, alpha.D
    cps = sorted(checkpoints) if checkpoints else []
    ci = 0
    records: dict[int, tuple[mpfr, float]] = {}
    with gmpy2.context(precision=prec):
        sd = sqrt_to_mpfr(D, prec)
        pi = gmpy2.const_pi()
        sin_ = gmpy2.sin
        log_ = gmpy2.log
        s = mpfr(0)
        comp = mpfr(0)
        err = 0.0
        sd_f = float(sd)
        t = t0
        F = F0
        end = t0 + n_terms
        while ci < len(cps) and cps[ci] <= t0:
            if cps[ci] == t0:
                records[t0] = (s + comp, err)
            ci += 1
        while t < end:
            t += 1
            F += P
            lhs = R - F
            if lhs <= 0 or t * t * D >= lhs * lhs:
                F -= R
            x = (F + t * sd) / R
            if shift is not None:
                x = x + shift
            sv = sin_(pi * x)
            mag = 2 * abs(sv)
            if mag == 0:
                raise ZeroTermError(f"sine factor vanished at term {t}")
            term = log_(mag)
            y = s + term
            comp += (s - y) + term
            s = y
            # rounding model: ~3 ulp from sin/log plus the angle error
            # (|F| + t sqrt(D)) * 2^-prec magnified by pi*cot(pi x)
            err += 3.0 * (1.0 + abs(float(term))) \
                + (12.6 * t * sd_f + 6.3 * R) / max(float(mag), 1e-300)
            if ci < len(cps) and t == cps[ci]:
                records[t] = (s + comp, err)
                ci += 1
        return s + comp, err, records


def _finish(log_sum: mpfr, err_units: float, n_terms: int, prec: int) -> ProductValue:
    with gmpy2.context(precision=prec):
        value = gmpy2.exp(log_sum)
        est = (err_units + n_terms + abs(float(log_sum)) + 4.0) * 4.0 * 2.0 ** (-prec)
    return ProductValue(log_sum, value, n_terms, est)


def sudler(period: PeriodSpec, N: int,
           precision_bits: int = DEFAULT_PRECISION,
           workers: int = 1) -> ProductValue:
    """P_N(alpha) for the purely periodic alpha given by ``period``.

    N = 0 gives the empty product 1.  With ``workers`` > 1 the term range
    is split into equal chunks whose start states are computed exactly, and
    the chunk sums are combined in index order; results are reproducible
    for a fixed worker count.
    """
    if N < 0:
        raise ValueError(f"N must be >= 0, got {N}")
    if precision_bits < 53:
        raise ValueError("precision_bits must be at least 53")
    if N == 0:
        return _empty_product()
    alpha = _alpha_of(period)
    if workers > 1 and N >= 4 * workers:
        return _parallel_product(alpha, N, precision_bits, workers)
    log_sum, err, _ = _product_log(alpha, N, precision_bits)
    return _finish(log_sum, err, N, precision_bits)


def _chunk_job(args):
    alpha_tuple, prec, t0, F0, count = args
    alpha = QuadExt(*alpha_tuple)
    log_sum, err, _ = _product_log(alpha, count, prec, t0=t0, F0=F0)
    return gmpy2.to_binary(log_sum), err


def _parallel_product(alpha: QuadExt, N: int, prec: int, workers: int) -> ProductValue:
    from concurrent.futures import ProcessPoolExecutor

    bounds = [N * i // workers for i in range(workers + 1)]
    jobs = []
    for lo, hi in zip(bounds, bounds[1:]):
        if hi == lo:
            continue
        scaled = alpha * lo
        f = scaled.floor()
        F0 = alpha.p * lo - f * alpha.r
        jobs.append((alpha.as_tuple(), prec, lo, F0, hi - lo))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_chunk_job, jobs))
    with gmpy2.context(precision=prec):
        total = mpfr(0)
        err = 0.0
        for log_bin, part_err in parts:
            total += gmpy2.from_binary(log_bin)
            err += part_err + 1.0
    return _finish(total, err, N, prec)


def _tables_for(period: PeriodSpec, n: int):
    n_tab = max(n, 2 * period.ell + 2)
    return convergents(period, n_tab)


def perturbed(period: PeriodSpec, n: int, eps: float,
              precision_bits: int = DEFAULT_PRECISION) -> ProductValue:
    """The perturbed product over N = q_n terms.

    Every angle r alpha is shifted by (-1)^(n+1) eps / q_n before the sine,
    so eps = 0 reproduces ``sudler`` at N = q_n term for term.
    """
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    _, q = _tables_for(period, n)
    q_n = q[n]
    alpha = _alpha_of(period)
    sign = 1 if n % 2 == 1 else -1
    with gmpy2.context(precision=precision_bits):
        shift = mpfr(eps) * sign / q_n
    log_sum, err, _ = _product_log(alpha, q_n, precision_bits, shift=shift)
    return _finish(log_sum, err, q_n, precision_bits)


def decompose(period: PeriodSpec, n: int, eps: float,
              precision_bits: int = DEFAULT_PRECISION) -> Decomposition:
    """Split the perturbed product at N = q_n into A_n * B_n * C_n.

    With Lambda_n = q_n alpha - p_n, s_0 = 2 sin(pi(Lambda_n/2 + e)) and
    s_t = 2 sin(pi(t/q_n - |Lambda_n| ({t q_{n-1}/q_n} - 1/2))), where
    e = (-1)^(n+1) eps / q_n:

        A_n = 2 q_n |sin(pi(Lambda_n + e))|
        B_n = prod_{t<q_n} s_t / (2 sin(pi t/q_n))
        C_n = prod_{t<q_n} (1 - s_0^2 / s_t^2)^(1/2)

    The denominator product of 2 sin(pi t / q_n) is exactly q_n, which the
    B_n loop uses instead of evaluating those sines again.  For q_n = 1
    both B_n and C_n are the empty product 1.
    """
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    _, q = _tables_for(period, n)
    q_n, q_prev = q[n], q[n - 1]
    lam = lambda_n(period, n)
    sign = 1 if n % 2 == 1 else -1
    prec = precision_bits
    with gmpy2.context(precision=prec):
        pi = gmpy2.const_pi()
        lam_m = lam.to_float(prec)
        lam_abs = abs(lam_m)
        e_shift = mpfr(eps) * sign / q_n
        a_term = 2 * q_n * abs(gmpy2.sin(pi * (lam_m + e_shift)))
        s0 = 2 * gmpy2.sin(pi * (lam_m / 2 + e_shift))
        inv_q = mpfr(1) / q_n
        half = mpfr(1) / 2
        s0_sq = s0 * s0
        log_b = mpfr(0)
        comp_b = mpfr(0)
        log_c = mpfr(0)
        comp_c = mpfr(0)
        samples = []
        m = 0
        for t in range(1, q_n):
            m = (m + q_prev) % q_n
            x = t * inv_q - lam_abs * (m * inv_q - half)
            s_t = 2 * gmpy2.sin(pi * x)
            if s_t <= 0:
                raise ZeroTermError(f"lattice factor s_n({t}) not positive")
            factor = 1 - s0_sq / (s_t * s_t)
            if factor <= 0:
                raise ZeroTermError(f"coupling factor vanished at t = {t}")
            if t <= 8:
                samples.append((t, s_t))
            term = gmpy2.log(s_t)
            y = log_b + term
            comp_b += (log_b - y) + term
            log_b = y
            term = gmpy2.log(factor)
            y = log_c + term
            comp_c += (log_c - y) + term
            log_c = y
        b_term = gmpy2.exp((log_b + comp_b) - gmpy2.log(mpfr(q_n)))
        c_term = gmpy2.exp((log_c + comp_c) / 2)
        product = a_term * b_term * c_term
    return Decomposition(
        A_n=a_term,
        B_n=b_term,
        C_n=c_term,
        s0=s0,
        s_samples=tuple(samples),
        product=product,
        n=n,
        q_n=q_n,
        eps=float(eps),
    )


def sudler_at_convergents(period: PeriodSpec, q_max: int,
                          precision_bits: int = DEFAULT_PRECISION) -> list[SubseqPoint]:
    """One pass of P_N recording values at every q_n <= q_max and q_n - 1.

    Returns the points for n >= 2 in increasing n.  The q_n are strictly
    increasing there, so a single product sweep serves every offset k of
    the same period at once.
    """
    if q_max < 1:
        raise ValueError(f"q_max must be >= 1, got {q_max}")
    digits = period.digits
    ell = len(digits)
    p = [1, 0]
    q = [0, 1]
    n = 1
    while q[-1] <= q_max:
        a = digits[(n - 1) % ell]
        p.append(a * p[n] + p[n - 1])
        q.append(a * q[n] + q[n - 1])
        n += 1
    ns = [i for i in range(2, len(q)) if q[i] <= q_max]
    if not ns:
        return []
    alpha = _alpha_of(period)
    marks = set()
    for i in ns:
        marks.add(q[i])
        if q[i] > 1:
            marks.add(q[i] - 1)
    n_terms = max(q[i] for i in ns)
    _, _, records = _product_log(alpha, n_terms, precision_bits,
                                 checkpoints=marks)
    empty = _empty_product()

    def as_value(qi: int) -> ProductValue:
        if qi == 0:
            return empty
        log_sum, err = records[qi]
        return _finish(log_sum, err, qi, precision_bits)

    return [SubseqPoint(n=i, q=q[i], at=as_value(q[i]), before=as_value(q[i] - 1))
            for i in ns]


def sudler_range(period: PeriodSpec, n_lo: int, n_hi: int,
                 precision_bits: int = DEFAULT_PRECISION
                 ) -> list[tuple[int, ProductValue]]:
    """P_N for every N in n_lo..n_hi from a single incremental pass.

    The full trajectory costs one sweep to n_hi, not one product per N.
    N = 0 contributes the empty product 1.
    """
    if n_lo < 0 or n_hi < n_lo:
        raise ValueError(f"need 0 <= n_lo <= n_hi, got {n_lo}:{n_hi}")
    out: list[tuple[int, ProductValue]] = []
    if n_lo == 0:
        out.append((0, _empty_product()))
    if n_hi >= 1:
        lo = max(n_lo, 1)
        _, _, records = _product_log(_alpha_of(period), n_hi, precision_bits,
                                     checkpoints=set(range(lo, n_hi + 1)))
        for N in range(lo, n_hi + 1):
            log_sum, err = records[N]
            out.append((N, _finish(log_sum, err, N, precision_bits)))
    return out
