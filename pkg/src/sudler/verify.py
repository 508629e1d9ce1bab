"""Runtime verification suites for the package's own invariants.

Each suite re-checks one family of identities or inequalities over a
configurable corpus of periods and reports a pass flag, a worst-case
residual and the number of atomic checks.  Integer and field identities
are checked exactly (their residual is 0.0 or the violation size);
inequality suites report the largest violation, which is 0.0 when every
case holds with margin; approximation suites report the largest observed
residual, compared against the tolerance stated in the suite.

The ``default`` corpus keeps runtimes in seconds; ``full`` sweeps every
canonical period with length up to 4 and digits up to 8 plus seeded
random periods with larger digits.
"""

from __future__ import annotations

import math
import random
from fractions import Fraction

import gmpy2
from gmpy2 import mpfr

from .bounds import _canonical_periods, ck_upper, sandwich
from .cfrac import (
    PeriodSpec,
    convergents,
    discrepancy_sum_bound,
    lambda_n,
    permute,
    spectral,
)
from .limitfn import (
    DEFAULT_TOL,
    c_k_closed,
    functional_residual,
    gauss_invariance_residual,
)
from .sudler_direct import decompose, perturbed

RESIDUAL_FUNCTIONAL = 1e-6
RESIDUAL_GAUSS = 1e-6
RESIDUAL_DECOMPOSE = 1e-9
RT_TERM_CAP = 20000

_FLOAT_PERIODS = [(1,), (1, 2), (2, 3), (1, 1, 2), (1, 4)]
_BOUND_CORPUS = [
    ((1, 7), 2),
    ((2, 7), 2),
    ((1, 1, 8), 3),
    ((3, 9), 2),
    ((2, 3, 9), 3),
    ((8,), 1),
    ((6,), 1),
    ((1, 23), 2),
]


class _Context:
    """Shared corpus and caches for one verification run."""

    def __init__(self, corpus, seed, tol, prec, period=None):
        if corpus not in ("default", "full"):
            raise ValueError(f"corpus must be 'default' or 'full', got {corpus!r}")
        self.corpus = corpus
        self.seed = seed
        self.tol = tol
        self.prec = prec
        self._spectral = {}
        if period is not None:
            digit_lists = [tuple(period)]
        else:
            if corpus == "full":
                ell_max, digit_max, n_random, digit_hi = 4, 8, 30, 60
            else:
                ell_max, digit_max, n_random, digit_hi = 3, 4, 12, 30
            digit_lists = []
            for ell in range(1, ell_max + 1):
                digit_lists.extend(_canonical_periods(ell, digit_max))
            rng = random.Random(seed)
            for _ in range(n_random):
                ell = rng.randrange(1, ell_max + 2)
                digit_lists.append(
                    tuple(rng.randrange(1, digit_hi + 1) for _ in range(ell))
                )
        self.digit_lists = digit_lists
        self.instances = [
            PeriodSpec(digits, k)
            for digits in digit_lists
            for k in range(1, len(digits) + 1)
        ]

    def spectral(self, period: PeriodSpec):
        key = (period.digits, period.k)
        if key not in self._spectral:
            self._spectral[key] = spectral(period)
        return self._spectral[key]


def _suite_qnrel(ctx):
    """q_{n+l} = c q_n + (-1)^(l-1) q_{n-l} for n >= 2l, exact integers."""
    worst = 0
    cases = 0
    for digits in ctx.digit_lists:
        ell = len(digits)
        p_tab, q_tab = convergents(PeriodSpec(digits, 1), 3 * ell + 2)
        c = q_tab[ell + 1] + p_tab[ell]
        sign = 1 if ell % 2 == 1 else -1
        for n in range(2 * ell, 2 * ell + 3):
            lhs = q_tab[n + ell]
            rhs = c * q_tab[n] + sign * q_tab[n - ell]
            worst = max(worst, abs(lhs - rhs))
            cases += 1
    return worst == 0, float(worst), cases


def _suite_qlplusone(ctx):
    """Rotation and reversal share c and q_l and swap p_l with q_{l-1}."""
    worst = 0.0
    cases = 0
    for inst in ctx.instances:
        ell = inst.ell
        p_base, q_base = convergents(PeriodSpec(inst.digits, 1), ell + 1)
        c = q_base[ell + 1] + p_base[ell]
        pt, qt = convergents(permute(inst, "tau", inst.k), ell + 1)
        ps, qs = convergents(permute(inst, "sigma", inst.k), ell + 1)
        devs = [
            abs((qt[ell + 1] + pt[ell]) - c),
            abs((qs[ell + 1] + ps[ell]) - c),
            abs(qt[ell] - qs[ell]),
            abs(pt[ell] - qs[ell - 1]),
            abs(ps[ell] - qt[ell - 1]),
            abs(
                Fraction(qt[ell + 1], qt[ell])
                - inst.a_k
                - Fraction(ps[ell], qs[ell])
            ),
        ]
        worst = max(worst, float(max(devs)))
        cases += len(devs)
    return worst == 0.0, worst, cases


def _suite_ckek(ctx):
    """a_k < 1/|c_k e_k| < a_k + 2, exact field comparisons."""
    worst = 0.0
    cases = 0
    for inst in ctx.instances:
        sp = ctx.spectral(inst)
        inv = sp.inv_ckek
        viol = 0.0
        if not inv > inst.a_k:
            viol = max(viol, float((inst.a_k - inv).to_float(64)))
        if not inv < inst.a_k + 2:
            viol = max(viol, float((inv - (inst.a_k + 2)).to_float(64)))
        worst = max(worst, viol)
        cases += 2
    return worst == 0.0, worst, cases


def _suite_interleave(ctx):
    """Odd convergents rise to alpha, even ones fall, with exact windows."""
    worst = 0.0
    cases = 0
    for digits in ctx.digit_lists:
        sp = ctx.spectral(PeriodSpec(digits, 1))
        alpha = sp.alpha
        p_tab, q_tab = convergents(PeriodSpec(digits, 1), 7)
        f = [None] + [Fraction(p_tab[n], q_tab[n]) for n in range(1, 7)]
        ok = (
            f[1] < f[3] < f[5]
            and alpha > f[5]
            and alpha < f[6]
            and f[6] < f[4] < f[2]
        )
        if not ok:
            worst = max(worst, 1.0)
        cases += 1
        for n in range(1, 6):
            err = abs(alpha - f[n])
            lo = Fraction(1, 2 * q_tab[n + 1] * q_tab[n])
            hi = Fraction(1, q_tab[n + 1] * q_tab[n])
            if not lo < err:
                worst = max(worst, float((lo - err).to_float(64)))
            if not err < hi:
                worst = max(worst, float((err - hi).to_float(64)))
            cases += 2
    return worst == 0.0, worst, cases


def _suite_lambda(ctx):
    """Lambda_{ml+k} = e_k b^m exactly, alternating and contracting."""
    worst = 0.0
    cases = 0
    for inst in ctx.instances:
        sp = ctx.spectral(inst)
        prev_abs = None
        k0 = inst.k % inst.ell
        for m in range(1, 5):
            n = m * inst.ell + k0
            lam = lambda_n(inst, n)
            rhs = sp.e_k * sp.b ** m
            if lam != rhs:
                worst = max(worst, abs(float((lam - rhs).to_float(64))))
            if lam.sign() != (-1) ** (n + 1):
                worst = max(worst, 1.0)
            if prev_abs is not None and not abs(lam) < prev_abs:
                worst = max(worst, 1.0)
            prev_abs = abs(lam)
            cases += 3
    return worst == 0.0, worst, cases


def _suite_rt_products(ctx):
    """Lower bounds for the products of lattice remainder norms.

    Even length: prod_{t<q_l} ||R_t|| >= sqrt(q_l) / (2 (2e)^(q_l+1));
    odd length: prod_{t<q_l} ||R_t + b|| >= 4 pi / (e^3 (2e)^(q_l)).
    Norms are evaluated at working precision from the collapsed form
    {t p_l / q_l} - t b / q_l, and the comparison runs in log space;
    instances with q_l beyond ``RT_TERM_CAP`` terms are skipped.
    """
    worst = 0.0
    cases = 0
    log2e = math.log(2.0 * math.e)
    with gmpy2.context(precision=max(ctx.prec, 96)):
        for inst in ctx.instances:
            sp = ctx.spectral(inst)
            Q = sp.q_ell_perm
            if Q > RT_TERM_CAP:
                continue
            b_f = sp.b.to_float(max(ctx.prec, 96))
            even = sp.even_period
            log_sum = 0.0
            for t in range(1, Q):
                r = mpfr(t * sp.p_ell_tau % Q) / Q - b_f * t / Q
                if not even:
                    r = r + b_f
                norm = abs(r - gmpy2.rint(r))
                log_sum += math.log(float(norm))
            if even:
                log_bound = 0.5 * math.log(Q) - math.log(2.0) - (Q + 1) * log2e
            else:
                log_bound = math.log(4.0 * math.pi) - 3.0 - Q * log2e
            worst = max(worst, max(0.0, log_bound - log_sum))
            cases += 1
    return worst == 0.0, worst, cases


def _suite_discrepancy(ctx):
    """Window sums of 1 - 2{t alpha} stay under the digit-capped bound."""
    worst = 0.0
    cases = 0
    windows = [(0, 1), (0, 5), (0, 37), (11, 7), (101, 50)]
    with gmpy2.context(precision=max(ctx.prec, 96)):
        for inst in ctx.instances:
            sp = ctx.spectral(inst)
            af = sp.alpha_sigma_k.to_float(max(ctx.prec, 96))
            a_max = max(inst.digits)
            for start, width in windows:
                s = mpfr(0)
                for t in range(start + 1, start + width + 1):
                    x = af * t
                    s += 1 - 2 * (x - gmpy2.floor(x))
                bound = discrepancy_sum_bound(a_max, width)
                worst = max(worst, max(0.0, float(abs(s)) - bound))
                cases += 1
    return worst == 0.0, worst, cases


def _suite_decompose(ctx):
    """A_n B_n C_n reproduces the perturbed product to relative 1e-9."""
    worst = 0.0
    cases = 0
    q_cap = 3000 if ctx.corpus == "full" else 1000
    for digits in _FLOAT_PERIODS:
        period = PeriodSpec(digits, 1)
        _, q_tab = convergents(period, 40)
        ns = [n for n in range(2, 40) if q_tab[n] <= q_cap]
        for n in ns:
            for eps in (0.0, 0.25, -0.25):
                d = decompose(period, n, eps, precision_bits=ctx.prec)
                pv = perturbed(period, n, eps, precision_bits=ctx.prec)
                rel = abs(float(d.A_n * d.B_n * d.C_n / pv.value) - 1.0)
                worst = max(worst, rel)
                cases += 1
    return worst < RESIDUAL_DECOMPOSE, worst, cases


def _suite_functional(ctx):
    """c-fold multiplication law of the limit functions."""
    corpus = [
        ((1,), 1),
        ((1, 2), 1),
        ((1, 2), 2),
        ((2, 3), 2),
        ((1, 1, 2), 3),
        ((1, 4), 2),
        ((2, 5), 2),
    ]
    if ctx.corpus == "full":
        corpus += [((1, 1, 2), 1), ((2, 3), 1), ((3, 4), 2)]
    worst = 0.0
    for digits, k in corpus:
        sp = ctx.spectral(PeriodSpec(digits, k))
        worst = max(
            worst, functional_residual(sp, tol=ctx.tol, precision_bits=ctx.prec)
        )
    return worst < RESIDUAL_FUNCTIONAL, worst, len(corpus)


def _suite_gauss(ctx):
    """Digit rotation shifts the limit function index by one."""
    corpus = [
        ((1, 2), 1, 0.1),
        ((2, 3), 2, -0.2),
        ((1, 1, 2), 3, 0.25),
        ((1, 4), 1, 0.0),
        ((2, 5), 2, 0.3),
    ]
    if ctx.corpus == "full":
        corpus += [((1, 3), 2, -0.1), ((1, 1, 2), 1, 0.4)]
    worst = 0.0
    for digits, k, eps in corpus:
        worst = max(
            worst,
            gauss_invariance_residual(
                PeriodSpec(digits, k), eps, tol=ctx.tol, precision_bits=ctx.prec
            ),
        )
    return worst < RESIDUAL_GAUSS, worst, len(corpus)


def _suite_sandwich(ctx):
    """Envelope containment at randomly sampled arguments."""
    corpus = [((1, 7), 2), ((2, 7), 2), ((1, 1, 8), 3)]
    rng = random.Random(ctx.seed)
    violations = 0
    cases = 0
    for digits, k in corpus:
        sp = ctx.spectral(PeriodSpec(digits, k))
        A = float(sp.A.to_float(64))
        for _ in range(12):
            x = rng.uniform(0.0, 8.0 * A)
            try:
                sandwich(sp, x, tol=ctx.tol, precision_bits=ctx.prec)
            except ArithmeticError:
                violations += 1
            cases += 1
    return violations == 0, float(violations), cases


def _suite_ck_upper(ctx):
    """Closed-form upper bound dominates the evaluated constant."""
    worst = 0.0
    for digits, k in _BOUND_CORPUS:
        sp = ctx.spectral(PeriodSpec(digits, k))
        c_val = c_k_closed(sp, tol=ctx.tol, precision_bits=ctx.prec).value
        worst = max(worst, max(0.0, c_val - ck_upper(sp)))
    return worst == 0.0, worst, len(_BOUND_CORPUS)


SUITES = {
    "qnrel": _suite_qnrel,
    "qlplusone": _suite_qlplusone,
    "ckek": _suite_ckek,
    "interleave": _suite_interleave,
    "lambda": _suite_lambda,
    "rt_products": _suite_rt_products,
    "discrepancy": _suite_discrepancy,
    "decompose": _suite_decompose,
    "functional": _suite_functional,
    "gauss": _suite_gauss,
    "sandwich": _suite_sandwich,
    "ck_upper": _suite_ck_upper,
}


def run_suites(suites=None, corpus: str = "default", seed: int = 0,
               tol: float = DEFAULT_TOL, precision_bits: int = 128,
               period=None) -> dict:
    """Run verification suites and report per-suite results.

    Returns ``{name: {"pass": bool, "worst_residual": float, "cases": n}}``
    in a fixed suite order.  ``suites`` selects a subset by name;
    ``period`` narrows the exact-identity corpora to one period (its
    digits are validated before any suite runs).  The float suites keep
    their curated corpora since their preconditions are period-specific.
    """
    if suites is None:
        names = list(SUITES)
    else:
        names = list(suites)
        for name in names:
            if name not in SUITES:
                raise ValueError(f"unknown suite {name!r}")
    ctx = _Context(corpus, seed, tol, precision_bits, period=period)
    report = {}
    for name in names:
        passed, worst, cases = SUITES[name](ctx)
        report[name] = {
            "pass": bool(passed),
            "worst_residual": float(worst),
            "cases": int(cases),
        }
    return report


def all_pass(report: dict) -> bool:
    return all(entry["pass"] for entry in report.values())
