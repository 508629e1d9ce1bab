"""Tests for the envelope bounds, certified constants and the period scan."""

import math
import random
from fractions import Fraction

import pytest

from sudler.bounds import (
    MIN_DIGIT_CERTIFIED,
    THRESHOLD_EVEN_Q1,
    THRESHOLD_EVEN_Q2,
    THRESHOLD_ODD,
    ScanRecord,
    _scan_one,
    ck_upper,
    f_of,
    g_of,
    reduced_even_q1,
    reduced_even_q2,
    reduced_odd,
    sandwich,
    scan,
)
from sudler.cfrac import PeriodSpec, spectral, u_of_t
from sudler.limitfn import c_k_closed

_SPECS = {}


def spec_of(digits, k=1):
    key = (tuple(digits), k)
    if key not in _SPECS:
        _SPECS[key] = spectral(PeriodSpec(tuple(digits), k))
    return _SPECS[key]


def test_envelope_exponent_frozen_value():
    assert f_of(6) == pytest.approx(2.376794420216451, abs=1e-13)
    assert g_of(6) == pytest.approx(0.6150319383874461, abs=1e-13)


def test_envelope_exponent_term_split():
    for a in [2, 6, 23, 100]:
        rest = f_of(a) - 0.01 - 2.0 / (a * a) - 1.0 / (20.0 * math.log(a))
        assert rest == pytest.approx(13.7 / a, rel=1e-12)
        rest = g_of(a) - 0.0025 - 2.0 / (a * a) - 1.0 / (80.0 * math.log(a))
        assert rest == pytest.approx(3.3 / a, rel=1e-12)


def test_envelope_exponent_rejects_degenerate_base():
    for bad in [1, 0, -3, 0.5]:
        with pytest.raises(ValueError):
            f_of(bad)
        with pytest.raises(ValueError):
            g_of(bad)


def test_sharper_exponent_stays_below():
    for a in range(2, 60):
        assert g_of(a) < f_of(a)


def test_envelope_exponents_decreasing():
    for a in range(2, 60):
        assert f_of(a + 1) < f_of(a)
        assert g_of(a + 1) < g_of(a)


def test_sandwich_branch_small_x():
    sp = spec_of((1, 7), 2)
    res = sandwich(sp, 0.0)
    assert res.branch == "small_x"
    assert res.upper == 1.0
    assert res.lower == pytest.approx(
        (2.0 / math.pi) * math.exp(-g_of(7)), rel=1e-12
    )
    assert res.g_value == pytest.approx(1.0, abs=1e-9)
    assert res.m_of_x == 1


def test_sandwich_branch_first_cell():
    sp = spec_of((1, 7), 2)
    A = float(sp.A.to_float(64))
    res = sandwich(sp, A)
    assert res.branch == "m_equals_1"
    assert res.m_of_x == 1
    assert 0 < res.lower <= abs(res.g_value) <= res.upper


def test_sandwich_branch_far_cell():
    sp = spec_of((1, 7), 2)
    A = float(sp.A.to_float(64))
    res = sandwich(sp, 5 * A)
    assert res.branch == "large_x"
    assert res.m_of_x == 5
    assert 0 < res.lower <= abs(res.g_value) <= res.upper


def test_sandwich_refuses_non_maximal_offset():
    with pytest.raises(ValueError):
        sandwich(spec_of((1, 7), 1), 1.0)


def test_sandwich_refuses_small_digit():
    with pytest.raises(ValueError):
        sandwich(spec_of((1, 5), 2), 1.0)


def test_sandwich_near_lattice_point():
    sp = spec_of((1, 7), 2)
    x = float(u_of_t(sp, 2).to_float(64))
    res = sandwich(sp, x)
    assert res.dist_to_U < 1e-9
    assert res.lower <= abs(res.g_value) <= res.upper


def test_sandwich_random_sample_contained():
    sp = spec_of((2, 7), 2)
    A = float(sp.A.to_float(64))
    rng = random.Random(7)
    seen = set()
    for _ in range(25):
        x = rng.uniform(0.0, 8.0 * A)
        res = sandwich(sp, x)
        seen.add(res.branch)
        assert res.lower <= abs(res.g_value) + 1e-12 <= res.upper + 1e-9
    assert seen == {"small_x", "m_equals_1", "large_x"}


def test_sandwich_accepts_exact_rationals():
    sp = spec_of((1, 7), 2)
    res_q = sandwich(sp, Fraction(7, 2))
    res_f = sandwich(sp, 3.5)
    assert res_q.g_value == pytest.approx(res_f.g_value, abs=1e-9)
    assert res_q.branch == res_f.branch


def test_ck_upper_frozen_value():
    assert ck_upper(spec_of((1, 7), 2)) == pytest.approx(
        11.494930652821669, rel=1e-12
    )


def test_ck_upper_even_short_period_formula():
    sp = spec_of((1, 7), 2)
    assert sp.q_ell_perm == 1
    a_k, c = 7, sp.c
    base = (
        (math.pi / a_k)
        * math.exp(1 + g_of(a_k))
        * (6.2 * (a_k + 2) ** 4) ** (1.0 / (a_k + 2))
    )
    assert ck_upper(sp) == pytest.approx(base ** (c / (c - 2)), rel=1e-10)


def test_ck_upper_dominates_numeric_constant():
    corpus = [
        ((7,), 1),
        ((1, 7), 2),
        ((2, 9), 2),
        ((2, 3, 9), 3),
        ((1, 1, 8), 3),
        ((1, 6), 2),
        ((6,), 1),
    ]
    for digits, k in corpus:
        sp = spec_of(digits, k)
        assert ck_upper(sp) >= c_k_closed(sp).value


def test_ck_upper_refusals():
    with pytest.raises(ValueError):
        ck_upper(spec_of((1, 7), 1))
    with pytest.raises(ValueError):
        ck_upper(spec_of((1, 5), 2))


def test_reduced_bounds_cross_at_recorded_digits():
    assert reduced_odd(THRESHOLD_ODD) < 1.0 <= reduced_odd(THRESHOLD_ODD - 1)
    assert reduced_even_q2(THRESHOLD_EVEN_Q2) < 1.0
    assert reduced_even_q2(THRESHOLD_EVEN_Q2 - 1) >= 1.0
    assert reduced_even_q1(THRESHOLD_EVEN_Q1) < 1.0
    assert reduced_even_q1(19) >= 1.0 > reduced_even_q1(20)


def test_reduced_bounds_frozen_values():
    assert reduced_odd(22) == pytest.approx(0.9343774969895586, rel=1e-12)
    assert reduced_even_q2(23) == pytest.approx(0.934761905035715, rel=1e-12)
    assert reduced_even_q1(21) == pytest.approx(0.8986359817710098, rel=1e-12)


def test_certified_periods_are_numerically_below_one():
    rng = random.Random(11)
    for _ in range(6):
        ell = rng.randrange(2, 5)
        digits = [1] * ell
        digits[rng.randrange(ell)] = rng.randrange(23, 30)
        digits = tuple(digits)
        k = 1 + digits.index(max(digits))
        sp = spectral(PeriodSpec(digits, k))
        ub = ck_upper(sp)
        assert ub < 1.0
        assert c_k_closed(sp).value < 1.0


def test_family_constants_strictly_decreasing():
    vals1 = [c_k_closed(spec_of((1, a2), 2)).value for a2 in range(2, 11)]
    vals2 = [c_k_closed(spec_of((2, a2), 2)).value for a2 in range(3, 11)]
    assert all(x > y for x, y in zip(vals1, vals1[1:]))
    assert all(x > y for x, y in zip(vals2, vals2[1:]))
    assert vals1[1] > 1.0 > vals1[2]
    assert vals2[1] > 1.0 > vals2[2]


def test_scan_canonical_and_ordered():
    recs = scan(2, 5)
    assert len(recs) == 15
    periods = [r.period for r in recs]
    assert periods == sorted(periods)
    for r in recs:
        rotations = [r.period[i:] + r.period[:i] for i in range(len(r.period))]
        assert r.period == min(rotations)
        assert r.upper_bound is None
        assert r.c_kmax == r.c_values[r.k_max - 1]


def test_scan_verdicts_on_small_range():
    recs = {r.period: r for r in scan(2, 5)}
    assert recs[(1, 2)].k_max == 2
    assert recs[(1, 2)].verdict == "ge_1_numeric"
    assert recs[(1, 4)].verdict == "lt_1_numeric"
    assert recs[(1, 4)].c_kmax < 1.0
    assert recs[(1, 1)].q_ell == 1


def test_scan_repeat_is_identical():
    assert scan(2, 3) == scan(2, 3)


def test_scan_workers_match_serial():
    assert scan(2, 3, workers=2) == scan(2, 3)


def test_scan_certified_verdict():
    rec = _scan_one(((1, 23), 1e-8))
    assert rec.verdict == "certified_lt_1"
    assert rec.upper_bound == pytest.approx(0.7628680066380463, rel=1e-10)
    assert rec.c_kmax == pytest.approx(0.231675, abs=1e-5)
    rec = _scan_one(((23,), 1e-8))
    assert rec.verdict == "lt_1_numeric"
    assert rec.upper_bound is not None and rec.upper_bound > 1.0


def test_scan_near_boundary_flag():
    rec = _scan_one(((6,), 0.5))
    assert rec.near_boundary
    assert rec.verdict == "ge_1_numeric"
    rec = _scan_one(((6,), 1e-8))
    assert not rec.near_boundary
    assert rec.verdict == "ge_1_numeric"
