import cmath
import math

import pytest
from hypothesis import given, settings, strategies as st

from newton_measure.asym import (
    AsymptoticReport,
    Ray,
    _middle_coeff,
    all_cj,
    c_term,
    error_decay_scan,
    estimate_cj,
    f_asym,
    fit_exponent,
    h_asym_left,
    h_asym_right,
    h_direct,
    hprime_asym,
    hprime_direct,
)
from newton_measure.core import Polynomial, Problem, erf_problem, eval_f, eval_g
from newton_measure.dynamics import step
from newton_measure.errors import BakerDomainLikely, RegionViolation
from newton_measure.sectors import RegionSpec, gamma_solve, phi

HALF_SQRT_PI = math.sqrt(math.pi) / 2


def test_cj_erf_closed_form(erf):
    c1, c2 = all_cj(erf)
    assert abs(c1 - 2j * (0.3 + HALF_SQRT_PI)) < 1e-11
    assert abs(c2 - 2j * (0.3 - HALF_SQRT_PI)) < 1e-11
    assert abs(c1) > 0 and abs(c2) > 0


def test_cj_stable_under_doubling():
    prob = erf_problem(0.3)
    a = estimate_cj(prob, 1, X=40)
    fresh = erf_problem(0.3)
    b = estimate_cj(fresh, 1, X=80)
    assert abs(a - b) <= 1e-12 * abs(a)


def test_cj_cached_and_reproducible():
    a, b = erf_problem(0.3), erf_problem(0.3)
    assert estimate_cj(a, 2) == estimate_cj(b, 2)
    assert 2 in a.cj


def test_baker_domain_detected():
    prob = erf_problem(HALF_SQRT_PI)
    with pytest.raises(BakerDomainLikely, match="Baker domain likely"):
        all_cj(prob)


def test_g_tends_to_cj_with_exponential_rate(erf):
    # |g - c_j| ~ |w|^-lambda e^{Re w} along Re w = -5
    for j, cj in enumerate(all_cj(erf), 1):
        for y in (1e3, 1e4, 1e5):
            w = complex(-5, y)
            ratio = abs(eval_g(erf, phi(erf, j, w)) - cj) / (abs(w) ** -0.5 * math.exp(w.real))
            assert 0.5 <= ratio <= 2


def test_f_asym_drift_dominates(erf):
    z = phi(erf, 1, 200 + 150j)
    approx = z - 1 / erf.dq(z)
    # the remaining difference is the lambda / z^d correction
    assert abs(f_asym(erf, 1, z) - approx) <= 1.01 * 0.5 / abs(z) ** 2 / abs(erf.dq(z))
    w = erf.q(z)
    assert abs(f_asym(erf, 1, z) - eval_f(erf, z)) <= abs(w) ** -0.5 / abs(erf.dq(z))


def test_h_right_deep():
    prob = erf_problem()
    w = 400 + 300j
    assert abs(h_asym_right(prob, 1, w) - (w - 1)) < 1e-2
    assert abs(h_direct(prob, 1, w) - (w - 1)) < 1e-2


def test_middle_coefficient_zero_for_linear_q():
    prob = Problem(Polynomial.of(1), Polynomial.of(0, 1), 1)
    assert _middle_coeff(prob) == 0


def test_h_left_matches_direct(erf):
    for w in (-30 + 60j, -60 + 100j, -200 + 300j):
        for j in (1, 2):
            la = h_asym_left(erf, j, w)
            h = h_direct(erf, j, w)
            assert abs(cmath.exp(cmath.log(h) - la.log) - 1) < 1e-6


def test_h_left_log_growth(erf):
    a = h_asym_left(erf, 1, -1000 + 50j).log.real
    b = h_asym_left(erf, 1, -2000 + 50j).log.real
    assert abs((b - a) - 2 * 1000) < 1e-9
    assert h_asym_left(erf, 1, -1000 + 50j).value is None


def test_h_left_no_log_term_for_m0(erf):
    a = h_asym_left(erf, 1, -10 + 50j).log
    b = h_asym_left(erf, 1, -10 + 500j).log
    assert abs((b - a) - (-2) * 450j) < 1e-9


def test_hprime_against_finite_differences(erf):
    errs = []
    for w in (60 + 100j, 80 + 300j, 100 + 1000j):
        h = 1e-4
        fd = (h_direct(erf, 1, w + h) - h_direct(erf, 1, w - h)) / (2 * h)
        assert abs(fd - hprime_direct(erf, 1, w)) <= 1e-8 * abs(fd)
        errs.append(abs(fd - hprime_asym(erf, 1, w)) / abs(fd) * abs(w) ** 0.5)
    # relative error at most C / |w|^(1/d) with one constant
    assert max(errs) < 1.0


def test_hprime_on_gamma_has_unit_correction(erf):
    for j, cj in enumerate(all_cj(erf), 1):
        x = gamma_solve(RegionSpec(0.5, 1 / abs(cj)), 500.0)
        w = complex(x, 500.0)
        assert abs(abs(c_term(erf, j, w)) - 1) < 1e-9
        assert abs(abs(hprime_direct(erf, j, w) - 1) - 1) < 0.01


def test_hprime_deep_right_is_one(erf):
    assert abs(hprime_asym(erf, 1, 500 + 400j) - 1) < 1e-12


@settings(max_examples=15, deadline=None)
@given(st.floats(40, 300), st.floats(40, 2000), st.sampled_from([1, 2]))
def test_h_direct_is_pushed_newton_step(x, y, j):
    prob = erf_problem()
    w = complex(x, y)
    h = h_direct(prob, j, w)
    via_step = prob.q(step(prob, phi(prob, j, w)))
    assert abs(h - via_step) <= 1e-8 * (1 + abs(h))


def test_fit_exponent_degenerate():
    assert fit_exponent([(1.0, 0.0), (2.0, 0.0)]) == math.inf
    assert abs(fit_exponent([(r, r**-1.5) for r in (1, 2, 4, 8)]) - 1.5) < 1e-12


def test_report_monotone_fraction():
    rep = AsymptoticReport("x", "r", [(1, 3.0), (2, 2.0), (3, 2.5), (4, 1.0)])
    assert rep.monotone_fraction == pytest.approx(2 / 3)


@pytest.mark.parametrize("formula,target", [("f_right", 0.3), ("h_right", 1.3), ("hprime_right", 0.3)])
def test_decay_scans(erf, formula, target):
    for j in (1, 2):
        rep = error_decay_scan(erf, j, formula, Ray("curve", mu=3, alpha=1, sign=1), n=12)
        assert rep.passes(target)


def test_scan_rejects_leaving_region(erf):
    with pytest.raises(RegionViolation):
        error_decay_scan(erf, 1, "h_right", Ray("radial", theta=math.pi), n=6)
