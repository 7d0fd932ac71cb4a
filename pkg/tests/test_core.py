import cmath
import json
import math

import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import dawsn

from newton_measure.core import (
    Polynomial,
    Problem,
    erf_problem,
    eval_f,
    eval_g,
    fprime_from_correction,
    gauss_kronrod,
    load_problem,
    newton_correction,
    normalize,
    parse_complex,
    poly_eval,
)
from newton_measure.errors import ConfigError, DegenerateProblem, OverflowRegion, PoleHit

MACLAURIN_ERF_1 = sum((-1) ** n / (math.factorial(n) * (2 * n + 1)) for n in range(20))

coef = st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False)
point = st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False)


def raw_gauss():
    return Problem(Polynomial.of(1), Polynomial.of(0, 0, -1), 0)


# --- polynomials -----------------------------------------------------------

def test_poly_eval_values():
    t2p1 = Polynomial.of(1, 0, 1)
    assert abs(poly_eval(t2p1, 1j)) == 0
    assert poly_eval(t2p1, 0) == 1
    assert poly_eval(Polynomial.of(0, -1, 0, 2), 2) == 14


def test_trailing_zeros_trimmed():
    p = Polynomial.of(1, 2, 0, 0)
    assert p.degree == 1 and p.leading == 2


def test_polynomial_arithmetic():
    a = Polynomial.of(1, 1)
    b = Polynomial.of(-1, 1)
    assert (a * b).coeffs == Polynomial.of(-1, 0, 1).coeffs
    assert (a - a).is_zero()
    assert (a + b).coeffs == Polynomial.of(0, 2).coeffs


def test_roots_of_t2_plus_1():
    r = sorted(Polynomial.of(1, 0, 1).roots(), key=lambda z: z.imag)
    assert abs(r[0] + 1j) < 1e-14 and abs(r[1] - 1j) < 1e-14


@settings(max_examples=40, deadline=None)
@given(st.lists(coef, min_size=2, max_size=6), st.lists(point, min_size=100, max_size=100))
def test_derivative_matches_finite_differences(cs, zs):
    p = Polynomial(tuple(cs))
    dp = p.derivative()
    h = 1e-5
    for z in zs:
        fd = (p(z + h) - p(z - h)) / (2 * h)
        exact = dp(z)
        scale = max(abs(exact), sum(abs(c) for c in cs[1:]) * 10, 1e-3)
        assert abs(fd - exact) <= 1e-6 * scale


# --- normalization ---------------------------------------------------------

def test_normalize_gauss_integral():
    prob, rec = normalize(Polynomial.of(1), Polynomial.of(0, 0, -1), 0.3)
    assert prob.p.coeffs == (2 + 0j,)
    assert prob.q.coeffs == (0j, 0j, 1 + 0j)
    assert prob.c == 0.6j
    assert (prob.d, prob.m, prob.lam) == (2, 0, 0.5)
    assert rec.alpha == 1j and rec.b == 2j


def test_normalize_identity_when_already_normal():
    p, q = Polynomial.of(0, 0, 3), Polynomial.of(1, 2, 0, 1)
    prob, rec = normalize(p, q, 0.5)
    assert rec.alpha == 1 and rec.b == 1
    assert prob.p.coeffs == p.coeffs and prob.q.coeffs == q.coeffs


def test_normalize_linear_q():
    prob, rec = normalize(Polynomial.of(1), Polynomial.of(0, 1), 1)
    assert prob.d == 1 and prob.p.leading == 1 and rec.b == 1 and prob.lam == 0


def test_degenerate_rejected():
    with pytest.raises(DegenerateProblem):
        normalize(Polynomial.of(1), Polynomial.of(3), 0)
    with pytest.raises(DegenerateProblem):
        normalize(Polynomial.of(0), Polynomial.of(0, 1), 0)


@settings(max_examples=10, deadline=None)
@given(st.floats(-0.8, 0.8), st.floats(-0.8, 0.8), st.floats(-0.8, 0.8))
def test_newton_map_conjugation(c, x, y):
    # alpha * f_raw(z) = f_norm(alpha * z)
    p_raw, q_raw = Polynomial.of(1, 0.5), Polynomial.of(0, 0.3, -1)
    raw = Problem(p_raw, q_raw, c)
    norm, rec = normalize(p_raw, q_raw, c)
    z = complex(x, y)
    try:
        fr = eval_f(raw, z)
    except PoleHit:
        return
    fn = eval_f(norm, rec.alpha * z)
    assert abs(rec.alpha * fr - fn) <= 1e-8 * max(1.0, abs(fn))


# --- evaluation of g -------------------------------------------------------

def test_eval_g_gauss_integral_at_one():
    assert abs(eval_g(raw_gauss(), 1) - MACLAURIN_ERF_1) < 1e-13
    assert abs(MACLAURIN_ERF_1 - 0.746824132812427) < 1e-14


def test_eval_g_zero_is_c():
    prob = erf_problem(0.3)
    assert eval_g(prob, 0) == prob.c


def test_eval_g_closed_form():
    prob = Problem(Polynomial.of(0, 2), Polynomial.of(0, 0, 1), 0)
    assert abs(eval_g(prob, 1) - (math.e - 1)) < 1e-13


def test_eval_g_refuses_overflow():
    with pytest.raises(OverflowRegion):
        eval_g(erf_problem(), 30 + 0j)


@settings(max_examples=20, deadline=None)
@given(st.floats(-6, 6), st.floats(-6, 6))
def test_path_independence(x, y):
    prob = erf_problem(0.3)
    z = complex(x, y)
    mid = z / 2 + 1j
    direct = eval_g(prob, z, 1e-13)
    detour = eval_g(prob, z, 1e-13, path=[mid])
    scale = max(abs(direct), abs(prob.p(z) * cmath.exp(prob.q(z))), 1.0)
    assert abs(direct - detour) <= 1e-11 * scale


def test_gauss_kronrod_polynomial_exact():
    val = gauss_kronrod(lambda s: s**20, 1e-14)[0]
    assert abs(val - 1 / 21) < 1e-15


# --- Newton map ------------------------------------------------------------

def test_eval_f_gauss_integral():
    f1 = eval_f(raw_gauss(), 1)
    assert abs(f1 - (1 - MACLAURIN_ERF_1 * math.e)) < 1e-12
    assert abs(f1 - (-1.0300785)) < 1e-7


@settings(max_examples=30, deadline=None)
@given(st.floats(-5, 5), st.floats(-5, 5))
def test_correction_matches_dawson_oracle(x, y):
    # normalized erf: delta = D(z) + 0.3i exp(-z^2); D real-axis oracle via scipy
    prob = erf_problem(0.3)
    z = complex(x, 0.0)
    delta = newton_correction(prob, z)
    expect = dawsn(x) + 0.3j * math.exp(-x * x)
    assert abs(delta - expect) <= 1e-12 * (1 + abs(expect))


def test_fixed_point_at_root(erf0):
    assert abs(eval_f(erf0, 0)) == 0


def test_pole_hit():
    prob = Problem(Polynomial.of(0, 1), Polynomial.of(0, 0, 1), 1.0)
    with pytest.raises(PoleHit):
        eval_f(prob, 0)


@settings(max_examples=20, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_eval_f_matches_log_derivative(x, y):
    prob = erf_problem(0.3)
    z = complex(x, y)
    g = eval_g(prob, z, 1e-14)
    if abs(g) < 1e-3:
        return
    h = 1e-5
    dlog = (eval_g(prob, z + h, 1e-14) - eval_g(prob, z - h, 1e-14)) / (2 * h) / g
    expect = z - 1 / dlog
    assert abs(eval_f(prob, z) - expect) <= 1e-5 * max(1.0, abs(expect))


def test_fprime_vanishes_at_root(erf0):
    d = newton_correction(erf0, 1e-9 + 0j)
    assert abs(fprime_from_correction(erf0, 1e-9 + 0j, d)) < 1e-6


# --- ingestion -------------------------------------------------------------

def test_parse_complex_forms():
    assert parse_complex("0.1") == 0.1
    assert parse_complex(["1", 2]) == 1 + 2j
    with pytest.raises(ConfigError):
        parse_complex(True)
    with pytest.raises(ConfigError):
        parse_complex("abc")


def test_load_problem_file(tmp_path):
    path = tmp_path / "p.json"
    path.write_text(json.dumps({"p": [1], "q": [0, 0, -1], "c": "0.3"}))
    lp = load_problem(path)
    assert lp.problem.c == 0.6j and lp.raw.c == 0.3


@pytest.mark.parametrize("doc", ["{bad", "[]", '{"p": [1]}', '{"p": [1], "q": [5]}', '{"p": [], "q": [0,1]}'])
def test_load_problem_rejects(tmp_path, doc):
    path = tmp_path / "p.json"
    path.write_text(doc)
    with pytest.raises(ConfigError):
        load_problem(path)
