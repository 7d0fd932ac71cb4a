import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from newton_measure.core import Polynomial, Problem, erf_problem
from newton_measure.errors import NotInG
from newton_measure.sectors import (
    RegionSpec,
    Zone,
    ZoneParams,
    _bound_holds,
    calibrate_sector_constant,
    choose_R,
    gamma_curve,
    gamma_solve,
    in_G,
    in_H,
    on_Gamma_residual,
    phi,
    phi_array,
    radius,
    sector_of,
    sector_power,
    zone_classify,
)

# fixed point of x <- (1/2) log(x^2 + 100)
X_MU1_Y10 = 2.3289962165041


def cubic():
    return Problem(Polynomial.of(0, 0, 3), Polynomial.of(0, 0, 0, 1), 1)


# --- R ---------------------------------------------------------------------

def test_R_for_pure_square(erf):
    assert radius(erf) == 1
    assert _bound_holds(erf, 1.0)


def test_R_with_nonzero_critical_value():
    prob = Problem(Polynomial.of(0, 2), Polynomial.of(0, -2, 1), 0)
    R = choose_R(prob)
    assert R >= 2
    assert _bound_holds(prob, R)


# --- inverse branches ------------------------------------------------------

def test_phi_closed_form_square(erf):
    assert abs(phi(erf, 1, -4) - 2j) < 1e-12
    assert abs(phi(erf, 2, -4) + 2j) < 1e-12


def test_phi_cube_roots():
    prob = cubic()
    got = [phi(prob, j, -8) for j in (1, 2, 3)]
    want = [2 * np.exp(1j * math.pi / 3), -2, 2 * np.exp(5j * math.pi / 3)]
    for g, w in zip(got, want):
        assert abs(g - w) < 1e-12


def test_phi_rejects_cut_and_disk(erf):
    with pytest.raises(NotInG):
        phi(erf, 1, 5 + 0j)
    with pytest.raises(NotInG):
        phi(erf, 1, 0.5j)
    assert not in_G(erf, 3.0 + 0j)


wpt = st.tuples(st.floats(math.log(1.2), math.log(1e5)), st.floats(1e-3, 2 * math.pi - 1e-3))


@settings(max_examples=60, deadline=None)
@given(wpt)
def test_sector_cover(rt):
    prob = Problem(Polynomial.of(1, 0, 3), Polynomial.of(0, 1, 0, 1), 0)
    w = math.exp(rt[0]) * np.exp(1j * rt[1])
    if not in_G(prob, w):
        return
    zs = [phi(prob, j, w) for j in (1, 2, 3)]
    for z in zs:
        assert abs(prob.q(z) - w) <= 1e-10 * abs(w)
        assert abs(z) > 0.5 * radius(prob) ** (1 / 3)
    for a in range(3):
        for b in range(a + 1, 3):
            assert abs(zs[a] - zs[b]) > 1e-6


def test_sector_cover_batch_and_calibration():
    prob = Problem(Polynomial.of(1, 0, 3), Polynomial.of(0, 1, 0, 1), 0)
    rng = np.random.default_rng(0)
    w = np.exp(rng.uniform(math.log(1.05 * radius(prob)), math.log(1e4), 1000)) * np.exp(
        1j * rng.uniform(0, 2 * math.pi, 1000))
    zs = np.stack([phi_array(prob, j, w) for j in (1, 2, 3)])
    assert np.all(np.isfinite(zs))
    assert np.all(np.abs(prob.q(zs) - w) <= 1e-9 * np.abs(w))
    assert np.all(np.abs(zs[0] - zs[1]) > 1e-6) and np.all(np.abs(zs[1] - zs[2]) > 1e-6)
    c = calibrate_sector_constant(prob, 1000)
    assert math.isfinite(c)


def test_sector_of_roundtrip(erf):
    for j in (1, 2):
        z = phi(erf, j, -30 + 40j)
        assert sector_of(erf, z) == j


@settings(max_examples=30, deadline=None)
@given(st.floats(2, 1e4), st.floats(0.05, 3.1))
def test_sector_power_modulus(r, theta):
    prob = erf_problem()
    w = r * np.exp(1j * theta)
    for j in (1, 2):
        z = phi(prob, j, w)
        sp = sector_power(prob, j, z, 1.0)
        assert abs(abs(sp) - abs(z)) <= 1e-12 * abs(z)


def test_sector_power_continuous_along_path(erf):
    theta = np.linspace(0.01, 2 * math.pi - 0.01, 400)
    w = 50 * np.exp(1j * theta)
    for j in (1, 2):
        z = phi_array(erf, j, w)
        ph = np.angle(sector_power(erf, j, z, 1.0))
        assert np.max(np.abs(np.diff(np.unwrap(ph)) - np.diff(ph))) == 0 or np.max(
            np.abs(np.diff(ph))) < math.pi


# --- partition curves ------------------------------------------------------

def test_gamma_mu_zero_is_constant():
    for alpha in (0.1, 1.0, 7.0):
        for y in (0.0, 3.0, -1e5):
            assert abs(gamma_solve(RegionSpec(0.0, alpha), y) + math.log(alpha)) < 1e-15


def test_gamma_fixed_point_oracle():
    x = 5.0
    for _ in range(200):
        x = 0.5 * math.log(x * x + 100)
    assert abs(x - X_MU1_Y10) < 1e-12
    g = gamma_solve(RegionSpec(1.0, 1.0), 10.0)
    assert abs(g - X_MU1_Y10) < 1e-12
    assert abs(g - 2.32907) < 1e-4


@settings(max_examples=50, deadline=None)
@given(st.floats(-3, 3), st.floats(0.1, 10), st.floats(0, 1e6))
def test_gamma_even_in_y_and_on_curve(mu, alpha, t):
    y = 2 * abs(mu) + t
    a = gamma_solve(RegionSpec(mu, alpha), y)
    b = gamma_solve(RegionSpec(mu, alpha), -y)
    assert a == b
    assert abs(on_Gamma_residual(complex(a, y), RegionSpec(mu, alpha))) <= 1e-12


@settings(max_examples=50, deadline=None)
@given(st.floats(-3, 3), st.floats(0.1, 10), st.floats(0, 1e5), st.floats(1e-3, 50))
def test_gamma_monotonicity(mu, alpha, t, dx):
    spec = RegionSpec(mu, alpha)
    y = 2 * abs(mu) + t
    x = gamma_solve(spec, y)
    assert on_Gamma_residual(complex(x + dx, y), spec) > 0
    assert on_Gamma_residual(complex(x - dx, y), spec) < 0


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3), st.floats(0.1, 10), st.floats(0.1, 10))
def test_gamma_band(mu, alpha, beta):
    if alpha == beta:
        return
    alpha, beta = max(alpha, beta), min(alpha, beta)
    y = np.geomspace(2 * abs(mu) + 1, 1e6, 200)
    diff = gamma_curve(mu, beta, y) - gamma_curve(mu, alpha, y)
    la = math.log(alpha / beta)
    assert np.all(diff >= (2 / 3) * la - 1e-12)
    assert np.all(diff <= 2 * la + 1e-12)
    assert abs(diff[-1] - la) <= 1e-3


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3), st.floats(0.1, 10))
def test_gamma_slope_bound(mu, alpha):
    y = np.geomspace(2 * abs(mu) + 1, 1e6, 200)
    h = 1e-4 * y
    slope = (gamma_curve(mu, alpha, y + h) - gamma_curve(mu, alpha, y - h)) / (2 * h)
    assert np.all(np.abs(slope) <= 2 * abs(mu) / y + 1e-6)


def test_in_H_examples():
    s0 = RegionSpec(0.0, 1.0, 2.0)
    assert in_H(10 + 5j, s0)
    assert not in_H(-1 + 5j, s0)
    s1 = RegionSpec(1.0, 1.0, 2.0)
    assert in_H(2.4 + 10j, s1)
    assert not in_H(2.2 + 10j, s1)


def test_residual_examples():
    spec = RegionSpec(0.0, 1.0)
    assert on_Gamma_residual(5j, spec) == 0
    assert on_Gamma_residual(1 + 5j, spec) == 1


def test_region_spec_validation():
    with pytest.raises(ValueError):
        RegionSpec(1.0, -1.0)
    with pytest.raises(ValueError):
        RegionSpec(1.0, 1.0, 1.0)
    assert RegionSpec(1.5, 1.0).nu == 3.0


# --- zones -----------------------------------------------------------------

def test_zone_examples(erf):
    nu = ZoneParams().resolved_nu(0.5)
    assert zone_classify(erf, 1, 100 + 0.5j * nu) == Zone.NEAR_AXIS
    assert zone_classify(erf, 1, 500 + 100j) == Zone.RIGHT
    assert zone_classify(erf, 1, -500 + 100j) == Zone.LEFT


@settings(max_examples=100, deadline=None)
@given(st.floats(-300, 300), st.floats(-300, 300))
def test_zone_total(x, y):
    prob = erf_problem()
    z = zone_classify(prob, 1, complex(x, y))
    assert z in tuple(Zone)
