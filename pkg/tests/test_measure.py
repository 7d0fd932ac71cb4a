
import numpy as np
import pytest

from newton_measure.dynamics import Verdict
from newton_measure.measure import (
    Disk,
    Rect,
    ScanReport,
    density,
    density_shards,
    disk_overlap_fraction,
    half_width,
    julia_area_study,
    pixel_centers,
    postsingular_check,
    thin_at_infinity_scan,
    uniform_thinness_check,
    unit_samples,
    wplane_square_density,
)
from newton_measure.roots import RootRegistry, basin_disk_radius

# Fatou fraction of the 401x401 grid points inside D(0, 4) at budget 200
GRID_DENSITY_D04 = 0.5073032500457697


def largest_root(reg):
    return max((r.z for r in reg), key=abs)


def test_samples_stay_in_shapes():
    u = unit_samples(500, 3)
    d = Disk(1 + 2j, 0.5)
    r = Rect(-1, 0, 2, 5)
    assert np.all(d.contains(d.sample(u)))
    assert np.all(r.contains(r.sample(u)))
    assert np.all((u >= 0) & (u < 1))


def test_half_width_formula():
    assert half_width(0.5, 100) == pytest.approx(1.96 * 0.05)
    assert half_width(1.0, 100) == 0


def test_density_needs_samples(erf):
    with pytest.raises(ValueError):
        density(erf, Disk(0j, 1), 50)


def test_density_inside_basin_disk(erf_registry, erf):
    _, reg = erf_registry
    z0 = largest_root(reg)
    rep = density(erf, Disk(z0, 0.9 * basin_disk_radius(erf, z0)), 200)
    assert rep.density == 1 and rep.unresolved == 0


def test_density_deterministic(erf):
    a = density(erf, Disk(1 + 1j, 1), 300, seed=7)
    b = density(erf, Disk(1 + 1j, 1), 300, seed=7)
    assert a == b and a.csv_row() == b.csv_row()


def test_shards_merge_to_single_run(erf):
    shape = Disk(0.5 - 1j, 2)
    one = density(erf, shape, 600, seed=2)
    merged = density_shards(erf, shape, 600, 3, seed=2)
    assert (merged.n, merged.fatou, merged.unresolved) == (one.n, one.fatou, one.unresolved)


def test_density_d04_against_grid_oracle(erf):
    rep = density(erf, Disk(0j, 4), 10000, 200, 0)
    assert abs(rep.density - GRID_DENSITY_D04) <= 2 * rep.half_width


def test_nested_disks(erf):
    inner = density(erf, Disk(0.3 + 0.2j, 1), 1000, seed=1)
    outer = density(erf, Disk(0.3 + 0.2j, 2), 1000, seed=1)
    ratio = Disk(0j, 1).area / Disk(0j, 2).area
    assert inner.density * ratio <= outer.density * (1 + 3 * outer.half_width)


def test_overlap_fraction_geometry():
    assert disk_overlap_fraction(Disk(0j, 1), Disk(5 + 0j, 1)) == 0
    assert disk_overlap_fraction(Disk(0j, 1), Disk(0j, 2)) == pytest.approx(0.25)
    half = disk_overlap_fraction(Disk(0j, 100), Disk(100 + 0j, 1))
    assert 0.45 < half < 0.55


# --- scans -----------------------------------------------------------------

def test_thin_scan_toy_window(erf_registry, erf):
    _, reg = erf_registry
    z0 = largest_root(reg)
    r = basin_disk_radius(erf, z0) / 4
    win = (z0.real - r, z0.imag - r, z0.real + r, z0.imag + r)
    scan = thin_at_infinity_scan(erf, r / 2, win, (2, 2), 128)
    assert scan.minimum == 1
    assert scan.meta["R0"] == r / 2


def test_uniform_thinness_overlap_bound(erf_registry, erf):
    _, reg = erf_registry
    z0 = largest_root(reg)
    rb = basin_disk_radius(erf, z0)
    sub = RootRegistry()
    sub.register(z0)
    scan = uniform_thinness_check(erf, sub, 5.0, deltas=(rb / 2, 2 * rb), n=256, ring_points=4)
    for rep in scan.reports:
        frac = disk_overlap_fraction(Disk(z0, rb), rep.shape)
        assert rep.density >= frac - 3 * half_width(frac, rep.n) - 1e-12


def test_uniform_thinness_min_semantics(erf_registry, erf):
    _, reg = erf_registry
    sub = RootRegistry()
    for z in sorted((r.z for r in reg), key=abs)[-3:]:
        sub.register(z)
    few = uniform_thinness_check(erf, sub, 5.0, deltas=(0.2,), n=64)
    more = uniform_thinness_check(erf, sub, 5.0, deltas=(0.2, 0.8), n=64)
    assert more.minimum <= few.minimum
    assert ScanReport("x").reports == []


def test_postsingular(erf, erf0):
    rep = postsingular_check(erf)
    assert rep.passed and rep.entries[0][1].verdict == Verdict.CONVERGED
    assert postsingular_check(erf0).passed and postsingular_check(erf0).entries == []
    short = postsingular_check(erf, budget=1)
    assert not short.passed
    assert short.offending()[0][1].verdict == Verdict.UNRESOLVED


# --- area study ------------------------------------------------------------

def test_pixel_centers_orientation():
    c = pixel_centers((0, 0, 2, 2), 2)
    assert c[0, 0] == 0.5 + 1.5j and c[1, 1] == 1.5 + 0.5j


def test_area_study_inside_basin(erf_registry, erf):
    _, reg = erf_registry
    z0 = largest_root(reg)
    r = basin_disk_radius(erf, z0) / 3
    st_ = julia_area_study(erf, (z0.real - r, z0.imag - r, z0.real + r, z0.imag + r), (16, 32), (5, 10))
    assert np.all(st_.fractions == 0)


def test_area_study_budget_monotone(erf):
    st_ = julia_area_study(erf, (-4, -4, 4, 4), (32, 64), (20, 40, 80))
    assert np.all(np.diff(st_.fractions, axis=1) <= 0)
    assert len(st_.csv_rows()) == 6
    with pytest.raises(ValueError):
        julia_area_study(erf, (-4, -4, 4, 4), (64, 32), (20,))


@pytest.mark.parametrize("center", [-60 + 40j, -20 - 80j, 30 + 60j, 80 - 30j, -90 + 90j])
def test_wplane_squares_have_fatou_points(erf, center):
    for j in (1, 2):
        rep = wplane_square_density(erf, j, center, 10.0, 128)
        assert rep.density > 0
