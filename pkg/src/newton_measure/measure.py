"""Fatou-density estimates and the measure-zero evidence studies.

A point counts as Fatou when its orbit converges to a root (or to an
attracting cycle). Unresolved orbits are counted separately and never as
Julia points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from .core import Problem
from .dynamics import OrbitBatch, OrbitSettings, Verdict, iterate_many, iterate_orbit
from .roots import RootRegistry, basin_disk_radius, critical_points


# --------------------------------------------------------------------------
# shapes and sampling
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Disk:
    center: complex
    r: float

    @property
    def area(self) -> float:
        return math.pi * self.r**2

    def sample(self, u: np.ndarray) -> np.ndarray:
        # area-preserving map of the unit square onto the disk
        rho = self.r * np.sqrt(u[:, 0])
        theta = 2 * math.pi * u[:, 1]
        return self.center + rho * np.exp(1j * theta)

    def contains(self, z) -> np.ndarray:
        return np.abs(np.asarray(z) - self.center) <= self.r


@dataclass(frozen=True)
class Rect:
    x0: float
    y0: float
    x1: float
    y1: float

    @property
    def area(self) -> float:
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    def sample(self, u: np.ndarray) -> np.ndarray:
        return (self.x0 + (self.x1 - self.x0) * u[:, 0]) + 1j * (
            self.y0 + (self.y1 - self.y0) * u[:, 1])

    def contains(self, z) -> np.ndarray:
        z = np.asarray(z)
        return (z.real >= self.x0) & (z.real <= self.x1) & (z.imag >= self.y0) & (z.imag <= self.y1)


def unit_samples(n: int, seed: int, skip: int = 0) -> np.ndarray:
    """Scrambled Halton points in the unit square."""
    h = qmc.Halton(d=2, scramble=True, seed=seed)
    if skip:
        h.fast_forward(skip)
    return h.random(n)


def half_width(p: float, n: int) -> float:
    return 1.96 * math.sqrt(max(p * (1 - p), 0.0) / n) if n else math.inf


@dataclass
class DensityReport:
    shape: Disk | Rect
    n: int
    fatou: int
    unresolved: int
    escaped: int = 0
    seed: int = 0
    budget: int = 0

    @property
    def density(self) -> float:
        return self.fatou / self.n

    @property
    def half_width(self) -> float:
        return half_width(self.density, self.n)

    def merge(self, other: "DensityReport") -> "DensityReport":
        if other.shape != self.shape or other.budget != self.budget:
            raise ValueError("can only merge reports for the same shape and budget")
        return DensityReport(self.shape, self.n + other.n, self.fatou + other.fatou,
                             self.unresolved + other.unresolved, self.escaped + other.escaped,
                             self.seed, self.budget)

    def csv_row(self) -> list[str]:
        s = self.shape
        if isinstance(s, Disk):
            cre, cim, r = s.center.real, s.center.imag, s.r
        else:
            cre, cim = (s.x0 + s.x1) / 2, (s.y0 + s.y1) / 2
            r = math.hypot(s.x1 - s.x0, s.y1 - s.y0) / 2
        return [f"{cre:.17g}", f"{cim:.17g}", f"{r:.17g}", str(self.n), str(self.fatou),
                str(self.unresolved), f"{self.density:.17g}", f"{self.half_width:.17g}"]


DENSITY_HEADER = ["center_re", "center_im", "r", "n", "fatou", "unresolved", "density", "halfwidth"]


def _report(shape, batch: OrbitBatch, seed: int, budget: int) -> DensityReport:
    return DensityReport(shape, len(batch), int(batch.fatou_mask().sum()),
                         int((batch.verdict == Verdict.UNRESOLVED).sum()),
                         int((batch.verdict == Verdict.ESCAPED).sum()), seed, budget)


def density(prob: Problem, shape: Disk | Rect, n: int = 1000, budget: int = 200, seed: int = 0,
            skip: int = 0, settings: OrbitSettings = OrbitSettings()) -> DensityReport:
    if n < 100:
        raise ValueError("need at least 100 samples")
    z = shape.sample(unit_samples(n, seed, skip))
    return _report(shape, iterate_many(prob, z, budget, settings), seed, budget)


def density_shards(prob: Problem, shape, n: int, shards: int, budget: int = 200, seed: int = 0
                   ) -> DensityReport:
    """Same samples as ``density(n)`` split into consecutive shards and merged."""
    size = n // shards
    out = None
    for s in range(shards):
        m = size if s < shards - 1 else n - size * (shards - 1)
        z = shape.sample(unit_samples(m, seed, s * size))
        rep = _report(shape, iterate_many(prob, z, budget), seed, budget)
        out = rep if out is None else out.merge(rep)
    return out


def density_many(prob: Problem, shapes: list, n: int, budget: int = 200, seed: int = 0
                 ) -> list[DensityReport]:
    """Density in several shapes from one batched orbit run."""
    u = unit_samples(n, seed)
    z = np.concatenate([s.sample(u) for s in shapes])
    batch = iterate_many(prob, z, budget)
    out = []
    for i, s in enumerate(shapes):
        sl = slice(i * n, (i + 1) * n)
        sub = OrbitBatch(batch.verdict[sl], batch.iterations[sl], batch.final[sl],
                         batch.period[sl], batch.multiplier[sl])
        out.append(_report(s, sub, seed, budget))
    return out


# --------------------------------------------------------------------------
# thinness scans
# --------------------------------------------------------------------------

@dataclass
class ScanReport:
    label: str
    reports: list[DensityReport] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def minimum(self) -> float:
        return min(r.density for r in self.reports) if self.reports else math.nan

    def argmin(self) -> DensityReport:
        return min(self.reports, key=lambda r: r.density)

    def csv_rows(self) -> list[list[str]]:
        return [r.csv_row() for r in self.reports]


def thin_at_infinity_scan(prob: Problem, R0: float = 3.0, window=(-20.0, -20.0, 20.0, 20.0),
                          grid: tuple[int, int] = (15, 15), n: int = 256, budget: int = 200,
                          seed: int = 0) -> ScanReport:
    x0, y0, x1, y1 = window
    xs = np.linspace(x0, x1, grid[0])
    ys = np.linspace(y0, y1, grid[1])
    shapes = [Disk(complex(x, y), R0) for y in ys for x in xs]
    reps = density_many(prob, shapes, n, budget, seed)
    return ScanReport("thin_at_infinity", reps, {"R0": R0, "window": window, "grid": grid,
                                                 "n": n, "budget": budget, "seed": seed})


def uniform_thinness_check(prob: Problem, registry: RootRegistry, R1: float = 5.0,
                           deltas=(0.05, 0.2, 0.8), n: int = 128, ring_points: int = 8,
                           budget: int = 200, seed: int = 0) -> ScanReport:
    """Density in D(z, |z - z0|) for z on rings around roots z0 beyond R1."""
    roots = [r.z for r in registry if abs(r.z) > R1]
    shapes = []
    for z0 in roots:
        for dlt in deltas:
            for k in range(ring_points):
                z = z0 + dlt * np.exp(2j * math.pi * (k + 0.5) / ring_points)
                shapes.append(Disk(complex(z), dlt))
    reps = density_many(prob, shapes, n, budget, seed) if shapes else []
    return ScanReport("uniform_thinness", reps, {"R1": R1, "deltas": tuple(deltas),
                                                 "roots": len(roots), "n": n,
                                                 "budget": budget, "seed": seed})


def disk_overlap_fraction(inner: Disk, outer: Disk) -> float:
    """Area of inner intersected with outer, as a fraction of outer's area."""
    d = abs(inner.center - outer.center)
    r, R = inner.r, outer.r
    if d >= r + R:
        return 0.0
    if d <= abs(R - r):
        return min(r, R) ** 2 / R**2
    a = r * r * math.acos((d * d + r * r - R * R) / (2 * d * r))
    b = R * R * math.acos((d * d + R * R - r * r) / (2 * d * R))
    c = 0.5 * math.sqrt((-d + r + R) * (d + r - R) * (d - r + R) * (d + r + R))
    return (a + b - c) / (math.pi * R * R)


# --------------------------------------------------------------------------
# singular orbits
# --------------------------------------------------------------------------

@dataclass
class PostsingularReport:
    entries: list = field(default_factory=list)  # (critical point, OrbitResult)

    @property
    def passed(self) -> bool:
        for _, res in self.entries:
            if res.verdict == Verdict.CONVERGED:
                continue
            if res.verdict == Verdict.CYCLE and res.multiplier is not None and abs(res.multiplier) < 1:
                continue
            return False
        return True

    def offending(self) -> list:
        return [(z, r) for z, r in self.entries
                if r.verdict not in (Verdict.CONVERGED, Verdict.CYCLE)]


def postsingular_check(prob: Problem, budget: int = 200,
                       registry: RootRegistry | None = None) -> PostsingularReport:
    rep = PostsingularReport()
    for z in critical_points(prob):
        rep.entries.append((z, iterate_orbit(prob, z, budget, registry=registry)))
    return rep


# --------------------------------------------------------------------------
# area study
# --------------------------------------------------------------------------

def pixel_centers(window, res: int) -> np.ndarray:
    x0, y0, x1, y1 = window
    xs = x0 + (np.arange(res) + 0.5) * (x1 - x0) / res
    ys = y1 - (np.arange(res) + 0.5) * (y1 - y0) / res  # top row first
    return xs[None, :] + 1j * ys[:, None]


@dataclass
class AreaStudy:
    window: tuple
    resolutions: tuple
    budgets: tuple
    fractions: np.ndarray  # [resolution index, budget index]
    batches: dict = field(default_factory=dict, repr=False)

    def diagonal(self) -> list[float]:
        k = min(len(self.resolutions), len(self.budgets))
        return [float(self.fractions[i, i]) for i in range(k)]

    def diagonal_decreasing(self) -> bool:
        dg = self.diagonal()
        return all(b < a for a, b in zip(dg[:-1], dg[1:]))

    def evidence(self, ceiling: float = 0.005) -> bool:
        return self.diagonal_decreasing() and self.diagonal()[-1] <= ceiling

    def csv_rows(self) -> list[list[str]]:
        return [[str(r), str(b), f"{self.fractions[i, k]:.17g}"]
                for i, r in enumerate(self.resolutions) for k, b in enumerate(self.budgets)]


AREA_HEADER = ["resolution", "budget", "unresolved_fraction"]


def classify_grid(prob: Problem, window, res: int, budget: int) -> OrbitBatch:
    return iterate_many(prob, pixel_centers(window, res).ravel(), budget)


def julia_area_study(prob: Problem, window=(-4.0, -4.0, 4.0, 4.0), resolutions=(256, 512, 1024),
                     budgets=(50, 100, 200), keep_batches: bool = False) -> AreaStudy:
    resolutions, budgets = tuple(resolutions), tuple(budgets)
    if list(resolutions) != sorted(set(resolutions)) or list(budgets) != sorted(set(budgets)):
        raise ValueError("resolutions and budgets must be strictly increasing")
    frac = np.zeros((len(resolutions), len(budgets)))
    batches = {}
    for i, res in enumerate(resolutions):
        # a single run at the largest budget fixes every smaller budget too
        batch = classify_grid(prob, window, res, budgets[-1])
        for k, b in enumerate(budgets):
            frac[i, k] = float(np.mean(batch.at_budget(b).verdict == Verdict.UNRESOLVED))
        if keep_batches:
            batches[res] = batch
    return AreaStudy(tuple(window), resolutions, budgets, frac, batches)


def basin_disk_samples(prob: Problem, z0: complex, n: int, seed: int = 0, r1: float = 10.0
                       ) -> np.ndarray:
    r = basin_disk_radius(prob, z0, r1)
    return Disk(complex(z0), r).sample(unit_samples(n, seed))


def wplane_square_density(prob: Problem, j: int, center: complex, side: float, n: int = 256,
                          budget: int = 200, seed: int = 0) -> DensityReport:
    """Fatou density of q(F) in a w-plane square, via z = phi_j(w)."""
    from .sectors import phi_array

    half = side / 2
    sq = Rect(center.real - half, center.imag - half, center.real + half, center.imag + half)
    w = sq.sample(unit_samples(n, seed))
    z = phi_array(prob, j, w)
    ok = np.isfinite(z)
    batch = iterate_many(prob, z[ok], budget)
    rep = _report(sq, batch, seed, budget)
    return rep
