"""Zeros of g: lattice anchors, refinement, registry, basin disks, critical points."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .asym import estimate_cj
from .core import E_MAX, Problem, Polynomial, eval_g
from .errors import AnchorTooLow, BelowThreshold, DivergedFromSeed, MaxIterations
from .sectors import RegionSpec, gamma_solve, phi

R1_DEFAULT = 10.0


def match_radius(z) -> float:
    return 1e-6 * (1 + abs(z))


@dataclass(frozen=True)
class RootRecord:
    z: complex
    residual: float = 0.0
    simple: bool = True


@dataclass
class RootRegistry:
    """Registered zeros of g, kept sorted by (Re, Im)."""

    roots: list[RootRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.roots)

    def __iter__(self):
        return iter(self.roots)

    @property
    def locations(self) -> np.ndarray:
        return np.array([r.z for r in self.roots], dtype=complex)

    def match(self, z: complex) -> int | None:
        z = complex(z)
        best, best_d = None, math.inf
        for i, r in enumerate(self.roots):
            d = abs(r.z - z)
            if d <= match_radius(z) and d < best_d:
                best, best_d = i, d
        return best

    def _sort(self) -> None:
        self.roots.sort(key=lambda r: (r.z.real, r.z.imag))

    def register(self, z: complex, residual: float = 0.0, simple: bool = True) -> int:
        i = self.match(z)
        if i is None:
            self.roots.append(RootRecord(complex(z), float(residual), simple))
            self._sort()
            i = self.match(z)
        return i

    def merge(self, other: "RootRegistry") -> "RootRegistry":
        out = RootRegistry(list(self.roots))
        for r in other.roots:
            if out.match(r.z) is None:
                out.roots.append(r)
        out._sort()
        return out

    def register_many(self, points: np.ndarray) -> None:
        """Cluster converged end points and register one representative each."""
        pts = np.asarray(points, dtype=complex).ravel()
        if pts.size == 0:
            return
        for z in cluster_points(pts):
            if self.match(z) is None:
                self.roots.append(RootRecord(complex(z)))
        self._sort()

    def assign(self, points: np.ndarray) -> np.ndarray:
        """Registry index for each point, -1 where nothing matches."""
        pts = np.asarray(points, dtype=complex).ravel()
        out = np.full(pts.shape, -1, dtype=np.int32)
        if not self.roots or pts.size == 0:
            return out
        loc = self.locations
        tree = cKDTree(np.column_stack([loc.real, loc.imag]))
        dist, idx = tree.query(np.column_stack([pts.real, pts.imag]))
        ok = dist <= 1e-6 * (1 + np.abs(pts))
        out[ok] = idx[ok]
        return out


def cluster_points(points: np.ndarray) -> list[complex]:
    """Representatives of points grouped within the matching radius."""
    pts = np.sort_complex(np.asarray(points, dtype=complex).ravel())
    if pts.size == 0:
        return []
    tree = cKDTree(np.column_stack([pts.real, pts.imag]))
    taken = np.zeros(pts.size, dtype=bool)
    reps = []
    for i in range(pts.size):
        if taken[i]:
            continue
        r = 2e-6 * (1 + abs(pts[i]))
        members = tree.query_ball_point([pts[i].real, pts[i].imag], r)
        taken[members] = True
        reps.append(complex(pts[i]))
    return reps


# --------------------------------------------------------------------------
# anchors
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ZeroAnchor:
    j: int
    k: int
    v: complex


def y_anchor(prob: Problem, j: int, n: int) -> float:
    cj = estimate_cj(prob, j)
    lam = float(prob.lam)
    base = cmath.phase(-cj)
    if n >= 0:
        return base + lam * (math.pi / 2 + 2 * math.pi * (j - 1)) + 2 * n * math.pi
    return base + lam * (-math.pi / 2 + 2 * math.pi * j) + 2 * n * math.pi


def v_anchor(prob: Problem, j: int, k: int) -> ZeroAnchor:
    """Predicted image q(z0) of a zero: the point of Gamma(lambda, 1/|c_j|)
    at height y_anchor(j, k)."""
    lam = float(prob.lam)
    y = y_anchor(prob, j, k)
    if abs(y) < 2 * abs(lam):
        raise AnchorTooLow(f"|Im v_{{{j},{k}}}| = {abs(y):.3g} < 2|lambda|")
    cj = estimate_cj(prob, j)
    x = gamma_solve(RegionSpec(lam, 1.0 / abs(cj)), y)
    return ZeroAnchor(j, k, complex(x, y))


# --------------------------------------------------------------------------
# refinement
# --------------------------------------------------------------------------

def newton_residual(prob: Problem, z: complex, g: complex | None = None, tol: float = 1e-13) -> float:
    """|g(z)| / |g'(z)|."""
    if g is None:
        g = eval_g(prob, z, tol)
    return abs(g * cmath.exp(-prob.q(z)) / prob.p(z))


def refine_zero(prob: Problem, guess: complex, tol: float = 1e-13,
                registry: RootRegistry | None = None, maxit: int = 50,
                quad_tol: float = 1e-13) -> complex:
    """Damped Newton on g from ``guess``."""
    guess = complex(guess)
    z = guess
    if abs(prob.q(z).real) > E_MAX:
        from .errors import OverflowRegion

        raise OverflowRegion("guess lies outside the quadrature range")
    g = eval_g(prob, z, quad_tol)
    for _ in range(maxit):
        step = g * cmath.exp(-prob.q(z)) / prob.p(z)
        if abs(step) <= tol * (1 + abs(z)):
            if registry is not None:
                registry.register(z, abs(step))
            return z
        lam = 1.0
        while True:
            zn = z - lam * step
            gn = eval_g(prob, zn, quad_tol)
            if abs(gn) < abs(g) or lam < 1e-3:
                break
            lam *= 0.5
        z, g = zn, gn
        if abs(z - guess) > 2:
            raise DivergedFromSeed(f"iterate {z} moved more than 2 from {guess}")
    raise MaxIterations(f"no convergence from {guess} in {maxit} steps")


def basin_disk_radius(prob: Problem, z0: complex, r1: float = R1_DEFAULT) -> float:
    if abs(z0) < r1:
        raise BelowThreshold(f"|z0| = {abs(z0):.3g} < r1 = {r1}")
    return 1.0 / (3 * prob.d * abs(z0) ** (prob.d - 1))


def critical_polynomial(prob: Problem) -> Polynomial:
    """p q' + p', the polynomial factor of g''."""
    return prob.p * prob.dq + prob.dp


def critical_points(prob: Problem, filtered: bool = True, tol: float = 1e-10) -> list[complex]:
    roots = critical_polynomial(prob).roots()
    out = []
    for z in roots:
        z = complex(z)
        if filtered:
            if abs(prob.p(z)) < tol:
                continue
            if abs(eval_g(prob, z, 1e-13)) < tol * (1 + abs(prob.c)):
                continue
        out.append(z)
    return sorted(out, key=lambda z: (z.real, z.imag))


# --------------------------------------------------------------------------
# scans
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ZeroRow:
    j: int
    k: int
    v: complex
    seed: complex
    root: complex
    distance: float
    residual: float

    def csv(self) -> list[str]:
        def c(x: complex) -> str:
            return f"{x.real:.17g}{x.imag:+.17g}j"

        return [str(self.j), str(self.k), c(self.v), c(self.seed), c(self.root),
                f"{self.distance:.17g}", f"{self.residual:.17g}"]


ZERO_HEADER = ["j", "k", "v", "seed", "root", "abs_q_root_minus_v", "residual"]


def zero_scan(prob: Problem, js, ks, registry: RootRegistry | None = None,
              tol: float = 1e-13) -> tuple[list[ZeroRow], RootRegistry]:
    registry = registry if registry is not None else RootRegistry()
    rows = []
    for j in js:
        for k in ks:
            a = v_anchor(prob, j, k)
            seed = phi(prob, j, a.v)
            root = refine_zero(prob, seed, tol, registry)
            rows.append(ZeroRow(j, k, a.v, seed, root, abs(prob.q(root) - a.v),
                                newton_residual(prob, root)))
    return rows, registry


def arg_law_deviation(prob: Problem, j: int, root: complex) -> float:
    """Distance of arg(root) from pi/(2d) + 2pi(j-1)/d (mirrored below the axis)."""
    d = prob.d
    w = prob.q(root)
    if w.imag >= 0:
        target = math.pi / (2 * d) + 2 * math.pi * (j - 1) / d
    else:
        target = -math.pi / (2 * d) + 2 * math.pi * j / d
    a = cmath.phase(root)
    return abs((a - target + math.pi) % (2 * math.pi) - math.pi)
