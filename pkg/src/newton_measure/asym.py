"""Sector constants c_j and the asymptotic forms of g, f and h_j = q o f o phi_j.

Along leftward directions inside S_j, g tends to a constant c_j. With
lambda = (d - 1 - m)/d the leading behaviour is

    g(z)  = c_j + (p/q')(z) (1 + lambda/z^d + ...) exp(q(z))
    f(z)  = z - (1/q')(1 + lambda/z^d) - c_j exp(-q)/p
    h_j(w) = w - 1 + (2m+1-d)/(2d w) - c_j exp(-w) phi_j(w)^(d lambda)

Every ``*_asym`` function returns the closed-form part; ``error_decay_scan``
measures the dropped remainder against direct evaluation.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import E_MAX, Problem, eval_f, eval_g, fprime_from_correction, newton_correction
from .errors import BakerDomainLikely, OverflowRegion, RegionViolation
from .sectors import (
    RegionSpec,
    ZoneParams,
    gamma_curve,
    in_H,
    phi,
    radius,
    sector_power,
    zone_classify_array,
    Zone,
)

X_LIMIT = 600.0


def estimate_cj(prob: Problem, j: int, X: float | None = None, tol: float = 1e-12) -> complex:
    """Limit of g along phi_j(-X) as X grows, by doubling X."""
    if j in prob.cj:
        return prob.cj[j]
    R = radius(prob)
    X = max(float(X or 0.0), R + 2.0)
    prev = None
    while X <= X_LIMIT:
        v = eval_g(prob, phi(prob, j, complex(-X, 0.0)), tol)
        if prev is not None and abs(v - prev) <= tol * abs(v) and abs(v) > 1e3 * tol:
            prob.cj[j] = v
            return v
        prev = v
        X *= 2.0
    raise BakerDomainLikely(
        f"c_{j} did not settle by X={X_LIMIT} (last value {prev}); "
        "c_j vanishes or is undetermined: Baker domain likely")


def all_cj(prob: Problem) -> list[complex]:
    return [estimate_cj(prob, j) for j in range(1, prob.d + 1)]


def _require_far(prob: Problem, w: complex) -> None:
    if abs(w) <= radius(prob):
        raise RegionViolation(f"|q(z)| = {abs(w):.3g} is not beyond R")


def g_asym(prob: Problem, j: int, z: complex) -> complex:
    cj = estimate_cj(prob, j)
    w = prob.q(z)
    return cj + prob.p(z) / prob.dq(z) * (1 + float(prob.lam) / w) * cmath.exp(w)


def f_asym(prob: Problem, j: int, z: complex) -> complex:
    cj = estimate_cj(prob, j)
    z = complex(z)
    w = prob.q(z)
    _require_far(prob, w)
    if w.real < -E_MAX / 2:
        raise OverflowRegion("exp(-q) overflows; use h_asym_left")
    lam = float(prob.lam)
    return z - (1 + lam / z**prob.d) / prob.dq(z) - cj * cmath.exp(-w) / prob.p(z)


def h_direct(prob: Problem, j: int, w: complex, tol: float = 1e-12) -> complex:
    z = phi(prob, j, w)
    return complex(prob.q(eval_f(prob, z, tol)))


def hprime_direct(prob: Problem, j: int, w: complex, tol: float = 1e-12) -> complex:
    """h_j'(w) = q'(f(z)) f'(z) / q'(z) with z = phi_j(w)."""
    z = phi(prob, j, w)
    delta = newton_correction(prob, z, tol)
    fz = z - delta
    return complex(prob.dq(fz) * fprime_from_correction(prob, z, delta) / prob.dq(z))


def _middle_coeff(prob: Problem) -> float:
    return (2 * prob.m + 1 - prob.d) / (2 * prob.d)


def c_term(prob: Problem, j: int, w: complex, z: complex | None = None) -> complex:
    """c_j exp(-w) phi_j(w)^(d lambda)."""
    cj = estimate_cj(prob, j)
    if z is None:
        z = phi(prob, j, w)
    dl = prob.d - 1 - prob.m
    return complex(cj * np.exp(-w) * sector_power(prob, j, z, dl))


def h_asym_right(prob: Problem, j: int, w: complex) -> complex:
    return w - 1 + _middle_coeff(prob) / w - c_term(prob, j, w)


def h_asym_middle(prob: Problem, j: int, w: complex) -> complex:
    return w - c_term(prob, j, w)


def hprime_asym(prob: Problem, j: int, w: complex) -> complex:
    return 1 + c_term(prob, j, w)


@dataclass(frozen=True)
class LogComplex:
    """exp(log) with the log kept explicitly; value is None if unrepresentable."""

    log: complex

    @property
    def value(self) -> complex | None:
        if self.log.real > E_MAX:
            return None
        return cmath.exp(self.log)


def h_asym_left(prob: Problem, j: int, w: complex) -> LogComplex:
    """(-c_j/d)^d exp(-d w) w^(-m), in log form."""
    cj = estimate_cj(prob, j)
    d, m = prob.d, prob.m
    w = complex(w)
    return LogComplex(d * cmath.log(-cj / d) - d * w - m * cmath.log(w))


# --------------------------------------------------------------------------
# error scans
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Ray:
    """A family of w points parametrized by |w| (approximately, for curves).

    kind "curve": w = gamma_{mu,alpha}(y) + i*sign*y
    kind "horizontal": w = x + i*y0 with |w| = r and sign(x) = direction
    kind "radial": w = r exp(i theta)
    """

    kind: str
    mu: float = 0.0
    alpha: float = 1.0
    sign: int = 1
    y0: float = 0.0
    direction: int = 1
    theta: float = 0.0

    def points(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if self.kind == "curve":
            y = self.sign * r
            return gamma_curve(self.mu, self.alpha, y) + 1j * y
        if self.kind == "horizontal":
            x = self.direction * np.sqrt(np.maximum(r * r - self.y0**2, 0.0))
            return x + 1j * self.y0
        if self.kind == "radial":
            return r * np.exp(1j * self.theta)
        raise ValueError(f"unknown ray kind {self.kind!r}")

    def describe(self) -> str:
        if self.kind == "curve":
            return f"curve(mu={self.mu:g},alpha={self.alpha:g},sign={self.sign:+d})"
        if self.kind == "horizontal":
            return f"horizontal(y0={self.y0:g},direction={self.direction:+d})"
        return f"radial(theta={self.theta:g})"


@dataclass
class AsymptoticReport:
    formula: str
    ray: str
    samples: list[tuple[float, float]] = field(default_factory=list)
    exponent: float = math.nan

    @property
    def monotone_fraction(self) -> float:
        e = [s[1] for s in self.samples]
        if len(e) < 2:
            return 1.0
        return sum(b < a for a, b in zip(e[:-1], e[1:])) / (len(e) - 1)

    def passes(self, min_exponent: float, min_monotone: float = 0.8) -> bool:
        return self.exponent >= min_exponent and self.monotone_fraction >= min_monotone

    def csv_rows(self) -> list[list[str]]:
        return [[self.formula, self.ray, f"{r:.17g}", f"{e:.17g}"] for r, e in self.samples]


def fit_exponent(samples: list[tuple[float, float]]) -> float:
    """Decay exponent k in err ~ C |w|^-k by least squares in log-log."""
    pts = [(math.log(r), math.log(e)) for r, e in samples if e > 0]
    if not pts:
        return math.inf
    if len(pts) < 2:
        return math.nan
    x = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    slope = np.polyfit(x, y, 1)[0]
    return float(-slope)


def _err_f_right(prob, j, w, tol):
    z = phi(prob, j, w)
    return abs(f_asym(prob, j, z) - eval_f(prob, z, tol)) * abs(prob.dq(z))


def _err_h_right(prob, j, w, tol):
    return abs(h_direct(prob, j, w, tol) - h_asym_right(prob, j, w))


def _err_hprime_right(prob, j, w, tol):
    hp = hprime_direct(prob, j, w, tol)
    return abs(hp - hprime_asym(prob, j, w)) / abs(hp)


def _err_h_middle(prob, j, w, tol):
    ct = c_term(prob, j, w)
    return abs((h_direct(prob, j, w, tol) - w) / (-ct) - 1)


def _err_h_left(prob, j, w, tol):
    la = h_asym_left(prob, j, w)
    h = h_direct(prob, j, w, tol)
    return abs(cmath.exp(cmath.log(h) - la.log) - 1)


def _err_g_sector(prob, j, w, tol):
    z = phi(prob, j, w)
    lead = prob.p(z) / prob.dq(z) * cmath.exp(w)
    return abs(eval_g(prob, z, tol) - g_asym(prob, j, z)) / abs(lead)


FORMULAS: dict[str, Callable] = {
    "f_right": _err_f_right,
    "h_right": _err_h_right,
    "hprime_right": _err_hprime_right,
    "h_middle": _err_h_middle,
    "h_left": _err_h_left,
    "g_sector": _err_g_sector,
}


def formula_valid(prob: Problem, j: int, formula: str, w: complex,
                  params: ZoneParams = ZoneParams()) -> bool:
    cj = abs(estimate_cj(prob, j))
    lam = float(prob.lam)
    nu = params.resolved_nu(lam)
    if abs(w) <= radius(prob) or abs(w.real) > E_MAX / 2:
        return False
    if formula in ("f_right", "h_right"):
        return bool(in_H(w, RegionSpec(lam, 2.0 / cj, nu)))
    if formula == "hprime_right":
        return bool(in_H(w, RegionSpec(lam, 1.0 / cj, nu)))
    if formula == "h_middle":
        return int(zone_classify_array(prob, cj, w, params)[0]) == Zone.MIDDLE
    if formula == "h_left":
        return int(zone_classify_array(prob, cj, w, params)[0]) == Zone.LEFT
    if formula == "g_sector":
        return abs(w.imag) >= nu
    raise ValueError(f"unknown formula {formula!r}")


def error_decay_scan(prob: Problem, j: int, formula: str, ray: Ray, n: int = 24,
                     r_min: float = 50.0, r_max: float = 5000.0, tol: float = 1e-12,
                     params: ZoneParams = ZoneParams()) -> AsymptoticReport:
    if formula not in FORMULAS:
        raise ValueError(f"unknown formula {formula!r}")
    r = np.geomspace(r_min, r_max, n)
    ws = ray.points(r)
    report = AsymptoticReport(formula, ray.describe())
    err_fn = FORMULAS[formula]
    samples = []
    for w in ws:
        w = complex(w)
        if not formula_valid(prob, j, formula, w, params):
            raise RegionViolation(f"{ray.describe()} leaves the validity region of {formula} at w={w}")
        samples.append((abs(w), float(err_fn(prob, j, w, tol))))
    samples.sort()
    report.samples = samples
    report.exponent = fit_exponent(samples)
    return report
