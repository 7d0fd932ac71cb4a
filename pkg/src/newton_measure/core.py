"""Polynomials, problem normalization and safe evaluation of g and f.

The Newton map is f(z) = z - g(z)/g'(z) with

    g(z) = int_0^z p(t) exp(q(t)) dt + c,      g'(z) = p(z) exp(q(z)).

g is evaluated by adaptive Gauss-Kronrod quadrature along the straight
segment [0, z]. The quadrature refuses to run when exp(Re q) would leave the
double range somewhere on the segment; callers then switch to asymptotic
evaluation (see ``asym`` and ``dynamics``).
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .errors import (
    ConfigError,
    DegenerateProblem,
    OverflowRegion,
    PoleHit,
    ToleranceNotMet,
)

E_MAX = 700.0
POLE_EPS = 1e-300
MAX_DEPTH = 40
MAX_PANELS = 1 << 18
_EPS = float(np.finfo(float).eps)

# 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15).
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

KRONROD_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
# Gauss nodes are the odd-indexed Kronrod nodes (xgk[1], xgk[3], xgk[5], 0).
GAUSS_INDEX = np.array([1, 3, 5, 7, 9, 11, 13])
GAUSS_WEIGHTS = np.concatenate([_WG[:-1], _WG[::-1]])


# --------------------------------------------------------------------------
# polynomials
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Polynomial:
    """Dense complex polynomial, coefficients in ascending degree."""

    coeffs: tuple[complex, ...]

    def __post_init__(self) -> None:
        c = [complex(a) for a in self.coeffs]
        while len(c) > 1 and c[-1] == 0:
            c.pop()
        if not c:
            c = [0j]
        object.__setattr__(self, "coeffs", tuple(c))

    @classmethod
    def of(cls, *coeffs: complex) -> "Polynomial":
        return cls(tuple(coeffs))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def leading(self) -> complex:
        return self.coeffs[-1]

    def is_zero(self) -> bool:
        return self.degree == 0 and self.coeffs[0] == 0

    @cached_property
    def array(self) -> np.ndarray:
        return np.array(self.coeffs, dtype=complex)

    def __call__(self, z):
        c = self.coeffs
        if isinstance(z, np.ndarray):
            acc = np.full(z.shape, c[-1], dtype=complex)
        else:
            acc = c[-1]
        for a in reversed(c[:-1]):
            acc = acc * z + a
        return acc

    def derivative(self) -> "Polynomial":
        if self.degree == 0:
            return Polynomial((0j,))
        return Polynomial(tuple(k * a for k, a in enumerate(self.coeffs) if k > 0))

    def scale(self, s: complex) -> "Polynomial":
        return Polynomial(tuple(s * a for a in self.coeffs))

    def compose_scaled(self, s: complex) -> "Polynomial":
        """Coefficients of t -> self(s*t)."""
        return Polynomial(tuple(a * s**k for k, a in enumerate(self.coeffs)))

    def __add__(self, other: "Polynomial") -> "Polynomial":
        n = max(len(self.coeffs), len(other.coeffs))
        a = list(self.coeffs) + [0j] * (n - len(self.coeffs))
        b = list(other.coeffs) + [0j] * (n - len(other.coeffs))
        return Polynomial(tuple(x + y for x, y in zip(a, b)))

    def __neg__(self) -> "Polynomial":
        return self.scale(-1)

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + (-other)

    def __mul__(self, other: "Polynomial | complex") -> "Polynomial":
        if not isinstance(other, Polynomial):
            return self.scale(other)
        out = [0j] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            for k, b in enumerate(other.coeffs):
                out[i + k] += a * b
        return Polynomial(tuple(out))

    __rmul__ = __mul__

    def roots(self) -> np.ndarray:
        """Companion-matrix eigenvalues with one Newton polish each."""
        if self.degree < 1:
            return np.zeros(0, dtype=complex)
        r = np.roots(self.array[::-1]).astype(complex)
        dp = self.derivative()
        d = dp(r)
        ok = d != 0
        r[ok] = r[ok] - self(r[ok]) / d[ok]
        return r


def poly_eval(poly: Polynomial, z):
    return poly(z)


def _snap(x: complex, scale: float) -> complex:
    eps = 8 * np.finfo(float).eps * scale
    re = 0.0 if abs(x.real) < eps else x.real
    im = 0.0 if abs(x.imag) < eps else x.imag
    return complex(re, im)


def _snap_poly(poly: Polynomial) -> Polynomial:
    scale = max(abs(a) for a in poly.coeffs)
    return Polynomial(tuple(_snap(a, scale) for a in poly.coeffs))


# --------------------------------------------------------------------------
# problems
# --------------------------------------------------------------------------

@dataclass
class Problem:
    """The triple (p, q, c) defining g, with derived constants.

    ``R`` and ``cj`` are filled lazily by the sectors and asym modules.
    Unnormalized triples are accepted for evaluation of g and f.
    """

    p: Polynomial
    q: Polynomial
    c: complex = 0j
    R: float | None = None
    cj: dict[int, complex] = field(default_factory=dict, repr=False, compare=False)
    cache: dict[str, Any] = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        self.c = complex(self.c)
        if self.q.degree < 1:
            raise DegenerateProblem("q must be non-constant")
        if self.p.is_zero():
            raise DegenerateProblem("p must not vanish identically")

    @property
    def d(self) -> int:
        return self.q.degree

    @property
    def m(self) -> int:
        return self.p.degree

    @property
    def lam(self) -> Fraction:
        return Fraction(self.d - 1 - self.m, self.d)

    @property
    def is_normalized(self) -> bool:
        return self.q.leading == 1 and self.p.leading == self.d

    @cached_property
    def dp(self) -> Polynomial:
        return self.p.derivative()

    @cached_property
    def dq(self) -> Polynomial:
        return self.q.derivative()

    @cached_property
    def d2q(self) -> Polynomial:
        return self.dq.derivative()

    def pole_threshold(self, z):
        return POLE_EPS * (1 + abs(z)) ** self.m


@dataclass(frozen=True)
class ConformalMapRecord:
    """z_norm = alpha * z_raw and g_norm = b * g_raw."""

    alpha: complex
    b: complex

    def to_normalized(self, z):
        return self.alpha * z

    def to_raw(self, z):
        return z / self.alpha


def normalize(p_raw: Polynomial, q_raw: Polynomial, c_raw: complex = 0j
              ) -> tuple[Problem, ConformalMapRecord]:
    if q_raw.degree < 1:
        raise DegenerateProblem("q must be non-constant")
    if p_raw.is_zero():
        raise DegenerateProblem("p must not vanish identically")
    d, m = q_raw.degree, p_raw.degree
    alpha = _snap(cmath.exp(cmath.log(q_raw.leading) / d), abs(q_raw.leading) ** (1 / d))
    b = _snap(d * alpha ** (m + 1) / p_raw.leading, 1.0)
    q = q_raw.compose_scaled(1 / alpha)
    p = p_raw.compose_scaled(1 / alpha).scale(b / alpha)
    q = _snap_poly(Polynomial(q.coeffs[:-1] + (1.0 + 0j,)))
    p = _snap_poly(Polynomial(p.coeffs[:-1] + (complex(d),)))
    c = b * complex(c_raw)
    prob = Problem(p, q, _snap(c, max(abs(c), 1e-300)))
    return prob, ConformalMapRecord(alpha, b)


# --------------------------------------------------------------------------
# quadrature
# --------------------------------------------------------------------------

def _max_re_on_segment(poly: Polynomial, a: complex, b: complex) -> float:
    """Exact maximum of Re poly(a + s(b - a)) over s in [0, 1]."""
    h = b - a
    # coefficients in s of poly(a + s h), via Taylor shift
    coeffs = np.zeros(poly.degree + 1, dtype=complex)
    cur = poly
    fact = 1.0
    for k in range(poly.degree + 1):
        coeffs[k] = cur(a) * h**k / fact
        cur = cur.derivative()
        fact *= k + 1
    re = coeffs.real
    cand = [0.0, 1.0]
    if len(re) > 2:
        dre = np.array([k * re[k] for k in range(1, len(re))])
        while len(dre) > 1 and dre[-1] == 0:
            dre = dre[:-1]
        if len(dre) > 1:
            for r in np.roots(dre[::-1]):
                if abs(r.imag) < 1e-9 and 0 < r.real < 1:
                    cand.append(float(r.real))
    elif len(re) == 2:
        pass
    s = np.array(cand)
    vals = np.polyval(re[::-1], s)
    return float(vals.max())


def _initial_panels(v: np.ndarray) -> int:
    var_im = float(np.abs(np.diff(v.imag)).sum())
    var_re = float(np.abs(np.diff(v.real)).sum())
    n = int(math.ceil(var_im / math.pi + var_re / 8.0)) + 1
    return min(max(n, 1), 4096)


def gauss_kronrod(fn, tol: float, n0: int = 1, max_depth: int = MAX_DEPTH,
                  noise: float = 1.0) -> tuple[complex, float]:
    """Adaptive G7/K15 integral of a vectorized fn over [0, 1].

    Intervals are refined level by level. An interval is accepted when its
    Kronrod-Gauss difference is below its length share of
    ``0.5 * tol * (1 + |I|)``, so the summed error estimate of the returned
    value stays below ``tol * (1 + |I|)``. Panels whose difference is at the
    rounding level of the integrand are accepted as well, so for strongly
    cancelling integrands the attainable accuracy is about eps * max|fn| / |I|.
    ``noise`` is the relative rounding level of fn in units of eps.
    """
    edges = np.linspace(0.0, 1.0, n0 + 1)
    lo, hi = edges[:-1], edges[1:]
    depth = 0
    total = 0j
    err_total = 0.0
    while lo.size:
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        x = mid[:, None] + half[:, None] * KRONROD_NODES[None, :]
        fx = fn(x)
        k = half * (fx @ KRONROD_WEIGHTS)
        g = half * (fx[:, GAUSS_INDEX] @ GAUSS_WEIGHTS)
        err = np.abs(k - g)
        if not np.all(np.isfinite(k)):
            raise OverflowRegion("non-finite integrand on the segment")
        est = total + k.sum()
        thresh = 0.5 * tol * (1.0 + abs(est)) * (hi - lo)
        # below this the difference is rounding noise and cannot shrink
        floor = 64 * noise * _EPS * half * np.abs(fx).max(axis=1)
        ok = err <= np.maximum(thresh, floor)
        total += k[ok].sum()
        err_total += float(err[ok].sum())
        if ok.all():
            break
        depth += 1
        if depth > max_depth:
            raise ToleranceNotMet(f"subdivision depth {max_depth} exceeded")
        blo, bhi, bmid = lo[~ok], hi[~ok], mid[~ok]
        if 2 * blo.size > MAX_PANELS:
            raise ToleranceNotMet("subdivision panel limit exceeded")
        lo = np.concatenate([blo, bmid])
        hi = np.concatenate([bmid, bhi])
        order = np.argsort(lo, kind="stable")
        lo, hi = lo[order], hi[order]
    return complex(total), err_total


def integrate_segment(prob: Problem, a: complex, b: complex, tol: float = 1e-12,
                      shift: complex = 0j) -> complex:
    """int_a^b p(t) exp(q(t) - shift) dt along the straight segment."""
    a, b = complex(a), complex(b)
    if a == b:
        return 0j
    h = b - a
    guard = _max_re_on_segment(prob.q, a, b) - shift.real
    if guard > E_MAX:
        raise OverflowRegion(f"max Re q on segment is {guard:.1f} > {E_MAX}")
    p, q = prob.p, prob.q

    def integrand(s):
        t = a + s * h
        return h * p(t) * np.exp(q(t) - shift)

    probe = q(a + np.linspace(0.0, 1.0, 129) * h)
    n0 = _initial_panels(probe)
    # exp(q) carries a phase error of about eps * |q|
    noise = 1.0 + float(np.abs(probe).max())
    val, _ = gauss_kronrod(integrand, tol, n0, noise=noise)
    return val


def eval_g(prob: Problem, z: complex, tol: float = 1e-12,
           path: Sequence[complex] | None = None) -> complex:
    """g(z) by quadrature along 0 -> path... -> z, plus c."""
    z = complex(z)
    if z == 0 and not path:
        return prob.c
    nodes = [0j, *(complex(v) for v in (path or ())), z]
    total = 0j
    for a, b in zip(nodes[:-1], nodes[1:]):
        total += integrate_segment(prob, a, b, tol)
    return total + prob.c


def newton_correction(prob: Problem, z: complex, tol: float = 1e-12) -> complex:
    """delta = g(z) exp(-q(z)) / p(z), the Newton step z - f(z)."""
    z = complex(z)
    pz = prob.p(z)
    if abs(pz) < prob.pole_threshold(z):
        raise PoleHit(f"p({z}) vanishes")
    qz = prob.q(z)
    if abs(qz.real) > E_MAX:
        raise OverflowRegion(f"|Re q(z)| = {abs(qz.real):.1f} > {E_MAX}")
    g = eval_g(prob, z, tol)
    return (g * cmath.exp(-qz)) / pz


def eval_f(prob: Problem, z: complex, tol: float = 1e-12) -> complex:
    return complex(z) - newton_correction(prob, z, tol)


def fprime_from_correction(prob: Problem, z, delta):
    """f'(z) = delta (p' + p q') / p, valid for scalars and arrays."""
    pz = prob.p(z)
    return delta * (prob.dp(z) + pz * prob.dq(z)) / pz


# --------------------------------------------------------------------------
# JSON ingestion
# --------------------------------------------------------------------------

def _parse_real(x: Any) -> float:
    if isinstance(x, bool):
        raise ConfigError("booleans are not coefficients")
    if isinstance(x, (int, float)):
        return float(x)
    if isinstance(x, str):
        try:
            return float(Decimal(x.strip()))
        except InvalidOperation as exc:
            raise ConfigError(f"bad decimal {x!r}") from exc
    raise ConfigError(f"bad coefficient component {x!r}")


def parse_complex(x: Any) -> complex:
    if isinstance(x, (list, tuple)):
        if len(x) != 2:
            raise ConfigError(f"complex value must be [re, im], got {x!r}")
        return complex(_parse_real(x[0]), _parse_real(x[1]))
    return complex(_parse_real(x), 0.0)


def parse_polynomial(xs: Any) -> Polynomial:
    if not isinstance(xs, list) or not xs:
        raise ConfigError("polynomial must be a non-empty list of coefficients")
    return Polynomial(tuple(parse_complex(v) for v in xs))


@dataclass
class LoadedProblem:
    problem: Problem
    record: ConformalMapRecord
    raw: Problem
    extra: dict[str, Any]


def problem_from_dict(doc: dict[str, Any]) -> LoadedProblem:
    if not isinstance(doc, dict):
        raise ConfigError("problem document must be a JSON object")
    for key in ("p", "q"):
        if key not in doc:
            raise ConfigError(f"missing key {key!r}")
    p = parse_polynomial(doc["p"])
    q = parse_polynomial(doc["q"])
    c = parse_complex(doc.get("c", 0))
    try:
        raw = Problem(p, q, c)
        prob, rec = normalize(p, q, c)
    except DegenerateProblem as exc:
        raise ConfigError(str(exc)) from exc
    extra = {k: v for k, v in doc.items() if k not in ("p", "q", "c")}
    return LoadedProblem(prob, rec, raw, extra)


def load_problem(source: str | Path | dict) -> LoadedProblem:
    if isinstance(source, dict):
        return problem_from_dict(source)
    try:
        doc = json.loads(Path(source).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read problem {source}: {exc}") from exc
    return problem_from_dict(doc)


def erf_problem(c: float = 0.3) -> Problem:
    """Normalized form of g(z) = int_0^z exp(-t^2) dt + c."""
    prob, _ = normalize(Polynomial.of(1), Polynomial.of(0, 0, -1), c)
    return prob


def iter_complex(xs: Iterable) -> list[complex]:
    return [complex(x) for x in xs]
