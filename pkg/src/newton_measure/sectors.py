"""Change of variables w = q(z), inverse branches and the partition curves.

G is the plane minus the closed disk D(0, R) and the ray [0, inf). Its
preimage under q splits into d sectors S_1..S_d, S_j asymptotic to the angle
range (2(j-1)pi/d, 2j pi/d). ``phi`` inverts q on S_j.

For mu real and alpha > 0 the curve Gamma(mu, alpha) is
Re w = mu log|w| - log alpha, a graph x = gamma(y) over |y| >= 2|mu|, and
H(mu, alpha, nu) is the region right of it with |Im w| >= nu.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .core import Problem
from .errors import NotInG, RegionViolation, SeedEscape

TWO_PI = 2.0 * math.pi
_EPS = float(np.finfo(float).eps)


# --------------------------------------------------------------------------
# R and the sectors
# --------------------------------------------------------------------------

def _bound_holds(prob: Problem, R: float) -> bool:
    d = prob.d
    theta = TWO_PI * np.arange(720) / 720
    radii = np.geomspace(0.5 * R ** (1 / d), 2 * R ** (1 / d), 10)
    z = radii[:, None] * np.exp(1j * theta)[None, :]
    qa = np.abs(prob.q(z))
    za = np.abs(z) ** d
    return bool(np.all(qa >= za / 2**d) and np.all(qa <= 2**d * za))


def choose_R(prob: Problem, max_doublings: int = 200) -> float:
    """Smallest power of two R with critical values of q inside D(0, R)
    and the two-sided bound 2^-d |z|^d <= |q(z)| <= 2^d |z|^d on sampled
    circles between radii R^(1/d)/2 and 2 R^(1/d)."""
    crit = prob.dq.roots()
    cvals = np.abs(prob.q(crit)) if crit.size else np.zeros(0)
    R = 1.0
    for _ in range(max_doublings):
        if np.all(cvals < R) and _bound_holds(prob, R):
            return R
        R *= 2.0
    raise RegionViolation("no admissible R found; is q normalized?")


def radius(prob: Problem) -> float:
    if prob.R is None:
        prob.R = choose_R(prob)
    return prob.R


def arg0(w):
    """Argument in [0, 2 pi)."""
    a = np.angle(w)
    return np.where(a < 0, a + TWO_PI, a) if isinstance(a, np.ndarray) else (
        a + TWO_PI if a < 0 else a)


def in_G(prob: Problem, w) -> np.ndarray | bool:
    R = radius(prob)
    w = np.asarray(w)
    on_cut = (w.imag == 0) & (w.real >= 0)
    out = (np.abs(w) > R) & ~on_cut
    return bool(out) if out.ndim == 0 else out


def _far_modulus(prob: Problem) -> float:
    """|w| beyond which the monomial seed lies in the right Newton basin."""
    lower = sum(abs(a) for a in prob.q.coeffs[:-1])
    return (8.0 * (1.0 + lower)) ** prob.d


def _seed(w: np.ndarray, j: int, d: int) -> np.ndarray:
    return np.abs(w) ** (1.0 / d) * np.exp(1j * (arg0(w) / d + TWO_PI * (j - 1) / d))


def _newton_q(prob: Problem, w: np.ndarray, z: np.ndarray, maxit: int = 80,
              damped: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Solve q(z) = w from z; returns (z, ok-mask for staying in the annulus)."""
    q, dq, d = prob.q, prob.dq, prob.d
    lo = 0.5 * np.abs(w) ** (1.0 / d)
    hi = 2.0 * np.abs(w) ** (1.0 / d)
    ok = np.ones(w.shape, dtype=bool)
    active = np.ones(w.shape, dtype=bool)
    for _ in range(maxit):
        if not active.any():
            break
        za = z[active]
        step = (q(za) - w[active]) / dq(za)
        if damped:
            big = np.abs(step) > 0.25 * np.abs(za)
            step[big] *= 0.25 * np.abs(za[big]) / np.abs(step[big])
        zn = za - step
        idx = np.flatnonzero(active)
        z[idx] = zn
        bad = (np.abs(zn) < lo[idx]) | (np.abs(zn) > hi[idx]) | ~np.isfinite(zn)
        ok[idx[bad]] = False
        done = bad | (np.abs(step) <= 4 * _EPS * np.abs(zn))
        active[idx[done]] = False
    # one extra polish sweep for all good points
    good = ok
    if good.any():
        zg = z[good]
        z[good] = zg - (q(zg) - w[good]) / dq(zg)
    return z, ok


def phi_array(prob: Problem, j: int, w) -> np.ndarray:
    """Vectorized inverse branch of q on S_j; NaN where it fails."""
    d = prob.d
    if not 1 <= j <= d:
        raise ValueError(f"sector index {j} outside 1..{d}")
    w = np.atleast_1d(np.asarray(w, dtype=complex))
    inside = np.asarray(in_G(prob, w), dtype=bool)
    out = np.full(w.shape, np.nan + 0j)
    if not inside.any():
        return out
    wi = w[inside]
    far = _far_modulus(prob)
    z = np.empty_like(wi)
    direct = np.abs(wi) >= far
    z[direct] = _seed(wi[direct], j, d)
    homo = ~direct
    if homo.any():
        # continue the branch inward along the ray from |w| = far
        wh = wi[homo]
        t = far / np.abs(wh) * 1.01
        zh = _seed(wh * t, j, d)
        zh, _ = _newton_q(prob, wh * t, zh)
        while True:
            t_new = np.maximum(t / 1.5, 1.0)
            zh = zh * (t_new / t) ** (1.0 / d)
            zh, _ = _newton_q(prob, wh * t_new, zh, damped=True)
            t = t_new
            if np.all(t == 1.0):
                break
        z[homo] = zh
    z, ok = _newton_q(prob, wi, z)
    if not ok.all():
        bad = ~ok
        zb = _seed(wi[bad], j, d)
        zb, okb = _newton_q(prob, wi[bad], zb, maxit=200, damped=True)
        z[bad] = np.where(okb, zb, np.nan)
    out[inside] = z
    return out


def phi(prob: Problem, j: int, w: complex, tol: float = 1e-10) -> complex:
    """z in S_j with q(z) = w."""
    w = complex(w)
    if not in_G(prob, w):
        raise NotInG(f"w={w} is not in G (R={radius(prob)})")
    z = complex(phi_array(prob, j, w)[0])
    if not np.isfinite(z) or abs(prob.q(z) - w) > tol * abs(w):
        raise SeedEscape(f"Newton for q(z)={w} left the annulus")
    return z


def sector_of(prob: Problem, z: complex) -> int | None:
    """Index j with z in S_j, or None when q(z) is not in G."""
    w = complex(prob.q(z))
    if not in_G(prob, w):
        return None
    d = prob.d
    j0 = int(arg0(complex(z)) * d / TWO_PI) % d + 1
    for j in (j0, j0 % d + 1, (j0 - 2) % d + 1):
        zj = complex(phi_array(prob, j, w)[0])
        if abs(zj - z) <= 1e-8 * (1 + abs(z)):
            return j
    return None


def sector_center(prob: Problem, j: int) -> float:
    return (2 * j - 1) * math.pi / prob.d


def log_sector(prob: Problem, j: int, z):
    """log|z| + i theta, theta the argument nearest to the sector center."""
    c = sector_center(prob, j)
    a = np.angle(z)
    delta = np.mod(a - c + math.pi, TWO_PI) - math.pi
    return np.log(np.abs(z)) + 1j * (c + delta)


def sector_power(prob: Problem, j: int, z, exponent: float):
    return np.exp(exponent * log_sector(prob, j, z))


def calibrate_sector_constant(prob: Problem, n: int = 1000, seed: int = 0,
                              wmax: float = 1e4) -> float:
    """Smallest c with arg phi_j(w) in (2(j-1)pi/d - c/|z|, 2j pi/d + c/|z|)
    over a random sample of w in G."""
    rng = np.random.default_rng(seed)
    R = radius(prob)
    mod = np.exp(rng.uniform(math.log(R * 1.05), math.log(wmax), n))
    ang = rng.uniform(0.0, TWO_PI, n)
    w = mod * np.exp(1j * ang)
    d = prob.d
    worst = 0.0
    for j in range(1, d + 1):
        z = phi_array(prob, j, w)
        theta = log_sector(prob, j, z).imag
        lo, hi = TWO_PI * (j - 1) / d, TWO_PI * j / d
        excess = np.maximum(lo - theta, theta - hi)
        worst = max(worst, float(np.max(np.maximum(excess, 0.0) * np.abs(z))))
    return worst


# --------------------------------------------------------------------------
# partition curves and regions
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class RegionSpec:
    mu: float
    alpha: float
    nu: float | None = None

    def __post_init__(self) -> None:
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        nu = 2 * abs(self.mu) if self.nu is None else float(self.nu)
        if nu < 2 * abs(self.mu):
            raise ValueError("nu must be at least 2|mu|")
        object.__setattr__(self, "nu", nu)


def gamma_curve(mu: float, alpha: float, y) -> np.ndarray:
    """Vectorized solution x of x - (mu/2) log(x^2 + y^2) + log(alpha) = 0.

    The left side has derivative in [1/2, 3/2] for |y| >= 2|mu|, so a root
    bracket follows from one evaluation and Newton is kept inside it.
    """
    y = np.asarray(y, dtype=float)
    if np.any(np.abs(y) < 2 * abs(mu)):
        raise RegionViolation("gamma is defined for |y| >= 2|mu| only")
    la = math.log(alpha)
    if mu == 0:
        return np.full(y.shape, -la)
    y2 = y * y

    def F(x):
        return x - 0.5 * mu * np.log(x * x + y2) + la

    x0 = mu * np.log(np.maximum(np.abs(y), 1e-300)) - la
    f0 = F(x0)
    a = x0 - 2.0 * f0
    b = x0 - (2.0 / 3.0) * f0
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    x = np.clip(x0 - f0, lo, hi)
    for _ in range(100):
        fx = F(x)
        lo = np.where(fx < 0, x, lo)
        hi = np.where(fx > 0, x, hi)
        dfx = 1.0 - mu * x / (x * x + y2)
        xn = x - fx / dfx
        outside = (xn <= lo) | (xn >= hi)
        xn = np.where(outside, 0.5 * (lo + hi), xn)
        if np.all(np.abs(xn - x) <= 2 * _EPS * (1 + np.abs(x))):
            x = xn
            break
        x = xn
    return x


def gamma_solve(spec: RegionSpec, y: float) -> float:
    return float(gamma_curve(spec.mu, spec.alpha, np.array([y]))[0])


def on_Gamma_residual(w, spec: RegionSpec):
    w = np.asarray(w, dtype=complex)
    r = w.real + math.log(spec.alpha)
    if spec.mu != 0:
        with np.errstate(divide="ignore"):
            r = r - spec.mu * np.log(np.abs(w))
    return float(r) if r.ndim == 0 else r


def exp_minus_w_modulus(w, spec: RegionSpec):
    """|e^{-w}| = alpha |w|^{-mu} exp(-residual)."""
    return spec.alpha * np.abs(w) ** (-spec.mu) * np.exp(-on_Gamma_residual(w, spec))


def in_H(w, spec: RegionSpec):
    w = np.asarray(w, dtype=complex)
    out = (np.abs(w.imag) >= spec.nu) & (on_Gamma_residual(w, spec) >= 0)
    return bool(out) if out.ndim == 0 else out


# --------------------------------------------------------------------------
# zones
# --------------------------------------------------------------------------

class Zone(enum.IntEnum):
    RIGHT = 0
    MIDDLE = 1
    LEFT = 2
    NEAR_AXIS = 3


@dataclass(frozen=True)
class ZoneParams:
    alpha1: float = 0.05
    beta1: float = 20.0
    beta2: float = 20.0
    nu: float | None = None

    def resolved_nu(self, lam: float) -> float:
        if self.nu is not None:
            return float(self.nu)
        return max(20.0, 2 * abs(lam) + 1, 2 * abs(lam - 1) + 1)


def zone_specs(prob: Problem, cj_abs: float, params: ZoneParams
               ) -> dict[str, RegionSpec]:
    lam = float(prob.lam)
    nu = params.resolved_nu(lam)
    return {
        "right": RegionSpec(lam, 1.0 / cj_abs, nu),
        "middle_outer": RegionSpec(lam - 1, params.alpha1 / cj_abs, nu),
        "middle_inner": RegionSpec(lam, params.beta1 / cj_abs, nu),
        "left": RegionSpec(lam - 1, params.beta2 / cj_abs, nu),
    }


def zone_classify_array(prob: Problem, cj_abs: float, w, params: ZoneParams = ZoneParams()
                        ) -> np.ndarray:
    w = np.atleast_1d(np.asarray(w, dtype=complex))
    s = zone_specs(prob, cj_abs, params)
    nu = s["right"].nu
    near = np.abs(w.imag) < nu
    r_right = on_Gamma_residual(w, s["right"])
    r_mid_out = on_Gamma_residual(w, s["middle_outer"])
    r_mid_in = on_Gamma_residual(w, s["middle_inner"])
    r_left = on_Gamma_residual(w, s["left"])
    right = r_right >= 0
    middle = (r_mid_out >= 0) & (r_mid_in < 0)
    left = r_left < 0
    zone = np.full(w.shape, -1, dtype=np.int8)
    zone[left] = Zone.LEFT
    zone[middle] = Zone.MIDDLE
    zone[right] = Zone.RIGHT
    gap = zone < 0
    if gap.any():
        # distance to each band measured by how far the residual is outside
        d_right = np.maximum(-r_right, 0)
        d_mid = np.maximum(-np.minimum(r_mid_out, 0), np.maximum(r_mid_in, 0))
        d_left = np.maximum(r_left, 0)
        dist = np.stack([d_right, d_mid, d_left])
        choice = np.argmin(dist, axis=0)  # argmin keeps the first on ties
        zone[gap] = choice[gap]
    zone[near] = Zone.NEAR_AXIS
    return zone


def zone_classify(prob: Problem, j: int, w: complex, params: ZoneParams = ZoneParams()) -> Zone:
    from .asym import estimate_cj

    cj = estimate_cj(prob, j)
    return Zone(int(zone_classify_array(prob, abs(cj), w, params)[0]))
