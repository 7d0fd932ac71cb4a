"""Orbits of the Newton map and the right-zone pullback branch psi_j.

``NewtonMap`` evaluates the Newton correction delta = g exp(-q) / p on whole
arrays of points. Two routes are used:

* small |q(z)|: composite Gauss-Legendre quadrature of p(t) exp(q(t) - q(z))
  on [0, z], which stays in range because |q| is bounded there;
* large |q(z)|: the sector form

      delta = c_j exp(-q)/p + sum_k (-1)^k P_k / (p q'^(2k+1)),
      P_0 = p,  P_{k+1} = P_k' q' - (2k+1) P_k q'',

  summed up to its smallest term. The exponential term is formed from its
  logarithm, so a jump out of the double range is detected, not overflowed.

Both agree with ``core.eval_f`` to near machine precision on their overlap
(see tests/test_dynamics.py).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .asym import estimate_cj
from .core import Problem
from .errors import ContainmentViolated, NoConvergence, NumericLoss, PoleHit, RegionViolation
from .roots import RootRegistry
from .sectors import TWO_PI, RegionSpec, gamma_curve, in_H, phi_array, radius

LOG_HUGE = 700.0
_EPS = float(np.finfo(float).eps)


class Verdict(enum.IntEnum):
    CONVERGED = 0
    CYCLE = 1
    ESCAPED = 2
    POLE = 3
    UNRESOLVED = 4


class Status(enum.IntEnum):
    OK = 0
    POLE = 1
    OVERFLOW = 2


@dataclass(frozen=True)
class OrbitSettings:
    conv_radius: float = 1e-8
    residual_tol: float = 1e-10
    cycle_tol: float = 1e-9
    period_cap: int = 64
    escape_bound: float = 1e12
    escape_trend: int = 10


def _horner(coeffs: np.ndarray, z: np.ndarray) -> np.ndarray:
    acc = np.full(z.shape, coeffs[-1], dtype=complex)
    for a in coeffs[-2::-1]:
        acc = acc * z + a
    return acc


def _gauss_legendre(panels: int, nodes: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(nodes)
    s, ws = [], []
    for i in range(panels):
        a, b = i / panels, (i + 1) / panels
        s.append(0.5 * (b - a) * x + 0.5 * (a + b))
        ws.append(0.5 * (b - a) * w)
    return np.concatenate(s), np.concatenate(ws)


class NewtonMap:
    """Vectorized Newton correction for a normalized problem."""

    def __init__(self, prob: Problem, q_switch: float = 40.0, panels: int = 2,
                 nodes: int = 24, max_terms: int = 80, chunk: int = 32768):
        self.prob = prob
        self.d, self.m = prob.d, prob.m
        self.q_switch = q_switch
        self.chunk = chunk
        radius(prob)
        self.cj = np.array([estimate_cj(prob, j) for j in range(1, prob.d + 1)])
        self.log_cj = np.log(self.cj.astype(complex))
        self.p = prob.p.array
        self.q = prob.q.array
        self.dp = prob.dp.array
        self.dq = prob.dq.array
        self.c = prob.c
        self.s, self.ws = _gauss_legendre(panels, nodes)
        # series numerators P_k; deg P_k <= m + k(d-2), stored reversed and
        # zero padded to that degree so Horner in 1/z gives P_k(z) / z^deg
        series = [prob.p]
        for k in range(max_terms - 1):
            Pk = series[-1]
            series.append(Pk.derivative() * prob.dq - Pk * prob.d2q * (2 * k + 1))
        self.series = []
        for k, P in enumerate(series):
            deg = self.m + k * (self.d - 2)
            if deg < 0 or P.degree > deg:
                raise ValueError("unexpected series degree")
            padded = np.zeros(deg + 1, dtype=complex)
            padded[:P.degree + 1] = P.array
            self.series.append(padded[::-1].copy())

    # -- routes -----------------------------------------------------------

    def _quadrature(self, z: np.ndarray, qz: np.ndarray, pz: np.ndarray) -> np.ndarray:
        out = np.empty(z.shape, dtype=complex)
        for a in range(0, z.size, self.chunk):
            zc, qc = z[a:a + self.chunk], qz[a:a + self.chunk]
            t = zc[:, None] * self.s[None, :]
            f = _horner(self.p, t) * np.exp(_horner(self.q, t) - qc[:, None])
            out[a:a + self.chunk] = zc * (f @ self.ws)
        return (out + self.c * np.exp(-qz)) / pz

    def sector_index(self, z: np.ndarray, qz: np.ndarray) -> np.ndarray:
        zeta = z * (qz / z**self.d) ** (1.0 / self.d)
        a = np.angle(zeta)
        a = np.where(a < 0, a + TWO_PI, a)
        return np.minimum((a * self.d / TWO_PI).astype(np.int64), self.d - 1)

    def _series(self, z: np.ndarray, qz: np.ndarray, pz: np.ndarray
                ) -> tuple[np.ndarray, np.ndarray]:
        j = self.sector_index(z, qz)
        d = self.d
        inv = 1.0 / z
        # p / z^m and q' / z^(d-1) as polynomials in 1/z
        pr = _horner(self.p[::-1].copy(), inv)
        dqr = _horner(self.dq[::-1].copy(), inv)
        # term_k = red_k * s_k with s_k = z^(deg_k) / (p q'^(2k+1))
        scale = inv ** (d - 1) / (pr * dqr)
        ratio = inv**d / (dqr * dqr)
        total = np.zeros(z.shape, dtype=complex)
        live = np.arange(z.size)
        prev = np.full(z.size, np.inf)
        for k, coeffs in enumerate(self.series):
            term = _horner(coeffs, inv[live]) * scale
            mag = np.abs(term)
            keep = mag < prev
            sign = -1.0 if k % 2 else 1.0
            total[live[keep]] += sign * term[keep]
            keep &= mag > 1e-2 * _EPS * np.abs(total[live])
            live = live[keep]
            if live.size == 0:
                break
            prev = mag[keep]
            scale = scale[keep] * ratio[live]
        lexp = self.log_cj[j] - qz - np.log(pz)
        over = lexp.real > LOG_HUGE
        status = np.where(over, Status.OVERFLOW, Status.OK).astype(np.int8)
        return np.exp(np.where(over, 0.0, lexp)) + total, status

    def correction(self, z) -> tuple[np.ndarray, np.ndarray]:
        """delta = z - f(z) and a Status code per point."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        delta = np.zeros(z.shape, dtype=complex)
        status = np.zeros(z.shape, dtype=np.int8)
        with np.errstate(all="ignore"):
            qz = _horner(self.q, z)
            pz = _horner(self.p, z)
            absz = np.abs(z)
            pole = np.abs(pz) < 1e-300 * (1 + absz) ** self.m
            bad = ~np.isfinite(qz) | ~np.isfinite(z)
            status[pole] = Status.POLE
            status[bad] = Status.OVERFLOW
            ok = ~(pole | bad)
            use_series = ok & (np.abs(qz) >= self.q_switch)
            if use_series.any():
                zs = z[use_series]
                qs = qz[use_series]
                ratio = qs / zs**self.d
                dratio = zs * _horner(self.dq, zs) / (self.d * qs)
                near = (np.abs(ratio - 1) < 0.5) & (np.abs(dratio - 1) < 0.5)
                idx = np.flatnonzero(use_series)
                use_series[idx[~near]] = False
            use_quad = ok & ~use_series
            # large |q| away from the monomial regime goes to adaptive quadrature
            use_slow = use_quad & (np.abs(qz) > 4 * self.q_switch)
            use_quad &= ~use_slow
            if use_quad.any():
                delta[use_quad] = self._quadrature(z[use_quad], qz[use_quad], pz[use_quad])
            if use_slow.any():
                delta[use_slow], status[use_slow] = self._fallback(z[use_slow])
            if use_series.any():
                d_s, st_s = self._series(z[use_series], qz[use_series], pz[use_series])
                delta[use_series] = d_s
                status[use_series] = st_s
            nonfinite = ~np.isfinite(delta) & (status == Status.OK)
            status[nonfinite] = Status.OVERFLOW
        return delta, status

    def _fallback(self, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Scalar adaptive quadrature for points the fixed rules do not cover."""
        from .core import newton_correction
        from .errors import NewtonMeasureError

        out = np.empty(z.shape, dtype=complex)
        st = np.zeros(z.shape, dtype=np.int8)
        for i, zi in enumerate(z):
            try:
                out[i] = newton_correction(self.prob, complex(zi))
            except PoleHit:
                out[i], st[i] = 0, Status.POLE
            except NewtonMeasureError:
                out[i], st[i] = 0, Status.OVERFLOW
        return out, st

    def step(self, z) -> np.ndarray:
        delta, status = self.correction(z)
        return np.atleast_1d(np.asarray(z, dtype=complex)) - delta

    def fprime(self, z, delta=None) -> np.ndarray:
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        if delta is None:
            delta, _ = self.correction(z)
        pz = _horner(self.p, z)
        return delta * (_horner(self.dp, z) + pz * _horner(self.dq, z)) / pz

    def residual(self, z, delta) -> np.ndarray:
        """Newton residual scaled to w-plane units, |delta| max(1, |q'(z)|)."""
        return np.abs(delta) * np.maximum(1.0, np.abs(_horner(self.dq, z)))


def newton_map(prob: Problem) -> NewtonMap:
    nm = prob.cache.get("newton_map")
    if nm is None:
        nm = NewtonMap(prob)
        prob.cache["newton_map"] = nm
    return nm


def step(prob: Problem, z: complex) -> complex:
    delta, status = newton_map(prob).correction(np.array([complex(z)]))
    if status[0] == Status.POLE:
        raise PoleHit(f"f has a pole at {z}")
    if status[0] == Status.OVERFLOW:
        raise NumericLoss(f"next iterate from {z} is beyond the double range")
    return complex(z) - complex(delta[0])


# --------------------------------------------------------------------------
# orbit classification
# --------------------------------------------------------------------------

@dataclass
class OrbitBatch:
    """Classification of many orbits; arrays are aligned with the input."""

    verdict: np.ndarray
    iterations: np.ndarray
    final: np.ndarray
    period: np.ndarray
    multiplier: np.ndarray

    def __len__(self) -> int:
        return self.verdict.size

    def fatou_mask(self) -> np.ndarray:
        attracting = (self.verdict == Verdict.CYCLE) & (np.abs(self.multiplier) < 1)
        return (self.verdict == Verdict.CONVERGED) | attracting

    def at_budget(self, budget: int) -> "OrbitBatch":
        """Verdicts as a shorter run with the given budget would report them."""
        late = self.iterations > budget
        v = self.verdict.copy()
        it = self.iterations.copy()
        v[late] = Verdict.UNRESOLVED
        it[late] = budget
        return OrbitBatch(v, it, self.final, self.period, self.multiplier)


def iterate_many(prob: Problem, z0, budget: int = 200,
                 settings: OrbitSettings = OrbitSettings(),
                 nmap: NewtonMap | None = None) -> OrbitBatch:
    """Run orbits from every point of z0 for at most ``budget`` steps.

    A verdict is reached at step n (0 <= n <= budget) when the correction at
    z_n satisfies the convergence test; the iteration count of a converged
    orbit is that n. Cycles use Brent's algorithm on the iterates.
    """
    if budget < 1:
        raise ValueError("budget must be at least 1")
    nm = nmap or newton_map(prob)
    z0 = np.asarray(z0, dtype=complex).ravel()
    M = z0.size
    verdict = np.full(M, Verdict.UNRESOLVED, dtype=np.int8)
    iters = np.full(M, budget, dtype=np.int32)
    final = z0.copy()
    period = np.zeros(M, dtype=np.int16)
    mult = np.full(M, np.nan + 0j)

    act = np.arange(M)
    z = z0.copy()
    tort = z0.copy()
    power = np.ones(M, dtype=np.int32)
    lam = np.ones(M, dtype=np.int32)
    trend = np.zeros(M, dtype=np.int16)
    prev_req = np.full(M, np.inf)
    s = settings

    def finish(idx, v, n, zf):
        verdict[idx] = v
        iters[idx] = n
        final[idx] = zf

    for n in range(budget + 1):
        if act.size == 0:
            break
        delta, status = nm.correction(z)
        absz = np.abs(z)
        with np.errstate(all="ignore"):
            res = nm.residual(z, delta)
        conv = (status == Status.OK) & (np.abs(delta) < s.conv_radius * (1 + absz)) & (
            res < s.residual_tol)
        pole = status == Status.POLE
        over = status == Status.OVERFLOW
        finish(act[conv], Verdict.CONVERGED, n, z[conv] - delta[conv])
        finish(act[pole], Verdict.POLE, n, z[pole])
        finish(act[over], Verdict.ESCAPED, n, z[over])
        keep = ~(conv | pole | over)
        if n == budget:
            finish(act[keep], Verdict.UNRESOLVED, n, z[keep])
            break
        act, z, delta = act[keep], z[keep], delta[keep]
        zn = z - delta
        stalled = (zn == z) | ~np.isfinite(zn)
        # numeric loss: the step no longer moves the iterate
        finish(act[stalled], Verdict.UNRESOLVED, n, z[stalled])
        live = ~stalled
        act, z, zn, delta = act[live], z[live], zn[live], delta[live]

        # escape by trend: far out and Re q decreasing
        with np.errstate(all="ignore"):
            req = _horner(nm.q, zn).real
        far = np.abs(zn) > s.escape_bound
        dec = far & (req < prev_req[act])
        trend[act] = np.where(dec, trend[act] + 1, 0)
        prev_req[act] = req
        esc = trend[act] >= s.escape_trend
        finish(act[esc], Verdict.ESCAPED, n + 1, zn[esc])

        # Brent cycle detection on z_{n+1}
        gap = np.abs(zn - tort[act])
        close = (gap <= s.cycle_tol * (1 + np.abs(zn))) & (lam[act] >= 2) & (
            np.abs(delta) > 1e3 * gap) & ~esc
        if close.any():
            ci = np.flatnonzero(close)
            for i in ci:
                k = act[i]
                finish(k, Verdict.CYCLE, n + 1, zn[i])
                period[k] = lam[k]
                mult[k] = _cycle_multiplier(nm, zn[i], int(lam[k]))
        reset = (power[act] == lam[act]) & ~close
        ra = act[reset]
        tort[ra] = zn[reset]
        power[ra] = np.minimum(power[ra] * 2, s.period_cap)
        lam[ra] = 0
        lam[act] += 1
        drop = close | esc
        act, z = act[~drop], zn[~drop]
    return OrbitBatch(verdict, iters, final, period, mult)


def _cycle_multiplier(nm: NewtonMap, z: complex, p: int) -> complex:
    m = 1 + 0j
    zc = np.array([z])
    for _ in range(p):
        delta, _ = nm.correction(zc)
        m *= complex(nm.fprime(zc, delta)[0])
        zc = zc - delta
    return m


@dataclass
class OrbitResult:
    verdict: Verdict
    iterations: int
    final: complex
    root_id: int | None = None
    period: int = 0
    multiplier: complex | None = None


def iterate_orbit(prob: Problem, z: complex, budget: int = 200, conv_radius: float = 1e-8,
                  registry: RootRegistry | None = None) -> OrbitResult:
    settings = OrbitSettings(conv_radius=conv_radius)
    b = iterate_many(prob, np.array([complex(z)]), budget, settings)
    v = Verdict(int(b.verdict[0]))
    out = OrbitResult(v, int(b.iterations[0]), complex(b.final[0]))
    if v == Verdict.CONVERGED and registry is not None:
        out.root_id = registry.register(out.final)
    if v == Verdict.CYCLE:
        out.period = int(b.period[0])
        out.multiplier = complex(b.multiplier[0])
    return out


# --------------------------------------------------------------------------
# w-plane map h_j and its right-zone inverse psi_j
# --------------------------------------------------------------------------

def h_and_hprime(prob: Problem, j: int, w) -> tuple[np.ndarray, np.ndarray]:
    """h_j(w) = q(f(phi_j(w))) and h_j'(w), vectorized through NewtonMap."""
    nm = newton_map(prob)
    w = np.atleast_1d(np.asarray(w, dtype=complex))
    z = phi_array(prob, j, w)
    delta, status = nm.correction(z)
    if np.any(status != Status.OK):
        raise NumericLoss("h_j is not representable at some sample")
    fz = z - delta
    h = _horner(nm.q, fz)
    hp = _horner(nm.dq, fz) * nm.fprime(z, delta) / _horner(nm.dq, z)
    return h, hp


def psi_inverse_many(prob: Problem, j: int, w0, alpha: float = 0.8, eps: float = 0.1,
                     tol: float = 1e-12, maxit: int = 30) -> np.ndarray:
    """Solve h_j(w) = w0 by Newton from w0 + 1 for every entry of w0."""
    w0 = np.atleast_1d(np.asarray(w0, dtype=complex))
    w = w0 + 1.0
    done = np.zeros(w0.shape, dtype=bool)
    for _ in range(maxit):
        idx = np.flatnonzero(~done)
        if idx.size == 0:
            break
        h, hp = h_and_hprime(prob, j, w[idx])
        stepv = (h - w0[idx]) / hp
        w[idx] -= stepv
        done[idx] = np.abs(stepv) <= tol * (1 + np.abs(w[idx]))
    if not done.all():
        raise NoConvergence(f"psi_{j} Newton did not converge in {maxit} steps")
    off = np.abs(w - (w0 + 1.0))
    if np.any(off >= alpha + eps):
        bad = w0[np.argmax(off)]
        raise ContainmentViolated(
            f"psi_{j}({bad}) left D(w0+1, {alpha + eps}); increase nu")
    return w


def psi_inverse(prob: Problem, j: int, w0: complex, alpha: float = 0.8, eps: float = 0.1,
                nu: float | None = None, tol: float = 1e-12) -> complex:
    if not 0 < alpha < 1 or not 0 < eps < 1 - alpha:
        raise ValueError("need 0 < alpha < 1 and 0 < eps < 1 - alpha")
    if nu is not None:
        cj = abs(estimate_cj(prob, j))
        if not in_H(complex(w0), RegionSpec(float(prob.lam), alpha / cj, nu)):
            raise RegionViolation(f"w0={w0} is not in H(lambda, alpha/|c_j|, nu)")
    return complex(psi_inverse_many(prob, j, np.array([complex(w0)]), alpha, eps, tol)[0])


@dataclass
class PullbackTrace:
    """psi_j orbits of several starts; ``points[n]`` holds psi_j^n(w)."""

    j: int
    alpha: float
    eps: float
    points: np.ndarray  # shape (n+1, starts)
    derivative: np.ndarray = field(default=None)  # |(psi^n)'(w)|, shape (n+1, starts)
    fd_derivative: np.ndarray = field(default=None)

    @property
    def n(self) -> int:
        return self.points.shape[0] - 1

    def containment_ok(self) -> bool:
        gap = np.abs(self.points[1:] - (self.points[:-1] + 1.0))
        return bool(np.all(gap < self.alpha + self.eps))

    def drift_ok(self) -> bool:
        n = np.arange(self.points.shape[0])[:, None]
        bound = self.points[0].real[None, :] + n * (1 - self.alpha - self.eps)
        return bool(np.all(self.points.real >= bound))

    def imag_drift(self) -> float:
        return float(np.max(np.abs(self.points.imag - self.points[0].imag[None, :])))

    def modulus_ok(self) -> bool:
        """|psi^n(w)| >= max(n, |w|) (1 - alpha - eps) / 4."""
        n = np.arange(self.points.shape[0])[:, None]
        bound = np.maximum(n, np.abs(self.points[0])[None, :]) * (1 - self.alpha - self.eps) / 4
        return bool(np.all(np.abs(self.points) >= bound))

    def decay_constant(self, lam: float) -> float:
        """max over n of exp(-Re psi^n) |psi^n|^lam / exp(-n(1-alpha-eps)/2),
        relative to n = 0; finite and moderate when the decay law holds."""
        n = np.arange(self.points.shape[0])[:, None]
        logv = -self.points.real + lam * np.log(np.abs(self.points))
        logv = logv + n * (1 - self.alpha - self.eps) / 2
        return float(np.exp(np.max(logv - logv[0][None, :])))

    def derivative_floor(self) -> float:
        d = self.fd_derivative if self.fd_derivative is not None else self.derivative
        return float(np.min(d))


def psi_orbit_many(prob: Problem, j: int, w, n: int, alpha: float = 0.8, eps: float = 0.1,
                   fd_step: float = 1e-5) -> PullbackTrace:
    w = np.atleast_1d(np.asarray(w, dtype=complex))
    pts = [w]
    deriv = [np.ones(w.shape)]
    cur = w
    cur_p, cur_m = w + fd_step, w - fd_step
    fd = [np.ones(w.shape)]
    dprod = np.ones(w.shape)
    for _ in range(n):
        nxt = psi_inverse_many(prob, j, cur, alpha, eps)
        _, hp = h_and_hprime(prob, j, nxt)
        dprod = dprod / np.abs(hp)
        cur_p = psi_inverse_many(prob, j, cur_p, alpha, eps)
        cur_m = psi_inverse_many(prob, j, cur_m, alpha, eps)
        fd.append(np.abs(cur_p - cur_m) / (2 * fd_step))
        pts.append(nxt)
        deriv.append(dprod.copy())
        cur = nxt
    return PullbackTrace(j, alpha, eps, np.array(pts), np.array(deriv), np.array(fd))


def psi_orbit(prob: Problem, j: int, w: complex, n: int, alpha: float = 0.8,
              eps: float = 0.1) -> PullbackTrace:
    return psi_orbit_many(prob, j, np.array([complex(w)]), n, alpha, eps)


def calibrate_nu(prob: Problem, j: int, alpha: float = 0.8, eps: float = 0.1,
                 nu0: float = 20.0, samples: int = 50, n: int = 100, seed: int = 0,
                 max_doublings: int = 8) -> tuple[float, np.ndarray, PullbackTrace]:
    """Smallest nu = nu0 2^k for which sampled pullbacks keep the containment."""
    rng = np.random.default_rng(seed)
    cj = abs(estimate_cj(prob, j))
    lam = float(prob.lam)
    nu = nu0
    last_exc: Exception | None = None
    for _ in range(max_doublings):
        spec = RegionSpec(lam, alpha / cj, nu)
        y = rng.uniform(nu, 10 * nu, samples) * rng.choice([-1.0, 1.0], samples)
        x = gamma_curve(spec.mu, spec.alpha, y) + rng.uniform(0.0, 20.0, samples)
        w = x + 1j * y
        try:
            trace = psi_orbit_many(prob, j, w, n, alpha, eps)
            return nu, w, trace
        except (ContainmentViolated, NoConvergence, NumericLoss) as exc:
            last_exc = exc
            nu *= 2
    raise ContainmentViolated(f"no nu up to {nu} keeps the pullback containment: {last_exc}")
