"""Verification suites shared by the CLI and the acceptance tests.

Each suite returns a ``SuiteResult``: named boolean checks, human-readable
lines, CSV tables and the numbers worth keeping as baselines.
"""

from __future__ import annotations

import math
import statistics
import time
from dataclasses import dataclass, field

import numpy as np

from .asym import Ray, all_cj, error_decay_scan
from .core import Problem
from .dynamics import Verdict, calibrate_nu, iterate_many
from .errors import NewtonMeasureError
from .measure import (
    Disk,
    julia_area_study,
    postsingular_check,
    thin_at_infinity_scan,
    uniform_thinness_check,
    unit_samples,
)
from .roots import RootRegistry, basin_disk_radius, zero_scan
from .sectors import RegionSpec, gamma_curve, on_Gamma_residual, phi_array, sector_of


@dataclass
class SuiteResult:
    name: str
    checks: dict[str, bool] = field(default_factory=dict)
    lines: list[str] = field(default_factory=list)
    tables: dict[str, tuple[list[str], list[list[str]]]] = field(default_factory=dict)
    metrics: dict[str, float] = field(default_factory=dict)
    seconds: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def check(self, key: str, ok: bool, detail: str = "") -> None:
        self.checks[key] = bool(ok)
        self.lines.append(f"{'PASS' if ok else 'FAIL'} {self.name}.{key}" + (f": {detail}" if detail else ""))


def _fmt(x: float) -> str:
    return f"{x:.17g}"


# --------------------------------------------------------------------------
# partition curves
# --------------------------------------------------------------------------

def gamma_suite(n_params: int = 20, n_y: int = 400, seed: int = 0) -> SuiteResult:
    t0 = time.perf_counter()
    res = SuiteResult("gamma")
    rng = np.random.default_rng(seed)
    rows = []
    worst_res = worst_slope = worst_band = worst_limit = 0.0
    for _ in range(n_params):
        mu = float(rng.uniform(-3, 3))
        alpha = float(math.exp(rng.uniform(math.log(0.1), math.log(10))))
        beta = float(math.exp(rng.uniform(math.log(0.1), math.log(10))))
        if beta > alpha:
            alpha, beta = beta, alpha
        ymag = np.geomspace(2 * abs(mu) + 1, 1e6, n_y)
        y = np.concatenate([ymag, -ymag])
        x = gamma_curve(mu, alpha, y)
        spec = RegionSpec(mu, alpha)
        r = np.abs(on_Gamma_residual(x + 1j * y, spec))
        worst_res = max(worst_res, float(r.max()))
        # finite-difference slope, staying inside the domain |y| >= 2|mu|
        h = 1e-4 * np.abs(y)
        slope = (gamma_curve(mu, alpha, y + h) - gamma_curve(mu, alpha, y - h)) / (2 * h)
        excess = np.abs(slope) - (2 * abs(mu) / np.abs(y) + 1e-6)
        worst_slope = max(worst_slope, float(excess.max()))
        xb = gamma_curve(mu, beta, y)
        diff = xb - x
        la = math.log(alpha / beta)
        band = np.maximum((2 / 3) * la - diff, diff - 2 * la)
        worst_band = max(worst_band, float(band.max()))
        at_far = np.abs(np.abs(y) - 1e6) == 0
        lim = float(np.max(np.abs(diff[at_far] - la)))
        worst_limit = max(worst_limit, lim)
        rows.append([_fmt(mu), _fmt(alpha), _fmt(beta), _fmt(float(r.max())),
                     _fmt(float(excess.max())), _fmt(float(band.max())), _fmt(lim)])
    res.check("residual", worst_res <= 1e-12, f"max residual {worst_res:.3g}")
    res.check("slope_bound", worst_slope <= 0, f"max slope excess {worst_slope:.3g}")
    # band edges compared with a rounding allowance of 1e-12
    res.check("band", worst_band <= 1e-12, f"max band violation {worst_band:.3g}")
    res.check("limit", worst_limit <= 1e-3, f"max |diff - log(alpha/beta)| at 1e6: {worst_limit:.3g}")
    res.tables["gamma"] = (["mu", "alpha", "beta", "max_residual", "max_slope_excess",
                            "max_band_violation", "limit_error"], rows)
    res.metrics.update(max_residual=worst_res, limit_error=worst_limit)
    res.seconds = time.perf_counter() - t0
    return res


# --------------------------------------------------------------------------
# asymptotics
# --------------------------------------------------------------------------

SCAN_RAY_MU = 3.0


def asymptotics_suite(prob: Problem, n: int = 24, r_min: float = 50.0, r_max: float = 5000.0,
                      tol: float = 1e-12) -> SuiteResult:
    """Decay scans along Gamma(3, 1), where Re w ~ 3 log|w| stays in range."""
    t0 = time.perf_counter()
    res = SuiteResult("asymptotics")
    d = prob.d
    targets = {"f_right": 1 / d - 0.2, "h_right": 1 + 1 / d - 0.2}
    rows = []
    for formula, target in targets.items():
        for j in range(1, d + 1):
            for sign in (1, -1):
                ray = Ray("curve", mu=SCAN_RAY_MU, alpha=1.0, sign=sign)
                rep = error_decay_scan(prob, j, formula, ray, n, r_min, r_max, tol)
                key = f"{formula}_j{j}_{'up' if sign > 0 else 'down'}"
                res.check(key, rep.passes(target),
                          f"exponent {rep.exponent:.4f} (need {target:.2f}), "
                          f"decreasing pairs {rep.monotone_fraction:.2f}")
                res.metrics[key] = rep.exponent
                rows += [[str(j)] + r for r in rep.csv_rows()]
    res.tables["asymptotics"] = (["j", "formula", "ray", "abs_w", "error"], rows)
    res.seconds = time.perf_counter() - t0
    return res


# --------------------------------------------------------------------------
# zeros and basins
# --------------------------------------------------------------------------

def zero_suite(prob: Problem, kmin: int = 5, kmax: int = 40) -> SuiteResult:
    t0 = time.perf_counter()
    res = SuiteResult("zeros")
    ks = [s * a for a in range(kmin, kmax + 1) for s in (1, -1)]
    js = list(range(1, prob.d + 1))
    rows, reg = zero_scan(prob, js, ks)
    res.check("distinct", len(reg) == len(rows), f"{len(reg)} distinct roots from {len(rows)} seeds")
    low = [r.distance for r in rows if 5 <= abs(r.k) <= 15]
    high = [r.distance for r in rows if 30 <= abs(r.k) <= 40]
    if low and high:
        ml, mh = statistics.median(low), statistics.median(high)
        res.check("median_halving", mh <= 0.5 * ml, f"median |q(root)-v| {mh:.4g} vs {ml:.4g}")
        res.metrics.update(median_low=ml, median_high=mh)
    from .roots import ZERO_HEADER

    res.tables["zeros"] = (ZERO_HEADER, [r.csv() for r in rows])
    res.extra["registry"] = reg
    res.extra["rows"] = rows
    res.seconds = time.perf_counter() - t0
    return res


def basin_suite(prob: Problem, registry: RootRegistry, count: int = 10, n: int = 100,
                budget: int = 200, seed: int = 0, r1: float = 10.0) -> SuiteResult:
    t0 = time.perf_counter()
    res = SuiteResult("basins")
    roots = sorted((r.z for r in registry), key=lambda z: (-abs(z), z.real, z.imag))[:count]
    u = unit_samples(n, seed)
    rows = []
    z_all, w_all, owners = [], [], []
    for z0 in roots:
        r = basin_disk_radius(prob, z0, r1)
        z_all.append(Disk(z0, r).sample(u))
        j = sector_of(prob, z0)
        wd = Disk(complex(prob.q(z0)), 1 / 13).sample(u)
        w_all.append(phi_array(prob, j, wd))
        owners.append(z0)
    bz = iterate_many(prob, np.concatenate(z_all), budget)
    bw = iterate_many(prob, np.concatenate(w_all), budget)
    ok_z = ok_w = True
    for i, z0 in enumerate(owners):
        sl = slice(i * n, (i + 1) * n)
        tolr = 1e-6 * (1 + abs(z0))
        cz = (bz.verdict[sl] == Verdict.CONVERGED) & (np.abs(bz.final[sl] - z0) <= tolr)
        cw = (bw.verdict[sl] == Verdict.CONVERGED) & (np.abs(bw.final[sl] - z0) <= tolr)
        ok_z &= bool(cz.all())
        ok_w &= bool(cw.all())
        rows.append([_fmt(z0.real), _fmt(z0.imag), _fmt(basin_disk_radius(prob, z0, r1)),
                     str(int(cz.sum())), str(int(cw.sum())), str(n)])
    res.check("basin_disk", ok_z, f"{len(owners)} roots x {n} samples in D(z0, 1/(3d|z0|^(d-1)))")
    res.check("pushforward_disk", ok_w, f"{len(owners)} roots x {n} samples in D(q(z0), 1/13)")
    res.tables["basins"] = (["root_re", "root_im", "radius", "converged_z", "converged_w", "n"], rows)
    res.seconds = time.perf_counter() - t0
    return res


# --------------------------------------------------------------------------
# pullbacks
# --------------------------------------------------------------------------

def pullback_suite(prob: Problem, starts: int = 50, n: int = 100, alpha: float = 0.8,
                   eps: float = 0.1, seed: int = 0) -> SuiteResult:
    t0 = time.perf_counter()
    res = SuiteResult("pullback")
    lam = float(prob.lam)
    rows = []
    for j in range(1, prob.d + 1):
        nu, w, trace = calibrate_nu(prob, j, alpha, eps, samples=starts, n=n, seed=seed + j)
        C = trace.imag_drift()
        B = trace.derivative_floor()
        K = trace.decay_constant(lam)
        res.check(f"containment_j{j}", trace.containment_ok(), f"nu={nu:g}")
        res.check(f"drift_j{j}", trace.drift_ok(), "Re psi^n >= Re w + n(1-alpha-eps)")
        res.check(f"modulus_j{j}", trace.modulus_ok(), "|psi^n| >= max(n,|w|)(1-alpha-eps)/4")
        res.check(f"imag_drift_j{j}", math.isfinite(C), f"C_hat={C:.4g}")
        res.check(f"derivative_j{j}", B > 0 and math.isfinite(B), f"B_hat={B:.4g}")
        res.check(f"decay_j{j}", math.isfinite(K), f"decay constant {K:.4g}")
        res.metrics.update({f"nu_j{j}": nu, f"C_hat_j{j}": C, f"B_hat_j{j}": B})
        for i in range(w.size):
            rows.append([str(j), _fmt(w[i].real), _fmt(w[i].imag), _fmt(nu),
                         _fmt(trace.points[-1, i].real), _fmt(trace.points[-1, i].imag),
                         _fmt(float(trace.fd_derivative[:, i].min()))])
    res.tables["pullback"] = (["j", "w_re", "w_im", "nu", "psi_n_re", "psi_n_im", "min_fd_derivative"], rows)
    res.seconds = time.perf_counter() - t0
    return res


# --------------------------------------------------------------------------
# measure-zero evidence
# --------------------------------------------------------------------------

def registry_for_thinness(prob: Problem, kmax: int = 40) -> RootRegistry:
    reg = RootRegistry()
    from .roots import refine_zero, v_anchor
    from .sectors import phi

    for j in range(1, prob.d + 1):
        for a in range(0, kmax + 1):
            for k in ((a, -a) if a else (0,)):
                try:
                    anchor = v_anchor(prob, j, k)
                    refine_zero(prob, phi(prob, j, anchor.v), registry=reg)
                except NewtonMeasureError:
                    continue
    return reg


def measure_suite(prob: Problem, window=(-4.0, -4.0, 4.0, 4.0), resolutions=(256, 512, 1024),
                  budgets=(50, 100, 200), ceiling: float = 0.005, thin_R0: float = 3.0,
                  thin_window=(-20.0, -20.0, 20.0, 20.0), thin_grid=(15, 15), thin_n: int = 256,
                  R1: float = 5.0, deltas=(0.05, 0.2, 0.8), unif_n: int = 128,
                  scan_budget: int = 200, seed: int = 0, registry: RootRegistry | None = None,
                  keep_batches: bool = False) -> SuiteResult:
    t0 = time.perf_counter()
    res = SuiteResult("measure")
    ps = postsingular_check(prob, max(budgets))
    detail = "; ".join(f"z={z:.6g}: {r.verdict.name} after {r.iterations}" for z, r in ps.entries)
    res.check("postsingular", ps.passed, detail or "no critical points")

    study = julia_area_study(prob, window, resolutions, budgets, keep_batches=keep_batches)
    dg = study.diagonal()
    res.check("area_diagonal_decreasing", study.diagonal_decreasing(),
              "diagonal " + ", ".join(f"{x:.5f}" for x in dg))
    res.check("area_final_ceiling", dg[-1] <= ceiling, f"final {dg[-1]:.5f} vs ceiling {ceiling}")
    res.tables["area"] = (["resolution", "budget", "unresolved_fraction"], study.csv_rows())
    res.extra["study"] = study

    thin = thin_at_infinity_scan(prob, thin_R0, thin_window, thin_grid, thin_n, scan_budget, seed)
    worst = thin.argmin()
    res.check("thin_at_infinity", thin.minimum > 0,
              f"min density {thin.minimum:.4f} at D({worst.shape.center:.4g}, {thin_R0})")
    from .measure import DENSITY_HEADER

    res.tables["thin"] = (DENSITY_HEADER, thin.csv_rows())

    reg = registry if registry is not None else registry_for_thinness(prob)
    unif = uniform_thinness_check(prob, reg, R1, deltas, unif_n, budget=scan_budget, seed=seed)
    if unif.reports:
        uw = unif.argmin()
        udetail = f"min density {unif.minimum:.4f} over {len(unif.reports)} disks, worst D({uw.shape.center:.4g}, {uw.shape.r})"
    else:
        udetail = "no roots beyond R1"
    res.check("uniform_thinness", bool(unif.reports) and unif.minimum > 0, udetail)
    res.tables["uniform"] = (DENSITY_HEADER, unif.csv_rows())
    res.metrics.update(final_unresolved=dg[-1], thin_min=thin.minimum,
                       uniform_min=unif.minimum if unif.reports else math.nan)
    res.seconds = time.perf_counter() - t0
    return res


def check_problem(prob: Problem, budget: int = 200, seed: int = 0) -> SuiteResult:
    """Singular-orbit hypothesis plus sampled thinness conditions."""
    t0 = time.perf_counter()
    res = SuiteResult("check")
    cj = all_cj(prob)
    res.check("cj_nonzero", all(abs(c) > 0 for c in cj), ", ".join(f"{c:.6g}" for c in cj))
    ps = postsingular_check(prob, budget)
    detail = "; ".join(f"z={z:.6g}: {r.verdict.name}" for z, r in ps.entries)
    res.check("postsingular", ps.passed, detail or "no critical points")
    thin = thin_at_infinity_scan(prob, 3.0, budget=budget, seed=seed)
    res.check("thin_at_infinity", thin.minimum > 0, f"min density {thin.minimum:.4f}")
    reg = registry_for_thinness(prob)
    unif = uniform_thinness_check(prob, reg, 5.0, budget=budget, seed=seed)
    res.check("uniform_thinness", bool(unif.reports) and unif.minimum > 0,
              f"min density {unif.minimum:.4f}" if unif.reports else "no roots beyond R1")
    res.seconds = time.perf_counter() - t0
    return res


# --------------------------------------------------------------------------
# full acceptance run with artifacts
# --------------------------------------------------------------------------

def write_tables(res: SuiteResult, outdir) -> list:
    from pathlib import Path

    from .appcli import csv_text

    outdir = Path(outdir)
    paths = []
    for name, (header, rows) in res.tables.items():
        p = outdir / f"{res.name}_{name}.csv"
        p.write_text(csv_text(header, rows))
        paths.append(p)
    return paths


def run_acceptance(prob: Problem, outdir, seed: int = 0, only: tuple[str, ...] | None = None
                   ) -> dict[str, SuiteResult]:
    """Criteria suites in order, each writing its CSVs (and the area PPM) to outdir."""
    from pathlib import Path

    from .appcli import image_from_batch

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    want = lambda k: only is None or k in only
    out: dict[str, SuiteResult] = {}
    if want("gamma"):
        out["gamma"] = gamma_suite(seed=seed)
    if want("asymptotics"):
        out["asymptotics"] = asymptotics_suite(prob)
    if want("zeros") or want("basins"):
        out["zeros"] = zero_suite(prob)
    if want("basins"):
        out["basins"] = basin_suite(prob, out["zeros"].extra["registry"], seed=seed)
    if want("pullback"):
        out["pullback"] = pullback_suite(prob, seed=seed)
    if want("measure"):
        m = measure_suite(prob, seed=seed, keep_batches=True)
        study = m.extra["study"]
        res = study.resolutions[-1]
        batch = study.batches[res].at_budget(study.budgets[-1])
        img = image_from_batch(batch, study.window, res, study.budgets[-1])
        img.write_ppm(outdir / f"basins_{res}.ppm")
        m.extra["black_fraction"] = img.black_fraction()
        study.batches.clear()
        out["measure"] = m
    for r in out.values():
        write_tables(r, outdir)
    return out
