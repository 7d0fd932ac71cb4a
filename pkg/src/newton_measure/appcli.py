"""Basin renderers and the ``newton-measure`` command line."""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .asym import all_cj
from .core import LoadedProblem, Problem, load_problem
from .dynamics import OrbitBatch, Verdict, iterate_many
from .errors import BakerDomainLikely, ConfigError, NewtonMeasureError, NotInG
from .measure import AREA_HEADER, DENSITY_HEADER, Disk, density, julia_area_study, pixel_centers
from .roots import RootRegistry
from .sectors import RegionSpec, ZoneParams, gamma_curve, phi_array, radius
from . import suites

# sentinel root ids
UNRESOLVED, POLE, ESCAPED, CYCLE = -1, -2, -3, -4

PALETTE = np.array([
    (230, 25, 75), (60, 180, 75), (255, 225, 25), (0, 130, 200),
    (245, 130, 48), (145, 30, 180), (70, 240, 240), (240, 50, 230),
    (210, 245, 60), (250, 190, 212), (0, 128, 128), (220, 190, 255),
    (170, 110, 40), (255, 250, 200), (128, 0, 0), (170, 255, 195),
], dtype=np.float64)

SENTINEL_RGB = {
    UNRESOLVED: (0, 0, 0),
    POLE: (255, 255, 255),
    ESCAPED: (64, 64, 64),
    CYCLE: (128, 128, 128),
}
OVERLAY_RGB = {1: (255, 255, 255), 2: (160, 160, 160)}


@dataclass
class ImageBuffer:
    width: int
    height: int
    root_id: np.ndarray      # int32, row-major, top row first
    iterations: np.ndarray   # int32
    window: tuple[float, float, float, float]
    budget: int = 200
    overlay: np.ndarray | None = None   # uint8, 0 = none
    registry: RootRegistry = field(default_factory=RootRegistry)

    def __post_init__(self) -> None:
        n = self.width * self.height
        if self.root_id.size != n or self.iterations.size != n:
            raise ValueError("pixel data does not match width*height")
        x0, y0, x1, y1 = self.window
        if not (x1 > x0 and y1 > y0):
            raise ValueError("window must have positive area")

    def black_fraction(self) -> float:
        return float(np.mean(self.root_id == UNRESOLVED))

    def rgb(self) -> np.ndarray:
        ids = self.root_id
        it = self.iterations.astype(np.float64)
        shade = 1.0 - 0.6 * np.log1p(it) / math.log1p(max(self.budget, 1))
        out = np.zeros((ids.size, 3), dtype=np.float64)
        roots = ids >= 0
        out[roots] = PALETTE[ids[roots] % len(PALETTE)] * shade[roots, None]
        for sid, col in SENTINEL_RGB.items():
            out[ids == sid] = col
        if self.overlay is not None:
            for k, col in OVERLAY_RGB.items():
                out[self.overlay.ravel() == k] = col
        return np.rint(out).astype(np.uint8).reshape(self.height, self.width, 3)

    def ppm_bytes(self) -> bytes:
        return f"P6\n{self.width} {self.height}\n255\n".encode() + self.rgb().tobytes()

    def write_ppm(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_bytes(self.ppm_bytes())
        return path

    def write_png(self, path: str | Path) -> Path | None:
        try:
            from PIL import Image
        except ImportError:
            return None
        path = Path(path)
        Image.fromarray(self.rgb(), "RGB").save(path)
        return path


def _classify_tiles(prob: Problem, pts: np.ndarray, budget: int, tile_rows: int,
                    workers: int) -> OrbitBatch:
    """Run orbits row-tile by row-tile; the merge is by position only."""
    h = pts.shape[0]
    tiles = [(r, min(r + tile_rows, h)) for r in range(0, h, tile_rows)]

    def run(tile):
        a, b = tile
        return iterate_many(prob, pts[a:b].ravel(), budget)

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(run, tiles))
    else:
        parts = [run(t) for t in tiles]
    return OrbitBatch(*(np.concatenate([getattr(p, k) for p in parts])
                        for k in ("verdict", "iterations", "final", "period", "multiplier")))


def ids_from_batch(batch: OrbitBatch, registry: RootRegistry | None = None
                   ) -> tuple[np.ndarray, RootRegistry]:
    reg = registry if registry is not None else RootRegistry()
    conv = batch.verdict == Verdict.CONVERGED
    reg.register_many(batch.final[conv])
    ids = np.full(len(batch), UNRESOLVED, dtype=np.int32)
    ids[conv] = reg.assign(batch.final[conv])
    ids[batch.verdict == Verdict.POLE] = POLE
    ids[batch.verdict == Verdict.ESCAPED] = ESCAPED
    ids[batch.verdict == Verdict.CYCLE] = CYCLE
    return ids, reg


def image_from_batch(batch: OrbitBatch, window, res: int, budget: int,
                     registry: RootRegistry | None = None) -> ImageBuffer:
    ids, reg = ids_from_batch(batch, registry)
    return ImageBuffer(res, res, ids, batch.iterations.astype(np.int32), tuple(window), budget,
                       registry=reg)


def render_basins(prob: Problem, window, resolution: int, budget: int = 200,
                  tile_rows: int = 64, workers: int = 4,
                  registry: RootRegistry | None = None) -> ImageBuffer:
    x0, y0, x1, y1 = window
    if not (x1 > x0 and y1 > y0):
        raise ValueError("window must have positive area")
    pts = pixel_centers(window, resolution)
    batch = _classify_tiles(prob, pts, budget, tile_rows, workers)
    return image_from_batch(batch, window, resolution, budget, registry)


def window_in_G(prob: Problem, window) -> bool:
    x0, y0, x1, y1 = window
    R = radius(prob)
    # closest point of the rectangle to the origin
    cx = min(max(0.0, x0), x1)
    cy = min(max(0.0, y0), y1)
    if math.hypot(cx, cy) <= R:
        return False
    return not (y0 <= 0 <= y1 and x1 >= 0)


def gamma_overlay(window, res: int, mu: float, alpha: float, code: int,
                  overlay: np.ndarray) -> None:
    """Rasterize x = gamma(y) as a connected 1-pixel polyline, row by row."""
    x0, y0, x1, y1 = window
    dy = (y1 - y0) / res
    dx = (x1 - x0) / res
    ys = y1 - (np.arange(res) + 0.5) * dy
    ok = np.abs(ys) >= 2 * abs(mu)
    cols = np.full(res, -1, dtype=np.int64)
    if ok.any():
        xs = gamma_curve(mu, alpha, ys[ok])
        cols[ok] = np.floor((xs - x0) / dx).astype(np.int64)
    prev = None
    for row in range(res):
        c = cols[row] if ok[row] else None
        if c is None:
            prev = None
            continue
        # join to the previous row's column so the polyline stays connected
        near = c if prev is None else prev + int(np.sign(c - prev))
        lo, hi = min(c, near), max(c, near)
        a, b = max(lo, 0), min(hi, res - 1)
        if a <= b:
            overlay[row, a:b + 1] = code
        prev = c


def render_wplane(prob: Problem, j: int, window, resolution: int, budget: int = 200,
                  tile_rows: int = 64, workers: int = 4, overlays: bool = True,
                  registry: RootRegistry | None = None) -> ImageBuffer:
    if not window_in_G(prob, window):
        raise NotInG(f"window {window} touches the disk |w| <= R or the cut [0, inf)")
    w = pixel_centers(window, resolution)
    z = phi_array(prob, j, w.ravel()).reshape(w.shape)
    batch = _classify_tiles(prob, z, budget, tile_rows, workers)
    img = image_from_batch(batch, window, resolution, budget, registry)
    if overlays:
        lam = float(prob.lam)
        cj = abs(all_cj(prob)[j - 1])
        ov = np.zeros((resolution, resolution), dtype=np.uint8)
        gamma_overlay(window, resolution, lam - 1, 1.0 / cj, 2, ov)
        gamma_overlay(window, resolution, lam, 1.0 / cj, 1, ov)
        img.overlay = ov
    return img


# --------------------------------------------------------------------------
# configuration
# --------------------------------------------------------------------------

@dataclass
class RunConfig:
    command: str
    problem_path: str
    target: str | None = None
    window: tuple[float, float, float, float] | None = None
    res: int = 256
    budget: int = 200
    seed: int = 0
    out: str | None = None
    tol: float = 1e-12
    zone: ZoneParams = field(default_factory=ZoneParams)
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.tol <= 0:
            raise ConfigError("tolerances must be positive")
        if self.res < 16:
            raise ConfigError("resolution must be at least 16")
        if self.budget < 1:
            raise ConfigError("budget must be positive")
        if self.window is not None:
            x0, y0, x1, y1 = self.window
            if not (x1 > x0 and y1 > y0):
                raise ConfigError("window must have positive area")


def _parse_window(s: str | None):
    if s is None:
        return None
    try:
        parts = tuple(float(v) for v in s.split(","))
    except ValueError as exc:
        raise ConfigError(f"bad window {s!r}") from exc
    if len(parts) != 4:
        raise ConfigError("window needs x0,y0,x1,y1")
    return parts


def _parse_list(s: str, kind=int) -> tuple:
    try:
        return tuple(kind(v) for v in s.split(","))
    except ValueError as exc:
        raise ConfigError(f"bad list {s!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="newton-measure")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True)
        p.add_argument("--window")
        p.add_argument("--res", type=int, default=256)
        p.add_argument("--budget", type=int, default=200)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out")
        p.add_argument("--tol", type=float, default=1e-12)
        p.add_argument("--workers", type=int, default=4)
        return p

    common(sub.add_parser("info"))
    common(sub.add_parser("render"))
    p = common(sub.add_parser("render-w"))
    p.add_argument("--sector", type=int, default=1)
    p = common(sub.add_parser("zeros"))
    p.add_argument("--kmin", type=int, default=5)
    p.add_argument("--kmax", type=int, default=40)
    p = common(sub.add_parser("verify"))
    p.add_argument("target", choices=["asymptotics", "gamma", "basins", "preimages"])
    p = common(sub.add_parser("density"))
    p.add_argument("--center", default="0,0")
    p.add_argument("--radius", type=float, default=4.0)
    p.add_argument("--n", type=int, default=1000)
    p = common(sub.add_parser("area-study"))
    p.add_argument("--resolutions", default="256,512,1024")
    p.add_argument("--budgets", default="50,100,200")
    p.add_argument("--ceiling", type=float, default=0.005)
    common(sub.add_parser("check"))
    p = common(sub.add_parser("curve"))
    p.add_argument("--mu", type=float, default=0.5)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--ymin", type=float, default=None)
    p.add_argument("--ymax", type=float, default=1e3)
    p.add_argument("--n", type=int, default=200)
    return ap


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    params = {k: v for k, v in vars(ns).items()
              if k not in ("command", "config", "window", "res", "budget", "seed", "out", "tol", "target")}
    return RunConfig(ns.command, ns.config, getattr(ns, "target", None), _parse_window(ns.window),
                     ns.res, ns.budget, ns.seed, ns.out, ns.tol, params=params)


# --------------------------------------------------------------------------
# output helpers
# --------------------------------------------------------------------------

def csv_text(header: list[str], rows: list[list[str]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _emit(cfg: RunConfig, text: str, suffix: str = "") -> None:
    if cfg.out:
        path = Path(cfg.out)
        if suffix:
            path = path.with_name(path.stem + suffix + path.suffix)
        path.write_text(text)
    else:
        sys.stdout.write(text)


def _emit_suite(cfg: RunConfig, res: suites.SuiteResult) -> int:
    for line in res.lines:
        print(line, file=sys.stderr if not cfg.out else sys.stdout)
    tables = list(res.tables.items())
    for i, (name, (header, rows)) in enumerate(tables):
        _emit(cfg, csv_text(header, rows), "" if len(tables) == 1 else f"_{name}")
    print(f"{'PASS' if res.passed else 'FAIL'} {res.name}", file=sys.stderr if not cfg.out else sys.stdout)
    return 0 if res.passed else 1


def _write_image(cfg: RunConfig, img: ImageBuffer) -> None:
    out = Path(cfg.out or "basins.ppm")
    img.write_ppm(out.with_suffix(".ppm"))
    img.write_png(out.with_suffix(".png"))
    print(f"wrote {out.with_suffix('.ppm')} ({img.width}x{img.height}), "
          f"black fraction {img.black_fraction():.4f}, roots {len(img.registry)}")


# --------------------------------------------------------------------------
# dispatch
# --------------------------------------------------------------------------

def _info(cfg: RunConfig, lp: LoadedProblem) -> int:
    prob = lp.problem
    fmt = lambda cs: "[" + ", ".join(f"{c.real:.12g}{c.imag:+.12g}j" for c in cs) + "]"
    print(f"p = {fmt(prob.p.coeffs)}")
    print(f"q = {fmt(prob.q.coeffs)}")
    print(f"c = {prob.c.real:.12g}{prob.c.imag:+.12g}j")
    print(f"d = {prob.d}  m = {prob.m}  lambda = {prob.lam}")
    print(f"alpha = {lp.record.alpha:.12g}  b = {lp.record.b:.12g}")
    print(f"R = {radius(prob):g}")
    for j, c in enumerate(all_cj(prob), 1):
        print(f"c_{j} = {c.real:.12g}{c.imag:+.12g}j  |c_{j}| = {abs(c):.12g}")
    return 0


def run(cfg: RunConfig) -> int:
    lp = load_problem(cfg.problem_path)
    prob = lp.problem
    cmd = cfg.command
    P = cfg.params
    workers = int(P.get("workers", 4))
    if cmd == "info":
        return _info(cfg, lp)
    # every dynamical command needs the sector constants; a vanishing one aborts
    all_cj(prob)
    if cmd == "render":
        img = render_basins(prob, cfg.window or (-4.0, -4.0, 4.0, 4.0), cfg.res, cfg.budget,
                            workers=workers)
        _write_image(cfg, img)
        return 0
    if cmd == "render-w":
        img = render_wplane(prob, int(P.get("sector", 1)), cfg.window or (-20.0, 20.0, 60.0, 100.0),
                            cfg.res, cfg.budget, workers=workers)
        _write_image(cfg, img)
        return 0
    if cmd == "zeros":
        return _emit_suite(cfg, suites.zero_suite(prob, P.get("kmin", 5), P.get("kmax", 40)))
    if cmd == "verify":
        if cfg.target == "gamma":
            res = suites.gamma_suite(seed=cfg.seed)
        elif cfg.target == "asymptotics":
            res = suites.asymptotics_suite(prob, tol=cfg.tol)
        elif cfg.target == "basins":
            reg = suites.zero_suite(prob).extra["registry"]
            res = suites.basin_suite(prob, reg, budget=cfg.budget, seed=cfg.seed)
        else:
            res = suites.pullback_suite(prob, seed=cfg.seed)
        return _emit_suite(cfg, res)
    if cmd == "density":
        cx, cy = _parse_list(P.get("center", "0,0"), float)
        rep = density(prob, Disk(complex(cx, cy), P.get("radius", 4.0)), P.get("n", 1000),
                      cfg.budget, cfg.seed)
        _emit(cfg, csv_text(DENSITY_HEADER, [rep.csv_row()]))
        return 0
    if cmd == "area-study":
        study = julia_area_study(prob, cfg.window or (-4.0, -4.0, 4.0, 4.0),
                                 _parse_list(P.get("resolutions", "256,512,1024")),
                                 _parse_list(P.get("budgets", "50,100,200")))
        _emit(cfg, csv_text(AREA_HEADER, study.csv_rows()))
        ok = study.evidence(P.get("ceiling", 0.005))
        print(f"{'PASS' if ok else 'FAIL'} area-study diagonal "
              + ", ".join(f"{x:.5f}" for x in study.diagonal()), file=sys.stderr)
        return 0 if ok else 1
    if cmd == "check":
        res = suites.check_problem(prob, cfg.budget, cfg.seed)
        for line in res.lines:
            print(line)
        print(f"{'PASS' if res.passed else 'FAIL'} check")
        return 0 if res.passed else 1
    if cmd == "curve":
        mu, alpha = P.get("mu", 0.5), P.get("alpha", 1.0)
        spec = RegionSpec(mu, alpha)
        ymin = P.get("ymin") or 2 * abs(spec.mu) + 1
        ys = np.geomspace(ymin, P.get("ymax", 1e3), P.get("n", 200))
        xs = gamma_curve(mu, alpha, ys)
        _emit(cfg, csv_text(["y", "gamma"], [[f"{y:.17g}", f"{x:.17g}"] for y, x in zip(ys, xs)]))
        return 0
    raise ConfigError(f"unknown command {cmd!r}")


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    # "--window -4,-4,4,4" would otherwise read as an option
    for i in range(len(argv) - 1, 0, -1):
        if argv[i - 1] in ("--window", "--center") and argv[i].startswith("-"):
            argv[i - 1:i + 1] = [f"{argv[i - 1]}={argv[i]}"]
    try:
        ns = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        return run(config_from_args(ns))
    except (ConfigError, NotInG) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except BakerDomainLikely as exc:
        print(f"numeric abort: {exc}", file=sys.stderr)
        return 3
    except (NewtonMeasureError, FloatingPointError) as exc:
        print(f"numeric abort: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
