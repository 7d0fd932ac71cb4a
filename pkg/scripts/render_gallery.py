"""Write z-plane and w-plane basin images for a problem file."""

import argparse
from pathlib import Path

from newton_measure import load_problem
from newton_measure.appcli import render_basins, render_wplane


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", default="problems/erf_c03.json")
    ap.add_argument("--out", default="gallery")
    ap.add_argument("--res", type=int, default=512)
    ap.add_argument("--budget", type=int, default=200)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(exist_ok=True)
    prob = load_problem(args.config).problem
    shots = {
        "z_square": lambda: render_basins(prob, (-4, -4, 4, 4), args.res, args.budget),
        "z_wide": lambda: render_basins(prob, (-12, -12, 12, 12), args.res, args.budget),
    }
    for j in range(1, prob.d + 1):
        shots[f"w_sector{j}"] = lambda j=j: render_wplane(prob, j, (-20, 20, 60, 100), args.res, args.budget)
    for name, make in shots.items():
        img = make()
        img.write_ppm(out / f"{name}.ppm")
        img.write_png(out / f"{name}.png")
        print(f"{name}: black {img.black_fraction():.4f}, roots {len(img.registry)}")


if __name__ == "__main__":
    main()
