"""Unresolved-fraction matrix over resolutions and budgets, plus where the
unresolved orbits end up (drift zone vs the rest)."""

import argparse
import time

import numpy as np

from newton_measure import Verdict, load_problem
from newton_measure.measure import julia_area_study


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", default="problems/erf_c03.json")
    ap.add_argument("--resolutions", default="256,512,1024")
    ap.add_argument("--budgets", default="50,100,200,400")
    args = ap.parse_args()
    prob = load_problem(args.config).problem
    res = tuple(int(v) for v in args.resolutions.split(","))
    bud = tuple(int(v) for v in args.budgets.split(","))
    t0 = time.perf_counter()
    study = julia_area_study(prob, (-4, -4, 4, 4), res, bud, keep_batches=True)
    print(f"{'res':>6} " + " ".join(f"{b:>9}" for b in bud))
    for i, r in enumerate(res):
        print(f"{r:>6} " + " ".join(f"{study.fractions[i, k]:9.5f}" for k in range(len(bud))))
    print("diagonal", ", ".join(f"{x:.5f}" for x in study.diagonal()),
          "decreasing" if study.diagonal_decreasing() else "not decreasing")
    batch = study.batches[res[0]]
    un = batch.verdict == Verdict.UNRESOLVED
    req = prob.q(batch.final[un]).real
    print(f"unresolved at {res[0]}: {un.mean():.4f}; final Re q quantiles (10/50/90%): "
          + ", ".join(f"{v:.3g}" for v in np.quantile(req, [0.1, 0.5, 0.9])))
    print(f"{time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main()
