"""Run every verification suite once and write the CSVs and the PPM."""

import argparse

from newton_measure import load_problem
from newton_measure.suites import run_acceptance


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", default="problems/erf_c03.json")
    ap.add_argument("--out", default="acceptance_out")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--only", default=None, help="comma list: gamma,asymptotics,zeros,basins,pullback,measure")
    args = ap.parse_args()
    prob = load_problem(args.config).problem
    only = tuple(args.only.split(",")) if args.only else None
    results = run_acceptance(prob, args.out, args.seed, only)
    for r in results.values():
        for line in r.lines:
            print(line)
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name} ({r.seconds:.1f}s)")


if __name__ == "__main__":
    main()
