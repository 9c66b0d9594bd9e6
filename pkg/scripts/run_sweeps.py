"""Perturbation sweeps: Waring decompositions in 9 variables and double points in 2."""

import argparse
from dataclasses import replace

from _common import RESULTS
from gadkit.benchlab import BenchConfig, emit, loglog_slope, sweep

CONFIGS = {
    "waring": BenchConfig(9, 3, (0,) * 5),
    "double_points": BenchConfig(2, 5, (1, 1, 0)),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("which", nargs="*", choices=sorted(CONFIGS), default=sorted(CONFIGS))
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    RESULTS.mkdir(exist_ok=True)
    for name in args.which:
        cfg = replace(CONFIGS[name], seed=args.seed, workers=args.workers)
        rows = sweep(cfg)
        emit(rows, RESULTS / f"sweep_{name}.csv", RESULTS / f"sweep_{name}.svg")
        print(f"{name}: slope over [1e-10, 1e-4] = {loglog_slope(rows, 1e-10, 1e-4):.3f}")
        for r in rows:
            print(f"  eps={r.eps:.1e} median={r.median:.2e} failures={r.failures}")


if __name__ == "__main__":
    main()
