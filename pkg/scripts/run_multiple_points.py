"""Decompose a quintic supported on two points with non-constant weights."""

import argparse

from _common import load, save_json
from gadkit.decomposer import gad_decompose


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rep = gad_decompose(load("multiple_points"), rng=args.seed)
    print(f"rank {rep.rank}  multiplicities {rep.multiplicities}  nil indices {rep.nil_indices}")
    print(f"weight degrees {rep.degrees}  error {rep.error:.2e}")
    print("wrote", save_json("multiple_points", rep.to_dict()))


if __name__ == "__main__":
    main()
