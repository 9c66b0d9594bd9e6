"""Decompose the ternary quartic that is a sum of three fourth powers."""

import argparse

from _common import load, save_json
from gadkit.decomposer import gad_decompose


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rep = gad_decompose(load("waring"), rng=args.seed)
    print(f"rank {rep.rank}  multiplicities {rep.multiplicities}  error {rep.error:.2e}")
    for term in rep.gad.terms:
        print("  ", term.ell, "weight", term.omega)
    print("wrote", save_json("waring", rep.to_dict()))


if __name__ == "__main__":
    main()
