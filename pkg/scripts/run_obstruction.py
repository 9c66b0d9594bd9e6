"""Run the cubic in six variables whose single point needs a weight of degree above d - 1."""

import argparse

import numpy as np

from _common import load, save_json
from gadkit.apolarity import catalecticant, check_f
from gadkit.decomposer import DecomposeOptions, DegreeBoundError, gad_decompose
from gadkit.invsystems import ell_rank
from gadkit.polycore import LinearForm


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    f = load("obstruction", 6)
    try:
        gad_decompose(f, DecomposeOptions(random_coords=False), rng=args.seed)
        raise SystemExit("expected the degree bound to be exceeded")
    except DegreeBoundError as exc:
        details = exc.details
    cat = catalecticant(check_f(f), 1, 2)
    sv = np.linalg.svd(cat.matrices[0], compute_uv=False)
    rank7 = ell_rank(f, LinearForm((1, 0, 0, 0, 0, 0)))
    print(f"rank {details['rank']}  multiplicities {details['multiplicities']}  nil indices {details['nil_indices']}")
    print(f"catalecticant 1x2: shape {cat.matrices[0].shape}  rank {int((sv > 1e-10 * sv[0]).sum())}")
    print(f"l-rank at x0: {rank7}")
    print("wrote", save_json("obstruction", {"details": details, "ell_rank_x0": rank7}))


if __name__ == "__main__":
    main()
