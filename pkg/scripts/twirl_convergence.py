"""Monte-Carlo twirl error against the exact commutant projection, by sample count."""

from __future__ import annotations

import argparse

import numpy as np

from vbcast.acceptance import random_hermitian
from vbcast.permutations import mc_twirl, rng_from_seed, triple_twirl_exact
from vbcast.tensor import MultipartiteOperator

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--d", type=int, default=2)
    ap.add_argument("--seeds", type=int, default=5)
    args = ap.parse_args()
    d = args.d
    x = MultipartiteOperator(random_hermitian(d ** 3, rng_from_seed(0)), (d, d, d))
    exact = triple_twirl_exact(x).entries
    print("samples,mean_error,error_times_sqrt_n")
    for n in (100, 300, 1000, 3000, 10_000, 30_000):
        err = float(np.mean([np.linalg.norm(mc_twirl(x, n, seed=s).entries - exact) for s in range(args.seeds)]))
        print(f"{n},{err:.6g},{err * np.sqrt(n):.6g}")
