"""Cross-check the barrier SDP against the closed forms on random problems."""

from __future__ import annotations

import argparse
import time

import numpy as np

from vbcast import analytic as an
from vbcast.optimizer import abc_closed_certificate, abc_dual_feasibility, solve_abc_sdp, solve_pbc_sdp


def abc_sweep(count: int, seed: int) -> float:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(count):
        d = 2 if i % 2 == 0 else 3
        e1, e2 = rng.uniform(0, an.eps_max(d), 2)
        primal = solve_abc_sdp(d, [e1, e2]).value
        dual = abc_dual_feasibility(d, e1, e2, abc_closed_certificate(d, e1, e2))["objective"]
        closed = an.u2_closed(d, e1, e2)
        worst = max(worst, abs(primal - closed))
        print(f"abc d={d} eps=({e1:.4f},{e2:.4f}) dual={dual:.9f} sdp={primal:.9f} closed={closed:.9f}")
    return worst


def pbc_sweep() -> float:
    worst = 0.0
    for d, n in ((2, 2), (2, 3), (2, 4), (3, 2)):
        for p in (0.25, 0.5, 1.0):
            got = solve_pbc_sdp(d, n, p).value
            want = float(an.s_n_closed(d, n, p))
            worst = max(worst, abs(got - want))
            print(f"pbc d={d} N={n} p={p} sdp={got:.9f} closed={want:.9f}")
    return worst


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--count", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    t0 = time.perf_counter()
    wa = abc_sweep(args.count, args.seed)
    wp = pbc_sweep()
    print(f"max |sdp - closed|: abc {wa:.2e}, pbc {wp:.2e} ({time.perf_counter() - t0:.1f}s)")
