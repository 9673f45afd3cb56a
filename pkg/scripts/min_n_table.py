"""Smallest receiver count with sample-efficient probabilistic broadcasting, per (d, p)."""

from __future__ import annotations

import argparse

from vbcast.analytic import min_n_for_se


def table(dims: range, ps: list[float], cap: int) -> list[list[str]]:
    rows = [["d"] + [f"p={p:g}" for p in ps]]
    for d in dims:
        row = [str(d)]
        for p in ps:
            n = min_n_for_se(d, 1 if p == 1 else p, cap)
            row.append("none" if n is None else str(n))
        rows.append(row)
    return rows


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dmax", type=int, default=10)
    ap.add_argument("--p", type=float, nargs="+", default=[1.0, 0.9, 0.75, 0.5, 0.25])
    ap.add_argument("--cap", type=int, default=10**6)
    args = ap.parse_args()
    for row in table(range(2, args.dmax + 1), args.p, args.cap):
        print(",".join(row))
