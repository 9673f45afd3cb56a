"""Write the region CSVs behind the sample-efficiency plots.

    python scripts/region_data.py --out data/
"""

from __future__ import annotations

import argparse
from pathlib import Path

from vbcast.cli import main as cli


def run(out: Path, steps: int, workers: int) -> None:
    out.mkdir(parents=True, exist_ok=True)
    for d, top in ((2, 0.75), (3, 8 / 9), (5, 24 / 25)):
        cli(["region", "abc", "--d", str(d), "--grid", f"0:{top}:{steps}",
             "--out", str(out / f"abc_d{d}.csv")])
    # three receivers, uniform error, through the SDP
    cli(["region", "abc-n", "--d", "2", "--n", "3", "--grid", "0:0.75:16",
         "--workers", str(workers), "--out", str(out / "abc_n3_d2.csv")])
    for d in (2, 3):
        cli(["region", "pbc", "--d", str(d), "--grid", f"0.05:1:{steps}", "--n-range", "2:60",
             "--out", str(out / f"pbc_d{d}.csv")])


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("data"))
    ap.add_argument("--steps", type=int, default=61)
    ap.add_argument("--workers", type=int, default=4)
    args = ap.parse_args()
    run(args.out, args.steps, args.workers)
    print(f"wrote CSVs to {args.out}/")
