"""Periodic roots of the truncated annihilation operator, windings of its powers, coherent modes."""

import argparse
import math
from pathlib import Path

from fockskin.annihilation import pbc_radius, winding_power
from fockskin.cli import main as cli


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", type=Path, default=Path("runs/annihilation"))
    args = ap.parse_args()
    args.out_dir.mkdir(parents=True, exist_ok=True)

    for D in (10, 40, 100):
        cli(["annihilate", "--dim", str(D), "--out", str(args.out_dir / f"roots_D{D}.csv")])
    for alpha in ("1,0", "2,0", "0,3"):
        tag = alpha.replace(",", "_")
        cli(["annihilate", "--task", "coherent", "--alpha", alpha, "--length", "80",
             "--out", str(args.out_dir / f"coherent_{tag}.csv")])

    for D in (10, 40, 78, 200, 1000):
        print(f"D={D:5d} root modulus / sqrt((D+1)/e) = {pbc_radius(D) / math.sqrt((D + 1) / math.e):.4f}")
    for p in (1, 2, 3):
        print(f"p={p} winding about 0 at D=30: {winding_power(p, 30, 0.0).w}")


if __name__ == "__main__":
    main()
