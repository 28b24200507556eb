"""Winding number over an energy grid around the nu = 0 loop."""

import argparse
from pathlib import Path

from fockskin.cli import main as cli


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", type=Path, default=Path("runs/winding"))
    ap.add_argument("--dim", type=int, default=50)
    ap.add_argument("--n", type=int, default=81)
    args = ap.parse_args()
    args.out_dir.mkdir(parents=True, exist_ok=True)
    for nu in (0, 1, 2):
        out = args.out_dir / f"map_nu{nu}.csv"
        code = cli(["winding-map", "--nu", str(nu), "--dim", str(args.dim),
                    "--nx", str(args.n), "--ny", str(args.n), "--out", str(out)])
        print(f"nu={nu}: exit {code}, {out}")


if __name__ == "__main__":
    main()
