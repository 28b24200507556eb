"""Periodic spectra for several nu, their traced loops, and loop growth with D."""

import argparse
import csv
from pathlib import Path

from fockskin.cli import main as cli
from fockskin.lattice import ChainSpec, OscillatorParams, PBC
from fockskin.topology import loop_trace, pbc_spectrum_numeric


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", type=Path, default=Path("runs/spectra"))
    ap.add_argument("--dim", type=int, default=50)
    ap.add_argument("--dims", default="25,50,100,200,400")
    args = ap.parse_args()
    args.out_dir.mkdir(parents=True, exist_ok=True)
    params = OscillatorParams()

    for nu in range(-2, 3):
        cli(["spectra", "--nu", str(nu), "--dim", str(args.dim), "--bc", "pbc",
             "--out", str(args.out_dir / f"pbc_nu{nu}.csv")])
        cli(["spectra", "--nu", str(nu), "--dim", str(args.dim), "--bc", "obc",
             "--out", str(args.out_dir / f"obc_nu{nu}.csv")])
        trace = loop_trace(params, nu, args.dim, 512)
        with open(args.out_dir / f"loop_nu{nu}.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["angle", "re", "im"])
            for a, z in zip(trace.angles, trace.points):
                w.writerow([f"{a:.17g}", f"{z.real:.17g}", f"{z.imag:.17g}"])

    cli(["scaling", "--dims", args.dims, "--out", str(args.out_dir / "scaling.csv")])

    spec = ChainSpec(params, 0, args.dim, PBC)
    vals = pbc_spectrum_numeric(spec).values
    print(f"D={args.dim}: {len(vals)} periodic eigenvalues, max Im = {vals.imag.max():.6f}")
    print(f"wrote {args.out_dir}")


if __name__ == "__main__":
    main()
