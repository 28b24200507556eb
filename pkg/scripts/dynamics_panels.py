"""Edge amplitude and particle number for the circle, triangle, square and random states."""

import argparse
from pathlib import Path

from fockskin.cli import main as cli
from fockskin.dynamics import SibcInit, evolve, growth_rate_fit
from fockskin.lattice import ChainSpec, OscillatorParams

RUNS = {
    "circle": "sibc=0,0.05",
    "triangle": "sibc=0.05,0",
    "square": "sibc=0,-0.05",
    "random": "random=2024",
    "obc1": "obc=1",
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", type=Path, default=Path("runs/dynamics"))
    ap.add_argument("--t-max", type=float, default=40.0)
    args = ap.parse_args()
    args.out_dir.mkdir(parents=True, exist_ok=True)

    for name, init in RUNS.items():
        cli(["evolve", "--initial", init, "--t-max", str(args.t_max), "--dt-out", "0.1",
             "--out", str(args.out_dir / f"{name}.csv"),
             "--frames", str(args.out_dir / f"{name}_frames.csv")])

    spec = ChainSpec(OscillatorParams(), 0, 50)
    for name, E in (("circle", 0.05j), ("triangle", 0.05 + 0j), ("square", -0.05j)):
        tr = evolve(spec, SibcInit(E), 10, 0.1)
        print(f"{name:8s} E = {E.real:+.2f}{E.imag:+.2f}i fitted rate {growth_rate_fit(tr, (0, 10)):+.5f} (horizon {tr.horizon:g})")


if __name__ == "__main__":
    main()
