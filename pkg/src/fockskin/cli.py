"""Command-line driver: every experiment writes CSV or JSON plus a manifest.

Exit codes: 0 success, 2 bad arguments, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from fockskin import __version__
from fockskin.annihilation import (
    AnnihilationSpec,
    annihilation_spectrum,
    coherent_mode,
    pbc_radius,
    pbc_roots_analytic,
    winding_power,
)
from fockskin.dynamics import DEFAULT_TRUNCATION, evolve, parse_initial
from fockskin.errors import AmbiguousWindingError, FockskinError, NumericalFailure
from fockskin.lattice import PBC, Boundary, ChainSpec, OscillatorParams
from fockskin.topology import (
    log_abs_r,
    loop_trace,
    obc_spectrum_numeric,
    pbc_spectrum_numeric,
    winding_number,
)

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 2, 3
AMBIGUOUS_LIMIT = 0.01


class UsageError(Exception):
    pass


# -- output ------------------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if x is None:
        return ""
    return format(float(x), ".17g")


def _csv_payload(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def _json_safe(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return None if not math.isfinite(x) else float(x)
    return x


def _param_value(v):
    if isinstance(v, (Boundary, Path)):
        return str(v)
    if isinstance(v, complex):
        return [v.real, v.imag]
    return v


def _emit(args, header: list[str], rows: list[list], extra: dict | None = None) -> None:
    """Write the data file (or stdout) and, for files, the manifest sidecar."""
    params = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "config")}
    params = {k: _param_value(v) for k, v in params.items()}
    if args.format == "json":
        data = [dict(zip(header, (_json_safe(x) for x in row))) for row in rows]
        data_text = json.dumps(data, sort_keys=True)
    else:
        data_text = _csv_payload(header, rows)
    manifest = {
        "command": args.command,
        "parameters": params,
        "version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "sha256": hashlib.sha256(data_text.encode()).hexdigest(),
        **(extra or {}),
    }
    if args.format == "json":
        text = json.dumps({"manifest": manifest, "data": json.loads(data_text)}, indent=1, sort_keys=True) + "\n"
    else:
        text = data_text
    if args.out is None or str(args.out) == "-":
        sys.stdout.write(text)
        return
    out = Path(args.out)
    out.write_text(text, encoding="utf-8")
    Path(f"{out}.manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def _params(args) -> OscillatorParams:
    try:
        return OscillatorParams(args.omega, args.kappa)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


# -- commands ----------------------------------------------------------------


def cmd_spectra(args) -> int:
    spec = ChainSpec(_params(args), args.nu, args.dim, args.bc)
    spectrum = pbc_spectrum_numeric(spec) if spec.bc.is_periodic else obc_spectrum_numeric(spec)
    rows = [[i, v.real, v.imag] for i, v in enumerate(spectrum.values)]
    _emit(args, ["index", "re", "im"], rows, {"method": spectrum.method, "max_residual": _json_safe(spectrum.max_residual)})
    return EXIT_OK


def _loop_box(params, nu, dim) -> tuple[float, float, float, float]:
    pts = loop_trace(params, nu, dim).valid_points
    pad_re = 0.1 * max(np.ptp(pts.real), params.kappa)
    pad_im = 0.1 * max(np.ptp(pts.imag), params.kappa)
    return pts.real.min() - pad_re, pts.real.max() + pad_re, pts.imag.min() - pad_im, pts.imag.max() + pad_im


def cmd_winding_map(args) -> int:
    params = _params(args)
    box = _loop_box(params, args.nu, args.dim)
    re_min, re_max, im_min, im_max = (
        box[i] if v is None else v for i, v in enumerate((args.re_min, args.re_max, args.im_min, args.im_max))
    )
    rows, ambiguous, violations = [], 0, 0
    for im in np.linspace(im_min, im_max, args.ny):
        for re in np.linspace(re_min, re_max, args.nx):
            omega = complex(re, im)
            try:
                res = winding_number(params, args.nu, args.dim, omega, args.n_theta, method=args.method)
            except AmbiguousWindingError:
                ambiguous += 1
                rows.append([re, im, None, float(log_abs_r(params, args.nu, args.dim, omega))])
                continue
            if (res.w == -1) != (res.log_abs_r < 0):
                violations += 1
            rows.append([re, im, res.w, res.log_abs_r])
    frac = ambiguous / len(rows)
    extra = {"n_cells": len(rows), "ambiguous_cells": ambiguous, "violations": violations}
    _emit(args, ["re", "im", "w", "log_abs_R"], rows, extra)
    print(f"cells={len(rows)} ambiguous={ambiguous} violations={violations}", file=sys.stderr)
    if violations or frac > AMBIGUOUS_LIMIT:
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_evolve(args) -> int:
    try:
        init = parse_initial(args.initial)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    spec = ChainSpec(_params(args), args.nu, args.trunc)
    trace = evolve(spec, init, args.t_max, args.dt_out, cross_check=not args.no_cross_check)
    rows = [
        [t, e.real, e.imag, n.real, s.real, s.imag, m]
        for t, e, n, s, m in zip(trace.times, trace.edge_avg, trace.particle_number, trace.trace_sum, trace.tail_mass)
    ]
    extra = {"horizon": trace.horizon, "cross_check_error": _json_safe(trace.cross_check_error)}
    _emit(args, ["t", "edge_avg_re", "edge_avg_im", "N", "trace_re", "trace_im", "tail_mass"], rows, extra)
    if args.frames:
        header = ["t"] + [f"{part}{j}" for j in range(spec.n_sites) for part in ("re", "im")]
        frame_rows = [[t, *np.column_stack([f.real, f.imag]).ravel()] for t, f in zip(trace.times, trace.frames)]
        Path(args.frames).write_text(_csv_payload(header, frame_rows), encoding="utf-8")
    return EXIT_OK


def cmd_scaling(args) -> int:
    params = _params(args)
    try:
        dims = [int(x) for x in args.dims.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"--dims must be a comma list of integers, got {args.dims!r}") from None
    if not dims:
        raise UsageError("--dims is empty")
    rows = []
    for dim in dims:
        values = pbc_spectrum_numeric(ChainSpec(params, args.nu, dim, PBC)).values
        nearest = float(np.min(np.abs(values - 1j * params.kappa))) if args.nu == 0 else math.nan
        radius = float(np.max(np.abs(values - values.mean())))
        rows.append([dim, float(values.imag.max()), nearest, radius])
    _emit(args, ["dim", "max_im", "nearest_ikappa", "radius"], rows)
    return EXIT_OK


def _complex_arg(text: str) -> complex:
    try:
        re_part, im_part = text.split(",")
        return complex(float(re_part), float(im_part))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected <re>,<im>, got {text!r}") from None


def cmd_annihilate(args) -> int:
    if args.task == "spectrum":
        spec = AnnihilationSpec(args.dim, args.bc, args.power)
        values = annihilation_spectrum(spec).values
        rows = [[i, v.real, v.imag, abs(v)] for i, v in enumerate(values)]
        extra = {"analytic_radius": pbc_radius(args.dim)}
        if args.bc.kind == "pbc" and args.power == 1:
            ref = pbc_roots_analytic(args.dim).values
            extra["max_root_mismatch"] = float(np.max(np.min(np.abs(values[:, None] - ref[None, :]), axis=1)))
        _emit(args, ["index", "re", "im", "abs"], rows, extra)
    elif args.task == "winding":
        res = winding_power(args.power, args.dim, args.omega_ref, args.n_theta)
        _emit(args, ["re", "im", "power", "w"], [[res.omega.real, res.omega.imag, args.power, res.w]])
    else:
        mode = coherent_mode(args.alpha, args.length)
        rows = [[j, v.real, v.imag, abs(v) ** 2] for j, v in enumerate(mode.amplitudes)]
        _emit(args, ["j", "re", "im", "prob"], rows, {"residual": mode.residual})
    return EXIT_OK


# -- parser ------------------------------------------------------------------


def _boundary(text: str) -> Boundary:
    try:
        return Boundary.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fockskin", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="flat key=value file; flags override it")
    common.add_argument("--out", help="output file (default stdout, no manifest)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    osc = argparse.ArgumentParser(add_help=False)
    osc.add_argument("--omega", type=float, default=1.0)
    osc.add_argument("--kappa", type=float, default=0.1)
    osc.add_argument("--nu", type=int, default=0)

    p = sub.add_parser("spectra", parents=[common, osc], help="eigenvalues of one chain")
    p.add_argument("--dim", type=_positive_int, default=50)
    p.add_argument("--bc", type=_boundary, default=PBC)
    p.set_defaults(func=cmd_spectra)

    p = sub.add_parser("winding-map", parents=[common, osc], help="winding number on an energy grid")
    p.add_argument("--dim", type=_positive_int, default=50)
    for name in ("--re-min", "--re-max", "--im-min", "--im-max"):
        p.add_argument(name, type=float, default=None, help="default: padded loop bounding box")
    p.add_argument("--nx", type=_positive_int, default=41)
    p.add_argument("--ny", type=_positive_int, default=41)
    p.add_argument("--n-theta", type=_positive_int, default=256)
    p.add_argument("--method", choices=("closed-form", "matrix"), default="closed-form")
    p.set_defaults(func=cmd_winding_map)

    p = sub.add_parser("evolve", parents=[common, osc], help="time evolution on a truncated chain")
    p.add_argument("--initial", required=True, help="sibc=<re>,<im> | obc=<l> | delta=<j> | random=<seed>[,<support>]")
    p.add_argument("--trunc", type=_positive_int, default=DEFAULT_TRUNCATION)
    p.add_argument("--t-max", type=float, default=40.0)
    p.add_argument("--dt-out", type=float, default=0.1)
    p.add_argument("--frames", help="also dump every frame to this CSV")
    p.add_argument("--no-cross-check", action="store_true")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("scaling", parents=[common, osc], help="periodic spectrum statistics versus D")
    p.add_argument("--dims", default="50,100,200,400")
    p.set_defaults(func=cmd_scaling)

    p = sub.add_parser("annihilate", parents=[common], help="spectrum, winding and coherent modes of a")
    p.add_argument("--task", choices=("spectrum", "winding", "coherent"), default="spectrum")
    p.add_argument("--dim", type=_positive_int, default=40)
    p.add_argument("--bc", type=_boundary, default=PBC)
    p.add_argument("--power", type=_positive_int, default=1)
    p.add_argument("--omega-ref", type=_complex_arg, default=complex(0.0), help="reference energy <re>,<im>")
    p.add_argument("--n-theta", type=_positive_int, default=256)
    p.add_argument("--alpha", type=_complex_arg, default=complex(2.0), help="coherent amplitude <re>,<im>")
    p.add_argument("--length", type=_positive_int, default=60)
    p.set_defaults(func=cmd_annihilate)
    return parser


def read_config(path: Path) -> dict[str, str]:
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    for n, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{n}: expected key=value")
        out[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return out


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> None:
    """Install ``--config`` values as subcommand defaults so flags still win."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", type=Path)
    known, _ = pre.parse_known_args(argv)
    action = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    command = next((tok for tok in argv if tok in action.choices), None)
    if known.config is None or command is None:
        return
    config = read_config(known.config)
    sub = action.choices[command]
    unknown = sorted(set(config) - {a.dest for a in sub._actions} - {"config"})
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(unknown)}")
    for opt in sub._actions:
        if opt.dest not in config:
            continue
        opt.required = False
        if isinstance(opt, argparse._StoreTrueAction):
            config[opt.dest] = config[opt.dest].lower() in ("1", "true", "yes", "on")
    # string defaults go through each option's type converter
    sub.set_defaults(**config)


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:
            return int(exc.code or 0)
        return args.func(args)
    except (UsageError, OSError) as exc:
        print(f"fockskin: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalFailure, AmbiguousWindingError) as exc:
        print(f"fockskin: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (FockskinError, ValueError) as exc:
        print(f"fockskin: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
