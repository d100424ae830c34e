"""Command-line entry point: ``monoshape <subcommand> ...``.

Exit codes: 0 success, 2 bad arguments or configuration, 3 radius bracket
failure, 4 forward-solver failure, 5 degenerate basis or indicator, 1 any
other error.
"""

from __future__ import annotations

import argparse
import configparser
import logging
import math
import os
import sys
from dataclasses import replace
from pathlib import Path

from .basis import (DROP_TOL, DegenerateBasisError, build_derived_basis, build_fourier_basis,
                    read_basis_csv, write_basis_csv)
from .disk_mie import DEFAULT_BRACKET, BracketError, data_modulus_mean, estimate_radius
from .forward import (DirectionSet, MonostaticData, MsrMatrix, ResolutionError,
                      SingularSystemError, WaveContext, read_data_csv, write_monostatic_csv,
                      write_msr_csv)
from .geometry import DegenerateCurveError, InitialDisk, jaccard_distance, load_curve
from .harness import (OUTPUT_ENV, ExperimentConfig, NoiseSpec, contour_bounds, run_experiment,
                      synthetic_msr, write_contour_csv)
from .locate import FlatIndicatorError, default_bounds, indicator, pick_center, write_indicator_csv
from .mcmc import ForwardFailure, history_frequency_contour, read_snapshots

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_BRACKET = 3
EXIT_FORWARD = 4
EXIT_DEGENERATE = 5

log = logging.getLogger("monoshape")


def _out_dir(arg: str | None) -> Path:
    path = Path(arg or os.environ.get(OUTPUT_ENV, "monoshape-output"))
    path.mkdir(parents=True, exist_ok=True)
    return path


def _load_monostatic(path) -> tuple[MonostaticData, WaveContext]:
    data, k = read_data_csv(path)
    if isinstance(data, MsrMatrix):
        data = data.diagonal_data()
    return data, WaveContext.from_wavenumber(k)


def _snr(text: str) -> float:
    val = float(text)
    if not val > 0:
        raise argparse.ArgumentTypeError("SNR must be positive or inf")
    return val


def cmd_gen_data(args) -> int:
    wave = WaveContext(args.frequency)
    dirs = DirectionSet(args.directions)
    curve = load_curve(args.target, args.nodes)
    msr = synthetic_msr(curve, wave, dirs, NoiseSpec(args.snr, args.seed))
    out = _out_dir(args.out)
    write_msr_csv(msr, wave, out / "msr.csv")
    write_monostatic_csv(msr.diagonal_data(), wave, out / "monostatic.csv")
    print(f"wrote {out / 'msr.csv'} and {out / 'monostatic.csv'}")
    return EXIT_OK


def cmd_locate(args) -> int:
    data, wave = _load_monostatic(args.data)
    bounds = args.bounds or default_bounds(wave)
    grid = indicator(data, wave, bounds, args.resolution)
    out = _out_dir(args.out)
    write_indicator_csv(grid, out / "indicator.csv")
    for rank, (p, v) in enumerate(pick_center(grid, args.candidates), 1):
        print(f"{rank} {p[0]:.6f} {p[1]:.6f} {v:.6f}")
    return EXIT_OK


def cmd_radius(args) -> int:
    data, wave = _load_monostatic(args.data)
    gbar = data_modulus_mean(data, wave, args.mean)
    r = estimate_radius(gbar, wave, tuple(args.bracket), args.tol, args.truncation)
    print(f"{r:.4f}")
    return EXIT_OK


def cmd_basis(args) -> int:
    wave = WaveContext(args.frequency)
    disk = InitialDisk(tuple(args.center), args.radius)
    if args.kind == "derived":
        basis = build_derived_basis(disk, wave, DirectionSet(args.directions), drop_tol=args.drop_tol)
    else:
        basis = build_fourier_basis(disk, args.directions)
    path = _out_dir(args.out) / "basis.csv"
    write_basis_csv(basis, path)
    print(f"J_tilde={basis.size} N={basis.n_nodes} -> {path}")
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    cfg = ExperimentConfig.from_ini(args.config)
    changes = {}
    if args.out:
        changes["output_dir"] = args.out
    if args.seed is not None:
        changes["mcmc"] = replace(cfg.mcmc, seed=args.seed)
    if changes:
        cfg = replace(cfg, **changes)
    res = run_experiment(cfg)
    print(f"status={res.chain.status} scans={res.chain.n_scans} J_tilde={res.basis.size} "
          f"d_J={res.final_jaccard:.4f} -> {cfg.output_path}")
    return EXIT_OK


def cmd_eval(args) -> int:
    a = load_curve(args.curve_a)
    b = load_curve(args.curve_b)
    print(f"{jaccard_distance(a, b, args.resolution):.6f}")
    return EXIT_OK


def cmd_export_contour(args) -> int:
    basis = read_basis_csv(args.basis)
    history = read_snapshots(args.snapshots)
    n2 = args.n2 if args.n2 is not None else len(history)
    n1 = args.n1 if args.n1 is not None else max(0, n2 - 1000)
    if args.bounds:
        x0, x1, y0, y1 = args.bounds
        bounds = ((x0, x1), (y0, y1))
    else:
        window = history[n1:n2]
        bounds = contour_bounds([basis.curve(window.min(axis=0)), basis.curve(window.max(axis=0)),
                                 basis.curve(window.mean(axis=0))], pad=0.5)
    xs, ys, freq = history_frequency_contour(basis, history, n1, n2, bounds, args.resolution)
    path = _out_dir(args.out) / "contour.csv"
    write_contour_csv(xs, ys, freq, path)
    print(f"f_{{{n1},{n2}}} -> {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="monoshape", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-data", help="synthetic MSR and monostatic data for a target")
    g.add_argument("--target", required=True, help="omega1|omega2|omega3 or a curve CSV")
    g.add_argument("--snr", type=_snr, default=math.inf, help="SNR in dB (default inf)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--directions", type=int, default=36)
    g.add_argument("--frequency", type=float, default=1e9)
    g.add_argument("--nodes", type=int, default=256)
    g.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV})")
    g.set_defaults(func=cmd_gen_data)

    g = sub.add_parser("locate", help="MSM indicator grid and centre candidates")
    g.add_argument("data")
    g.add_argument("--bounds", type=float, nargs=4, metavar=("XMIN", "XMAX", "YMIN", "YMAX"))
    g.add_argument("--resolution", type=int, default=201)
    g.add_argument("--candidates", type=int, default=5)
    g.add_argument("--out")
    g.set_defaults(func=cmd_locate)

    g = sub.add_parser("radius", help="initial-disk radius from back-scatter moduli")
    g.add_argument("data")
    g.add_argument("--mean", choices=("arithmetic", "quadratic"), default="arithmetic")
    g.add_argument("--bracket", type=float, nargs=2, default=list(DEFAULT_BRACKET))
    g.add_argument("--tol", type=float, default=1e-5)
    g.add_argument("--truncation", type=int, default=200)
    g.set_defaults(func=cmd_radius)

    g = sub.add_parser("basis", help="deformation basis on a disk")
    g.add_argument("--center", type=float, nargs=2, default=[0.0, 0.0])
    g.add_argument("--radius", type=float, required=True)
    g.add_argument("--kind", choices=("derived", "fourier"), default="derived")
    g.add_argument("--directions", type=int, default=36,
                   help="J (derived) or number of Fourier modes")
    g.add_argument("--drop-tol", type=float, default=DROP_TOL)
    g.add_argument("--frequency", type=float, default=1e9)
    g.add_argument("--out")
    g.set_defaults(func=cmd_basis)

    g = sub.add_parser("reconstruct", help="run an experiment from an INI config")
    g.add_argument("config")
    g.add_argument("--seed", type=int)
    g.add_argument("--out")
    g.set_defaults(func=cmd_reconstruct)

    g = sub.add_parser("eval", help="Jaccard distance of two curves")
    g.add_argument("curve_a")
    g.add_argument("curve_b")
    g.add_argument("--resolution", type=int, default=1024)
    g.set_defaults(func=cmd_eval)

    g = sub.add_parser("export-contour", help="membership frequency over a scan window")
    g.add_argument("--basis", required=True)
    g.add_argument("--snapshots", required=True)
    g.add_argument("--n1", type=int)
    g.add_argument("--n2", type=int)
    g.add_argument("--bounds", type=float, nargs=4, metavar=("XMIN", "XMAX", "YMIN", "YMAX"))
    g.add_argument("--resolution", type=int, default=200)
    g.add_argument("--out")
    g.set_defaults(func=cmd_export_contour)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except BracketError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BRACKET
    except (ResolutionError, SingularSystemError, ForwardFailure) as exc:
        print(f"error: forward solve failed: {exc}", file=sys.stderr)
        return EXIT_FORWARD
    except (DegenerateBasisError, FlatIndicatorError, DegenerateCurveError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (ValueError, KeyError, FileNotFoundError, configparser.Error) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
