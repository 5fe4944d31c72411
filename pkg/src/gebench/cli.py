"""Command-line interface.

Subcommands:
    simulate [scenario.toml] [--out DIR] [--seed N]
        Run the closed-loop scenario, write trajectory.csv and
        summary.txt, print the summary.
    sweep [scenario.toml] [--out DIR] [--seed N]
        Run the nominal-coefficient error sweep, write sweep.csv.
    identify manifest.json [--out DIR] [--fix-i-inf A]
        Fit the ground-effect current model to logged traces.
    efficiency (--k K | --z Z | --k-range MIN MAX N | --z-range MIN MAX N)
        Evaluate link efficiency; ranges emit CSV.
    models --compare [--z-max Z] [--points N] [--out FILE]
        Tabulate the ground-effect ratio models over altitude.

Exit codes: 0 success, 1 invalid configuration or input, 2 usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .ge_models import (
    HaydenParams,
    betz_power_ratio,
    cheeseman_power_ratio,
    finite_ge_thrust_ratio,
    hayden_power_ratio,
)
from .identification import FitError, identify_from_traces, load_manifest
from .ipt import coupling_from_altitude, max_efficiency
from .scenario import ConfigError, ScenarioConfig, default_scenario, load_scenario
from .simulation import emit_csv, run_parameter_error_sweep, run_scenario, summarize

__all__ = ["main"]


def _load(path: str | None) -> ScenarioConfig:
    cfg = default_scenario() if path is None else load_scenario(path)
    for warning in cfg.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    return cfg


def _cmd_simulate(args) -> int:
    cfg = _load(args.scenario)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    record = run_scenario(cfg, seed=args.seed)
    emit_csv(record, out_dir / "trajectory.csv")
    summary = summarize(record, cfg)
    lines = summary.lines()
    for event in record.events:
        lines.append(f"event: {event}")
    (out_dir / "summary.txt").write_text("\n".join(lines) + "\n")
    for line in lines:
        print(line)
    print(f"trajectory: {out_dir / 'trajectory.csv'}")
    return 0


def _cmd_sweep(args) -> int:
    cfg = _load(args.scenario)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = run_parameter_error_sweep(cfg, seed=args.seed)
    emit_csv(report, out_dir / "sweep.csv")
    for line in report.lines():
        print(line)
    print(f"report: {out_dir / 'sweep.csv'}")
    return 0


def _cmd_identify(args) -> int:
    traces, rotor_radius = load_manifest(args.manifest)
    try:
        fit = identify_from_traces(
            traces, rotor_radius, fixed_i_inf=args.fix_i_inf
        )
    except FitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"c_a = {fit.c_a:.6g}")
    print(f"c_b = {fit.c_b:.6g}")
    print(f"i_m_inf = {fit.i_m_inf:.6g} A")
    print(f"residual_rms = {fit.residual_rms:.6g} A over {len(fit.residuals)} points")
    if args.out is not None:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        doc = {
            "c_a": fit.c_a,
            "c_b": fit.c_b,
            "i_m_inf": fit.i_m_inf,
            "residual_rms": fit.residual_rms,
            "residuals": list(fit.residuals),
        }
        path = out_dir / "fit.json"
        path.write_text(json.dumps(doc, indent=2) + "\n")
        print(f"report: {path}")
    return 0


def _cmd_efficiency(args) -> int:
    cfg = _load(args.scenario)
    circuit, cmap = cfg.ipt_circuit, cfg.coupling_map

    def rows_to_csv(header: str, rows: list[str]):
        text = "\r\n".join([header] + rows) + "\r\n"
        if args.out is None:
            sys.stdout.write(text)
        else:
            Path(args.out).write_text(text, newline="")
            print(f"curve: {args.out}")

    if args.k is not None:
        print(f"{max_efficiency(args.k, circuit):.3f}")
    elif args.z is not None:
        k = coupling_from_altitude(args.z, cmap).k
        print(f"k = {k:.4g}")
        print(f"eta = {max_efficiency(k, circuit):.4f}")
    elif args.k_range is not None:
        lo, hi, n = args.k_range
        n = int(n)
        rows = []
        for idx in range(n):
            k = lo + (hi - lo) * idx / max(n - 1, 1)
            rows.append(f"{k:.9g},{max_efficiency(k, circuit):.9g}")
        rows_to_csv("k,eta", rows)
    elif args.z_range is not None:
        lo, hi, n = args.z_range
        n = int(n)
        rows = []
        for idx in range(n):
            z = lo + (hi - lo) * idx / max(n - 1, 1)
            k = coupling_from_altitude(z, cmap).k
            rows.append(f"{z:.9g},{k:.9g},{max_efficiency(k, circuit):.9g}")
        rows_to_csv("z,k,eta", rows)
    else:
        print("error: one of --k, --z, --k-range, --z-range is required", file=sys.stderr)
        return 2
    return 0


def _cmd_models(args) -> int:
    if not args.compare:
        print("error: models requires --compare", file=sys.stderr)
        return 2
    cfg = _load(args.scenario)
    ge = cfg.ge_true_1
    hayden = HaydenParams()
    r = ge.rotor_radius
    n = args.points
    lines = ["z,betz,cheeseman,hayden,finite"]
    for idx in range(1, n + 1):
        z = args.z_max * idx / n
        lines.append(
            f"{z:.9g},{betz_power_ratio(z, r):.9g},{cheeseman_power_ratio(z, r):.9g},"
            f"{hayden_power_ratio(z, r, hayden):.9g},{finite_ge_thrust_ratio(z, ge):.9g}"
        )
    text = "\r\n".join(lines) + "\r\n"
    if args.out is None:
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text, newline="")
        print(f"curves: {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gebench",
        description=(
            "Two-propeller ground-effect bench: closed-loop simulation, "
            "current-based attitude estimation, model identification and "
            "inductive-power-transfer efficiency."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run a closed-loop scenario")
    p_sim.add_argument("scenario", nargs="?", default=None,
                       help="scenario TOML (default: packaged reference scenario)")
    p_sim.add_argument("--out", default="out", help="output directory")
    p_sim.add_argument("--seed", type=int, default=None, help="noise seed override")
    p_sim.set_defaults(func=_cmd_simulate)

    p_sweep = sub.add_parser("sweep", help="run the coefficient-error sweep")
    p_sweep.add_argument("scenario", nargs="?", default=None)
    p_sweep.add_argument("--out", default="out", help="output directory")
    p_sweep.add_argument("--seed", type=int, default=None)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_id = sub.add_parser("identify", help="fit the current model to logged traces")
    p_id.add_argument("manifest", help="JSON manifest mapping trace files to altitudes")
    p_id.add_argument("--out", default=None, help="directory for the JSON fit report")
    p_id.add_argument("--fix-i-inf", type=float, default=None,
                      help="hold the reference current fixed instead of fitting it")
    p_id.set_defaults(func=_cmd_identify)

    p_eff = sub.add_parser("efficiency", help="evaluate link efficiency")
    p_eff.add_argument("--scenario", default=None, help="scenario TOML for circuit/map")
    group = p_eff.add_mutually_exclusive_group()
    group.add_argument("--k", type=float, default=None, help="coupling coefficient")
    group.add_argument("--z", type=float, default=None, help="altitude [m]")
    group.add_argument("--k-range", nargs=3, type=float, default=None,
                       metavar=("MIN", "MAX", "N"), help="coupling sweep, CSV output")
    group.add_argument("--z-range", nargs=3, type=float, default=None,
                       metavar=("MIN", "MAX", "N"), help="altitude sweep, CSV output")
    p_eff.add_argument("--out", default=None, help="CSV path for range sweeps")
    p_eff.set_defaults(func=_cmd_efficiency)

    p_models = sub.add_parser("models", help="tabulate the ground-effect models")
    p_models.add_argument("--compare", action="store_true",
                          help="emit all model curves over altitude")
    p_models.add_argument("--scenario", default=None)
    p_models.add_argument("--z-max", type=float, default=1.0, help="max altitude [m]")
    p_models.add_argument("--points", type=int, default=200)
    p_models.add_argument("--out", default=None, help="CSV path (default stdout)")
    p_models.set_defaults(func=_cmd_models)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
