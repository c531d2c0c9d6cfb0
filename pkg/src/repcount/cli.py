"""Command-line interface: ``repcount {count,synth,spectrum,eval}``.

Exit status is 0 on success and 2 on usage or input errors.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig
from .errors import ConfigError, RepCountError
from .estimate import analyze_signal, select_signal
from .evalharness import (
    format_table,
    mean_cycle_length_variation,
    run_acceleration_experiment,
    run_case_benchmark,
    run_idealized_experiment,
    summary_row,
    synthetic_annotations,
    write_annotation_corpus,
)
from .flowfield import CHANNELS, extract_signals, list_flow_files, load_sequence
from .synth import ALL_CASES, CaseParams, MotionCase, generate_case, stationary_corpus, write_sequence
from .tfa import Signal, scalogram_pgm_bytes, write_scalogram_csv

EXIT_USAGE = 2


class UsageError(Exception):
    pass


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _warn(msg: str) -> None:
    print(f"repcount: warning: {msg}", file=sys.stderr)


def _load_config(args) -> RunConfig:
    config = RunConfig()
    if getattr(args, "config", None):
        config = RunConfig.from_file(args.config)
    overrides = {}
    if getattr(args, "path_mode", None):
        overrides["path_mode"] = args.path_mode
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    return RunConfig.from_mapping(overrides, config) if overrides else config


def _load_frames(flow_dir: Path, mask_dir):
    if not flow_dir.is_dir():
        raise UsageError(f"{flow_dir}: not a directory")
    if not list_flow_files(flow_dir):
        raise UsageError(f"{flow_dir}: no flow frames found")
    if mask_dir is None:
        # masks written next to the frames (as the synthesiser does) are picked up
        mask_dir = flow_dir
    frames, missing = load_sequence(flow_dir, mask_dir)
    if missing:
        _warn(f"{len(missing)} of {len(frames)} frames have no mask; using full-frame masks for them")
    return frames


# -- count -------------------------------------------------------------------

def cmd_count(args) -> int:
    config = _load_config(args)
    frames = _load_frames(Path(args.flow_dir), args.masks)
    bundle = extract_signals(frames, args.fps, config.kernel_size, config.kernel_sigma)
    estimate = select_signal(bundle, config)
    sys.stdout.write(_dumps(estimate.to_dict()))
    return 0


# -- synth -------------------------------------------------------------------

def _case_params(args) -> CaseParams:
    return CaseParams(
        period_frames=args.period,
        n_frames=args.frames,
        size=(args.width, args.height),
        amplitude=args.amplitude,
        texture_period=args.texture_period,
        duty_cycle=args.duty,
        seed=args.seed,
        fps=args.fps,
        drift=tuple(args.drift),
        noise_sigma=args.noise,
    )


def cmd_synth(args) -> int:
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"{out}: cannot create output directory: {exc}") from exc
    written = []
    if args.annotations:
        anns = synthetic_annotations(args.annotations, args.seed)
        write_annotation_corpus(anns, out)
        written = [a.id for a in anns]
    elif args.stationary:
        for name, seq in stationary_corpus(args.stationary, args.seed):
            write_sequence(seq, out / name)
            written.append(name)
    else:
        params = _case_params(args)
        if args.all:
            cases = list(ALL_CASES)
        elif args.case:
            cases = [MotionCase.parse(args.case)]
        else:
            raise UsageError("synth needs --case NAME, --all, --stationary N or --annotations N")
        for case in cases:
            target = out / case.slug if args.all else out
            write_sequence(generate_case(case, params), target)
            written.append(case.slug)
    sys.stdout.write(_dumps({"out": str(out), "items": written}))
    return 0


# -- spectrum ----------------------------------------------------------------

def _read_signal_csv(path: Path, channel, fps: float) -> tuple[Signal, str]:
    try:
        rows = [r for r in csv.reader(path.read_text().splitlines()) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise UsageError(f"{path}: {exc}") from exc
    if not rows:
        raise UsageError(f"{path}: empty signal file")
    header = None
    try:
        float(rows[0][-1])
    except ValueError:
        header, rows = [h.strip() for h in rows[0]], rows[1:]
    col = -1
    name = "signal"
    if channel:
        if header is None or channel not in header:
            raise UsageError(f"{path}: no column named {channel!r}")
        col, name = header.index(channel), channel
    elif header:
        name = header[-1]
    try:
        values = np.array([float(r[col]) for r in rows])
    except (ValueError, IndexError) as exc:
        raise UsageError(f"{path}: cannot parse signal: {exc}") from exc
    return Signal(values, 1.0 / fps), name


def cmd_spectrum(args) -> int:
    config = _load_config(args)
    source = Path(args.input)
    if source.is_dir():
        frames = _load_frames(source, args.masks)
        bundle = extract_signals(frames, args.fps, config.kernel_size, config.kernel_sigma)
        channel = args.channel or select_signal(bundle, config).channel
        if channel not in CHANNELS:
            raise UsageError(f"unknown channel {channel!r}; choose from {', '.join(CHANNELS)}")
        signal = Signal(bundle.channels[channel], bundle.dt)
    else:
        signal, channel = _read_signal_csv(source, args.channel, args.fps)
    analysis = analyze_signal(signal, config, channel)
    sc = analysis.scalogram
    prefix = Path(args.out)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    write_scalogram_csv(sc, prefix.with_suffix(".csv"))
    prefix.with_suffix(".pgm").write_bytes(scalogram_pgm_bytes(sc))
    sidecar = prefix.with_name(prefix.name + "_paths.csv")
    lines = [
        ",".join(["max_power_ridge"] + [str(int(j)) for j in analysis.ridge]),
        ",".join(["min_cost_path"] + [str(int(j)) for j in analysis.path]),
        ",".join(["ridge_scale_s"] + [repr(float(sc.scales[j])) for j in analysis.ridge]),
        ",".join(["path_scale_s"] + [repr(float(sc.scales[j])) for j in analysis.path]),
    ]
    sidecar.write_text("\n".join(lines) + "\n")
    summary = {
        "channel": channel,
        "count": analysis.count,
        "cost": analysis.cost,
        "n_times": sc.n_times,
        "n_scales": len(sc.grid),
        "csv": str(prefix.with_suffix(".csv")),
        "pgm": str(prefix.with_suffix(".pgm")),
        "paths": str(sidecar),
    }
    sys.stdout.write(_dumps(summary))
    return 0


# -- eval --------------------------------------------------------------------

def _emit_report(payload: dict, table: str, out) -> None:
    text = _dumps(payload)
    if out:
        out = Path(out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)
        out.with_suffix(".txt").write_text(table)
        sys.stdout.write(table)
    else:
        sys.stdout.write(text)
        sys.stderr.write(table)


def cmd_eval_idealized(args) -> int:
    config = _load_config(args)
    anns = synthetic_annotations(args.n, args.seed, args.variation)
    fourier, wavelet = run_idealized_experiment(anns, args.noise, args.seed, config)
    tally = fourier.extra["tally"]
    payload = {
        "experiment": "idealized",
        "n": args.n,
        "seed": args.seed,
        "noise_sigma": args.noise,
        "mean_cycle_length_variation": mean_cycle_length_variation(anns),
        "fourier": fourier.to_dict(),
        "wavelet": wavelet.to_dict(),
        "tally": tally,
    }
    table = format_table(
        [summary_row("fourier", fourier), summary_row("wavelet", wavelet)],
        ["method", "MAE (%)", "OBOA", "items"],
    )
    table += f"wavelet better on {tally['wavelet_wins']}/{args.n}, fourier better on {tally['fourier_wins']}\n"
    _emit_report(payload, table, args.out)
    return 0


def cmd_eval_cases(args) -> int:
    config = _load_config(args)
    report = run_case_benchmark(args.corpus, config)
    payload = {"experiment": "cases", **report.to_dict()}
    rows = [
        [item_id, r["channel"], r["truth"], r["prediction"], r["cost"], "yes" if r["within_one"] else "no"]
        for item_id, r in report.extra["per_case"].items()
    ]
    table = format_table(rows, ["item", "channel", "truth", "count", "cost", "within 1"])
    table += format_table([summary_row("overall", report)], ["", "MAE (%)", "OBOA", "items"])
    hist = report.extra["selected_histogram"]
    table += format_table([[k, v] for k, v in hist.items()], ["channel", "# selected"])
    _emit_report(payload, table, args.out)
    return 0


def cmd_eval_acceleration(args) -> int:
    config = _load_config(args)
    result = run_acceleration_experiment(args.corpus, config)
    reports = result["reports"]
    payload = {
        "experiment": "acceleration",
        "wavelet_degradation": result["wavelet_degradation"],
        "fourier_degradation": result["fourier_degradation"],
        **{k: v.to_dict() for k, v in reports.items()},
    }
    table = format_table([summary_row(k, v) for k, v in reports.items()], ["run", "MAE (%)", "OBOA", "items"])
    table += (
        f"degradation: wavelet {100 * result['wavelet_degradation']:.1f}, "
        f"fourier {100 * result['fourier_degradation']:.1f} (MAE points)\n"
    )
    _emit_report(payload, table, args.out)
    return 0


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file overriding pipeline parameters")

    parser = argparse.ArgumentParser(prog="repcount", description="Repetition counting from flow fields.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("count", parents=[common], help="count repetitions in a directory of .flo frames")
    p.add_argument("flow_dir")
    p.add_argument("--masks", help="directory of PGM/PBM masks (default: next to the frames, else full frame)")
    p.add_argument("--fps", type=float, default=30.0)
    p.add_argument("--path-mode", choices=["dp", "greedy"])
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("synth", parents=[common], help="write synthetic flow sequences or annotations")
    p.add_argument("--out", required=True)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--case", help="motion/continuity/view, e.g. rotation/oscillating/frontal")
    group.add_argument("--all", action="store_true", help="all 18 cases, one subdirectory each")
    group.add_argument("--stationary", type=int, metavar="N", help="N constant-period sequences")
    group.add_argument("--annotations", type=int, metavar="N", help="N annotation-only items")
    p.add_argument("--period", type=int, default=20, help="frames per cycle")
    p.add_argument("--frames", type=int, default=200)
    p.add_argument("--width", type=int, default=64)
    p.add_argument("--height", type=int, default=64)
    p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument("--texture-period", type=float)
    p.add_argument("--duty", type=float, default=0.5)
    p.add_argument("--fps", type=float, default=30.0)
    p.add_argument("--drift", type=float, nargs=2, default=(0.0, 0.0), metavar=("DX", "DY"))
    p.add_argument("--noise", type=float, default=0.0, help="std of Gaussian noise added to the flow")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("spectrum", parents=[common], help="render the scalogram of a signal")
    p.add_argument("input", help="signal CSV or directory of .flo frames")
    p.add_argument("--channel", help=f"CSV column or flow channel ({', '.join(CHANNELS)})")
    p.add_argument("--masks")
    p.add_argument("--fps", type=float, default=30.0)
    p.add_argument("--out", required=True, help="output prefix for .csv, .pgm and _paths.csv")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("eval", help="run an experiment")
    exp = p.add_subparsers(dest="experiment", required=True)
    e = exp.add_parser("idealized", parents=[common], help="periodogram vs wavelets on idealized signals")
    e.add_argument("--n", type=int, default=100)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--noise", type=float, default=0.0)
    e.add_argument("--variation", type=float, default=0.36, help="mean cycle-length variation")
    e.add_argument("--out")
    e.set_defaults(func=cmd_eval_idealized)
    e = exp.add_parser("cases", parents=[common], help="min-cost selection on a synthetic case corpus")
    e.add_argument("corpus")
    e.add_argument("--out")
    e.set_defaults(func=cmd_eval_cases)
    e = exp.add_parser("acceleration", parents=[common], help="halfway-acceleration sensitivity")
    e.add_argument("corpus")
    e.add_argument("--out")
    e.set_defaults(func=cmd_eval_acceleration)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, RepCountError, ConfigError, OSError, ValueError) as exc:
        print(f"repcount: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
