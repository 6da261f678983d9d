"""Command-line pipeline: synthesize, ingest, estimate, test, and report.

Subcommands:
  simulate   synthesize a preset or config-file case and write a sweep CSV
  estimate   per-frequency K estimates (plus window averages) from a sweep CSV
  gof        fitted-Rayleigh / fitted-Rician K-S tests on a sweep CSV
  report     full analysis of existing sweep CSVs into report.json + series CSVs
  pipeline   presets or files end to end: simulate (if needed) then report

Exit codes: 0 success, 1 runtime failure (I/O, parsing, degenerate data),
2 usage error. Outputs are written atomically and any outputs already
produced by a failing command are removed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import List, Optional

from .core import (
    BandSelection,
    FrequencyGrid,
    K_FLOOR_DB,
    SweepMatrix,
    db10,
    select_band,
)
from .kfactor import SlidingWindowSpec, k_series, sliding_window_average
from .gof import gof_sweep
from .report import (
    analyze_case,
    read_sweep_csv,
    write_gof_json,
    write_kseries_csv,
    write_report_json,
    write_sweep_csv,
)
from .simulate import (
    DEFAULT_N_SAMPLES,
    PRESET_LABELS,
    config_from_dict,
    preset_cases,
    synthesize_sweep,
    true_mean_k,
)

DEFAULT_GRID_SPEC = "24e9:10e6:551"
DEFAULT_BAND_SPEC = "24.25e9:29.5e9"
DEFAULT_WINDOWS_SPEC = "0,100e6,200e6,400e6"
DEFAULT_ALPHA = 0.05


def _parse_hz(text: str, name: str) -> int:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{name}: {text!r} is not a number") from None
    if value < 0 or value != int(value):
        raise argparse.ArgumentTypeError(f"{name}: {text!r} is not a whole number of Hz")
    return int(value)


def parse_grid(text: str) -> FrequencyGrid:
    """Parse 'start:step:count' with explicit SI values in Hz."""
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"grid must be start:step:count, got {text!r}")
    start = _parse_hz(parts[0], "grid start")
    step = _parse_hz(parts[1], "grid step")
    try:
        count = int(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid count: {parts[2]!r} is not an integer") from None
    try:
        return FrequencyGrid(start, step, count)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def parse_band(text: str) -> BandSelection:
    """Parse 'lo:hi' in Hz."""
    parts = text.split(":")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"band must be lo:hi, got {text!r}")
    try:
        return BandSelection(_parse_hz(parts[0], "band lo"), _parse_hz(parts[1], "band hi"))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def parse_windows(text: str) -> List[int]:
    """Parse a comma-separated list of window widths in Hz."""
    out = []
    for part in text.split(","):
        out.append(_parse_hz(part.strip(), "window width"))
    return out


def _add_analysis_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--band",
        type=parse_band,
        default=DEFAULT_BAND_SPEC,
        help=f"analysis band lo:hi in Hz (default {DEFAULT_BAND_SPEC})",
    )
    parser.add_argument(
        "--alpha",
        type=float,
        default=DEFAULT_ALPHA,
        help=f"K-S significance level (default {DEFAULT_ALPHA})",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rckfactor",
        description="Rician K-factor estimation and chamber-sweep analysis",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="synthesize a case and write a sweep CSV")
    p_sim.add_argument("--case", help=f"preset label, one of: {', '.join(PRESET_LABELS)}")
    p_sim.add_argument("--config", help="JSON case-config file (alternative to --case)")
    p_sim.add_argument("--grid", type=parse_grid, default=DEFAULT_GRID_SPEC,
                       help=f"start:step:count in Hz (default {DEFAULT_GRID_SPEC})")
    p_sim.add_argument("--n-samples", type=int, default=DEFAULT_N_SAMPLES,
                       help=f"stirrer positions per frequency (default {DEFAULT_N_SAMPLES})")
    p_sim.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    p_sim.add_argument("--out", required=True, help="output sweep CSV path")
    p_sim.set_defaults(func=cmd_simulate)

    p_est = sub.add_parser("estimate", help="write per-frequency K estimates to CSV")
    p_est.add_argument("--in", dest="inputs", required=True, help="input sweep CSV")
    p_est.add_argument("--windows", type=parse_windows, default=DEFAULT_WINDOWS_SPEC,
                       help=f"comma-separated window widths in Hz (default {DEFAULT_WINDOWS_SPEC})")
    _add_analysis_flags(p_est)
    p_est.add_argument("--out", required=True, help="output K-series CSV path")
    p_est.set_defaults(func=cmd_estimate)

    p_gof = sub.add_parser("gof", help="run distribution tests and write a JSON summary")
    p_gof.add_argument("--in", dest="inputs", required=True, help="input sweep CSV")
    _add_analysis_flags(p_gof)
    p_gof.add_argument("--out", required=True, help="output JSON path")
    p_gof.set_defaults(func=cmd_gof)

    p_rep = sub.add_parser("report", help="analyze existing sweep CSVs into a report")
    p_rep.add_argument("--in", dest="inputs", required=True,
                       help="comma-separated input sweep CSVs")
    p_rep.add_argument("--windows", type=parse_windows, default=DEFAULT_WINDOWS_SPEC,
                       help=f"comma-separated window widths in Hz (default {DEFAULT_WINDOWS_SPEC})")
    _add_analysis_flags(p_rep)
    p_rep.add_argument("--out", required=True, help="output directory")
    p_rep.set_defaults(func=cmd_report)

    p_pipe = sub.add_parser("pipeline", help="simulate presets (or read files) and report")
    p_pipe.add_argument("--case", help="comma-separated preset labels, or 'all'")
    p_pipe.add_argument("--in", dest="inputs", help="comma-separated input sweep CSVs")
    p_pipe.add_argument("--grid", type=parse_grid, default=DEFAULT_GRID_SPEC,
                        help=f"start:step:count in Hz (default {DEFAULT_GRID_SPEC})")
    p_pipe.add_argument("--n-samples", type=int, default=DEFAULT_N_SAMPLES,
                        help=f"stirrer positions per frequency (default {DEFAULT_N_SAMPLES})")
    p_pipe.add_argument("--seed", type=int, default=0,
                        help="RNG seed; case i uses seed + i (default 0)")
    p_pipe.add_argument("--windows", type=parse_windows, default=DEFAULT_WINDOWS_SPEC,
                        help=f"comma-separated window widths in Hz (default {DEFAULT_WINDOWS_SPEC})")
    _add_analysis_flags(p_pipe)
    p_pipe.add_argument("--out", required=True, help="output directory")
    p_pipe.set_defaults(func=cmd_pipeline)

    return parser


def _coerce_parsed(args) -> None:
    # Defaults are given as their spec strings so --help shows them verbatim;
    # parse them here when the user did not override.
    if isinstance(getattr(args, "grid", None), str):
        args.grid = parse_grid(args.grid)
    if isinstance(getattr(args, "band", None), str):
        args.band = parse_band(args.band)
    if isinstance(getattr(args, "windows", None), str):
        args.windows = parse_windows(args.windows)


class _OutputTracker:
    """Collects final output paths so a failing command can remove them."""

    def __init__(self):
        self.paths: List[str] = []

    def add(self, path: str) -> str:
        self.paths.append(path)
        return path

    def discard_all(self) -> None:
        for path in self.paths:
            try:
                os.unlink(path)
            except OSError:
                pass


def _validate_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")


def cmd_simulate(args, out) -> int:
    if bool(args.case) == bool(args.config):
        print("error: exactly one of --case or --config is required", file=sys.stderr)
        return 2
    if args.config:
        with open(args.config, "r", encoding="utf-8") as handle:
            config = config_from_dict(json.load(handle))
    else:
        if args.case not in PRESET_LABELS:
            print(
                f"error: unknown case {args.case!r}; valid labels: "
                f"{', '.join(PRESET_LABELS)}",
                file=sys.stderr,
            )
            return 2
        config = preset_cases(args.grid, args.n_samples)[args.case]
    sweep = synthesize_sweep(config, args.seed)
    write_sweep_csv(sweep, out.add(args.out))
    k_true = true_mean_k(config)
    print(f"wrote {args.out}: {sweep.grid.count} frequencies x {sweep.n_samples} samples")
    print(
        f"case {config.label}: configured mean K = {db10(k_true):.2f} dB, "
        f"stirred power = {config.stirred_power_db:.2f} dB, seed = {args.seed}"
    )
    return 0


def _load_banded_sweep(path: str, band: BandSelection) -> SweepMatrix:
    label = os.path.splitext(os.path.basename(path))[0]
    return select_band(read_sweep_csv(path, case_label=label), band)


def cmd_estimate(args, out) -> int:
    _validate_alpha(args.alpha)
    sweep = _load_banded_sweep(args.inputs, args.band)
    base = k_series(sweep)
    entries = [(w, sliding_window_average(base, SlidingWindowSpec(w))) for w in args.windows]
    write_kseries_csv(entries, out.add(args.out))
    print(f"wrote {args.out}: {sweep.grid.count} frequencies x {len(entries)} windows")
    for window_hz, series in entries:
        mean_k = float(series.k_linear().mean())
        mean_db = db10(mean_k) if mean_k > 0 else K_FLOOR_DB
        print(f"window {window_hz} Hz: mean K = {mean_db:.2f} dB")
    return 0


def cmd_gof(args, out) -> int:
    _validate_alpha(args.alpha)
    sweep = _load_banded_sweep(args.inputs, args.band)
    gof = gof_sweep(sweep, args.alpha)
    write_gof_json(gof, args.band, out.add(args.out))
    print(
        f"wrote {args.out}: pass rates rayleigh={gof.pass_rate_rayleigh:.3f} "
        f"rician={gof.pass_rate_rician:.3f} (alpha={args.alpha})"
    )
    return 0


def _write_case_reports(sweeps, args, out) -> int:
    _validate_alpha(args.alpha)
    os.makedirs(args.out, exist_ok=True)
    n_samples = {s.n_samples for s in sweeps}
    if len(n_samples) != 1:
        raise ValueError("all cases must share one stirrer-position count")
    reports = []
    for sweep in sweeps:
        rep = analyze_case(sweep, args.alpha, args.windows)
        reports.append(rep)
        series_path = os.path.join(args.out, f"{rep.label}_series.csv")
        write_kseries_csv(rep.series, out.add(series_path))
        print(
            f"case {rep.label}: mean K = {rep.stats.mean_k_db:.2f} dB, "
            f"dynamic range = {rep.stats.dynamic_range_db:.2f} dB, "
            f"pass rates rayleigh={rep.stats.pass_rate_rayleigh:.3f} "
            f"rician={rep.stats.pass_rate_rician:.3f}"
        )
    report_path = os.path.join(args.out, "report.json")
    write_report_json(reports, args.band, args.alpha, n_samples.pop(), out.add(report_path))
    print(f"wrote {report_path} ({len(reports)} cases, {len(args.windows)} windows each)")
    return 0


def cmd_report(args, out) -> int:
    sweeps = [_load_banded_sweep(p.strip(), args.band) for p in args.inputs.split(",")]
    return _write_case_reports(sweeps, args, out)


def cmd_pipeline(args, out) -> int:
    if bool(args.case) == bool(args.inputs):
        print("error: exactly one of --case or --in is required", file=sys.stderr)
        return 2
    if args.inputs:
        sweeps = [_load_banded_sweep(p.strip(), args.band) for p in args.inputs.split(",")]
    else:
        labels = PRESET_LABELS if args.case == "all" else tuple(
            part.strip() for part in args.case.split(",")
        )
        unknown = [l for l in labels if l not in PRESET_LABELS]
        if unknown:
            print(
                f"error: unknown case(s) {', '.join(unknown)}; valid labels: "
                f"{', '.join(PRESET_LABELS)}",
                file=sys.stderr,
            )
            return 2
        table = preset_cases(args.grid, args.n_samples)
        sweeps = []
        for i, label in enumerate(labels):
            sweep = synthesize_sweep(table[label], args.seed + i)
            sweeps.append(select_band(sweep, args.band))
    return _write_case_reports(sweeps, args, out)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _coerce_parsed(args)
    except argparse.ArgumentTypeError as exc:
        parser.error(str(exc))
    tracker = _OutputTracker()
    try:
        code = args.func(args, tracker)
    except (ValueError, OSError) as exc:
        tracker.discard_all()
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        tracker.discard_all()
        raise
    if code != 0:
        tracker.discard_all()
    return code


if __name__ == "__main__":
    sys.exit(main())
