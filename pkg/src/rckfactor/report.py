"""Per-case statistics and file interchange (sweep CSV, K-series CSV, report JSON).

All writers are atomic (temp file + rename in the target directory) and all
floating-point values are serialized with repr, i.e. shortest round-trip
form, so regenerating an output with the same inputs is byte-identical and
CSV round-trips are lossless.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .core import BandSelection, FrequencyGrid, K_FLOOR_DB, SweepMatrix, db10
from .gof import GofOutcome, gof_sweep
from .kfactor import KSeries, SlidingWindowSpec, k_series, sliding_window_average

SWEEP_CSV_HEADER = "freq_hz,sample_idx,re,im"
KSERIES_CSV_HEADER = "freq_hz,k_linear,k_db,p_unstirred,p_stirred,clamped,window_hz"


class SweepParseError(ValueError):
    """Sweep CSV violates the interchange schema; carries the offending line."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


@dataclass(frozen=True)
class CaseStatistics:
    """Whole-band summary of one case.

    all_clamped marks a series whose every K estimate clamped to zero; the
    dB means are then reported at the -60 dB floor.
    """

    mean_k_db: float
    dynamic_range_db: float
    normalized_std: float
    mean_s21sq_db: float
    pass_rate_rayleigh: float
    pass_rate_rician: float
    mean_p_unstirred_db: float
    mean_p_stirred_db: float
    clamped_count: int
    all_clamped: bool = False

    def __post_init__(self):
        if self.dynamic_range_db < 0.0:
            raise ValueError("dynamic_range_db must be non-negative")
        if self.normalized_std < 0.0:
            raise ValueError("normalized_std must be non-negative")
        for rate in (self.pass_rate_rayleigh, self.pass_rate_rician):
            if not 0.0 <= rate <= 1.0:
                raise ValueError(f"pass rate must lie in [0, 1], got {rate}")


@dataclass(frozen=True)
class CaseReport:
    """One case ready for serialization: stats plus windowed K series."""

    label: str
    stats: CaseStatistics
    series: Tuple[Tuple[int, KSeries], ...]  # (window_hz, series) pairs


def case_statistics(series: KSeries, sweep: SweepMatrix, gof: GofOutcome) -> CaseStatistics:
    """Aggregate a K series, its sweep, and its GoF outcome into case statistics.

    mean_k_db averages K in the linear domain before converting; the dynamic
    range is the dB peak-to-peak over frequencies with positive K (clamped
    points are excluded there and reported through clamped_count).
    """
    if series.grid != sweep.grid or gof.grid != sweep.grid:
        raise ValueError("series, sweep, and GoF outcome must share one grid")
    k = series.k_linear()
    clamped_count = series.clamped_count()
    all_clamped = bool(np.all(k == 0.0))
    mean_k = float(np.mean(k))
    mean_k_db = K_FLOOR_DB if all_clamped else db10(mean_k)
    pos = k > 0.0
    if np.count_nonzero(pos) >= 2:
        k_db_pos = db10(k[pos])
        dynamic_range_db = float(np.max(k_db_pos) - np.min(k_db_pos))
    else:
        dynamic_range_db = 0.0
    normalized_std = 0.0 if all_clamped else float(np.std(k) / mean_k)
    mean_s21sq = float(np.mean(np.abs(sweep.data) ** 2))
    mean_pu = float(np.mean(series.p_unstirred()))
    return CaseStatistics(
        mean_k_db=mean_k_db,
        dynamic_range_db=dynamic_range_db,
        normalized_std=normalized_std,
        mean_s21sq_db=K_FLOOR_DB if mean_s21sq == 0.0 else db10(mean_s21sq),
        pass_rate_rayleigh=gof.pass_rate_rayleigh,
        pass_rate_rician=gof.pass_rate_rician,
        mean_p_unstirred_db=K_FLOOR_DB if mean_pu == 0.0 else db10(mean_pu),
        mean_p_stirred_db=db10(float(np.mean(series.p_stirred()))),
        clamped_count=clamped_count,
        all_clamped=all_clamped,
    )


def analyze_case(
    sweep: SweepMatrix, alpha: float, windows_hz: Sequence[int]
) -> CaseReport:
    """Run the per-case analysis: K series, window averages, GoF, statistics."""
    base = k_series(sweep)
    gof = gof_sweep(sweep, alpha)
    stats = case_statistics(base, sweep, gof)
    series = tuple(
        (int(w), sliding_window_average(base, SlidingWindowSpec(int(w))))
        for w in windows_hz
    )
    return CaseReport(label=sweep.case_label, stats=stats, series=series)


def _atomic_write_text(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix=os.path.basename(path) + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise


def write_sweep_csv(sweep: SweepMatrix, path: str) -> None:
    """Serialize a sweep to the interchange CSV (one row per freq/stirrer pair)."""
    lines = [SWEEP_CSV_HEADER]
    for i in range(sweep.grid.count):
        freq = sweep.grid.point(i)
        re_row = sweep.data[i].real.tolist()
        im_row = sweep.data[i].imag.tolist()
        lines.extend(
            f"{freq},{j},{re_row[j]!r},{im_row[j]!r}" for j in range(sweep.n_samples)
        )
    lines.append("")
    _atomic_write_text(path, "\n".join(lines))


def _parse_sweep_line(line: str, lineno: int):
    if line != line.rstrip():
        raise SweepParseError("trailing whitespace", lineno)
    fields = line.split(",")
    if len(fields) != 4:
        raise SweepParseError(f"expected 4 fields, got {len(fields)}", lineno)
    try:
        freq = int(fields[0])
        idx = int(fields[1])
        re = float(fields[2])
        im = float(fields[3])
    except ValueError:
        raise SweepParseError(f"malformed row {line!r}", lineno) from None
    if not (math.isfinite(re) and math.isfinite(im)):
        raise SweepParseError("non-finite sample value", lineno)
    return freq, idx, re, im


def read_sweep_csv(path: str, case_label: str = "") -> SweepMatrix:
    """Parse an interchange sweep CSV back into a SweepMatrix.

    Enforces the full schema: exact header, 4 fields per row, finite values,
    frequencies strictly increasing, sample indices contiguous from 0, and a
    rectangular block per frequency. Errors carry the offending line number.
    """
    with open(path, "r", encoding="utf-8", newline="") as handle:
        text = handle.read()
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise SweepParseError("empty file, expected header", 1)
    header = lines[0]
    if header != SWEEP_CSV_HEADER:
        got = header.split(",")
        missing = [c for c in SWEEP_CSV_HEADER.split(",") if c not in got]
        if missing:
            raise SweepParseError(f"missing column(s): {', '.join(missing)}", 1)
        raise SweepParseError(
            f"bad header {header!r}, expected {SWEEP_CSV_HEADER!r}", 1
        )
    freqs = []
    values = []
    block_len = 0
    n_samples = None
    for lineno, line in enumerate(lines[1:], start=2):
        freq, idx, re, im = _parse_sweep_line(line, lineno)
        if not freqs or freq != freqs[-1]:
            if freqs:
                if freq < freqs[-1]:
                    raise SweepParseError("rows not sorted by freq_hz", lineno)
                if n_samples is None:
                    n_samples = block_len
                elif block_len != n_samples:
                    raise SweepParseError(
                        f"ragged block: frequency {freqs[-1]} has {block_len} "
                        f"samples, expected {n_samples}",
                        lineno,
                    )
            if idx != 0:
                raise SweepParseError(
                    f"sample_idx must restart at 0 for a new frequency, got {idx}", lineno
                )
            freqs.append(freq)
            block_len = 1
        else:
            if idx != block_len:
                raise SweepParseError(
                    f"sample_idx must ascend contiguously, expected {block_len}, got {idx}",
                    lineno,
                )
            block_len += 1
        values.append(complex(re, im))
    if not freqs:
        raise SweepParseError("no data rows", 2)
    last_line = len(lines)
    if n_samples is None:
        n_samples = block_len
    elif block_len != n_samples:
        raise SweepParseError(
            f"ragged block: frequency {freqs[-1]} has {block_len} samples, "
            f"expected {n_samples}",
            last_line,
        )
    if n_samples < 2:
        raise SweepParseError("need at least 2 samples per frequency", last_line)
    if len(freqs) == 1:
        raise SweepParseError(
            "cannot infer the frequency step from a single-frequency file", last_line
        )
    step = freqs[1] - freqs[0]
    for a, b in zip(freqs, freqs[1:]):
        if b - a != step:
            raise SweepParseError("frequencies not on a uniform grid", last_line)
    grid = FrequencyGrid(freqs[0], step, len(freqs))
    data = np.array(values, dtype=np.complex128).reshape(grid.count, n_samples)
    return SweepMatrix(grid, data, case_label=case_label)


def write_kseries_csv(entries: Sequence[Tuple[int, KSeries]], path: str) -> None:
    """Serialize (window_hz, KSeries) pairs to CSV, one row per frequency point."""
    lines = [KSERIES_CSV_HEADER]
    for window_hz, series in entries:
        k_db = series.k_db().tolist()
        for i, est in enumerate(series.estimates):
            lines.append(
                f"{series.grid.point(i)},{est.k_linear!r},{k_db[i]!r},{est.p_unstirred!r},"
                f"{est.p_stirred!r},{'true' if est.clamped else 'false'},{int(window_hz)}"
            )
    lines.append("")
    _atomic_write_text(path, "\n".join(lines))


def _stats_payload(stats: CaseStatistics) -> dict:
    return {
        "mean_k_db": float(stats.mean_k_db),
        "dynamic_range_db": float(stats.dynamic_range_db),
        "normalized_std": float(stats.normalized_std),
        "mean_s21sq_db": float(stats.mean_s21sq_db),
        "pass_rate_rayleigh": float(stats.pass_rate_rayleigh),
        "pass_rate_rician": float(stats.pass_rate_rician),
        "mean_p_unstirred_db": float(stats.mean_p_unstirred_db),
        "mean_p_stirred_db": float(stats.mean_p_stirred_db),
        "clamped_count": int(stats.clamped_count),
    }


def write_report_json(
    reports: Sequence[CaseReport],
    band: BandSelection,
    alpha: float,
    n_samples: int,
    path: str,
) -> None:
    """Write the aggregate report for any number of cases."""
    payload = {
        "cases": [
            {
                "label": rep.label,
                "stats": _stats_payload(rep.stats),
                "series": [
                    {
                        "window_hz": int(window_hz),
                        "freq_hz": [int(f) for f in series.grid.points()],
                        "k_db": [float(v) for v in series.k_db()],
                    }
                    for window_hz, series in rep.series
                ],
            }
            for rep in reports
        ],
        "band": {"lo_hz": int(band.lo_hz), "hi_hz": int(band.hi_hz)},
        "alpha": float(alpha),
        "n_samples": int(n_samples),
        "definitions": {"normalized_std": "std_linear/mean_linear"},
    }
    _atomic_write_text(path, json.dumps(payload, indent=2) + "\n")


def write_gof_json(gof: GofOutcome, band: BandSelection, path: str) -> None:
    """Write per-frequency K-S details for one sweep."""
    freqs = gof.grid.points()
    payload = {
        "alpha": float(gof.rayleigh[0].alpha),
        "n_samples": int(gof.rayleigh[0].n),
        "band": {"lo_hz": int(band.lo_hz), "hi_hz": int(band.hi_hz)},
        "pass_rate_rayleigh": float(gof.pass_rate_rayleigh),
        "pass_rate_rician": float(gof.pass_rate_rician),
        "frequencies": [
            {
                "freq_hz": int(freqs[i]),
                "rayleigh": {
                    "d": float(ray.d_statistic),
                    "critical": float(ray.critical_value),
                    "pass": bool(ray.passed),
                },
                "rician": {
                    "d": float(ric.d_statistic),
                    "critical": float(ric.critical_value),
                    "pass": bool(ric.passed),
                },
            }
            for i, (ray, ric) in enumerate(zip(gof.rayleigh, gof.rician))
        ],
    }
    _atomic_write_text(path, json.dumps(payload, indent=2) + "\n")
