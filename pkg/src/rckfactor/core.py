"""Shared domain types for frequency sweeps plus dB/linear power conversion.

Frequencies are kept as integer Hz throughout so that grid membership and
band arithmetic stay exact over long uniform sweeps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Default measurement grid: 24.0 GHz start, 10 MHz step, 551 points (ends 29.5 GHz).
DEFAULT_GRID_START_HZ = 24_000_000_000
DEFAULT_GRID_STEP_HZ = 10_000_000
DEFAULT_GRID_COUNT = 551

# 5G FR2 analysis band used by default when reducing a sweep.
FR2_BAND_LO_HZ = 24_250_000_000
FR2_BAND_HI_HZ = 29_500_000_000

# dB floor substituted for zero (clamped) K values so quantiles, window
# averages, and serialized series never contain -inf.
K_FLOOR_DB = -60.0


class BandError(ValueError):
    """A frequency band does not intersect the grid it is applied to."""


def _as_int_hz(value, name: str) -> int:
    """Coerce a frequency quantity to integer Hz, rejecting fractional values."""
    if isinstance(value, (bool, np.bool_)):
        raise ValueError(f"{name} must be a number in Hz, got bool")
    ivalue = int(value)
    if ivalue != value:
        raise ValueError(f"{name} must be an integer number of Hz, got {value!r}")
    return ivalue


def db10(power_ratio):
    """Convert a positive linear power ratio to dB (10*log10).

    Accepts a scalar or an array; raises ValueError on non-positive or
    non-finite input. Inverse of :func:`lin10`.
    """
    arr = np.asarray(power_ratio, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
        raise ValueError("db10 requires positive, finite power ratios")
    out = 10.0 * np.log10(arr)
    return float(out) if arr.ndim == 0 else out


def lin10(db_value):
    """Convert a dB value back to a linear power ratio (inverse of db10)."""
    arr = np.asarray(db_value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("lin10 requires finite dB values")
    out = 10.0 ** (arr / 10.0)
    return float(out) if arr.ndim == 0 else out


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform frequency axis: point(i) = start_hz + i*step_hz, 0 <= i < count."""

    start_hz: int
    step_hz: int
    count: int

    def __post_init__(self):
        object.__setattr__(self, "start_hz", _as_int_hz(self.start_hz, "start_hz"))
        object.__setattr__(self, "step_hz", _as_int_hz(self.step_hz, "step_hz"))
        object.__setattr__(self, "count", int(self.count))
        if self.step_hz <= 0:
            raise ValueError(f"step_hz must be positive, got {self.step_hz}")
        if self.count < 1:
            raise ValueError(f"count must be at least 1, got {self.count}")

    def point(self, i: int) -> int:
        """Frequency in Hz of grid point i."""
        if not 0 <= i < self.count:
            raise IndexError(f"grid index {i} out of range [0, {self.count})")
        return self.start_hz + i * self.step_hz

    @property
    def stop_hz(self) -> int:
        """Frequency in Hz of the last grid point."""
        return self.start_hz + (self.count - 1) * self.step_hz

    def points(self) -> np.ndarray:
        """All grid frequencies in Hz as an int64 array."""
        return self.start_hz + self.step_hz * np.arange(self.count, dtype=np.int64)


DEFAULT_GRID = FrequencyGrid(DEFAULT_GRID_START_HZ, DEFAULT_GRID_STEP_HZ, DEFAULT_GRID_COUNT)


@dataclass(frozen=True)
class BandSelection:
    """Inclusive analysis band [lo_hz, hi_hz]; edges need not sit on grid points."""

    lo_hz: int
    hi_hz: int

    def __post_init__(self):
        object.__setattr__(self, "lo_hz", _as_int_hz(self.lo_hz, "lo_hz"))
        object.__setattr__(self, "hi_hz", _as_int_hz(self.hi_hz, "hi_hz"))
        if self.lo_hz > self.hi_hz:
            raise ValueError(f"band lo_hz {self.lo_hz} exceeds hi_hz {self.hi_hz}")


FR2_BAND = BandSelection(FR2_BAND_LO_HZ, FR2_BAND_HI_HZ)


@dataclass(frozen=True, eq=False)
class SweepMatrix:
    """Complex transmission samples on a grid, one row per frequency.

    data has shape (grid.count, n_samples); column j holds the sample taken
    at stirrer position j. All entries must be finite. The matrix is frozen
    after construction and safe to share across workers. case_label is a
    free-form tag and is excluded from equality.
    """

    grid: FrequencyGrid
    data: np.ndarray
    case_label: str = ""

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.complex128, copy=True)
        if arr.ndim != 2:
            raise ValueError(f"sweep data must be 2-D, got {arr.ndim}-D")
        if arr.shape[0] != self.grid.count:
            raise ValueError(
                f"sweep has {arr.shape[0]} frequency rows but grid has {self.grid.count} points"
            )
        if arr.shape[1] < 2:
            raise ValueError(f"need at least 2 stirrer samples per frequency, got {arr.shape[1]}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("sweep data contains non-finite samples")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def n_samples(self) -> int:
        """Stirrer-position count per frequency."""
        return self.data.shape[1]

    def __eq__(self, other) -> bool:
        if not isinstance(other, SweepMatrix):
            return NotImplemented
        return self.grid == other.grid and np.array_equal(self.data, other.data)


def select_band(sweep: SweepMatrix, band: BandSelection) -> SweepMatrix:
    """Reduce a sweep to the rows covered by an analysis band.

    Band edges that fall between grid points are snapped outward (lo down,
    hi up) so every measurement inside the band is retained. Raises
    BandError when the band and grid do not intersect.
    """
    grid = sweep.grid
    if band.lo_hz > grid.stop_hz or band.hi_hz < grid.start_hz:
        raise BandError(
            f"band [{band.lo_hz}, {band.hi_hz}] Hz does not intersect "
            f"grid [{grid.start_hz}, {grid.stop_hz}] Hz"
        )
    if band.lo_hz <= grid.start_hz:
        i_lo = 0
    else:
        i_lo = (band.lo_hz - grid.start_hz) // grid.step_hz
    if band.hi_hz >= grid.stop_hz:
        i_hi = grid.count - 1
    else:
        q, r = divmod(band.hi_hz - grid.start_hz, grid.step_hz)
        i_hi = q if r == 0 else q + 1
    sub_grid = FrequencyGrid(grid.point(i_lo), grid.step_hz, i_hi - i_lo + 1)
    return SweepMatrix(sub_grid, sweep.data[i_lo : i_hi + 1], sweep.case_label)
