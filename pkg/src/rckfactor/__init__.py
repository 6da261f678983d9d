"""Rician K-factor estimation and envelope goodness-of-fit for chamber sweeps.

The package splits into: core (grids, sweeps, dB conversion), kfactor
(power decomposition, K estimation, confidence intervals, frequency
stirring), gof (Rayleigh/Rician fits and K-S tests), simulate (ground-truth
channel synthesis and the six chamber presets), report (statistics and file
interchange), and cli (batch pipeline).
"""

from .core import (
    BandSelection,
    DEFAULT_GRID,
    FR2_BAND,
    FrequencyGrid,
    K_FLOOR_DB,
    BandError,
    SweepMatrix,
    db10,
    lin10,
    select_band,
)
from .kfactor import (
    ConfidenceInterval,
    DegenerateVarianceError,
    KFactorEstimate,
    KSeries,
    SlidingWindowSpec,
    decompose_powers,
    estimate_k,
    k_confidence_interval,
    k_series,
    sliding_window_average,
)
from .gof import (
    GofOutcome,
    KsResult,
    RayleighFit,
    RicianFit,
    fit_rayleigh,
    fit_rician,
    gof_sweep,
    ks_test,
    rayleigh_cdf,
    rician_cdf,
)
from .simulate import (
    CaseConfig,
    PRESET_LABELS,
    PresetTable,
    UnstirredPath,
    preset_cases,
    synthesize_sweep,
    true_mean_k,
)
from .report import (
    CaseReport,
    CaseStatistics,
    SweepParseError,
    analyze_case,
    case_statistics,
    read_sweep_csv,
    write_kseries_csv,
    write_report_json,
    write_sweep_csv,
)

__version__ = "0.1.0"

__all__ = [
    "BandError",
    "BandSelection",
    "CaseConfig",
    "CaseReport",
    "CaseStatistics",
    "ConfidenceInterval",
    "DEFAULT_GRID",
    "DegenerateVarianceError",
    "FR2_BAND",
    "FrequencyGrid",
    "GofOutcome",
    "K_FLOOR_DB",
    "KFactorEstimate",
    "KSeries",
    "KsResult",
    "PRESET_LABELS",
    "PresetTable",
    "RayleighFit",
    "RicianFit",
    "SlidingWindowSpec",
    "SweepMatrix",
    "SweepParseError",
    "UnstirredPath",
    "analyze_case",
    "case_statistics",
    "db10",
    "decompose_powers",
    "estimate_k",
    "fit_rayleigh",
    "fit_rician",
    "gof_sweep",
    "k_confidence_interval",
    "k_series",
    "ks_test",
    "lin10",
    "preset_cases",
    "rayleigh_cdf",
    "read_sweep_csv",
    "rician_cdf",
    "select_band",
    "sliding_window_average",
    "synthesize_sweep",
    "true_mean_k",
    "write_kseries_csv",
    "write_report_json",
    "write_sweep_csv",
]
