"""K-factor estimation from complex stirred-chamber samples.

The per-frequency estimator splits each sample set into an unstirred part
(the squared sample mean, bias-corrected) and a stirred part (the unbiased
sample variance). Their ratio K = P_unstirred / P_stirred is exactly
unbiased for independent circular complex-normal scatter:

    E[1/var_hat] = (N-1) / ((N-2)*var)  and  E[|mean_hat|^2] = |m|^2 + var/N,

so P_unstirred = (N-2)/(N-1)*|mean_hat|^2 - var_hat/N makes
E[P_unstirred / var_hat] = |m|^2 / var = K for every K and N >= 3.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .core import FrequencyGrid, K_FLOOR_DB, SweepMatrix, lin10

#: Minimum Monte Carlo replicate count accepted by k_confidence_interval.
MIN_CI_TRIALS = 1000

#: Complex-sample budget per vectorized batch when building confidence intervals.
_CI_BATCH_SAMPLES = 4_000_000


class DegenerateVarianceError(ValueError):
    """All samples identical: stirred power is zero and K is undefined."""


@dataclass(frozen=True)
class ConfidenceInterval:
    """Two-sided dB interval for a K-factor estimate."""

    lo_db: float
    hi_db: float
    level: float
    method_trials: int

    def __post_init__(self):
        if not 0.0 < self.level < 1.0:
            raise ValueError(f"level must be in (0, 1), got {self.level}")
        if self.lo_db > self.hi_db:
            raise ValueError(f"lo_db {self.lo_db} exceeds hi_db {self.hi_db}")


@dataclass(frozen=True)
class KFactorEstimate:
    """Decomposed powers and K for one sample set.

    clamped is True when the raw unstirred-power estimate came out
    non-positive (a sampling artifact near K = 0); the estimate is then
    reported as p_unstirred = 0 and k_linear = 0.
    """

    p_unstirred: float
    p_stirred: float
    k_linear: float
    n_samples: int
    clamped: bool
    ci: Optional[ConfidenceInterval] = None

    def __post_init__(self):
        if self.p_stirred <= 0.0:
            raise ValueError("p_stirred must be positive")
        if self.k_linear < 0.0:
            raise ValueError("k_linear must be non-negative")


@dataclass(frozen=True)
class SlidingWindowSpec:
    """Frequency-stirring window: full span in Hz, 0 means no averaging.

    domain selects whether window means are taken over linear K values
    (default) or over their dB images (clamped points enter at the dB floor).
    """

    width_hz: int
    edge_policy: str = "truncate"
    domain: str = "linear"

    def __post_init__(self):
        object.__setattr__(self, "width_hz", int(self.width_hz))
        if self.width_hz < 0:
            raise ValueError(f"width_hz must be non-negative, got {self.width_hz}")
        if self.edge_policy != "truncate":
            raise ValueError(f"unsupported edge_policy {self.edge_policy!r}")
        if self.domain not in ("linear", "db"):
            raise ValueError(f"domain must be 'linear' or 'db', got {self.domain!r}")


@dataclass(frozen=True)
class KSeries:
    """Per-frequency K-factor estimates aligned to a grid."""

    grid: FrequencyGrid
    estimates: Tuple[KFactorEstimate, ...]

    def __post_init__(self):
        object.__setattr__(self, "estimates", tuple(self.estimates))
        if len(self.estimates) != self.grid.count:
            raise ValueError(
                f"series has {len(self.estimates)} estimates for a "
                f"{self.grid.count}-point grid"
            )

    def k_linear(self) -> np.ndarray:
        return np.array([e.k_linear for e in self.estimates])

    def k_db(self, floor_db: float = K_FLOOR_DB) -> np.ndarray:
        """K per frequency in dB, with zero (clamped) values at floor_db."""
        k = self.k_linear()
        out = np.full(k.shape, floor_db)
        pos = k > 0.0
        out[pos] = np.maximum(10.0 * np.log10(k[pos]), floor_db)
        return out

    def p_unstirred(self) -> np.ndarray:
        return np.array([e.p_unstirred for e in self.estimates])

    def p_stirred(self) -> np.ndarray:
        return np.array([e.p_stirred for e in self.estimates])

    def clamped_count(self) -> int:
        return sum(1 for e in self.estimates if e.clamped)


def _decompose_rows(data: np.ndarray):
    """Vectorized power split for a (rows, N) complex matrix.

    Returns (p_unstirred, p_stirred, clamped) arrays; rows with zero sample
    variance come back with p_stirred = 0 and are the caller's problem.
    """
    n = data.shape[1]
    mean = data.mean(axis=1)
    resid = data - mean[:, None]
    p_stirred = np.einsum("ij,ij->i", resid.real, resid.real)
    p_stirred += np.einsum("ij,ij->i", resid.imag, resid.imag)
    p_stirred /= n - 1
    raw = (n - 2) / (n - 1) * np.abs(mean) ** 2 - p_stirred / n
    clamped = raw <= 0.0
    p_unstirred = np.where(clamped, 0.0, raw)
    return p_unstirred, p_stirred, clamped


def _as_sample_vector(samples) -> np.ndarray:
    x = np.asarray(samples, dtype=np.complex128)
    if x.ndim != 1:
        raise ValueError(f"expected a 1-D sequence of complex samples, got shape {x.shape}")
    if x.size < 2:
        raise ValueError(f"need at least 2 samples, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise ValueError("samples contain non-finite values")
    return x


def decompose_powers(samples: Sequence[complex]):
    """Split samples into (p_unstirred, p_stirred, clamped).

    p_stirred is the unbiased sample variance of the complex samples;
    p_unstirred is the bias-corrected squared mean (see module docstring),
    clamped to 0 with clamped=True when the raw value is non-positive.
    Raises DegenerateVarianceError when all samples are identical.
    """
    x = _as_sample_vector(samples)
    p_unstirred, p_stirred, clamped = _decompose_rows(x[None, :])
    if p_stirred[0] == 0.0:
        raise DegenerateVarianceError("all samples identical: stirred power is zero")
    return float(p_unstirred[0]), float(p_stirred[0]), bool(clamped[0])


def estimate_k(samples: Sequence[complex]) -> KFactorEstimate:
    """Estimate the K-factor of one sample set (K = p_unstirred / p_stirred)."""
    x = _as_sample_vector(samples)
    p_unstirred, p_stirred, clamped = decompose_powers(x)
    return KFactorEstimate(
        p_unstirred=p_unstirred,
        p_stirred=p_stirred,
        k_linear=p_unstirred / p_stirred,
        n_samples=x.size,
        clamped=clamped,
    )


def k_series(sweep: SweepMatrix) -> KSeries:
    """Estimate K independently for every frequency row of a sweep."""
    p_unstirred, p_stirred, clamped = _decompose_rows(sweep.data)
    bad = np.flatnonzero(p_stirred == 0.0)
    if bad.size:
        raise DegenerateVarianceError(
            f"stirred power is zero at {sweep.grid.point(int(bad[0]))} Hz"
        )
    n = sweep.n_samples
    estimates = tuple(
        KFactorEstimate(
            p_unstirred=float(pu),
            p_stirred=float(ps),
            k_linear=float(pu / ps),
            n_samples=n,
            clamped=bool(cl),
        )
        for pu, ps, cl in zip(p_unstirred, p_stirred, clamped)
    )
    return KSeries(sweep.grid, estimates)


def _window_means(values: np.ndarray, d_max: int) -> np.ndarray:
    """Mean of values over index windows [i-d_max, i+d_max], truncated at edges.

    Computed as center + mean(deviations from center) so that constant
    stretches (and symmetric windows over linear ramps) reproduce exactly.
    """
    count = values.size
    out = np.empty(count)
    for i in range(count):
        lo = 0 if i < d_max else i - d_max
        hi = min(i + d_max, count - 1)
        out[i] = values[i] + np.mean(values[lo : hi + 1] - values[i])
    return out


def sliding_window_average(series: KSeries, spec: SlidingWindowSpec) -> KSeries:
    """Average a K series over a sliding frequency window ("frequency stirring").

    Every output point is the arithmetic mean of the input K over grid points
    within width_hz/2 of it; windows shrink at the band edges. A width of 0
    returns the input unchanged. The windowed stirred power is averaged the
    same way and the unstirred power is rebuilt as k * p_stirred so the
    estimate invariant keeps holding.
    """
    step = series.grid.step_hz
    d_max = spec.width_hz // (2 * step)
    if spec.width_hz == 0 or d_max == 0:
        return series
    if spec.domain == "db":
        k_mean = lin10(_window_means(series.k_db(), d_max))
        # A floor-valued mean means every window member was clamped.
        k_mean = np.where(k_mean <= lin10(K_FLOOR_DB), 0.0, k_mean)
    else:
        k_mean = np.maximum(_window_means(series.k_linear(), d_max), 0.0)
    ps_mean = _window_means(series.p_stirred(), d_max)
    estimates = tuple(
        KFactorEstimate(
            p_unstirred=float(k * ps),
            p_stirred=float(ps),
            k_linear=float(k),
            n_samples=est.n_samples,
            clamped=bool(k == 0.0),
        )
        for k, ps, est in zip(k_mean, ps_mean, series.estimates)
    )
    return KSeries(series.grid, estimates)


def _simulate_k_estimates(k_linear: float, n: int, trials: int, seed: int) -> np.ndarray:
    """Re-estimate K on `trials` synthetic Rician sample sets of size n.

    Samples follow m + CN(0, ps) with unit total power (|m|^2 + ps = 1 and
    |m|^2/ps = k_linear). Each replicate draws from its own substream spawned
    from `seed`, so results are reproducible and order-independent.
    """
    ps = 1.0 / (1.0 + k_linear)
    mu = np.sqrt(k_linear / (1.0 + k_linear))
    scale = np.sqrt(ps / 2.0)
    children = np.random.SeedSequence(seed).spawn(trials)
    chunk = max(1, min(512, _CI_BATCH_SAMPLES // n))
    out = np.empty(trials)
    buf = np.empty((chunk, n), dtype=np.complex128)
    for start in range(0, trials, chunk):
        stop = min(start + chunk, trials)
        rows = stop - start
        for j in range(rows):
            rng = np.random.Generator(np.random.PCG64(children[start + j]))
            buf[j] = mu + scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
        pu, p_stirred, _ = _decompose_rows(buf[:rows])
        out[start:stop] = pu / p_stirred
    return out


def k_confidence_interval(
    k_hat: float,
    n: int,
    level: float = 0.95,
    trials: int = 10_000,
    seed: int = 0,
) -> ConfidenceInterval:
    """Parametric Monte Carlo confidence interval for an estimated K-factor.

    Simulates `trials` sample sets of size n from a Rician model with
    K = k_hat and unit total power, re-estimates K on each, and returns the
    empirical (1-level)/2 and (1+level)/2 quantiles in dB. Replicates whose
    estimate clamps to zero enter the quantiles at the -60 dB floor.
    Bit-reproducible for a fixed seed.
    """
    if k_hat < 0.0 or not np.isfinite(k_hat):
        raise ValueError(f"k_hat must be finite and non-negative, got {k_hat}")
    if n < 2:
        raise ValueError(f"need at least 2 samples per replicate, got {n}")
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must be in (0, 1), got {level}")
    if trials < MIN_CI_TRIALS:
        raise ValueError(f"trials must be at least {MIN_CI_TRIALS}, got {trials}")
    k_rep = _simulate_k_estimates(float(k_hat), int(n), int(trials), int(seed))
    k_db = np.full(k_rep.shape, K_FLOOR_DB)
    pos = k_rep > 0.0
    k_db[pos] = np.maximum(10.0 * np.log10(k_rep[pos]), K_FLOOR_DB)
    lo, hi = np.quantile(k_db, [(1.0 - level) / 2.0, (1.0 + level) / 2.0])
    return ConfidenceInterval(float(lo), float(hi), level=level, method_trials=trials)
