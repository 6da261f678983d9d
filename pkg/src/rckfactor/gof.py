"""Rayleigh/Rician envelope fitting and one-sample Kolmogorov-Smirnov tests.

Envelope distributions are fitted per frequency row (Rayleigh from the
magnitudes, Rician through the complex power decomposition) and each fit is
tested against the same row's envelopes with a one-sample K-S test at the
asymptotic critical value c(alpha)/sqrt(N), c(alpha) = sqrt(ln(2/alpha)/2).
Parameters are estimated from the data being tested; no small-sample
(Lilliefors-style) correction is applied, which makes the test conservative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence, Tuple

import numpy as np
from scipy import special

from .core import FrequencyGrid, SweepMatrix
from .kfactor import estimate_k

#: Truncation tolerance for the Rician CDF series (absolute CDF error is
#: bounded by the neglected Poisson tail mass, so well under 1e-9).
_SERIES_TOL = 1e-13

_SERIES_MAX_TERMS = 500_000


@dataclass(frozen=True)
class RayleighFit:
    """Rayleigh envelope distribution, fully determined by its scale sigma."""

    sigma: float

    def __post_init__(self):
        if not self.sigma > 0.0 or not math.isfinite(self.sigma):
            raise ValueError(f"sigma must be positive and finite, got {self.sigma}")


@dataclass(frozen=True)
class RicianFit:
    """Rician envelope distribution: LOS amplitude nu, per-quadrature scale sigma."""

    nu: float
    sigma: float

    def __post_init__(self):
        if self.nu < 0.0 or not math.isfinite(self.nu):
            raise ValueError(f"nu must be non-negative and finite, got {self.nu}")
        if not self.sigma > 0.0 or not math.isfinite(self.sigma):
            raise ValueError(f"sigma must be positive and finite, got {self.sigma}")

    @property
    def k_linear(self) -> float:
        """Implied K-factor nu^2 / (2 sigma^2)."""
        return self.nu**2 / (2.0 * self.sigma**2)


@dataclass(frozen=True)
class KsResult:
    """One-sample K-S outcome: supremum distance, threshold, and decision."""

    d_statistic: float
    critical_value: float
    passed: bool
    n: int
    alpha: float

    def __post_init__(self):
        if not 0.0 <= self.d_statistic <= 1.0:
            raise ValueError(f"d_statistic must lie in [0, 1], got {self.d_statistic}")
        if self.passed != (self.d_statistic <= self.critical_value):
            raise ValueError("passed flag inconsistent with d and critical value")


@dataclass(frozen=True)
class GofOutcome:
    """Per-frequency K-S results for both hypotheses plus aggregate pass rates."""

    grid: FrequencyGrid
    rayleigh: Tuple[KsResult, ...]
    rician: Tuple[KsResult, ...]
    pass_rate_rayleigh: float
    pass_rate_rician: float

    def __post_init__(self):
        object.__setattr__(self, "rayleigh", tuple(self.rayleigh))
        object.__setattr__(self, "rician", tuple(self.rician))
        if len(self.rayleigh) != self.grid.count or len(self.rician) != self.grid.count:
            raise ValueError("per-frequency results do not match grid size")
        for rate, results in (
            (self.pass_rate_rayleigh, self.rayleigh),
            (self.pass_rate_rician, self.rician),
        ):
            expect = sum(1 for r in results if r.passed) / len(results)
            if rate != expect:
                raise ValueError("pass rate inconsistent with per-frequency results")


def _as_envelope_vector(envelopes) -> np.ndarray:
    x = np.asarray(envelopes, dtype=float)
    if x.ndim != 1:
        raise ValueError(f"expected a 1-D sequence of envelopes, got shape {x.shape}")
    if x.size < 1:
        raise ValueError("need at least one envelope sample")
    if not np.all(np.isfinite(x)) or np.any(x < 0.0):
        raise ValueError("envelopes must be finite and non-negative")
    return x


def fit_rayleigh(envelopes: Sequence[float]) -> RayleighFit:
    """Maximum-likelihood Rayleigh fit: sigma = sqrt(mean(r^2) / 2)."""
    x = _as_envelope_vector(envelopes)
    ms = float(np.mean(x**2))
    if ms == 0.0:
        raise ValueError("cannot fit a Rayleigh scale to all-zero envelopes")
    return RayleighFit(math.sqrt(ms / 2.0))


def fit_rician(samples: Sequence[complex]) -> RicianFit:
    """Fit a Rician envelope model from complex samples.

    Splits the total power Omega = mean(|x|^2) according to the estimated
    K-factor: nu = sqrt(Omega*K/(K+1)), sigma = sqrt(Omega/(2*(K+1))).
    A clamped (zero) K estimate yields nu = 0, the Rayleigh special case.
    """
    x = np.asarray(samples, dtype=np.complex128)
    est = estimate_k(x)
    omega = float(np.mean(np.abs(x) ** 2))
    k = est.k_linear
    nu = math.sqrt(omega * k / (k + 1.0))
    sigma = math.sqrt(omega / (2.0 * (k + 1.0)))
    return RicianFit(nu=nu, sigma=sigma)


def _validate_radii(r) -> np.ndarray:
    arr = np.asarray(r, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr < 0.0):
        raise ValueError("envelope argument must be finite and non-negative")
    return arr


def rayleigh_cdf(r, fit: RayleighFit):
    """Rayleigh CDF 1 - exp(-r^2 / (2 sigma^2)); scalar or array argument."""
    arr = _validate_radii(r)
    out = -np.expm1(-(arr**2) / (2.0 * fit.sigma**2))
    return float(out) if arr.ndim == 0 else out


def _poisson_gamma_cdf(x2: np.ndarray, lam: float) -> np.ndarray:
    """CDF tail series sum_j Poisson(j; lam) * P(j+1, x2) for the Rician model.

    This is the Marcum-Q complement 1 - Q1(a, b) written as a Poisson mixture
    of regularized lower incomplete gamma functions, with lam = a^2/2 and
    x2 = b^2/2. The sum is seeded at the Poisson mode in log space and grown
    by recurrence in both directions, so it stays in range for large lam
    (strong LOS) and large x2. The neglected mass bounds the absolute error.
    """
    if lam == 0.0:
        return -np.expm1(-x2)
    out = np.zeros(x2.shape)
    pos = x2 > 0.0
    xp = x2[pos]
    if xp.size:
        j0 = int(lam)
        logx = np.log(xp)
        p0 = math.exp(-lam + j0 * math.log(lam) - math.lgamma(j0 + 1))
        g0 = special.gammainc(j0 + 1, xp)
        total = p0 * g0
        # Upward from the mode: gamma terms shrink by tau_j = e^-x x^j / j!.
        p = p0
        g = g0.copy()
        tau = np.exp(-xp + (j0 + 1) * logx - math.lgamma(j0 + 2))
        j = j0
        while (p > _SERIES_TOL or j < lam) and j - j0 < _SERIES_MAX_TERMS:
            j += 1
            p *= lam / j
            g -= tau
            np.clip(g, 0.0, 1.0, out=g)
            total += p * g
            tau *= xp / (j + 1)
        # Downward to j = 0: gamma terms grow by the same tau ladder.
        p = p0
        g = g0.copy()
        tau = np.exp(-xp + j0 * logx - math.lgamma(j0 + 1))
        for j in range(j0 - 1, -1, -1):
            p *= (j + 1) / lam
            g += tau
            np.clip(g, 0.0, 1.0, out=g)
            total += p * g
            tau *= (j + 1) / xp
            if p < _SERIES_TOL:
                break
        out[pos] = np.clip(total, 0.0, 1.0)
    return out


def rician_cdf(r, fit: RicianFit):
    """Rician CDF at r (scalar or array), 1 - Q1(nu/sigma, r/sigma)."""
    arr = _validate_radii(r)
    x2 = np.atleast_1d(arr) ** 2 / (2.0 * fit.sigma**2)
    lam = fit.nu**2 / (2.0 * fit.sigma**2)
    out = _poisson_gamma_cdf(x2, lam)
    return float(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)


def ks_test(envelopes: Sequence[float], cdf: Callable[[np.ndarray], np.ndarray], alpha: float) -> KsResult:
    """One-sample two-sided Kolmogorov-Smirnov test against a reference CDF.

    With order statistics x_(1) <= ... <= x_(N), the statistic is
    D = max_i max(i/N - F(x_(i)), F(x_(i)) - (i-1)/N); the null is accepted
    when D <= sqrt(ln(2/alpha)/2)/sqrt(N) (asymptotic Kolmogorov quantile).
    """
    x = _as_envelope_vector(envelopes)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    n = x.size
    x = np.sort(x)
    f = np.asarray(cdf(x), dtype=float)
    steps = np.arange(1, n + 1) / n
    d = float(max(np.max(steps - f), np.max(f - (steps - 1.0 / n))))
    critical = math.sqrt(math.log(2.0 / alpha) / 2.0) / math.sqrt(n)
    return KsResult(
        d_statistic=d,
        critical_value=critical,
        passed=d <= critical,
        n=n,
        alpha=alpha,
    )


def gof_sweep(sweep: SweepMatrix, alpha: float = 0.05) -> GofOutcome:
    """Run fitted-Rayleigh and fitted-Rician K-S tests on every frequency row."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    ray_results = []
    ric_results = []
    for row in sweep.data:
        env = np.abs(row)
        ray = fit_rayleigh(env)
        ric = fit_rician(row)
        ray_results.append(ks_test(env, lambda r: rayleigh_cdf(r, ray), alpha))
        ric_results.append(ks_test(env, lambda r: rician_cdf(r, ric), alpha))
    rate_ray = sum(1 for r in ray_results if r.passed) / len(ray_results)
    rate_ric = sum(1 for r in ric_results if r.passed) / len(ric_results)
    return GofOutcome(
        grid=sweep.grid,
        rayleigh=tuple(ray_results),
        rician=tuple(ric_results),
        pass_rate_rayleigh=rate_ray,
        pass_rate_rician=rate_ric,
    )
