"""Stationary scalar input processes.

This module models the driving signals fed into recurrent state-space
systems: ARMA(1,1) processes (with AR(1), MA(1) and white noise as
degenerate cases) driven by Gaussian innovations.  It provides

* seeded path simulation,
* exact closed-form second-order analytics (autocovariance function with a
  certified geometric tail bound, spectral density),
* the lag-covariance Toeplitz matrices whose spectral radius enters the
  capacity bounds, together with a growing-order estimate of its limit and
  the Gershgorin-type upper bound.

All routines are pure given ``(spec, seed)``; simulation draws from a fresh
per-call generator, so concurrent use is safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg, signal

__all__ = [
    "ArmaProcessSpec",
    "AutocovarianceFunction",
    "ToeplitzBlock",
    "ToeplitzSpectralRadius",
    "simulate_arma",
    "autocovariance",
    "empirical_autocovariance",
    "spectral_density",
    "toeplitz_block",
    "spectral_radius_limit",
    "gershgorin_bound",
]

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ArmaProcessSpec:
    """Parameters of a stationary ARMA(1,1) process.

    The process is ``Z_t = phi * Z_{t-1} + e_t + theta * e_{t-1}`` with
    i.i.d. Gaussian innovations ``e_t ~ N(0, sigma^2)``.  ``phi = theta = 0``
    encodes white noise; ``theta = 0`` gives AR(1) and ``phi = 0`` MA(1).

    Parameters
    ----------
    phi : float
        Autoregressive coefficient, must satisfy ``|phi| < 1``.
    theta : float
        Moving-average coefficient.
    sigma : float, default 1.0
        Innovation standard deviation, must be positive.
    """

    phi: float
    theta: float
    sigma: float = 1.0

    def __post_init__(self) -> None:
        if not np.isfinite([self.phi, self.theta, self.sigma]).all():
            raise ValueError("ARMA parameters must be finite")
        if abs(self.phi) >= 1.0:
            raise ValueError(f"|phi| must be < 1 for stationarity, got {self.phi}")
        if self.sigma <= 0.0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")

    @property
    def is_white_noise(self) -> bool:
        return self.phi == 0.0 and self.theta == 0.0


@dataclass(frozen=True)
class AutocovarianceFunction:
    """Exact autocovariance function of an ARMA(1,1) process.

    Closed forms (``g0 = lag-0``, ``g1 = lag-1`` covariance)::

        g0 = sigma^2 (1 + 2 phi theta + theta^2) / (1 - phi^2)
        g1 = sigma^2 (phi + theta)(1 + phi theta) / (1 - phi^2)
        gamma(h) = phi^(h-1) g1            for h >= 2
        gamma(-h) = gamma(h)

    The geometric decay yields a certified tail bound
    ``sum_{j>J} |gamma(j)| = |g1| |phi|^J / (1 - |phi|)`` used by the
    truncation certificates downstream.
    """

    spec: ArmaProcessSpec
    lag0: float
    lag1: float

    def __call__(self, lag) -> np.ndarray | float:
        """Evaluate ``gamma`` at integer lag(s); symmetric in the lag."""
        h = np.abs(np.asarray(lag))
        out = np.where(
            h == 0,
            self.lag0,
            self.lag1 * np.power(self.spec.phi, np.maximum(h, 1) - 1),
        )
        return float(out) if np.isscalar(lag) else out

    def values(self, max_lag: int) -> np.ndarray:
        """Return ``[gamma(0), gamma(1), ..., gamma(max_lag)]``."""
        if max_lag < 0:
            raise ValueError("max_lag must be nonnegative")
        out = np.empty(max_lag + 1)
        out[0] = self.lag0
        if max_lag >= 1:
            out[1:] = self.lag1 * np.power(self.spec.phi, np.arange(max_lag))
        return out

    def tail_bound(self, after_lag: int) -> float:
        """Certified upper bound on ``sum_{j > after_lag} |gamma(j)|``."""
        if after_lag < 0:
            raise ValueError("after_lag must be nonnegative")
        if self.lag1 == 0.0:
            return 0.0
        phi = abs(self.spec.phi)
        if phi == 0.0:
            return abs(self.lag1) if after_lag == 0 else 0.0
        return abs(self.lag1) * phi**after_lag / (1.0 - phi)

    # -- spectral density (closed form) ------------------------------------

    def spectral_density_exact(self, freq) -> np.ndarray | float:
        """Spectral density ``sigma^2 |1 + theta e^{-i w}|^2 /
        (2 pi |1 - phi e^{-i w}|^2)`` evaluated at angular frequency ``freq``."""
        phi, theta, sig = self.spec.phi, self.spec.theta, self.spec.sigma
        c = np.cos(freq)
        num = 1.0 + theta * theta + 2.0 * theta * c
        den = 1.0 + phi * phi - 2.0 * phi * c
        return sig * sig / TWO_PI * num / den

    def spectral_density_range(self) -> tuple[float, float]:
        """Exact ``(min, max)`` of the spectral density over ``[-pi, pi]``.

        For ARMA(1,1) the density is monotone in ``cos(freq)``, so the
        extrema sit at the endpoints ``freq = 0`` and ``freq = pi``.
        """
        ends = (self.spectral_density_exact(0.0), self.spectral_density_exact(math.pi))
        return min(ends), max(ends)

    def max_spectral_density(self) -> float:
        return self.spectral_density_range()[1]


@dataclass(frozen=True)
class ToeplitzBlock:
    """Finite lag-covariance Toeplitz matrix with entries ``gamma(|i-j|)``."""

    order: int
    entries: np.ndarray


@dataclass(frozen=True)
class ToeplitzSpectralRadius:
    """Growing-order estimate of the limiting Toeplitz spectral radius.

    ``value`` is the spectral radius at the largest order reached,
    ``ceiling`` the analytic limit ``2 pi * max f`` that dominates every
    finite order (the sequence increases towards it by eigenvalue
    interlacing).
    """

    value: float
    order: int
    converged: bool
    ceiling: float


def simulate_arma(
    spec: ArmaProcessSpec,
    length: int,
    burn_in: int = 1000,
    seed=0,
) -> np.ndarray:
    """Simulate a stationary ARMA(1,1) path with Gaussian innovations.

    The recursion ``Z_t = phi Z_{t-1} + e_t + theta e_{t-1}`` is started
    from zero and the first ``burn_in`` values are discarded so the retained
    path is approximately stationary.  Deterministic for a fixed seed.

    Parameters
    ----------
    spec : ArmaProcessSpec
    length : int
        Number of retained samples, at least 1.
    burn_in : int, default 1000
        Leading samples discarded before the path is returned.
    seed : int or sequence of int
        Seed for the per-call random generator (anything accepted by
        ``numpy.random.default_rng``).

    Returns
    -------
    np.ndarray of shape ``(length,)``
    """
    if length < 1:
        raise ValueError("length must be >= 1")
    if burn_in < 0:
        raise ValueError("burn_in must be nonnegative")
    rng = np.random.default_rng(seed)
    innov = spec.sigma * rng.standard_normal(burn_in + length)
    path = signal.lfilter([1.0, spec.theta], [1.0, -spec.phi], innov)
    return path[burn_in:]


def autocovariance(spec: ArmaProcessSpec) -> AutocovarianceFunction:
    """Exact autocovariance function of the process described by ``spec``."""
    phi, theta, sig2 = spec.phi, spec.theta, spec.sigma**2
    denom = 1.0 - phi * phi
    lag0 = sig2 * (1.0 + 2.0 * phi * theta + theta * theta) / denom
    lag1 = sig2 * (phi + theta) * (1.0 + phi * theta) / denom
    return AutocovarianceFunction(spec=spec, lag0=lag0, lag1=lag1)


def empirical_autocovariance(series, max_lag: int) -> np.ndarray:
    """Biased (1/T) sample autocovariances of a scalar series.

    ``acf[h] = (1/T) sum_{t} (z_t - mean)(z_{t+h} - mean)``.  The 1/T
    normalization keeps the implied empirical Toeplitz matrix positive
    semi-definite.

    Parameters
    ----------
    series : array_like, shape (T,)
    max_lag : int
        Largest lag, must satisfy ``0 <= max_lag < T``.

    Returns
    -------
    np.ndarray of shape ``(max_lag + 1,)`` with entries for lags 0..max_lag.
    """
    z = np.asarray(series, dtype=float)
    if z.ndim != 1:
        raise ValueError("series must be one-dimensional")
    t_len = z.shape[0]
    if max_lag < 0:
        raise ValueError("max_lag must be nonnegative")
    if max_lag >= t_len:
        raise ValueError(f"max_lag={max_lag} must be < series length {t_len}")
    zc = z - z.mean()
    out = np.empty(max_lag + 1)
    for h in range(max_lag + 1):
        out[h] = np.dot(zc[: t_len - h], zc[h:]) / t_len
    return out


def spectral_density(
    acvf: AutocovarianceFunction,
    freq: float,
    truncation: int = 10_000,
) -> float:
    """Spectral density via the truncated cosine series of the covariances.

    Returns ``(1/2pi) sum_{|n| <= truncation} e^{-i n freq} gamma(n)``,
    real by lag symmetry.  The truncation error is certified to be at most
    ``acvf.tail_bound(truncation) / pi``.

    Raises
    ------
    ValueError
        If ``freq`` lies outside ``[-pi, pi]``.
    """
    if not -math.pi <= freq <= math.pi:
        raise ValueError(f"frequency {freq} outside [-pi, pi]")
    if truncation < 1:
        raise ValueError("truncation must be >= 1")
    gam = acvf.values(truncation)
    n = np.arange(1, truncation + 1)
    return (gam[0] + 2.0 * np.dot(np.cos(n * freq), gam[1:])) / TWO_PI


def toeplitz_block(acvf: AutocovarianceFunction, order: int) -> ToeplitzBlock:
    """Symmetric Toeplitz block ``H[i, j] = gamma(|i - j|)`` of a given order."""
    if order < 1:
        raise ValueError("order must be >= 1")
    return ToeplitzBlock(order=order, entries=linalg.toeplitz(acvf.values(order - 1)))


def _top_eigenvalue(matrix: np.ndarray) -> float:
    n = matrix.shape[0]
    return float(
        linalg.eigh(matrix, eigvals_only=True, subset_by_index=[n - 1, n - 1])[0]
    )


def spectral_radius_limit(
    acvf: AutocovarianceFunction,
    rel_tol: float = 1e-3,
    max_order: int = 2048,
    start_order: int = 32,
) -> ToeplitzSpectralRadius:
    """Estimate the limiting spectral radius of the lag-covariance Toeplitz family.

    Doubles the block order until two successive spectral radii differ by
    less than ``rel_tol`` in relative terms or ``max_order`` is reached.
    The sequence is nondecreasing (eigenvalue interlacing) and dominated by
    the analytic ceiling ``2 pi * max f``, which is reported alongside.

    A non-converged result is still returned, flagged via ``converged=False``.
    """
    if not 0.0 < rel_tol < 1.0:
        raise ValueError("rel_tol must lie in (0, 1)")
    if max_order < start_order:
        raise ValueError("max_order must be >= start_order")
    ceiling = TWO_PI * acvf.max_spectral_density()
    order = start_order
    value = _top_eigenvalue(toeplitz_block(acvf, order).entries)
    while order * 2 <= max_order:
        order *= 2
        new = _top_eigenvalue(toeplitz_block(acvf, order).entries)
        if abs(new - value) < rel_tol * abs(new):
            return ToeplitzSpectralRadius(new, order, True, ceiling)
        value = new
    return ToeplitzSpectralRadius(value, order, False, ceiling)


def gershgorin_bound(
    acvf: AutocovarianceFunction,
    n_state: int,
    truncation: int | None = None,
) -> float:
    """Gershgorin-disk upper bound ``N (1 + (2/gamma(0)) sum_{j>=1} |gamma(j)|)``.

    The absolute-covariance series is summed up to ``truncation`` and the
    certified geometric tail is added, so the result is a true upper bound
    for the infinite series.  With ``truncation=None`` the exact series sum
    is used directly.
    """
    if n_state < 1:
        raise ValueError("n_state must be >= 1")
    if truncation is None:
        abs_sum = acvf.tail_bound(0)
    else:
        if truncation < 1:
            raise ValueError("truncation must be >= 1")
        abs_sum = float(np.abs(acvf.values(truncation)[1:]).sum())
        abs_sum += acvf.tail_bound(truncation)
    return n_state * (1.0 + 2.0 * abs_sum / acvf.lag0)
