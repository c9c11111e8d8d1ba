"""Shared result containers and diagnostic warning categories."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "CapacityReport",
    "BoundsReport",
    "ConditioningWarning",
    "TruncationWarning",
]


class ConditioningWarning(UserWarning):
    """An estimated or analytic state covariance is numerically ill-conditioned."""


class TruncationWarning(UserWarning):
    """A certified truncation residual exceeded its accuracy budget."""


@dataclass(frozen=True)
class CapacityReport:
    """Per-lag memory/forecasting capacities with totals.

    ``mc_tau[i]`` is the capacity at lag ``tau = -i`` (``i = 0`` included),
    ``fc_h[i]`` the capacity at forecast horizon ``h = i + 1`` (current
    states predicting the input ``h`` steps ahead).  Totals are plain sums
    over the included lags; ``truncation_tail_estimate`` is the larger of
    the two sums over the last 10 included terms, a heuristic residual that
    is reported but never added to the totals.

    ``estimator`` tags the route: ``empirical`` (sample moments of one
    simulated path), ``analytic-linear`` (exact covariance formulas) or
    ``rank`` (controllability-rank route, white noise only).
    """

    mc_tau: np.ndarray
    fc_h: np.ndarray
    mc_total: float
    fc_total: float
    truncation_tail_estimate: float
    estimator: str
    flags: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "mc_tau": np.asarray(self.mc_tau).tolist(),
            "fc_h": np.asarray(self.fc_h).tolist(),
            "mc_total": self.mc_total,
            "fc_total": self.fc_total,
            "truncation_tail_estimate": self.truncation_tail_estimate,
            "estimator": self.estimator,
            "flags": list(self.flags),
        }


@dataclass(frozen=True)
class BoundsReport:
    """The three capacity upper bounds, normalized by the input variance.

    ``rho_bound <= spectral_bound <= gershgorin`` holds by construction:
    the Toeplitz spectral radii increase towards ``2 pi max f``, which the
    absolute-covariance sum dominates.
    """

    rho_bound: float
    spectral_bound: float
    gershgorin: float
    rho_order: int = 0
    rho_converged: bool = True
    flags: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "rho_bound": self.rho_bound,
            "spectral_bound": self.spectral_bound,
            "gershgorin": self.gershgorin,
            "rho_order": self.rho_order,
            "rho_converged": self.rho_converged,
            "flags": list(self.flags),
        }
