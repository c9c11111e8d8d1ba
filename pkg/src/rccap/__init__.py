"""Memory and forecasting capacities of recurrent state-space systems.

The package computes, estimates and bounds how much of a stationary input's
past (memory) and future (forecasting) the best affine readout can recover
from the states of a recurrent system:

* :mod:`rccap.inputs`   -- ARMA input models, autocovariances, Toeplitz bounds
* :mod:`rccap.systems`  -- linear systems and ESNs, filters, morphisms
* :mod:`rccap.capacity` -- empirical capacity estimation and bound reports
* :mod:`rccap.lincap`   -- exact linear-system analytics, controllability,
  reduction, and the rank route
* :mod:`rccap.cli`      -- reproducible experiment runner (``rccap`` command)
"""

from .capacity import (
    capacity_tau_empirical,
    theoretical_bounds,
    total_capacity_empirical,
    validate_report,
)
from .inputs import (
    ArmaProcessSpec,
    AutocovarianceFunction,
    ToeplitzBlock,
    autocovariance,
    empirical_autocovariance,
    gershgorin_bound,
    simulate_arma,
    spectral_density,
    spectral_radius_limit,
    toeplitz_block,
)
from .lincap import (
    analytic_capacities_linear,
    b_vectors_forecasting,
    b_vectors_memory,
    controllability,
    cross_covariance,
    kernel_equality_check,
    memory_capacity_via_rank,
    reduce_system,
    state_covariance_general,
    state_covariance_white,
)
from .reports import BoundsReport, CapacityReport, ConditioningWarning, TruncationWarning
from .systems import (
    AffineMap,
    EchoStateNetwork,
    FilterRun,
    LinearStateSystem,
    contraction_constant,
    run_filter,
    standardize,
    system_from_json,
    system_to_json,
    verify_esp_convergence,
    verify_morphism,
)

__version__ = "0.1.0"

__all__ = [
    "ArmaProcessSpec",
    "AutocovarianceFunction",
    "ToeplitzBlock",
    "autocovariance",
    "empirical_autocovariance",
    "gershgorin_bound",
    "simulate_arma",
    "spectral_density",
    "spectral_radius_limit",
    "toeplitz_block",
    "AffineMap",
    "EchoStateNetwork",
    "FilterRun",
    "LinearStateSystem",
    "contraction_constant",
    "run_filter",
    "standardize",
    "system_from_json",
    "system_to_json",
    "verify_esp_convergence",
    "verify_morphism",
    "BoundsReport",
    "CapacityReport",
    "ConditioningWarning",
    "TruncationWarning",
    "capacity_tau_empirical",
    "theoretical_bounds",
    "total_capacity_empirical",
    "validate_report",
    "analytic_capacities_linear",
    "b_vectors_forecasting",
    "b_vectors_memory",
    "controllability",
    "cross_covariance",
    "kernel_equality_check",
    "memory_capacity_via_rank",
    "reduce_system",
    "state_covariance_general",
    "state_covariance_white",
    "__version__",
]
