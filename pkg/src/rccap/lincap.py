"""Exact analytics for linear systems.

For ``x_t = A x_{t-1} + C z_t`` with a stationary input the stationary state
covariance, the state/input cross-covariances and hence the memory and
forecasting capacities admit closed forms.  This module implements

* the white-noise state covariance (discrete Lyapunov equation, solved by
  fixed-point doubling),
* the general stationary-input covariance and cross-covariances with
  certified truncation tails,
* both analytic capacity routes: the covariance quadratic forms and the
  square-root/Toeplitz coefficient route, which must agree,
* Kalman controllability diagnostics, the kernel-equality check between the
  state covariance and the controllability matrix, and the reduction of a
  rank-deficient system onto its controllable subspace, where the
  white-noise memory capacity equals the controllability rank.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .inputs import AutocovarianceFunction
from .reports import CapacityReport, ConditioningWarning, TruncationWarning
from .systems import LinearStateSystem, symmetric_sqrt

__all__ = [
    "ControllabilityReport",
    "ReducedSystem",
    "ReductionDiagnostics",
    "KernelComparison",
    "RankCapacityResult",
    "BVectorMemoryResult",
    "BVectorForecastResult",
    "controllability_matrix",
    "state_covariance_white",
    "state_covariance_general",
    "cross_covariance",
    "analytic_capacities_linear",
    "b_vectors_memory",
    "b_vectors_forecasting",
    "controllability",
    "kernel_equality_check",
    "reduce_system",
    "memory_capacity_via_rank",
]

_COND_LIMIT = 1e12


@dataclass(frozen=True)
class ControllabilityReport:
    """Kalman controllability diagnostics of a linear system.

    ``rank`` counts singular values of the controllability matrix above
    ``threshold``; ``kalman_full`` holds iff the rank is maximal and no
    eigenvalue of the connectivity matrix vanishes.  ``coeffs_nonzero``
    reports on the input weights expanded in the eigenbasis and is ``None``
    when the matrix is not (numerically) diagonalizable.
    """

    matrix: np.ndarray
    rank: int
    threshold: float
    singular_values: np.ndarray
    eigenvalues: np.ndarray
    eigen_distinct: bool
    eigen_nonzero: bool
    coeffs_nonzero: bool | None
    kalman_full: bool

    def to_dict(self) -> dict:
        return {
            "matrix": self.matrix.tolist(),
            "rank": self.rank,
            "threshold": self.threshold,
            "singular_values": self.singular_values.tolist(),
            "eigenvalues_real": self.eigenvalues.real.tolist(),
            "eigenvalues_imag": self.eigenvalues.imag.tolist(),
            "eigen_distinct": self.eigen_distinct,
            "eigen_nonzero": self.eigen_nonzero,
            "coeffs_nonzero": self.coeffs_nonzero,
            "kalman_full": self.kalman_full,
        }


@dataclass(frozen=True)
class ReductionDiagnostics:
    """Eigenstructure of the reduced connectivity matrix (rank-route hypotheses)."""

    abar_diagonalizable: bool
    abar_eigen_nonzero: bool


@dataclass(frozen=True)
class ReducedSystem:
    """Restriction of a linear system to the column space of its controllability matrix.

    ``injection`` has orthonormal columns spanning that space; the reduced
    maps are ``connectivity = Q^T A Q`` and ``input_weights = Q^T C``.  The
    reduction preserves the filter, the capacities and the controllability
    rank, and inherits the contraction bound.
    """

    connectivity: np.ndarray
    input_weights: np.ndarray
    injection: np.ndarray
    rank: int
    diagnostics: ReductionDiagnostics

    @property
    def system(self) -> LinearStateSystem:
        return LinearStateSystem(
            connectivity=self.connectivity, input_weights=self.input_weights
        )

    def to_dict(self) -> dict:
        return {
            "A_bar": self.connectivity.tolist(),
            "C_bar": self.input_weights.tolist(),
            "injection": self.injection.tolist(),
            "rank": self.rank,
            "abar_diagonalizable": self.diagnostics.abar_diagonalizable,
            "abar_eigen_nonzero": self.diagnostics.abar_eigen_nonzero,
        }


@dataclass(frozen=True)
class KernelComparison:
    """Comparison of ``ker(state covariance)`` with ``ker(controllability^T)``."""

    match: bool
    principal_angles: np.ndarray
    cov_kernel_dim: int
    ctrl_kernel_dim: int


@dataclass(frozen=True)
class RankCapacityResult:
    """White-noise capacities via the controllability rank.

    ``hypotheses_met`` records whether the reduced connectivity matrix is
    diagonalizable with nonzero eigenvalues; when it is not, the rank value
    is still returned but should be cross-checked empirically.
    """

    mc: int
    fc: float
    hypotheses_met: bool
    reduction: ReducedSystem


@dataclass(frozen=True)
class BVectorMemoryResult:
    """Coefficient-route memory capacity on a finite Toeplitz window."""

    vectors: np.ndarray
    mc_estimate: float
    gram_error: float
    half_window_gap: float
    flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class BVectorForecastResult:
    """Coefficient-route forecasting capacity on a symmetric index window."""

    fc_estimate: float
    fc_reference: float
    gap: float
    flags: tuple[str, ...] = ()


def controllability_matrix(system: LinearStateSystem) -> np.ndarray:
    """Matrix ``(C | AC | ... | A^{N-1} C)`` built by iterated multiplication."""
    n = system.dim
    out = np.empty((n, n))
    w = system.input_weights.copy()
    for k in range(n):
        out[:, k] = w
        w = system.connectivity @ w
    return out


def state_covariance_white(system: LinearStateSystem, gamma0: float) -> np.ndarray:
    """Stationary state covariance for white-noise input of variance ``gamma0``.

    Solves ``G = A G A^T + gamma0 C C^T`` by fixed-point doubling
    (``S <- S + M S M^T``, ``M <- M^2``), which converges geometrically
    because the connectivity matrix is a contraction.
    """
    if gamma0 <= 0:
        raise ValueError("gamma0 must be positive")
    n = system.dim
    if n == 0:
        return np.zeros((0, 0))
    cov = gamma0 * np.outer(system.input_weights, system.input_weights)
    m = system.connectivity.copy()
    for _ in range(100):
        term = m @ cov @ m.T
        cov = cov + term
        if np.abs(term).max() <= 1e-16 * max(np.abs(cov).max(), 1e-300):
            break
        m = m @ m
    return 0.5 * (cov + cov.T)


def _general_cov_lag_cut(acvf: AutocovarianceFunction, rel_target: float = 1e-13) -> int:
    """Smallest lag after which the certified covariance tail is negligible."""
    target = rel_target * acvf.lag0
    if acvf.tail_bound(0) <= target:
        return 1
    phi = abs(acvf.spec.phi)
    if phi == 0.0:
        return 2
    cut = math.log(target * (1.0 - phi) / abs(acvf.lag1)) / math.log(phi)
    return min(max(int(cut) + 1, 1), 200_000)


def state_covariance_general(
    system: LinearStateSystem,
    acvf: AutocovarianceFunction,
    truncation: int | None = None,
) -> np.ndarray:
    """Stationary state covariance for a correlated stationary input.

    Evaluates ``sum_{j,k>=0} A^j C gamma(j-k) C^T (A^k)^T`` by grouping the
    double sum along diagonals: with ``W = sum_j A^j C C^T (A^j)^T`` (the
    unit-variance Lyapunov solution, exact) the result is
    ``gamma(0) W + sum_{h>=1} gamma(h) (A^h W + W (A^h)^T)``, truncated at a
    lag with certified tail below ``1e-8`` of the trace (warned otherwise).
    """
    n = system.dim
    if n == 0:
        return np.zeros((0, 0))
    base = state_covariance_white(system, 1.0)
    cut = truncation if truncation is not None else _general_cov_lag_cut(acvf)
    cov = acvf.lag0 * base
    power = np.eye(n)
    gammas = acvf.values(cut)
    for h in range(1, cut + 1):
        power = power @ system.connectivity
        if gammas[h] != 0.0:
            cross = power @ base
            cov = cov + gammas[h] * (cross + cross.T)
    tail = 2.0 * float(np.linalg.norm(base, 2)) * acvf.tail_bound(cut)
    trace = float(np.trace(cov))
    if tail > 1e-8 * max(trace, 1e-300):
        warnings.warn(
            f"state covariance truncation tail {tail:.3g} exceeds 1e-8 of the trace",
            TruncationWarning,
            stacklevel=2,
        )
    return 0.5 * (cov + cov.T)


def _power_cut(system: LinearStateSystem, rel_target: float = 1e-15) -> int:
    """Number of connectivity powers after which geometric decay is negligible."""
    sig = system.contraction
    if sig == 0.0:
        return system.dim + 1
    cut = math.log(rel_target * (1.0 - sig)) / math.log(sig)
    return min(max(int(cut) + 1, system.dim + 1), 200_000)


def cross_covariance(
    system: LinearStateSystem,
    acvf: AutocovarianceFunction,
    tau: int,
    truncation: int | None = None,
) -> np.ndarray:
    """Cross-covariance ``Cov(X_t, Z_{t+tau}) = sum_{j>=0} A^j C gamma(j + tau)``.

    The sum is truncated once the geometric factor ``sigma_max(A)^j``
    certifies a negligible remainder.
    """
    cut = truncation if truncation is not None else _power_cut(system)
    out = np.zeros(system.dim)
    w = system.input_weights.copy()
    for j in range(cut + 1):
        g = float(acvf(j + tau))
        if g != 0.0:
            out += g * w
        w = system.connectivity @ w
        if not w.any():
            break
    return out


def _cross_covariance_table(
    system: LinearStateSystem,
    acvf: AutocovarianceFunction,
    tau_max: int,
    truncation: int | None,
) -> tuple[np.ndarray, np.ndarray]:
    """Cross-covariances for all memory lags ``0..-tau_max`` and horizons ``1..tau_max``.

    Uses the downward recursion ``v(tau - 1) = A v(tau) + C gamma(tau - 1)``
    seeded by two direct sums; the recursion is numerically stable because
    the connectivity matrix is a contraction.
    """
    a, c = system.connectivity, system.input_weights
    mem = np.empty((tau_max + 1, system.dim))
    mem[0] = cross_covariance(system, acvf, 0, truncation)
    for m in range(1, tau_max + 1):
        mem[m] = a @ mem[m - 1] + c * float(acvf(m))
    fwd = np.empty((tau_max, system.dim))
    if tau_max >= 1:
        fwd[tau_max - 1] = cross_covariance(system, acvf, tau_max, truncation)
        for i in range(tau_max - 2, -1, -1):
            fwd[i] = a @ fwd[i + 1] + c * float(acvf(i + 1))
    return mem, fwd


def _quadratic_capacities(
    cov: np.ndarray, vectors: np.ndarray, gamma0: float
) -> tuple[np.ndarray, list[str]]:
    """Quadratic forms ``v^T cov^{-1} v / gamma0`` for each row of ``vectors``."""
    flags: list[str] = []
    if cov.shape[0] == 0:
        return np.zeros(vectors.shape[0]), flags
    vals = np.linalg.eigvalsh(cov)
    if vals[0] <= 0 or vals[-1] / max(vals[0], 1e-300) > _COND_LIMIT:
        flags.append("ill-conditioned-state-covariance")
        warnings.warn(
            "state covariance condition number exceeds 1e12; use the reduced system",
            ConditioningWarning,
            stacklevel=3,
        )
        solved = linalg.pinvh(cov) @ vectors.T
    else:
        solved = linalg.cho_solve(linalg.cho_factor(cov), vectors.T)
    return np.einsum("ij,ji->i", vectors, solved) / gamma0, flags


def analytic_capacities_linear(
    system: LinearStateSystem,
    acvf: AutocovarianceFunction,
    tau_max: int = 250,
    truncation: int | None = None,
) -> CapacityReport:
    """Exact capacities of a linear system via the covariance quadratic forms.

    ``MC_tau = Cov(Z_{t+tau}, X_t) G^{-1} Cov(X_t, Z_{t+tau}) / gamma(0)``
    for lags ``tau = 0..-tau_max``, and the same form with the horizon-``h``
    cross-covariance for forecasting.  A near-singular state covariance is
    flagged; callers should then reduce the system first.
    """
    if tau_max < 1:
        raise ValueError("tau_max must be >= 1")
    gamma0 = acvf.lag0
    cov = state_covariance_general(system, acvf, truncation)
    mem, fwd = _cross_covariance_table(system, acvf, tau_max, truncation)
    mc_tau, flags = _quadratic_capacities(cov, mem, gamma0)
    fc_h, _ = _quadratic_capacities(cov, fwd, gamma0)
    tail = max(float(mc_tau[-10:].sum()), float(fc_h[-10:].sum()))
    return CapacityReport(
        mc_tau=mc_tau,
        fc_h=fc_h,
        mc_total=float(mc_tau.sum()),
        fc_total=float(fc_h.sum()),
        truncation_tail_estimate=tail,
        estimator="analytic-linear",
        flags=tuple(flags),
    )


def _psd_sqrt_with_flag(matrix: np.ndarray) -> tuple[np.ndarray, bool]:
    vals, vecs = np.linalg.eigh(matrix)
    ill = vals[0] <= 1e-12 * max(vals[-1], 1e-300)
    root = (vecs * np.sqrt(np.maximum(vals, 0.0))) @ vecs.T
    return root, bool(ill)


def _connectivity_powers_times_input(system: LinearStateSystem, count: int) -> np.ndarray:
    """Columns ``A^k C`` for ``k = 0..count-1``."""
    out = np.empty((system.dim, count))
    w = system.input_weights.copy()
    for k in range(count):
        out[:, k] = w
        w = system.connectivity @ w
    return out


def b_vectors_memory(
    system: LinearStateSystem,
    acvf: AutocovarianceFunction,
    window: int = 500,
) -> BVectorMemoryResult:
    """Memory capacity via the square-root/Toeplitz coefficient route.

    Builds the coefficient rows ``B = G^{-1/2} (C | AC | ...) (H^L)^{1/2}``
    on a window of ``L`` lags, whose Gram matrix approaches the identity as
    the window grows, and evaluates ``sum_i <B_i, H^L B_i> / gamma(0)``.
    The value is also computed at half the window; their gap reports the
    window-convergence quality.
    """
    if window < 2:
        raise ValueError("window must be >= 2")
    cov = state_covariance_general(system, acvf)
    _, inv_root = symmetric_sqrt(cov)
    flags: list[str] = []

    def at_window(length: int) -> tuple[np.ndarray, float, float]:
        toep = linalg.toeplitz(acvf.values(length - 1))
        toep_root, ill = _psd_sqrt_with_flag(toep)
        if ill:
            flags.append("ill-conditioned-toeplitz-window")
            warnings.warn(
                f"lag-covariance Toeplitz block of order {length} is numerically singular",
                ConditioningWarning,
                stacklevel=3,
            )
        basis = inv_root @ _connectivity_powers_times_input(system, length) @ toep_root
        mc = float(np.einsum("ij,ij->", basis @ toep, basis)) / acvf.lag0
        gram_err = float(np.abs(basis @ basis.T - np.eye(system.dim)).max())
        return basis, mc, gram_err

    basis, mc_full, gram_err = at_window(window)
    _, mc_half, _ = at_window(window // 2)
    return BVectorMemoryResult(
        vectors=basis,
        mc_estimate=mc_full,
        gram_error=gram_err,
        half_window_gap=abs(mc_full - mc_half),
        flags=tuple(dict.fromkeys(flags)),
    )


def b_vectors_forecasting(
    system: LinearStateSystem,
    acvf: AutocovarianceFunction,
    window: int = 500,
) -> BVectorForecastResult:
    """Forecasting capacity via the doubly-indexed square-root route.

    The doubly infinite lag-covariance matrix is truncated to the index
    window ``[-L, L]``; the coefficient rows live on non-positive indices
    (column ``m <= 0`` holds ``A^{-m} C``), and the capacity is the squared
    norm of the positive-index part of their image under the matrix square
    root, divided by ``gamma(0)``.  Cross-checked against the covariance
    route; a disagreement above 1e-2 flags window truncation.
    """
    if window < 2:
        raise ValueError("window must be >= 2")
    cov = state_covariance_general(system, acvf)
    _, inv_root = symmetric_sqrt(cov)
    size = 2 * window + 1
    toep = linalg.toeplitz(acvf.values(size - 1))
    toep_root, ill = _psd_sqrt_with_flag(toep)
    flags: list[str] = []
    if ill:
        flags.append("ill-conditioned-toeplitz-window")
        warnings.warn(
            f"lag-covariance Toeplitz block of order {size} is numerically singular",
            ConditioningWarning,
            stacklevel=2,
        )
    # Columns are indexed m = -L..L; support sits on m <= 0 where the
    # coefficient is A^{-m} C, i.e. position p <= L holds power L - p.
    powers = _connectivity_powers_times_input(system, window + 1)
    support = np.zeros((system.dim, size))
    support[:, : window + 1] = powers[:, ::-1]
    basis = inv_root @ support @ toep_root
    image = toep_root @ basis.T
    fc = float(np.sum(image[window + 1 :, :] ** 2)) / acvf.lag0

    reference = analytic_capacities_linear(system, acvf, tau_max=window).fc_total
    gap = abs(fc - reference)
    if gap > 1e-2:
        flags.append("fc-window-mismatch")
        warnings.warn(
            f"coefficient-route FC {fc:.4g} and covariance-route FC {reference:.4g} "
            f"disagree by {gap:.3g}; enlarge the window",
            TruncationWarning,
            stacklevel=2,
        )
    return BVectorForecastResult(
        fc_estimate=fc, fc_reference=reference, gap=gap, flags=tuple(flags)
    )


def _eigen_diagnostics(matrix: np.ndarray) -> tuple[np.ndarray, bool, bool, np.ndarray | None]:
    """Eigenvalues plus (distinct, nonzero, eigenvector matrix or None)."""
    n = matrix.shape[0]
    if n == 0:
        return np.zeros(0, dtype=complex), True, True, np.zeros((0, 0))
    vals, vecs = np.linalg.eig(matrix)
    scale = float(np.abs(vals).max())
    if n == 1:
        distinct = True
    else:
        gaps = np.abs(vals[:, None] - vals[None, :])[~np.eye(n, dtype=bool)]
        distinct = bool(gaps.min() > 1e-8 * scale) if scale > 0 else False
    sig = float(np.linalg.svd(matrix, compute_uv=False)[0]) if matrix.size else 0.0
    nonzero = bool(np.abs(vals).min() > 1e-8 * sig) if sig > 0 else False
    diagonalizable = bool(np.linalg.cond(vecs) < 1e8)
    return vals, distinct, nonzero, vecs if diagonalizable else None


def controllability(
    system: LinearStateSystem, rank_rtol: float | None = None
) -> ControllabilityReport:
    """Controllability matrix, numerical rank and Kalman diagnostics.

    The rank threshold defaults to ``N * eps * sigma_max`` of the
    controllability matrix (overridable via ``rank_rtol``, a multiple of
    that largest singular value).
    """
    n = system.dim
    ctrl = controllability_matrix(system)
    svals = np.linalg.svd(ctrl, compute_uv=False)
    smax = float(svals[0]) if n else 0.0
    rtol = n * np.finfo(float).eps if rank_rtol is None else rank_rtol
    threshold = rtol * smax
    rank = int((svals > threshold).sum()) if smax > 0 else 0

    vals, distinct, nonzero, vecs = _eigen_diagnostics(system.connectivity)
    if vecs is not None and n:
        coeffs = np.linalg.solve(vecs, system.input_weights.astype(complex))
        cmax = float(np.abs(coeffs).max())
        coeffs_nonzero: bool | None = bool(
            cmax > 0 and np.abs(coeffs).min() > 1e-8 * cmax
        )
    else:
        coeffs_nonzero = None
    return ControllabilityReport(
        matrix=ctrl,
        rank=rank,
        threshold=threshold,
        singular_values=svals,
        eigenvalues=vals,
        eigen_distinct=distinct,
        eigen_nonzero=nonzero,
        coeffs_nonzero=coeffs_nonzero,
        kalman_full=bool(rank == n and nonzero),
    )


def _null_space_sym(matrix: np.ndarray, rel_threshold: float) -> np.ndarray:
    """Orthonormal basis of the kernel of a symmetric PSD matrix."""
    vals, vecs = np.linalg.eigh(0.5 * (matrix + matrix.T))
    scale = max(float(vals.max(initial=0.0)), 1e-300)
    return vecs[:, np.abs(vals) <= rel_threshold * scale]


def kernel_equality_check(
    system: LinearStateSystem,
    gamma0: float = 1.0,
    rel_threshold: float = 1e-8,
    state_cov: np.ndarray | None = None,
) -> KernelComparison:
    """Compare the kernels of the white-noise state covariance and ``R^T``.

    The null spaces are extracted at matched relative thresholds:
    ``rel_threshold`` on the controllability singular values and its square
    on the covariance eigenvalues (the covariance spectrum is the squared
    reachability spectrum), floored at ``1e-13`` to stay above accumulated
    round-off.  The subspaces match when their dimensions agree and every
    principal angle is below ``1e-6``.  ``state_cov`` overrides the
    Lyapunov solution (used for fault injection in tests).
    """
    cov = state_covariance_white(system, gamma0) if state_cov is None else state_cov
    cov_kernel = _null_space_sym(cov, max(rel_threshold**2, 1e-13))

    ctrl = controllability_matrix(system)
    u, svals, _ = np.linalg.svd(ctrl)
    smax = max(float(svals[0]) if svals.size else 0.0, 0.0)
    keep = svals > rel_threshold * smax if smax > 0 else np.zeros(0, dtype=bool)
    ctrl_kernel = u[:, int(keep.sum()):]  # ker R^T = complement of col(R)

    dim_cov, dim_ctrl = cov_kernel.shape[1], ctrl_kernel.shape[1]
    if dim_cov != dim_ctrl:
        return KernelComparison(False, np.zeros(0), dim_cov, dim_ctrl)
    if dim_cov == 0:
        return KernelComparison(True, np.zeros(0), 0, 0)
    angles = linalg.subspace_angles(cov_kernel, ctrl_kernel)
    return KernelComparison(bool(angles.max() < 1e-6), angles, dim_cov, dim_ctrl)


def reduce_system(
    system: LinearStateSystem, rank_rtol: float | None = None
) -> ReducedSystem:
    """Reduce a linear system onto the column space of its controllability matrix.

    The basis comes from a rank-revealing SVD with a deterministic sign
    convention (largest-magnitude component of each basis vector positive).
    Rank preservation and the inherited contraction bound are asserted.
    Rank zero yields the empty system.
    """
    n = system.dim
    ctrl = controllability_matrix(system)
    u, svals, _ = np.linalg.svd(ctrl)
    smax = float(svals[0]) if n else 0.0
    rtol = n * np.finfo(float).eps if rank_rtol is None else rank_rtol
    rank = int((svals > rtol * smax).sum()) if smax > 0 else 0

    basis = u[:, :rank].copy()
    for col in range(rank):
        lead = int(np.argmax(np.abs(basis[:, col])))
        if basis[lead, col] < 0:
            basis[:, col] *= -1.0

    a_bar = basis.T @ system.connectivity @ basis
    c_bar = basis.T @ system.input_weights
    if rank:
        sig = float(np.linalg.svd(a_bar, compute_uv=False)[0])
        if sig >= 1.0:
            raise RuntimeError("reduced connectivity lost the contraction bound")
        reduced_rank = controllability(
            LinearStateSystem(a_bar, c_bar), rank_rtol=rank_rtol
        ).rank
        if reduced_rank != rank:
            raise RuntimeError(
                f"reduction failed to preserve the controllability rank "
                f"({reduced_rank} != {rank})"
            )
    _, _, nonzero, vecs = _eigen_diagnostics(a_bar)
    return ReducedSystem(
        connectivity=a_bar,
        input_weights=c_bar,
        injection=basis,
        rank=rank,
        diagnostics=ReductionDiagnostics(
            abar_diagonalizable=vecs is not None,
            abar_eigen_nonzero=nonzero if rank else True,
        ),
    )


def memory_capacity_via_rank(system: LinearStateSystem) -> RankCapacityResult:
    """White-noise capacities from the controllability rank: ``MC = rank``, ``FC = 0``.

    Valid under the reduced-system hypotheses (diagonalizable reduced
    connectivity with nonzero eigenvalues); when they fail the rank is
    still returned with ``hypotheses_met=False`` rather than asserted.
    """
    red = reduce_system(system)
    met = red.diagnostics.abar_diagonalizable and red.diagnostics.abar_eigen_nonzero
    return RankCapacityResult(mc=red.rank, fc=0.0, hypotheses_met=bool(met), reduction=red)
