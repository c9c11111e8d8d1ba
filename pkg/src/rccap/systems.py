"""Recurrent state-space systems and their filters.

A system is a state map ``x_t = F(x_{t-1}, z_t)`` contracting in the state
with constant ``c = sigma_max(connectivity) < 1`` (largest singular value),
which certifies the echo state property: every input path induces exactly
one state path, and trajectories started anywhere converge at geometric
rate ``c``.  Readouts are not stored on systems; capacities optimize over
them elsewhere.

Provided here:

* :class:`LinearStateSystem` and :class:`EchoStateNetwork` (tanh/identity),
* :func:`run_filter`, iterating the recursion from zero with a washout,
* :func:`verify_esp_convergence`, an empirical ESP certificate,
* :func:`standardize`, the isomorphism onto a system whose stationary states
  have zero mean and identity covariance,
* :func:`verify_morphism`, a randomized system-equivariance check,
* JSON round-trip helpers for the CLI.

Systems are immutable after construction; all operations are read-only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "LinearStateSystem",
    "EchoStateNetwork",
    "StandardizedSystem",
    "AffineMap",
    "FilterRun",
    "EspConvergenceReport",
    "MorphismCheck",
    "contraction_constant",
    "run_filter",
    "verify_esp_convergence",
    "standardize",
    "verify_morphism",
    "system_to_json",
    "system_from_json",
    "symmetric_sqrt",
]

ACTIVATIONS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "tanh": np.tanh,
    "identity": lambda x: x,
}

# Both menu activations are odd and 1-Lipschitz, so the contraction constant
# of an ESN equals sigma_max(connectivity).
ACTIVATION_LIPSCHITZ = {"tanh": 1.0, "identity": 1.0}


def _as_readonly(arr, shape=None) -> np.ndarray:
    out = np.array(arr, dtype=float)
    if shape is not None and out.shape != shape:
        raise ValueError(f"expected array of shape {shape}, got {out.shape}")
    if not np.isfinite(out).all():
        raise ValueError("array entries must be finite")
    out.setflags(write=False)
    return out


def _check_contraction(connectivity: np.ndarray) -> float:
    sig = float(np.linalg.svd(connectivity, compute_uv=False)[0]) if connectivity.size else 0.0
    if sig >= 1.0:
        raise ValueError(
            f"largest singular value of the connectivity matrix must be < 1, got {sig:.6g}"
        )
    return sig


@dataclass(frozen=True)
class LinearStateSystem:
    """Linear system ``F(x, z) = connectivity @ x + input_weights * z``.

    Construction enforces ``sigma_max(connectivity) < 1`` (not merely a
    spectral-radius condition), which is the standing contraction
    hypothesis behind every result used downstream.
    """

    connectivity: np.ndarray
    input_weights: np.ndarray
    contraction: float = field(init=False)

    def __post_init__(self) -> None:
        a = _as_readonly(self.connectivity)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("connectivity must be a square matrix")
        c = _as_readonly(self.input_weights, shape=(a.shape[0],))
        object.__setattr__(self, "connectivity", a)
        object.__setattr__(self, "input_weights", c)
        object.__setattr__(self, "contraction", _check_contraction(a))

    @property
    def dim(self) -> int:
        return self.connectivity.shape[0]

    def step(self, state: np.ndarray, z: float) -> np.ndarray:
        return self.connectivity @ state + self.input_weights * z


@dataclass(frozen=True)
class EchoStateNetwork:
    """ESN state map ``F(x, z) = act(connectivity @ x + input_weights * z + bias)``.

    The activation is applied componentwise and must come from the fixed
    odd 1-Lipschitz menu (``tanh`` or ``identity``); with
    ``sigma_max(connectivity) < 1`` this certifies the contraction constant
    ``sigma_max(connectivity) * Lip(act) < 1``.
    """

    connectivity: np.ndarray
    input_weights: np.ndarray
    bias: np.ndarray | None = None
    activation: str = "tanh"
    contraction: float = field(init=False)

    def __post_init__(self) -> None:
        a = _as_readonly(self.connectivity)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("connectivity must be a square matrix")
        n = a.shape[0]
        c = _as_readonly(self.input_weights, shape=(n,))
        zeta = _as_readonly(self.bias if self.bias is not None else np.zeros(n), shape=(n,))
        if self.activation not in ACTIVATIONS:
            raise ValueError(
                f"activation must be one of {sorted(ACTIVATIONS)}, got {self.activation!r}"
            )
        sig = _check_contraction(a) * ACTIVATION_LIPSCHITZ[self.activation]
        object.__setattr__(self, "connectivity", a)
        object.__setattr__(self, "input_weights", c)
        object.__setattr__(self, "bias", zeta)
        object.__setattr__(self, "contraction", sig)

    @property
    def dim(self) -> int:
        return self.connectivity.shape[0]

    def step(self, state: np.ndarray, z: float) -> np.ndarray:
        act = ACTIVATIONS[self.activation]
        return act(self.connectivity @ state + self.input_weights * z + self.bias)


@dataclass(frozen=True)
class AffineMap:
    """Affine map ``x -> matrix @ x + offset`` between state spaces."""

    matrix: np.ndarray
    offset: np.ndarray

    def __post_init__(self) -> None:
        m = _as_readonly(self.matrix)
        if m.ndim != 2:
            raise ValueError("matrix must be two-dimensional")
        b = _as_readonly(self.offset, shape=(m.shape[0],))
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "offset", b)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.matrix @ x + self.offset


@dataclass(frozen=True)
class StandardizedSystem:
    """State map conjugated by the standardization isomorphism.

    ``F~(x, z) = S^{-1} (F(S x + mean, z) - mean)`` with ``S`` the symmetric
    square root of the state covariance.  When driven by the same input as
    the base system, its states are the standardized base states: empirical
    mean tends to zero and covariance to the identity.
    """

    base: LinearStateSystem | EchoStateNetwork
    mean: np.ndarray
    cov_sqrt: np.ndarray
    cov_inv_sqrt: np.ndarray

    @property
    def dim(self) -> int:
        return self.base.dim

    def step(self, state: np.ndarray, z: float) -> np.ndarray:
        inner = self.base.step(self.cov_sqrt @ state + self.mean, z)
        return self.cov_inv_sqrt @ (inner - self.mean)


@dataclass(frozen=True)
class FilterRun:
    """State trajectory of a filter run, aligned with its inputs.

    ``states[t]`` is the state after consuming ``inputs[t]``, so the
    recursion ``states[t] = F(states[t-1], inputs[t])`` holds exactly along
    the retained window (``preceding_state`` closes it at ``t = 0``).
    """

    states: np.ndarray
    inputs: np.ndarray
    washout: int
    preceding_state: np.ndarray

    def verify_recursion(
        self,
        system,
        sample_size: int = 100,
        seed: int = 0,
        rtol: float = 1e-9,
    ) -> bool:
        """Re-check the recursion on a random subsample of indices."""
        t_len = self.states.shape[0]
        rng = np.random.default_rng(seed)
        idx = rng.choice(t_len, size=min(sample_size, t_len), replace=False)
        scale = 1.0 + float(np.abs(self.states).max(initial=0.0))
        for t in idx:
            prev = self.preceding_state if t == 0 else self.states[t - 1]
            expected = system.step(prev, self.inputs[t])
            if np.abs(self.states[t] - expected).max() > rtol * scale:
                return False
        return True


@dataclass(frozen=True)
class EspConvergenceReport:
    """Empirical echo-state-property certificate from multi-start runs."""

    max_final_gap: float
    rate_estimate: float
    contraction: float
    flagged: bool


@dataclass(frozen=True)
class MorphismCheck:
    """Outcome of a randomized system-equivariance check.

    Falsy when a violation was found; ``witness`` then records the
    offending ``(state, input, defect)`` triple.
    """

    ok: bool
    probes: int
    witness: tuple | None = None

    def __bool__(self) -> bool:
        return self.ok


def contraction_constant(system) -> float:
    """Certified contraction constant of the state map in its first argument."""
    return system.contraction


def run_filter(system, inputs, washout: int = 0, initial_state=None) -> FilterRun:
    """Iterate the state recursion over an input path.

    Starts from the zero state (or ``initial_state``), discards the first
    ``washout`` states, and returns the aligned trajectory.  By the
    contraction property the retained trajectory sits within
    ``c**washout * initial-gap`` of the unique echo-state solution.
    """
    z = np.asarray(inputs, dtype=float)
    if z.ndim != 1:
        raise ValueError("inputs must be a one-dimensional sequence")
    if not np.isfinite(z).all():
        raise ValueError("inputs must be finite")
    if washout < 0:
        raise ValueError("washout must be nonnegative")
    t_len = z.shape[0]
    if t_len <= washout:
        raise ValueError(f"need more inputs ({t_len}) than washout ({washout})")

    n = system.dim
    x = np.zeros(n) if initial_state is None else np.asarray(initial_state, dtype=float).copy()
    if x.shape != (n,):
        raise ValueError(f"initial_state must have shape ({n},)")

    states = np.empty((t_len, n))
    for t in range(t_len):
        x = system.step(x, z[t])
        states[t] = x
    preceding = np.zeros(n) if washout == 0 else states[washout - 1].copy()
    if washout == 0 and initial_state is not None:
        preceding = np.asarray(initial_state, dtype=float).copy()
    return FilterRun(
        states=states[washout:],
        inputs=z[washout:].copy(),
        washout=washout,
        preceding_state=preceding,
    )


def verify_esp_convergence(
    system,
    inputs,
    trials: int = 8,
    seed: int = 0,
) -> EspConvergenceReport:
    """Drive the system from several random initial states and fit the decay rate.

    The maximal pairwise gap between trajectories must shrink geometrically;
    the report is flagged (never raised) when the fitted rate exceeds the
    certified contraction constant by more than 0.05.
    """
    if trials < 2:
        raise ValueError("need at least 2 trials")
    z = np.asarray(inputs, dtype=float)
    rng = np.random.default_rng(seed)
    starts = rng.standard_normal((trials, system.dim))
    trajs = np.stack(
        [run_filter(system, z, washout=0, initial_state=x0).states for x0 in starts]
    )
    # max pairwise gap at each time step
    gaps = np.zeros(z.shape[0])
    for i in range(trials):
        for j in range(i + 1, trials):
            diff = np.linalg.norm(trajs[i] - trajs[j], axis=1)
            np.maximum(gaps, diff, out=gaps)
    gap0 = max(
        np.linalg.norm(starts[i] - starts[j])
        for i in range(trials)
        for j in range(i + 1, trials)
    )
    usable = gaps > max(gap0 * 1e-13, 1e-300)
    rate = 0.0
    if usable.sum() >= 3:
        t_idx = np.flatnonzero(usable)
        slope = np.polyfit(t_idx, np.log(gaps[t_idx]), 1)[0]
        rate = float(np.exp(slope))
    c = contraction_constant(system)
    return EspConvergenceReport(
        max_final_gap=float(gaps[-1]),
        rate_estimate=rate,
        contraction=c,
        flagged=rate > c + 0.05,
    )


def symmetric_sqrt(matrix: np.ndarray, clamp_rel: float = 1e-14) -> tuple[np.ndarray, np.ndarray]:
    """Square root and inverse square root of an SPD matrix.

    Computed via orthogonal diagonalization; eigenvalues are clamped at
    ``clamp_rel * max eigenvalue`` before rooting.
    """
    sym = 0.5 * (matrix + matrix.T)
    vals, vecs = np.linalg.eigh(sym)
    floor = clamp_rel * float(vals[-1])
    vals = np.maximum(vals, floor)
    root = vecs @ np.diag(np.sqrt(vals)) @ vecs.T
    inv_root = vecs @ np.diag(1.0 / np.sqrt(vals)) @ vecs.T
    return root, inv_root


def standardize(system, mean, state_cov) -> tuple[StandardizedSystem, AffineMap]:
    """Conjugate a system by the map ``f(x) = cov^{-1/2} (x - mean)``.

    ``state_cov`` must be symmetric positive definite (minimum eigenvalue
    above ``1e-10`` of the maximum); singular covariances are rejected with
    a pointer to the exact-reduction route, which handles that case.

    Returns the standardized system together with the isomorphism ``f``.
    """
    mu = np.asarray(mean, dtype=float)
    cov = np.asarray(state_cov, dtype=float)
    n = system.dim
    if mu.shape != (n,) or cov.shape != (n, n):
        raise ValueError("mean/state_cov dimensions do not match the system")
    if np.abs(cov - cov.T).max() > 1e-10 * max(1.0, np.abs(cov).max()):
        raise ValueError("state_cov must be symmetric")
    vals = np.linalg.eigvalsh(0.5 * (cov + cov.T))
    if vals[0] <= 1e-10 * vals[-1]:
        raise ValueError(
            "state covariance is numerically singular; standardization needs an "
            "SPD covariance -- reduce the system to its controllable subspace first"
        )
    root, inv_root = symmetric_sqrt(cov)
    iso = AffineMap(matrix=inv_root, offset=-inv_root @ mu)
    return (
        StandardizedSystem(base=system, mean=mu, cov_sqrt=root, cov_inv_sqrt=inv_root),
        iso,
    )


def verify_morphism(
    f: AffineMap,
    sys_from,
    sys_to,
    probes: int = 1000,
    seed: int = 0,
    tol: float = 1e-9,
) -> MorphismCheck:
    """Check system equivariance ``f(F1(x, z)) = F2(f(x), z)`` on random probes.

    Probes are standard-normal states and inputs; the comparison tolerance
    scales as ``tol * (1 + |x|)``.  Stops at the first violation and
    records it as a witness.
    """
    if f.matrix.shape != (sys_to.dim, sys_from.dim):
        raise ValueError(
            f"map shape {f.matrix.shape} incompatible with systems "
            f"({sys_from.dim} -> {sys_to.dim})"
        )
    rng = np.random.default_rng(seed)
    for k in range(probes):
        x = rng.standard_normal(sys_from.dim)
        z = float(rng.standard_normal())
        lhs = f(sys_from.step(x, z))
        rhs = sys_to.step(f(x), z)
        defect = float(np.linalg.norm(lhs - rhs))
        if defect > tol * (1.0 + float(np.linalg.norm(x))):
            return MorphismCheck(ok=False, probes=k + 1, witness=(x, z, defect))
    return MorphismCheck(ok=True, probes=probes)


def system_to_json(system) -> dict:
    """Serialize a system to the JSON document used by the CLI.

    Schema: ``{type, A (row-major), C, zeta?, activation?}``.
    """
    if isinstance(system, LinearStateSystem):
        return {
            "type": "linear",
            "A": system.connectivity.tolist(),
            "C": system.input_weights.tolist(),
        }
    if isinstance(system, EchoStateNetwork):
        return {
            "type": "esn",
            "A": system.connectivity.tolist(),
            "C": system.input_weights.tolist(),
            "zeta": system.bias.tolist(),
            "activation": system.activation,
        }
    raise TypeError(f"cannot serialize system of type {type(system).__name__}")


def system_from_json(doc: dict):
    """Inverse of :func:`system_to_json`."""
    kind = doc.get("type")
    a = np.asarray(doc["A"], dtype=float)
    c = np.asarray(doc["C"], dtype=float)
    if a.ndim == 1:  # row-major flat encoding
        n = c.shape[0]
        a = a.reshape(n, n)
    if kind == "linear":
        return LinearStateSystem(connectivity=a, input_weights=c)
    if kind == "esn":
        return EchoStateNetwork(
            connectivity=a,
            input_weights=c,
            bias=np.asarray(doc["zeta"], dtype=float) if "zeta" in doc else None,
            activation=doc.get("activation", "tanh"),
        )
    raise ValueError(f"unknown system type {kind!r}")
