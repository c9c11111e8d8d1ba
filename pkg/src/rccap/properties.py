"""Cross-module invariant batteries and randomized system generators.

Every module's testable guarantees are bundled here as named checks that
run at two scales: ``quick`` (desk-check sizes, under a minute) and
``full`` (the sizes the guarantees are stated at).  The CLI ``selftest``
subcommand executes the battery and reports one pass/fail line per check
plus a machine-readable summary.

The generators (`random_system_with_rank`, `random_diagonalizable_system`,
...) force specific structure -- controllability rank, repeated eigenvalues
-- and are reused by the test suite.
"""

from __future__ import annotations

import time
import warnings
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from . import capacity as cap
from . import inputs as inp
from . import lincap as lc
from . import systems as sys_mod
from .reports import ConditioningWarning

__all__ = [
    "CheckResult",
    "SuiteResult",
    "SuiteScale",
    "QUICK",
    "FULL",
    "run_property_suite",
    "isotonic_fit",
    "random_contraction",
    "random_linear_system",
    "random_esn",
    "random_system_with_rank",
    "random_diagonalizable_system",
]


# --------------------------------------------------------------------------
# scales


@dataclass(frozen=True)
class SuiteScale:
    name: str
    specs: tuple[inp.ArmaProcessSpec, ...]
    nesting_orders: tuple[int, ...]
    acvf_path_lengths: tuple[int, ...]
    battery_pairs: int
    battery_length: int
    battery_tau_max: int
    battery_max_dim: int
    monotone_grid: tuple[float, ...]
    monotone_length: int
    monotone_tau_max: int
    monotone_dim: int
    consistency_seeds: int
    consistency_length: int
    consistency_tau_max: int
    consistency_dim: int
    rank_systems: int
    rank_length: int
    rank_tau_max: int
    rank_max_dim: int
    kernel_systems: int
    eigen_systems: int
    route_systems: int
    route_window: int
    standardize_length: int


def _spec(phi: float, theta: float) -> inp.ArmaProcessSpec:
    return inp.ArmaProcessSpec(phi=phi, theta=theta, sigma=1.0)


QUICK = SuiteScale(
    name="quick",
    specs=(_spec(0, 0), _spec(0.5, 0), _spec(0, 0.5), _spec(0.4, 0.3)),
    nesting_orders=tuple(range(2, 201, 9)),
    acvf_path_lengths=(10_000, 100_000),
    battery_pairs=10,
    battery_length=4000,
    battery_tau_max=50,
    battery_max_dim=12,
    monotone_grid=(0.0, 0.3, 0.6, 0.9),
    monotone_length=4000,
    monotone_tau_max=100,
    monotone_dim=10,
    consistency_seeds=48,
    consistency_length=1500,
    consistency_tau_max=40,
    consistency_dim=5,
    rank_systems=12,
    rank_length=30_000,
    rank_tau_max=60,
    rank_max_dim=8,
    kernel_systems=20,
    eigen_systems=20,
    route_systems=2,
    route_window=500,
    standardize_length=30_000,
)

FULL = SuiteScale(
    name="full",
    specs=(
        _spec(0, 0),
        _spec(0.3, 0),
        _spec(0.5, 0),
        _spec(0.8, 0),
        _spec(0, 0.5),
        _spec(0, 0.9),
        _spec(0.4, 0.3),
        _spec(0.7, 0.2),
    ),
    nesting_orders=tuple(range(2, 201)),
    acvf_path_lengths=(10_000, 100_000, 1_000_000),
    battery_pairs=50,
    battery_length=6000,
    battery_tau_max=60,
    battery_max_dim=20,
    monotone_grid=tuple(round(0.1 * k, 1) for k in range(10)),
    monotone_length=10_000,
    monotone_tau_max=250,
    monotone_dim=15,
    consistency_seeds=20,
    consistency_length=4000,
    consistency_tau_max=60,
    consistency_dim=5,
    rank_systems=200,
    rank_length=200_000,
    rank_tau_max=100,
    rank_max_dim=10,
    kernel_systems=100,
    eigen_systems=50,
    route_systems=3,
    route_window=500,
    standardize_length=100_000,
)

_SCALES = {"quick": QUICK, "full": FULL}


# --------------------------------------------------------------------------
# randomized constructions


def random_contraction(n: int, rng: np.random.Generator, sigma_max: float = 0.9) -> np.ndarray:
    """Gaussian matrix rescaled to a prescribed largest singular value."""
    if n == 0:
        return np.zeros((0, 0))
    a = rng.standard_normal((n, n))
    top = np.linalg.svd(a, compute_uv=False)[0]
    return a * (sigma_max / top)


def _unit_vector(n: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(n)
    return v / np.linalg.norm(v)


def random_linear_system(
    n: int, rng: np.random.Generator, sigma_max: float = 0.9
) -> sys_mod.LinearStateSystem:
    return sys_mod.LinearStateSystem(
        connectivity=random_contraction(n, rng, sigma_max),
        input_weights=_unit_vector(n, rng),
    )


def random_esn(
    n: int,
    rng: np.random.Generator,
    sigma_max: float = 0.9,
    activation: str = "tanh",
    bias_scale: float = 0.1,
) -> sys_mod.EchoStateNetwork:
    return sys_mod.EchoStateNetwork(
        connectivity=random_contraction(n, rng, sigma_max),
        input_weights=_unit_vector(n, rng),
        bias=bias_scale * rng.standard_normal(n),
        activation=activation,
    )


def random_orthogonal(n: int, rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def random_system_with_rank(
    n: int,
    rank: int,
    rng: np.random.Generator,
    sigma_max: float = 0.9,
) -> sys_mod.LinearStateSystem:
    """Linear system with controllability rank forced to ``rank`` by construction.

    A controllable block of the requested dimension is embedded in a random
    orthogonal frame next to an unreachable block (zero input weights), so
    the column space of the controllability matrix has exactly the target
    dimension.
    """
    if not 0 <= rank <= n:
        raise ValueError("rank must lie in [0, n]")
    if rank == 0:
        return sys_mod.LinearStateSystem(
            connectivity=random_contraction(n, rng, sigma_max),
            input_weights=np.zeros(n),
        )
    frame = random_orthogonal(n, rng)
    for _ in range(80):
        block = random_contraction(rank, rng, sigma_max)
        weights = _unit_vector(rank, rng)
        core = sys_mod.LinearStateSystem(block, weights)
        svals = np.linalg.svd(lc.controllability_matrix(core), compute_uv=False)
        # a comfortably conditioned core keeps the covariance spectrum of
        # the embedded system far from the kernel-detection thresholds
        if svals[-1] > 1e-5 * svals[0]:
            break
    else:
        raise RuntimeError("failed to draw a controllable core block")
    conn = np.zeros((n, n))
    conn[:rank, :rank] = block
    if rank < n:
        conn[rank:, rank:] = random_contraction(n - rank, rng, sigma_max)
    full_weights = np.zeros(n)
    full_weights[:rank] = weights
    sysm = sys_mod.LinearStateSystem(
        connectivity=frame @ conn @ frame.T,
        input_weights=frame @ full_weights,
    )
    got = lc.controllability(sysm).rank
    if got != rank:
        raise RuntimeError(f"constructed rank {got} instead of {rank}")
    return sysm


def random_diagonalizable_system(
    n: int,
    rng: np.random.Generator,
    repeated: bool,
    min_gap: float = 0.2,
) -> sys_mod.LinearStateSystem:
    """Diagonalizable system with well-separated (or one repeated) eigenvalues.

    Eigenvalues are placed on a coarse grid with pairwise gaps at least
    ``min_gap`` (before the contraction rescaling), input-weight eigenbasis
    coefficients are bounded away from zero, and the eigenbasis is a mildly
    sheared orthogonal frame -- so the state covariance is singular exactly
    when an eigenvalue repeats.
    """
    levels = np.linspace(-0.85, 0.85, max(n + 2, int(1.7 / min_gap)))
    vals = rng.choice(levels, size=n, replace=False)
    if repeated:
        vals[1] = vals[0]
    basis = random_orthogonal(n, rng) + 0.1 * rng.standard_normal((n, n))
    while np.linalg.cond(basis) > 20:
        basis = random_orthogonal(n, rng) + 0.1 * rng.standard_normal((n, n))
    conn = basis @ np.diag(vals) @ np.linalg.inv(basis)
    top = np.linalg.svd(conn, compute_uv=False)[0]
    if top >= 0.95:
        conn *= 0.9 / top
    coeffs = rng.uniform(0.3, 1.0, size=n) * rng.choice([-1.0, 1.0], size=n)
    weights = basis @ coeffs
    return sys_mod.LinearStateSystem(conn, weights / np.linalg.norm(weights))


# --------------------------------------------------------------------------
# small numeric helpers


def isotonic_fit(values) -> np.ndarray:
    """Least-squares nondecreasing fit (pool adjacent violators)."""
    blocks = [[float(v), 1] for v in values]
    merged: list[list[float]] = []
    for blk in blocks:
        merged.append(blk)
        while len(merged) > 1 and merged[-2][0] > merged[-1][0] + 1e-15:
            s0, w0 = merged[-2][0] * merged[-2][1], merged[-2][1]
            s1, w1 = merged[-1][0] * merged[-1][1], merged[-1][1]
            merged.pop()
            merged[-1] = [(s0 + s1) / (w0 + w1), w0 + w1]
    out = []
    for value, width in merged:
        out.extend([value] * width)
    return np.array(out)


def _monotone_residual(values) -> float:
    return float(np.abs(np.asarray(values, dtype=float) - isotonic_fit(values)).max())


@contextmanager
def _silence_expected():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConditioningWarning)
        yield


# --------------------------------------------------------------------------
# checks (each returns (passed, detail))


def _check_acvf_invariants(seed: int, scale: SuiteScale):
    for spec in scale.specs:
        acvf = inp.autocovariance(spec)
        lags = np.arange(0, 60)
        vals = acvf(lags)
        if not np.allclose(vals, acvf(-lags)):
            return False, f"gamma not symmetric for {spec}"
        if np.any(np.abs(vals[1:]) > vals[0] + 1e-12):
            return False, f"gamma(0) does not dominate for {spec}"
        tails = [acvf.tail_bound(j) for j in (0, 5, 20, 80)]
        if np.any(np.diff(tails) > 1e-15) or tails[-1] > max(tails[0] * 1e-6, 1e-12):
            return False, f"tail bound not decaying for {spec}"
        block = inp.toeplitz_block(acvf, 50)
        eigs = np.linalg.eigvalsh(block.entries)
        if eigs[0] < -1e-10 * acvf.lag0:
            return False, f"Toeplitz block not PSD for {spec}: min eig {eigs[0]:.3g}"
        sub = inp.toeplitz_block(acvf, 30).entries
        if not np.array_equal(sub, block.entries[:30, :30]):
            return False, "Toeplitz nesting violated"
    return True, f"{len(scale.specs)} specs"


def _check_empirical_acvf(seed: int, scale: SuiteScale):
    details = []
    for k, spec in enumerate(
        (inp.ArmaProcessSpec(0.5, 0.0), inp.ArmaProcessSpec(0.4, 0.3))
    ):
        acvf = inp.autocovariance(spec)
        last_err = None
        for i, length in enumerate(scale.acvf_path_lengths):
            path = inp.simulate_arma(spec, length, seed=(seed, 101, k, i))
            est = inp.empirical_autocovariance(path, 5)
            err = float(np.abs(est - acvf.values(5)).max())
            tol = 8.0 * acvf.lag0 / np.sqrt(length)
            if err > tol:
                return False, f"{spec}: error {err:.4g} > tol {tol:.4g} at T={length}"
            last_err = err
        details.append(f"max err {last_err:.2e} at T={scale.acvf_path_lengths[-1]}")
    return True, "; ".join(details)


def _check_toeplitz_radius(seed: int, scale: SuiteScale):
    for spec in scale.specs:
        acvf = inp.autocovariance(spec)
        ceiling = 2.0 * np.pi * acvf.max_spectral_density()
        radii = [
            np.linalg.eigvalsh(inp.toeplitz_block(acvf, order).entries)[-1]
            for order in scale.nesting_orders
        ]
        if np.any(np.diff(radii) < -1e-10 * acvf.lag0):
            return False, f"spectral radius not nondecreasing in the order for {spec}"
        if radii[-1] > ceiling * (1 + 1e-8):
            return False, f"radius {radii[-1]:.6g} above ceiling {ceiling:.6g} for {spec}"
    return True, f"orders up to {scale.nesting_orders[-1]}"


def _check_toeplitz_eigen_range(seed: int, scale: SuiteScale):
    for spec in scale.specs:
        acvf = inp.autocovariance(spec)
        low, high = acvf.spectral_density_range()
        tol = 1e-8 * acvf.lag0
        for order in (32, 128, scale.nesting_orders[-1]):
            eigs = np.linalg.eigvalsh(inp.toeplitz_block(acvf, order).entries)
            if eigs[0] < 2 * np.pi * low - tol or eigs[-1] > 2 * np.pi * high + tol:
                return False, f"eigenvalues escape the density range for {spec} at {order}"
    return True, "spectral envelope respected"


def _check_gershgorin_dominates(seed: int, scale: SuiteScale):
    n_state = 7
    for spec in scale.specs:
        acvf = inp.autocovariance(spec)
        bound = inp.gershgorin_bound(acvf, n_state)
        radius = inp.spectral_radius_limit(acvf, rel_tol=1e-4, max_order=1024)
        if bound < n_state * radius.value / acvf.lag0 - 1e-8:
            return False, f"Gershgorin bound undercuts N rho(H)/gamma(0) for {spec}"
    return True, "dominates on every spec"


def _check_filter_determinism(seed: int, scale: SuiteScale):
    rng = np.random.default_rng((seed, 104))
    z = inp.simulate_arma(inp.ArmaProcessSpec(0.3, 0.2), 800, seed=(seed, 105))
    for make in (random_linear_system, random_esn):
        system = make(6, rng)
        a = sys_mod.run_filter(system, z, washout=50)
        b = sys_mod.run_filter(system, z, washout=50)
        if not (np.array_equal(a.states, b.states) and np.array_equal(a.inputs, b.inputs)):
            return False, f"nondeterministic filter for {type(system).__name__}"
    return True, "bitwise identical reruns"


def _check_linear_closed_form(seed: int, scale: SuiteScale):
    rng = np.random.default_rng((seed, 106))
    for n in (1, 3, 5):
        system = random_linear_system(n, rng)
        z = rng.standard_normal(50)
        states = sys_mod.run_filter(system, z, washout=0).states
        for t in (0, 7, 49):
            direct = np.zeros(n)
            for j in range(t + 1):
                direct += np.linalg.matrix_power(system.connectivity, j) @ (
                    system.input_weights * z[t - j]
                )
            if np.abs(states[t] - direct).max() > 1e-10:
                return False, f"closed form mismatch at N={n}, t={t}"
    return True, "matches direct power-series summation"


def _check_shift_invariance(seed: int, scale: SuiteScale):
    rng = np.random.default_rng((seed, 107))
    z = rng.standard_normal(400)
    shift = 13
    for make in (
        lambda k, r: random_linear_system(k, r),
        lambda k, r: random_esn(k, r, bias_scale=0.0),
    ):
        system = make(5, rng)
        base = sys_mod.run_filter(system, z, washout=20)
        padded = sys_mod.run_filter(
            system, np.concatenate([np.zeros(shift), z]), washout=20 + shift
        )
        if not np.array_equal(base.states, padded.states):
            return False, f"zero-padding shift broke alignment for {type(system).__name__}"
    return True, "exact shift equivariance"


def _check_esp_rate(seed: int, scale: SuiteScale):
    rng = np.random.default_rng((seed, 108))
    z = inp.simulate_arma(inp.ArmaProcessSpec(0.5, 0.0), 300, seed=(seed, 109))
    for make in (random_linear_system, random_esn):
        system = make(8, rng)
        report = sys_mod.verify_esp_convergence(system, z, trials=6, seed=seed)
        if report.flagged:
            return False, (
                f"fitted rate {report.rate_estimate:.4f} exceeds "
                f"contraction {report.contraction:.4f} + 0.05"
            )
    return True, "geometric convergence at the certified rate"


def _check_standardization(seed: int, scale: SuiteScale):
    rng = np.random.default_rng((seed, 110))
    system = random_linear_system(5, rng)
    spec = inp.ArmaProcessSpec(0.0, 0.0)
    cov = lc.state_covariance_white(system, 1.0)
    std_sys, iso = sys_mod.standardize(system, np.zeros(5), cov)
    length = scale.standardize_length
    z = inp.simulate_arma(spec, length, seed=(seed, 111))
    base_run = sys_mod.run_filter(system, z, washout=500)
    std_run = sys_mod.run_filter(std_sys, z, washout=500)
    transported = base_run.states @ iso.matrix.T + iso.offset
    if np.abs(transported - std_run.states).max() > 1e-10:
        return False, "standardized trajectory is not the image of the base one"
    mean = std_run.states.mean(axis=0)
    emp_cov = np.cov(std_run.states.T, bias=True)
    if np.abs(mean).max() > 0.02:
        return False, f"standardized mean off zero by {np.abs(mean).max():.4g}"
    if np.abs(emp_cov - np.eye(5)).max() > 0.03:
        return False, "standardized covariance off the identity"
    if not sys_mod.verify_morphism(iso, system, std_sys, probes=1000, seed=seed):
        return False, "standardization map fails equivariance"
    return True, f"mean/cov standardized at T={length}"


def _battery_pairs(scale: SuiteScale, seed: int):
    rng = np.random.default_rng((seed, 112))
    pairs = []
    for i in range(scale.battery_pairs):
        n = int(rng.integers(3, scale.battery_max_dim + 1))
        system = random_esn(n, rng) if i % 2 else random_linear_system(n, rng)
        spec = scale.specs[i % len(scale.specs)]
        pairs.append((system, spec))
    return pairs


def _check_capacity_battery(seed: int, scale: SuiteScale):
    """Per-lag range and bound-chain domination over a mixed battery."""
    cache: dict[tuple, cap.BoundsReport] = {}
    checked = 0
    with _silence_expected():
        for i, (system, spec) in enumerate(_battery_pairs(scale, seed)):
            report = cap.total_capacity_empirical(
                system,
                spec,
                tau_max=scale.battery_tau_max,
                length=scale.battery_length,
                seed=(seed, 113, i),
            )
            key = (spec.phi, spec.theta, system.dim)
            if key not in cache:
                cache[key] = cap.theoretical_bounds(inp.autocovariance(spec), system.dim)
            violations = cap.validate_report(report, cache[key])
            if violations:
                return False, f"pair {i} ({type(system).__name__}): {violations[0]}"
            if spec.is_white_noise and np.abs(report.fc_h).max() > 0.02:
                return False, f"white-noise forecast capacity nonzero at pair {i}"
            checked += 1
    return True, f"{checked} (system, input) pairs within range and bounds"


def _check_monotone_trend(seed: int, scale: SuiteScale):
    from .cli import make_figure1_system  # local import to avoid a cycle

    system = make_figure1_system(scale.monotone_dim, 0.9, seed=(seed, 114))
    mc_totals, fc_totals = [], []
    with _silence_expected():
        for j, phi in enumerate(scale.monotone_grid):
            report = cap.total_capacity_empirical(
                system,
                inp.ArmaProcessSpec(phi, 0.0),
                tau_max=scale.monotone_tau_max,
                length=scale.monotone_length,
                seed=(seed, 115, j),
            )
            mc_totals.append(report.mc_total)
            fc_totals.append(report.fc_total)
    mc_res = _monotone_residual(mc_totals)
    fc_res = _monotone_residual(fc_totals)
    if mc_res > 0.5 or fc_res > 0.5:
        return False, f"isotonic residuals mc={mc_res:.3g} fc={fc_res:.3g} exceed 0.5"
    return True, f"isotonic residuals mc={mc_res:.3g} fc={fc_res:.3g}"


def _check_estimator_consistency(seed: int, scale: SuiteScale):
    rng = np.random.default_rng((seed, 116))
    system = random_linear_system(scale.consistency_dim, rng)
    spec = inp.ArmaProcessSpec(0.4, 0.0)

    def totals(length: int) -> np.ndarray:
        # common random numbers across the two lengths: seed s drives both
        # the short and the doubled path, which stabilizes the MAD ratio
        out = []
        for s in range(scale.consistency_seeds):
            report = cap.total_capacity_empirical(
                system,
                spec,
                tau_max=scale.consistency_tau_max,
                length=length,
                seed=(seed, 117, s),
            )
            out.append(report.mc_total)
        return np.asarray(out)

    def mad(x: np.ndarray) -> float:
        return float(np.median(np.abs(x - np.median(x))))

    with _silence_expected():
        base = mad(totals(scale.consistency_length))
        doubled = mad(totals(2 * scale.consistency_length))
    ratio = doubled / base
    if not 0.4 <= ratio <= 0.85:
        return False, f"MAD ratio {ratio:.3f} outside [0.4, 0.85]"
    return True, f"MAD ratio {ratio:.3f} (target 1/sqrt(2))"


def _check_lyapunov_residual(seed: int, scale: SuiteScale):
    rng = np.random.default_rng((seed, 118))
    for n in (1, 4, 9):
        system = random_linear_system(n, rng, sigma_max=0.95)
        gamma0 = 2.3
        cov = lc.state_covariance_white(system, gamma0)
        a, c = system.connectivity, system.input_weights
        residual = np.linalg.norm(a @ cov @ a.T + gamma0 * np.outer(c, c) - cov)
        if residual > 1e-10 * np.linalg.norm(cov):
            return False, f"Lyapunov residual {residual:.3g} too large at N={n}"
    return True, "relative residual below 1e-10"


def _route_specs() -> tuple[inp.ArmaProcessSpec, ...]:
    return (
        inp.ArmaProcessSpec(0.5, 0.0),
        inp.ArmaProcessSpec(0.0, 0.5),
        inp.ArmaProcessSpec(0.4, 0.3),
    )


def _check_route_equivalence(seed: int, scale: SuiteScale):
    rng = np.random.default_rng((seed, 119))
    worst_mc = worst_fc = worst_gram = 0.0
    for k in range(scale.route_systems):
        n = int(rng.integers(2, 6))
        system = random_linear_system(n, rng, sigma_max=0.8)
        for spec in _route_specs():
            acvf = inp.autocovariance(spec)
            reference = lc.analytic_capacities_linear(system, acvf, tau_max=600)
            mem = lc.b_vectors_memory(system, acvf, window=scale.route_window)
            fwd = lc.b_vectors_forecasting(system, acvf, window=scale.route_window)
            worst_mc = max(worst_mc, abs(mem.mc_estimate - reference.mc_total))
            worst_fc = max(worst_fc, abs(fwd.fc_estimate - reference.fc_total))
            worst_gram = max(worst_gram, mem.gram_error)
            if abs(mem.mc_estimate - reference.mc_total) > 1e-3:
                return False, f"memory routes differ by {worst_mc:.3g} for {spec}"
            if abs(fwd.fc_estimate - reference.fc_total) > 1e-3:
                return False, f"forecast routes differ by {worst_fc:.3g} for {spec}"
            if mem.gram_error > 1e-3:
                return False, f"coefficient rows not orthonormal: {worst_gram:.3g}"
    return True, (
        f"max deviations mc={worst_mc:.2e} fc={worst_fc:.2e} gram={worst_gram:.2e}"
    )


def _check_reduction_invariance(seed: int, scale: SuiteScale):
    rng = np.random.default_rng((seed, 120))
    spec = inp.ArmaProcessSpec(0.4, 0.2)
    acvf = inp.autocovariance(spec)
    for n in (3, 5):
        system = random_linear_system(n, rng)
        red = lc.reduce_system(system)
        if red.rank != n:
            return False, f"random N={n} system unexpectedly rank-deficient"
        full = lc.analytic_capacities_linear(system, acvf, tau_max=400)
        reduced = lc.analytic_capacities_linear(red.system, acvf, tau_max=400)
        if abs(full.mc_total - reduced.mc_total) > 1e-6:
            return False, "memory capacity not invariant under the reduction"
        if abs(full.fc_total - reduced.fc_total) > 1e-6:
            return False, "forecasting capacity not invariant under the reduction"
    return True, "capacities preserved by the orthonormal reduction"


def _check_injection_equivariance(seed: int, scale: SuiteScale):
    rng = np.random.default_rng((seed, 121))
    for n, rank in ((4, 2), (6, 3), (5, 5)):
        system = random_system_with_rank(n, rank, rng)
        red = lc.reduce_system(system)
        inj = sys_mod.AffineMap(matrix=red.injection, offset=np.zeros(n))
        if not sys_mod.verify_morphism(inj, red.system, system, probes=1000, seed=seed):
            return False, f"injection not equivariant at (N={n}, rank={rank})"
    return True, "injection equivariant on 1000 probes per system"


def _check_rank_theorem(seed: int, scale: SuiteScale):
    rng = np.random.default_rng((seed, 122))
    white = inp.ArmaProcessSpec(0.0, 0.0)
    worst = 0.0
    with _silence_expected():
        for i in range(scale.rank_systems):
            n = int(rng.integers(1, scale.rank_max_dim + 1))
            rank = int(rng.integers(0, n + 1))
            system = random_system_with_rank(n, rank, rng)
            verdict = lc.memory_capacity_via_rank(system)
            if verdict.mc != rank:
                return False, f"rank route reported {verdict.mc} != {rank}"
            report = cap.total_capacity_empirical(
                system,
                white,
                tau_max=scale.rank_tau_max,
                length=scale.rank_length,
                seed=(seed, 123, i),
            )
            err = abs(report.mc_total - rank)
            worst = max(worst, err)
            if err > 0.3:
                return False, (
                    f"empirical MC {report.mc_total:.3f} misses rank {rank} "
                    f"(N={n}, system {i})"
                )
            if rank < n and "ill-conditioned-state-covariance" not in report.flags:
                return False, f"deficient system {i} did not raise the conditioning flag"
            if rank and verdict.hypotheses_met:
                analytic = lc.analytic_capacities_linear(
                    verdict.reduction.system, inp.autocovariance(white), tau_max=400
                )
                if abs(analytic.mc_total - rank) > 1e-6:
                    return False, (
                        f"analytic MC {analytic.mc_total:.8f} != rank {rank} on the "
                        f"reduced system {i}"
                    )
    return True, f"{scale.rank_systems} systems, worst |MC - rank| = {worst:.3f}"


def _check_kernel_equality(seed: int, scale: SuiteScale):
    rng = np.random.default_rng((seed, 124))
    for i in range(scale.kernel_systems):
        n = int(rng.integers(2, 9))
        rank = int(rng.integers(0, n + 1)) if i % 2 else n
        system = random_system_with_rank(n, rank, rng)
        result = lc.kernel_equality_check(system)
        if not result.match:
            return False, (
                f"kernel mismatch at system {i}: dims "
                f"{result.cov_kernel_dim} vs {result.ctrl_kernel_dim}"
            )
    return True, f"{scale.kernel_systems} systems matched"


def _check_eigen_singularity(seed: int, scale: SuiteScale):
    rng = np.random.default_rng((seed, 125))
    for i in range(scale.eigen_systems):
        n = int(rng.integers(2, 6))
        repeated = i % 2 == 0
        system = random_diagonalizable_system(n, rng, repeated=repeated)
        cov = lc.state_covariance_white(system, 1.0)
        cond = float(np.linalg.cond(cov))
        if repeated and cond <= 1e10:
            return False, f"repeated eigenvalue but kappa={cond:.3g} <= 1e10 (system {i})"
        if not repeated and cond > 1e10:
            return False, f"distinct eigenvalues but kappa={cond:.3g} > 1e10 (system {i})"
    return True, f"{scale.eigen_systems} systems split at kappa = 1e10"


def _check_csv_determinism(seed: int, scale: SuiteScale):
    import tempfile
    from pathlib import Path

    from .cli import EXPECTED_HEADER, ExperimentConfig, run_figure1

    with tempfile.TemporaryDirectory() as tmp:
        outputs = []
        for tag in ("a", "b"):
            config = ExperimentConfig(
                n=4,
                spectral_radius=0.8,
                tau_max=30,
                length=1500,
                seed=seed,
                param_grid=(0.0, 0.4),
                model="all",
                output_dir=Path(tmp) / tag,
            )
            outputs.append(run_figure1(config).read_bytes())
        if outputs[0] != outputs[1]:
            return False, "CSV bytes differ between identical runs"
        header = outputs[0].split(b"\n", 1)[0].decode()
        if header != EXPECTED_HEADER:
            return False, f"unexpected CSV header {header!r}"
    return True, "byte-identical CSV with the pinned schema"


CHECKS: tuple[tuple[str, object], ...] = (
    ("inputs-acvf-invariants", _check_acvf_invariants),
    ("inputs-empirical-acvf-convergence", _check_empirical_acvf),
    ("inputs-toeplitz-radius-monotone", _check_toeplitz_radius),
    ("inputs-toeplitz-eigen-range", _check_toeplitz_eigen_range),
    ("inputs-gershgorin-dominates", _check_gershgorin_dominates),
    ("systems-filter-determinism", _check_filter_determinism),
    ("systems-linear-closed-form", _check_linear_closed_form),
    ("systems-shift-invariance", _check_shift_invariance),
    ("systems-esp-rate", _check_esp_rate),
    ("systems-standardization", _check_standardization),
    ("capacity-range-and-bounds", _check_capacity_battery),
    ("capacity-monotone-trend", _check_monotone_trend),
    ("capacity-estimator-consistency", _check_estimator_consistency),
    ("lincap-lyapunov-residual", _check_lyapunov_residual),
    ("lincap-route-equivalence", _check_route_equivalence),
    ("lincap-reduction-invariance", _check_reduction_invariance),
    ("lincap-injection-equivariance", _check_injection_equivariance),
    ("lincap-rank-theorem", _check_rank_theorem),
    ("lincap-kernel-equality", _check_kernel_equality),
    ("lincap-eigen-singularity", _check_eigen_singularity),
    ("cli-csv-determinism", _check_csv_determinism),
)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


@dataclass(frozen=True)
class SuiteResult:
    scale: str
    seed: int
    results: tuple[CheckResult, ...]
    all_passed: bool

    def to_dict(self) -> dict:
        return {
            "scale": self.scale,
            "seed": self.seed,
            "all_passed": self.all_passed,
            "results": [
                {
                    "name": r.name,
                    "passed": r.passed,
                    "detail": r.detail,
                    "seconds": round(r.seconds, 3),
                }
                for r in self.results
            ],
        }


def run_property_suite(
    seed: int = 0,
    scale: str = "quick",
    names: tuple[str, ...] | None = None,
) -> SuiteResult:
    """Run every module's invariant battery at the chosen scale.

    Returns a result object; callers decide the exit status (the CLI maps
    any failure to a nonzero code).
    """
    if scale not in _SCALES:
        raise ValueError(f"scale must be one of {sorted(_SCALES)}, got {scale!r}")
    chosen = _SCALES[scale]
    results = []
    for name, fn in CHECKS:
        if names is not None and name not in names:
            continue
        start = time.perf_counter()
        try:
            passed, detail = fn(seed, chosen)
        except Exception as exc:  # a crashed check is a failed check
            passed, detail = False, f"raised {type(exc).__name__}: {exc}"
        results.append(
            CheckResult(
                name=name,
                passed=bool(passed),
                detail=detail,
                seconds=time.perf_counter() - start,
            )
        )
    return SuiteResult(
        scale=scale,
        seed=seed,
        results=tuple(results),
        all_passed=all(r.passed for r in results),
    )
