"""State-space system tests: construction, filters, ESP, morphisms."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from rccap.inputs import ArmaProcessSpec, simulate_arma
from rccap.lincap import state_covariance_white
from rccap.systems import (
    AffineMap,
    EchoStateNetwork,
    LinearStateSystem,
    contraction_constant,
    run_filter,
    standardize,
    system_from_json,
    system_to_json,
    verify_esp_convergence,
    verify_morphism,
)


def scalar_system(a: float, c: float = 1.0) -> LinearStateSystem:
    return LinearStateSystem(np.array([[a]]), np.array([c]))


def random_system(n: int, seed: int, sigma_max: float = 0.9) -> LinearStateSystem:
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n))
    a *= sigma_max / np.linalg.svd(a, compute_uv=False)[0]
    return LinearStateSystem(a, rng.standard_normal(n))


class TestConstruction:
    def test_rejects_expanding_map(self):
        with pytest.raises(ValueError, match="singular value"):
            LinearStateSystem(np.eye(2), np.ones(2))

    def test_rejects_shape_mismatch(self):
        with pytest.raises(ValueError):
            LinearStateSystem(0.5 * np.eye(2), np.ones(3))

    def test_rejects_unknown_activation(self):
        with pytest.raises(ValueError, match="activation"):
            EchoStateNetwork(0.5 * np.eye(2), np.ones(2), activation="relu")

    def test_arrays_are_immutable(self):
        system = scalar_system(0.5)
        with pytest.raises(ValueError):
            system.connectivity[0, 0] = 0.9


class TestContractionConstant:
    def test_scaled_identity(self):
        system = LinearStateSystem(0.5 * np.eye(2), np.ones(2))
        assert contraction_constant(system) == pytest.approx(0.5)

    def test_nilpotent_matrix(self):
        # singular values of [[0, 0.9], [0, 0]] are {0.9, 0} by hand
        system = LinearStateSystem(np.array([[0.0, 0.9], [0.0, 0.0]]), np.ones(2))
        assert contraction_constant(system) == pytest.approx(0.9)

    def test_rescaled_random_matrix(self):
        system = random_system(6, seed=1, sigma_max=0.9)
        assert contraction_constant(system) == pytest.approx(0.9, abs=1e-12)

    def test_esn_uses_lipschitz_product(self):
        esn = EchoStateNetwork(0.5 * np.eye(3), np.ones(3), activation="tanh")
        assert contraction_constant(esn) == pytest.approx(0.5)


class TestRunFilter:
    def test_memoryless_system_reproduces_inputs(self):
        run = run_filter(scalar_system(0.0), np.arange(1.0, 9.0), washout=0)
        assert_allclose(run.states[:, 0], np.arange(1.0, 9.0))

    def test_constant_input_converges_to_fixed_point(self):
        # fixed point of x = 0.5 x + 1 is 2, approached geometrically
        run = run_filter(scalar_system(0.5), np.ones(60), washout=0)
        gaps = np.abs(run.states[:, 0] - 2.0)
        assert gaps[-1] < 1e-15
        ratios = gaps[:30][1:] / gaps[:30][:-1]
        assert_allclose(ratios, 0.5, rtol=1e-10)

    def test_washout_bounds_initial_condition_gap(self):
        system = scalar_system(0.9)
        z = simulate_arma(ArmaProcessSpec(0.2, 0.1), 260, seed=2)
        washout = 60
        a = run_filter(system, z, washout=washout)
        b = run_filter(system, z, washout=washout, initial_state=np.ones(1))
        assert np.abs(a.states - b.states).max() <= 0.9**washout + 1e-12

    def test_recursion_is_verified(self):
        system = random_system(4, seed=3)
        z = simulate_arma(ArmaProcessSpec(0.5, 0.0), 500, seed=4)
        run = run_filter(system, z, washout=100)
        assert run.verify_recursion(system)

    def test_rejects_nonfinite_inputs(self):
        with pytest.raises(ValueError, match="finite"):
            run_filter(scalar_system(0.5), np.array([1.0, np.nan]))

    def test_rejects_washout_beyond_length(self):
        with pytest.raises(ValueError):
            run_filter(scalar_system(0.5), np.ones(5), washout=5)

    def test_deterministic(self):
        system = random_system(5, seed=5)
        z = simulate_arma(ArmaProcessSpec(0.3, 0.0), 400, seed=6)
        a = run_filter(system, z, washout=10)
        b = run_filter(system, z, washout=10)
        assert np.array_equal(a.states, b.states)

    def test_linear_closed_form(self):
        # direct power-series summation oracle, N <= 5, T <= 50
        system = random_system(5, seed=7)
        rng = np.random.default_rng(8)
        z = rng.standard_normal(50)
        states = run_filter(system, z, washout=0).states
        for t in (0, 3, 25, 49):
            direct = sum(
                np.linalg.matrix_power(system.connectivity, j)
                @ (system.input_weights * z[t - j])
                for j in range(t + 1)
            )
            assert np.abs(states[t] - direct).max() < 1e-10


@settings(max_examples=20, deadline=None)
@given(shift=st.integers(1, 25))
def test_zero_prepend_shifts_states_exactly(shift):
    system = random_system(4, seed=9)
    z = np.random.default_rng(10).standard_normal(300)
    base = run_filter(system, z, washout=30)
    padded = run_filter(system, np.concatenate([np.zeros(shift), z]), washout=30 + shift)
    assert np.array_equal(base.states, padded.states)


class TestEspConvergence:
    def test_linear_gap_bound(self):
        system = random_system(6, seed=11, sigma_max=0.9)
        z = simulate_arma(ArmaProcessSpec(0.4, 0.0), 200, seed=12)
        report = verify_esp_convergence(system, z, trials=6, seed=13)
        assert report.max_final_gap <= 0.9**200 * 20 + 1e-12
        assert not report.flagged

    def test_tanh_esn_rate_within_lipschitz_bound(self):
        rng = np.random.default_rng(14)
        a = rng.standard_normal((8, 8))
        a *= 0.9 / np.linalg.svd(a, compute_uv=False)[0]
        esn = EchoStateNetwork(a, rng.standard_normal(8), bias=0.1 * np.ones(8))
        z = simulate_arma(ArmaProcessSpec(0.5, 0.0), 250, seed=15)
        report = verify_esp_convergence(esn, z, trials=5, seed=16)
        assert report.rate_estimate <= 0.9 + 0.05

    def test_identity_esn_equals_linear_system(self):
        system = random_system(5, seed=17)
        esn = EchoStateNetwork(
            system.connectivity,
            system.input_weights,
            bias=np.zeros(5),
            activation="identity",
        )
        z = simulate_arma(ArmaProcessSpec(0.2, 0.3), 300, seed=18)
        assert np.array_equal(
            run_filter(system, z, washout=0).states,
            run_filter(esn, z, washout=0).states,
        )

    def test_requires_two_trials(self):
        with pytest.raises(ValueError):
            verify_esp_convergence(scalar_system(0.5), np.ones(10), trials=1)


class TestStandardize:
    def test_identity_transform_leaves_step_unchanged(self):
        system = random_system(4, seed=19)
        std_sys, iso = standardize(system, np.zeros(4), np.eye(4))
        rng = np.random.default_rng(20)
        for _ in range(100):
            x, z = rng.standard_normal(4), float(rng.standard_normal())
            assert np.abs(std_sys.step(x, z) - system.step(x, z)).max() < 1e-12
        assert_allclose(iso.matrix, np.eye(4))

    def test_scalar_standardized_variance(self):
        # Lyapunov oracle: gamma(0) / (1 - a^2) = 4/3
        system = scalar_system(0.5)
        cov = state_covariance_white(system, 1.0)
        assert_allclose(cov[0, 0], 4.0 / 3.0, rtol=1e-12)
        std_sys, _ = standardize(system, np.zeros(1), cov)
        z = simulate_arma(ArmaProcessSpec(0.0, 0.0), 100_000, seed=21)
        states = run_filter(std_sys, z, washout=500).states
        assert abs(states.var() - 1.0) < 0.03

    def test_transported_trajectory_matches(self):
        system = random_system(3, seed=22)
        cov = state_covariance_white(system, 1.0)
        std_sys, iso = standardize(system, np.zeros(3), cov)
        z = simulate_arma(ArmaProcessSpec(0.3, 0.0), 2000, seed=23)
        base = run_filter(system, z, washout=100).states
        std = run_filter(std_sys, z, washout=100).states
        assert np.abs(base @ iso.matrix.T + iso.offset - std).max() < 1e-10

    def test_rejects_singular_covariance(self):
        system = random_system(3, seed=24)
        singular = np.outer(np.ones(3), np.ones(3))
        with pytest.raises(ValueError, match="reduce"):
            standardize(system, np.zeros(3), singular)


class TestVerifyMorphism:
    def test_identity_map(self):
        system = random_system(4, seed=25)
        check = verify_morphism(
            AffineMap(np.eye(4), np.zeros(4)), system, system, probes=200, seed=26
        )
        assert check

    def test_standardization_map(self):
        system = random_system(5, seed=27)
        cov = state_covariance_white(system, 1.0)
        std_sys, iso = standardize(system, np.zeros(5), cov)
        assert verify_morphism(iso, system, std_sys, probes=1000, seed=28)

    def test_scaling_breaks_equivariance(self):
        system = random_system(3, seed=29)
        check = verify_morphism(
            AffineMap(2.0 * np.eye(3), np.zeros(3)), system, system, probes=200, seed=30
        )
        assert not check
        assert check.witness is not None
        x, z, defect = check.witness
        assert defect > 0


class TestJsonRoundTrip:
    def test_linear(self):
        system = random_system(4, seed=31)
        doc = system_to_json(system)
        assert doc["type"] == "linear"
        back = system_from_json(doc)
        assert_allclose(back.connectivity, system.connectivity)
        assert_allclose(back.input_weights, system.input_weights)

    def test_esn_with_flat_row_major_matrix(self):
        rng = np.random.default_rng(32)
        a = rng.standard_normal((3, 3))
        a *= 0.7 / np.linalg.svd(a, compute_uv=False)[0]
        esn = EchoStateNetwork(a, rng.standard_normal(3), bias=rng.standard_normal(3))
        doc = system_to_json(esn)
        doc["A"] = np.asarray(doc["A"]).ravel().tolist()  # flat row-major variant
        back = system_from_json(doc)
        assert_allclose(back.connectivity, esn.connectivity)
        assert_allclose(back.bias, esn.bias)
        assert back.activation == "tanh"
