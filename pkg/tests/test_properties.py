"""Battery plumbing: the selftest runs, and it actually detects faults."""

import numpy as np
import pytest

import rccap.capacity as capacity_mod
from rccap.properties import (
    QUICK,
    _check_rank_theorem,
    isotonic_fit,
    random_diagonalizable_system,
    random_system_with_rank,
    run_property_suite,
)


def test_isotonic_fit_pools_violators():
    fitted = isotonic_fit([1.0, 3.0, 2.0, 4.0])
    assert np.all(np.diff(fitted) >= 0)
    np.testing.assert_allclose(fitted, [1.0, 2.5, 2.5, 4.0])


def test_generators_hit_requested_structure():
    rng = np.random.default_rng(0)
    for rank in (0, 2, 5):
        system = random_system_with_rank(5, rank, rng)
        assert system.dim == 5
    for repeated in (False, True):
        system = random_diagonalizable_system(4, rng, repeated=repeated)
        vals = np.linalg.eigvals(system.connectivity)
        gaps = np.abs(vals[:, None] - vals[None, :])[~np.eye(4, dtype=bool)]
        if repeated:
            assert gaps.min() < 1e-10
        else:
            assert gaps.min() > 1e-3


def test_injected_sign_error_fails_the_rank_battery(monkeypatch):
    # mutation sanity check: corrupt the per-lag capacity value and the
    # rank-theorem battery must go red
    original = capacity_mod._adjusted_r2

    def corrupted(raw, n_samples, n_regressors):
        return -original(raw, n_samples, n_regressors)

    monkeypatch.setattr(capacity_mod, "_adjusted_r2", corrupted)
    passed, detail = _check_rank_theorem(0, QUICK)
    assert not passed


def test_suite_runs_selected_check():
    result = run_property_suite(seed=0, scale="quick", names=("systems-filter-determinism",))
    assert result.all_passed
    assert [r.name for r in result.results] == ["systems-filter-determinism"]


def test_suite_rejects_unknown_scale():
    with pytest.raises(ValueError):
        run_property_suite(scale="huge")


def test_crashed_check_reports_failure(monkeypatch):
    import rccap.properties as props

    def exploding(seed, scale):
        raise RuntimeError("boom")

    monkeypatch.setattr(
        props, "CHECKS", (("exploding-check", exploding),) + props.CHECKS[:1]
    )
    result = props.run_property_suite(seed=0, scale="quick", names=("exploding-check",))
    assert not result.all_passed
    assert "boom" in result.results[0].detail
