"""Acceptance suite.

One test per acceptance criterion, each printing a single PASS/FAIL line
with its runtime against the stated budget.  Heavy batteries reuse the
full-scale property checks, which implement the stated protocols.

Run with ``pytest tests/test_acceptance.py -v -s``.
"""

import time

import numpy as np
import pytest
from numpy.testing import assert_allclose

from rccap.capacity import total_capacity_empirical
from rccap.inputs import ArmaProcessSpec, autocovariance, gershgorin_bound
from rccap.lincap import analytic_capacities_linear
from rccap.properties import (
    FULL,
    _check_capacity_battery,
    _check_eigen_singularity,
    _check_kernel_equality,
    _check_rank_theorem,
    _check_route_equivalence,
    _check_standardization,
    isotonic_fit,
    random_system_with_rank,
)

SEED = 0


class _Criterion:
    def __init__(self, number: int, label: str, budget_seconds: float):
        self.number = number
        self.label = label
        self.budget = budget_seconds
        self.start = time.perf_counter()

    def conclude(self, detail: str) -> None:
        elapsed = time.perf_counter() - self.start
        print(f"PASS criterion {self.number} ({self.label}) "
              f"[{elapsed:.1f}s / budget {self.budget:.0f}s] {detail}")
        assert elapsed <= self.budget, f"criterion {self.number} exceeded its runtime budget"

    def fail(self, detail: str) -> None:
        elapsed = time.perf_counter() - self.start
        print(f"FAIL criterion {self.number} ({self.label}) [{elapsed:.1f}s] {detail}")
        pytest.fail(f"criterion {self.number}: {detail}")


def test_criterion_1_rank_theorem():
    crit = _Criterion(1, "memory capacity equals controllability rank", 300)
    passed, detail = _check_rank_theorem(SEED, FULL)
    if not passed:
        crit.fail(detail)
    crit.conclude(detail)


def test_criterion_2_white_noise_full_capacity():
    crit = _Criterion(2, "white noise: MC = N and FC = 0 (analytic)", 30)
    rng = np.random.default_rng((SEED, 201))
    white = autocovariance(ArmaProcessSpec(0.0, 0.0))
    worst_mc = worst_fc = 0.0
    for n in range(1, 9):
        system = random_system_with_rank(n, n, rng, sigma_max=0.85)
        report = analytic_capacities_linear(system, white, tau_max=300)
        worst_mc = max(worst_mc, abs(report.mc_total - n))
        worst_fc = max(worst_fc, report.fc_total)
        if abs(report.mc_total - n) > 1e-6:
            crit.fail(f"MC {report.mc_total!r} misses N={n}")
        if report.fc_total > 1e-10:
            crit.fail(f"FC {report.fc_total!r} nonzero at N={n}")
    crit.conclude(f"N=1..8, worst |MC-N|={worst_mc:.2e}, worst FC={worst_fc:.2e}")


def test_criterion_3_reference_sweep(tmp_path):
    crit = _Criterion(3, "reference sweep: values, monotone trends, bound gaps", 600)
    from rccap.cli import ExperimentConfig, run_figure1

    config = ExperimentConfig(seed=SEED, output_dir=tmp_path)  # stated defaults
    path = run_figure1(config)
    rows = []
    for line in path.read_text().strip().split("\n")[1:]:
        fields = line.split(",")
        rows.append(
            dict(
                model=fields[0],
                phi=float(fields[1]),
                theta=float(fields[2]),
                mc=float(fields[3]),
                fc=float(fields[4]),
                bounds=tuple(float(v) for v in fields[5:8]),
            )
        )

    # (a) independent-input point: MC = 15 +- 0.5, FC = 0 +- 0.3, bounds = 15
    base = next(r for r in rows if r["model"] == "arma11" and r["phi"] == 0.0)
    if abs(base["mc"] - 15.0) > 0.5:
        crit.fail(f"independent-input MC {base['mc']:.3f} outside 15 +- 0.5")
    if abs(base["fc"]) > 0.3:
        crit.fail(f"independent-input FC {base['fc']:.3f} outside 0 +- 0.3")
    for bound in base["bounds"]:
        if abs(bound - 15.0) > 1e-6:
            crit.fail(f"independent-input bound {bound!r} differs from 15")

    # (b) isotonic trends in the AR coefficient within Monte-Carlo noise
    for model in ("ar1", "arma11"):
        series = sorted((r for r in rows if r["model"] == model), key=lambda r: r["phi"])
        for key in ("mc", "fc"):
            values = [r[key] for r in series]
            residual = np.abs(np.asarray(values) - isotonic_fit(values)).max()
            if residual > 0.5:
                crit.fail(f"{model} {key} isotonic residual {residual:.3f} > 0.5")

    # (c) strict bound gap for every correlated grid point
    for row in rows:
        if row["phi"] >= 0.1:
            gap = min(row["bounds"]) - row["mc"]
            if gap < 1.0:
                crit.fail(
                    f"bound gap {gap:.3f} < 1 at {row['model']} phi={row['phi']}"
                )
    crit.conclude(f"{len(rows)} grid points checked")


def test_criterion_4_universal_bounds():
    crit = _Criterion(4, "per-lag range and bound chain over 50 mixed pairs", 300)
    passed, detail = _check_capacity_battery(SEED, FULL)
    if not passed:
        crit.fail(detail)
    crit.conclude(detail)


def test_criterion_5_bound_closed_forms():
    crit = _Criterion(5, "Gershgorin closed forms on a ten-point grid", 1)
    n = 15
    for value in np.linspace(0.05, 0.9, 10):
        ar = gershgorin_bound(autocovariance(ArmaProcessSpec(value, 0.0)), n)
        assert_allclose(ar, n * (1 + value) / (1 - value), atol=1e-6)
        ma = gershgorin_bound(autocovariance(ArmaProcessSpec(0.0, value)), n)
        assert_allclose(ma, n * (1 + value) ** 2 / (1 + value**2), atol=1e-6)
    crit.conclude("AR(1) and MA(1) forms match to 1e-6 at 10 points each")


def test_criterion_6_route_equivalence():
    crit = _Criterion(6, "coefficient route matches covariance route", 120)
    passed, detail = _check_route_equivalence(SEED, FULL)
    if not passed:
        crit.fail(detail)
    crit.conclude(detail)


def test_criterion_7_kernel_equality():
    crit = _Criterion(7, "covariance kernel equals controllability kernel", 30)
    passed, detail = _check_kernel_equality(SEED, FULL)
    if not passed:
        crit.fail(detail)
    crit.conclude(detail)


def test_criterion_8_standardization():
    crit = _Criterion(8, "standardized states: zero mean, identity covariance", 30)
    passed, detail = _check_standardization(SEED, FULL)
    if not passed:
        crit.fail(detail)
    crit.conclude(detail)


def test_criterion_9_eigen_singularity():
    crit = _Criterion(9, "repeated eigenvalues iff singular state covariance", 10)
    passed, detail = _check_eigen_singularity(SEED, FULL)
    if not passed:
        crit.fail(detail)
    crit.conclude(detail)


def test_criterion_10_determinism(tmp_path):
    crit = _Criterion(10, "byte-identical CSV for identical config and seed", 60)
    from rccap.cli import ExperimentConfig, run_figure1

    outputs = []
    for tag in ("first", "second"):
        config = ExperimentConfig(
            n=6,
            spectral_radius=0.9,
            tau_max=50,
            length=2500,
            seed=SEED,
            param_grid=(0.0, 0.3, 0.6, 0.9),
            model="all",
            output_dir=tmp_path / tag,
        )
        outputs.append(run_figure1(config).read_bytes())
    if outputs[0] != outputs[1]:
        crit.fail("reruns differ")
    crit.conclude(f"{len(outputs[0])} bytes identical across runs")
