import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import IDEAL_BOUNDS, VDW_BOUNDS, seeded_points
from gtd.errors import DegenerateMetricError, DomainError
from gtd.expr import parse
from gtd.fieldeq import (
    LambdaAnsatz,
    conditions_consistency,
    harmonic_residual,
    ideal_gas_conditions,
)
from gtd.phase import MetricSpec
from gtd.systems import ThermoSystem, ideal_gas

GRID = list(itertools.product(np.linspace(0.5, 5.0, 10), repeat=2))


def power_ansatz(k):
    return LambdaAnsatz.from_source(f"(U*V)^({-2 * (k + 1)})", k)


def test_ideal_gas_solution_on_grid(ideal):
    spec = MetricSpec.ginv2(-1, -1.0)
    worst = max(harmonic_residual(ideal, spec, E).norm for E in GRID)
    assert worst < 1e-8


def test_k0_is_not_a_solution(ideal):
    res = harmonic_residual(ideal, MetricSpec.ginv2(0, 1.0), (1.0, 1.0))
    assert res.norm > 0.1


def test_flat_potential_is_degenerate():
    flat = ThermoSystem("flat", parse("0.5*x^2 + y", ["x", "y"]))
    with pytest.raises(DegenerateMetricError):
        harmonic_residual(flat, MetricSpec.ginv2(-1, 1.0), (1.0, 1.0))


def test_outside_domain(ideal):
    with pytest.raises(DomainError):
        harmonic_residual(ideal, MetricSpec.ginv2(-1, 1.0), (-1.0, 1.0))


def test_unknown_method(ideal):
    with pytest.raises(ValueError):
        harmonic_residual(ideal, MetricSpec.ginv2(-1, 1.0), (1.0, 1.0), method="symbolic")


@pytest.mark.parametrize("E", seeded_points(41, 4, VDW_BOUNDS))
@pytest.mark.parametrize("k", [-1, 0, 1])
def test_exact_matches_finite_differences_vdw(vdw, E, k):
    spec = MetricSpec.ginv2(k, 1.0)
    exact = harmonic_residual(vdw, spec, E)
    fd = harmonic_residual(vdw, spec, E, method="fd")
    assert fd.method == "fd" and exact.method == "exact"
    scale = max(np.max(np.abs(exact.vector)), 1.0)
    assert np.max(np.abs(exact.vector - fd.vector)) / scale < 1e-6


def test_exact_matches_finite_differences_nonconstant_lambda(ideal):
    spec = LambdaAnsatz.from_source("U + 2*V", 0).spec()
    for E in seeded_points(43, 3, IDEAL_BOUNDS):
        exact = harmonic_residual(ideal, spec, E).vector
        fd = harmonic_residual(ideal, spec, E, method="fd").vector
        assert np.max(np.abs(exact - fd)) / max(np.max(np.abs(exact)), 1.0) < 1e-6


def test_conditions_constant_k_minus_one_exact():
    assert np.all(ideal_gas_conditions(LambdaAnsatz.from_source("3.5", -1), (2.0, 0.7)) == 0.0)


@pytest.mark.parametrize("k", [-1, 0, 1])
def test_power_ansatz_solves_conditions(k):
    ans = power_ansatz(k)
    for E in GRID:
        assert np.max(np.abs(ideal_gas_conditions(ans, E))) < 1e-10


def test_k0_conditions_at_unit_point():
    np.testing.assert_allclose(ideal_gas_conditions(LambdaAnsatz.from_source("1", 0), (1.0, 1.0)), [2.0, 2.0])


@settings(max_examples=50, deadline=None)
@given(st.floats(0.1, 10), st.floats(0.1, 10), st.floats(0.1, 10))
def test_constant_lambda_conditions_scale_inversely(U, V, c):
    ans = LambdaAnsatz.from_source("1", 0)
    base = ideal_gas_conditions(ans, (U, V))
    scaled = ideal_gas_conditions(ans, (c * U, c * V))
    np.testing.assert_allclose(scaled, base / c, rtol=1e-12)


def test_conditions_use_intensive_partials():
    # Lambda = Z3 = 1/T picks up the 3 kappa/(2U^2) coefficient
    ans = LambdaAnsatz.from_source("Z3", -1)
    U, V = 2.0, 3.0
    np.testing.assert_allclose(ideal_gas_conditions(ans, (U, V)), [1.5 / U**2, 0.0], atol=1e-15)


def test_conditions_domain():
    with pytest.raises(DomainError):
        ideal_gas_conditions(LambdaAnsatz.from_source("1", 0), (0.0, 1.0))


def test_consistency_zero_case():
    samples = seeded_points(5, 10, IDEAL_BOUNDS)
    assert conditions_consistency(LambdaAnsatz.from_source("1", -1), samples) == 0.0


def test_consistency_power_ansatz():
    samples = seeded_points(6, 10, IDEAL_BOUNDS)
    assert conditions_consistency(power_ansatz(0), samples) < 1e-6


def test_consistency_non_solution():
    samples = seeded_points(7, 10, IDEAL_BOUNDS)
    assert conditions_consistency(LambdaAnsatz.from_source("1", 0), samples) < 1e-6


def test_consistency_detects_mismatch():
    # Lambda depending on S is outside what the reduced conditions model
    ans = LambdaAnsatz.from_source("S", -1)
    samples = seeded_points(8, 10, IDEAL_BOUNDS)
    assert conditions_consistency(ans, samples) > 1e-3


def test_residual_unchanged_by_potential_shift():
    # Phi -> Phi + c leaves every second derivative and thus the metric alone
    base = ideal_gas()
    shifted = ThermoSystem("shifted", parse("kappa*(1.5*ln(U) + ln(V)) + 7", ["U", "V"], ["kappa"]), {"kappa": 1.0})
    spec = MetricSpec.ginv2(0, 1.0)
    for E in seeded_points(9, 5, IDEAL_BOUNDS):
        a = harmonic_residual(base, spec, E).vector
        b = harmonic_residual(shifted, spec, E).vector
        np.testing.assert_allclose(a[1:], b[1:], rtol=1e-10, atol=1e-12)


def test_json_shape(ideal):
    res = harmonic_residual(ideal, MetricSpec.ginv2(0, 1.0), (1.0, 1.0), method="fd")
    rows = json.loads(json.dumps(res.to_json()))
    assert [r["A_index"] for r in rows] == [0, 1, 2, 3, 4]
    assert set(rows[0]) == {"A_index", "residual", "method", "fd_error_estimate"}
    assert all(r["method"] == "fd" for r in rows)
