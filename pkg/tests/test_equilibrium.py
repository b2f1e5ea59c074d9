import math

import numpy as np
import pytest

from conftest import IDEAL_BOUNDS, VDW_BOUNDS, rel, seeded_points
from gtd import finite_diff
from gtd.equilibrium import (
    HessianSignature,
    christoffel,
    curvature,
    legendre_dual_scalar,
    lift,
    lift_jacobian,
    metric_derivatives,
    pullback_consistency,
    pullback_metric,
    riemann_from_derivatives,
    scalar_curvature,
    scalar_invariance_deviation,
    second_law_classify,
    singular_curve_scan,
)
from gtd.errors import DegenerateMetricError, DomainError
from gtd.expr import parse
from gtd.phase import MetricSpec, contact_form, total
from gtd.systems import ThermoSystem, ideal_gas, van_der_waals

IG_SPEC = MetricSpec.ginv2(-1, -1.0)
VDW_SPEC = MetricSpec.ginv2(-1, 1.0)


def quadratic():
    return ThermoSystem("quad", parse("0.5*x^2 + 0.5*y^2", ["x", "y"]))


def test_lift_by_hand(ideal):
    z = lift(ideal, (1.5, 1.0))
    assert z.phi == pytest.approx(1.5 * math.log(1.5), rel=1e-15)
    assert z.E == (1.5, 1.0) and z.I == (1.0, 1.0)


def test_first_law_on_the_lift(vdw):
    for E in seeded_points(2, 10, VDW_BOUNDS):
        theta = contact_form(lift(vdw, E))
        assert np.max(np.abs(theta @ lift_jacobian(vdw, E))) < 1e-14


def test_free_vdw_lift_is_ideal_lift(ideal):
    free = van_der_waals(a=0.0, b=0.0)
    assert lift(free, (2.0, 3.0)) == lift(ideal, (2.0, 3.0))


@pytest.mark.parametrize("E,expect", [((1, 1), [[1, 0], [0, 1]]), ((2, 4), [[0.25, 0], [0, 0.0625]])])
def test_ideal_gas_metric(ideal, E, expect):
    assert np.allclose(pullback_metric(ideal, IG_SPEC, E), expect, rtol=1e-15, atol=0)


def printed_vdw_metric(U, V, a=1.0, b=0.1, lam=1.0):
    pref = lam / (U * (U + a / V))
    den = 3 * a * b - a * V + 2 * U * V**2
    gVV = U / V**3 * (a * (a + 2 * U * V) * (3 * b**2 - 6 * b * V + V**2) - 2 * U**2 * V**4) / ((V - b) * den)
    gUV = a / V**2 * (3 * a * b - a * V - 3 * b * U * V + 5 * U * V**2) / den
    # a dU dV term splits evenly over the two off-diagonal entries
    return pref * np.array([[-1.0, gUV / 2], [gUV / 2, gVV]])


@pytest.mark.parametrize("E", [(1.0, 1.0), (0.3, 0.7), (4.0, 2.5)])
def test_vdw_metric_matches_printed_form(vdw, E):
    assert rel(pullback_metric(vdw, VDW_SPEC, E), printed_vdw_metric(*E)) < 1e-10


@pytest.mark.parametrize("which,spec", [("ideal", IG_SPEC), ("vdw", MetricSpec.mso())])
def test_pullback_two_ways(which, spec):
    sys = ideal_gas() if which == "ideal" else van_der_waals()
    bounds = IDEAL_BOUNDS if which == "ideal" else VDW_BOUNDS
    for E in seeded_points(4, 20, bounds):
        assert pullback_consistency(sys, spec, E) < 1e-10


def test_quadratic_potential_pullback():
    sys = quadratic()
    spec = MetricSpec.ginv2(0, 1.0)
    for E in [(1.0, 2.0), (0.5, 3.0)]:
        g = pullback_metric(sys, spec, E)
        assert np.allclose(g, np.diag([E[0] ** 2, E[1] ** 2]), rtol=1e-12, atol=0)
        assert pullback_consistency(sys, spec, E) < 1e-12


def test_ideal_gas_is_flat_on_grid(ideal):
    grid = np.linspace(0.1, 10, 20)
    assert max(abs(scalar_curvature(ideal, IG_SPEC, (u, v))) for u in grid for v in grid) < 1e-8


def test_free_vdw_is_flat():
    free = van_der_waals(a=0.0, b=0.0)
    for E in seeded_points(8, 10, IDEAL_BOUNDS):
        assert abs(scalar_curvature(free, IG_SPEC, E)) < 1e-8


def _fd_scalar(sys, spec, E):
    """Scalar curvature with every metric derivative taken by finite differences."""
    g = pullback_metric(sys, spec, E)
    dg, _ = finite_diff.gradient(lambda x: pullback_metric(sys, spec, x), E, rel=1e-3)
    d2g, _ = finite_diff.hessian(lambda x: pullback_metric(sys, spec, x), E, rel=1e-3)
    ginv, gamma, riem = riemann_from_derivatives(g, dg, d2g)
    return float(np.einsum("bd,abad->", ginv, riem)), gamma


def test_vdw_curvature_matches_oracle(vdw):
    R = scalar_curvature(vdw, VDW_SPEC, (1.0, 1.0))
    ref, _ = _fd_scalar(vdw, VDW_SPEC, (1.0, 1.0))
    assert R == pytest.approx(ref, rel=1e-5)


@pytest.mark.parametrize("which", ["ideal", "vdw"])
@pytest.mark.parametrize("spec", [MetricSpec.ginv2(-1, 1.0), MetricSpec.ginv2(1, 1.0), MetricSpec.mso()])
def test_report_invariants(which, spec):
    sys = ideal_gas() if which == "ideal" else van_der_waals()
    bounds = IDEAL_BOUNDS if which == "ideal" else VDW_BOUNDS
    for E in seeded_points(12, 10, bounds):
        rep = curvature(sys, spec, E)
        R = rep.riemann
        assert np.array_equal(R, -np.swapaxes(R, 2, 3))
        scale = max(np.max(np.abs(R)), 1.0)
        bianchi = R + np.einsum("abcd->acdb", R) + np.einsum("abcd->adbc", R)
        assert np.max(np.abs(bianchi)) < 1e-10 * scale
        two = 2 * rep.R1212 / np.linalg.det(rep.g)
        assert abs(rep.scalar_R - two) <= 1e-12 * max(abs(two), 1.0)
        assert np.array_equal(rep.christoffel, np.swapaxes(rep.christoffel, 1, 2))
        assert np.allclose(rep.christoffel, christoffel(sys, spec, E), rtol=1e-13, atol=0)


def test_report_json_fields(vdw):
    d = curvature(vdw, VDW_SPEC, (1.0, 1.0)).to_dict()
    assert set(d) == {"g", "g_inv", "christoffel", "riemann", "ricci", "scalar_R", "det_g", "D"}
    assert d["D"] == pytest.approx(-0.31851851851851853)


def test_degenerate_metric_raises():
    # Lambda = 0 kills the metric
    with pytest.raises(DegenerateMetricError):
        curvature(ideal_gas(), MetricSpec.ginv2(-1, 0.0), (1.0, 1.0))


def test_domain_violation(vdw):
    with pytest.raises(DomainError):
        curvature(vdw, VDW_SPEC, (1.0, 0.05))


def test_metric_derivatives_match_oracle(vdw):
    for E in seeded_points(21, 5, VDW_BOUNDS):
        g, dg, d2g = metric_derivatives(vdw, MetricSpec.mso(), E)
        f = lambda x: pullback_metric(vdw, MetricSpec.mso(), x)
        assert rel(dg, finite_diff.gradient(f, E, rel=1e-3)[0]) < 1e-7
        assert rel(d2g, finite_diff.hessian(f, E, rel=1e-3)[0]) < 1e-6


@pytest.mark.parametrize("which", ["ideal", "vdw"])
def test_scalar_curvature_legendre_invariance(which):
    sys = ideal_gas() if which == "ideal" else van_der_waals()
    bounds = IDEAL_BOUNDS if which == "ideal" else VDW_BOUNDS
    pts = seeded_points(31, 20, bounds)
    for spec, idxs in [(MetricSpec.ginv2(-1, 1.0), [(0,), (1,), total(2)]), (MetricSpec.ginv2(1, 1.0), [(0,), total(2)])]:
        for idx in idxs:
            assert scalar_invariance_deviation(sys, spec, pts, idx) < 1e-6


def test_dual_point_is_the_transformed_point(vdw):
    E = (2.0, 1.5)
    Et, _ = legendre_dual_scalar(vdw, VDW_SPEC, E, total(2))
    assert np.allclose(Et, lift(vdw, E).I, rtol=1e-15)


def test_second_law_classification(ideal):
    assert second_law_classify(ideal, (1.0, 1.0)) is HessianSignature.CONCAVE
    assert second_law_classify(quadratic(), (1.0, 2.0)) is HessianSignature.CONVEX
    vdw = van_der_waals()
    labels = {second_law_classify(vdw, (u, v)) for u in (0.2, 1.0, 3.0) for v in (0.2, 0.3, 0.5, 1.0, 3.0)}
    assert HessianSignature.CONCAVE in labels and HessianSignature.INDEFINITE in labels


def test_singular_scan_tags_roots(vdw):
    pts = singular_curve_scan(vdw, U_lines=[0.2], V_lines=[0.5])
    assert pts
    for p in pts:
        assert abs(p.D) < 1e-10
        assert len(p.approach) == 4


def test_singular_scan_needs_vdw(ideal):
    with pytest.raises(ValueError):
        singular_curve_scan(ideal, U_lines=[1.0])
