"""Acceptance gate: one test and one report line per criterion."""

import itertools
import math
import time

import numpy as np

from conftest import IDEAL_BOUNDS, VDW_BOUNDS, rel, report, seeded_points
from gtd import finite_diff
from gtd.equilibrium import (
    christoffel,
    lift,
    pullback_metric,
    riemann_from_derivatives,
    scalar_curvature,
    scalar_invariance_deviation,
    singular_curve_scan,
)
from gtd.fieldeq import LambdaAnsatz, ideal_gas_conditions
from gtd.geodesic import VDW_SWEEP_VELOCITY, Status, chord_deviation, integrate
from gtd.phase import MetricSpec, check_metric_invariance, contact_condition, total
from gtd.systems import ideal_gas, van_der_waals, vdw_singularity_indicator


def test_1_ideal_gas_flatness():
    sys, spec = ideal_gas(), MetricSpec.ginv2(-1, -1.0)
    start = time.perf_counter()
    axis = np.linspace(0.1, 10.0, 20)
    worst = max(abs(scalar_curvature(sys, spec, E)) for E in itertools.product(axis, axis))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-8 and elapsed < 5.0
    assert report(1, ok, f"max|R|={worst:.3g} over 400 points in {elapsed:.2f}s")


def _slope(approach):
    D = np.log([a[1] for a in approach])
    R = np.log([a[2] for a in approach])
    return float(np.polyfit(D, R, 1)[0])


def test_2_vdw_singularity_exponent():
    sys = van_der_waals()
    start = time.perf_counter()
    (root,) = singular_curve_scan(sys, U_lines=[0.2], spec=MetricSpec.ginv2(-1, 1.0))
    slope = _slope(root.approach)
    elapsed = time.perf_counter() - start
    ok = abs(slope + 2.0) <= 0.1 and elapsed < 10.0
    detail = f"slope={slope:.4f} at root E={tuple(round(x, 6) for x in root.E)} in {elapsed:.2f}s"
    assert report(2, ok, detail)


def _hessian_metric_scalar(sys, E):
    # g_ab = -Phi_ab with exact derivatives through fourth order
    jet = sys.jet(E, 4)
    n = sys.n
    idx = range(n)
    g = -np.array([[jet.partial(a, b) for b in idx] for a in idx])
    dg = -np.array([[[jet.partial(c, a, b) for b in idx] for a in idx] for c in idx])
    d2g = -np.array([[[[jet.partial(c, d, a, b) for b in idx] for a in idx] for d in idx] for c in idx])
    ginv, _, riem = riemann_from_derivatives(g, dg, d2g)
    return float(np.einsum("bd,abad->", ginv, riem))


def test_2_supplementary_hessian_metric_diverges_as_inverse_square():
    # not the gate: the entropy Hessian metric, whose determinant vanishes with D
    sys = van_der_waals()
    (root,) = singular_curve_scan(sys, U_lines=[0.2])
    U, V = root.E
    ds = [1e-3 / 2**i for i in range(4)]
    D = [abs(vdw_singularity_indicator(sys, (U, V - d))) for d in ds]
    R = [abs(_hessian_metric_scalar(sys, (U, V - d))) for d in ds]
    slope = float(np.polyfit(np.log(D), np.log(R), 1)[0])
    assert abs(slope + 2.0) <= 0.1


def test_3_ideal_gas_straight_geodesics():
    sys, spec = ideal_gas(), MetricSpec.ginv2(-1, -1.0)
    worst = 0.0
    for i in range(8):
        t = i * math.pi / 4
        tr = integrate(sys, spec, (1.0, 1.0), (math.cos(t), math.sin(t)), 5.0, 1e-3, chart="log")
        assert tr.status is Status.COMPLETED
        worst = max(worst, chord_deviation(tr.x))
    assert report(3, worst < 1e-6, f"max chord deviation={worst:.3g} over 8 directions")


def test_4_scalar_curvature_legendre_invariance():
    cases = [
        ("ginv2", MetricSpec.ginv2(-1, 1.0), [(0,), total(2)]),
        ("mfo", MetricSpec.mfo(), [total(2)]),
        ("mso", MetricSpec.mso(), [total(2)]),
    ]
    worst = 0.0
    for sys, bounds in [(ideal_gas(), IDEAL_BOUNDS), (van_der_waals(), VDW_BOUNDS)]:
        pts = seeded_points(2024, 20, bounds)
        for _, spec, idxs in cases:
            for idx in idxs:
                worst = max(worst, scalar_invariance_deviation(sys, spec, pts, idx))
    zs = [lift(ideal_gas(), E) for E in seeded_points(2024, 20, IDEAL_BOUNDS)]
    control = check_metric_invariance(MetricSpec.euclidean(), total(2), zs)
    ok = worst < 1e-6 and control >= 0.1
    assert report(4, ok, f"max deviation={worst:.3g}; flat control deviation={control:.3g}")


def test_5_field_equations():
    axis = np.linspace(0.5, 5.0, 10)
    grid = list(itertools.product(axis, axis))
    const = LambdaAnsatz.from_source("-1", -1)
    w_const = max(np.max(np.abs(ideal_gas_conditions(const, E))) for E in grid)
    w_power = 0.0
    for k in (-1, 0, 1):
        ans = LambdaAnsatz.from_source(f"(U*V)^({-2 * (k + 1)})", k)
        w_power = max(w_power, max(np.max(np.abs(ideal_gas_conditions(ans, E))) for E in grid))
    control = ideal_gas_conditions(LambdaAnsatz.from_source("1", 0), (1.0, 1.0))
    ok = w_const <= 1e-12 and w_power <= 1e-10 and np.allclose(control, [2.0, 2.0], rtol=0, atol=1e-12)
    detail = f"const={w_const:.3g}, power ansatz={w_power:.3g}, k=0 control={control.tolist()}"
    assert report(5, ok, detail)


def _fd_oracles(sys, spec, E):
    f = lambda x: pullback_metric(sys, spec, x)
    g = f(E)
    dg, _ = finite_diff.gradient(f, E, rel=1e-3)
    d2g, _ = finite_diff.hessian(f, E, rel=1e-3)
    ginv, gamma, riem = riemann_from_derivatives(g, dg, d2g)
    return gamma, float(np.einsum("bd,abad->", ginv, riem))


def test_6_exact_derivatives_match_finite_difference_oracles():
    worst_gamma = worst_R = 0.0
    for sys, bounds in [(ideal_gas(), IDEAL_BOUNDS), (van_der_waals(), VDW_BOUNDS)]:
        for spec in (MetricSpec.ginv2(-1, 1.0), MetricSpec.mso()):
            for E in seeded_points(606, 10, bounds):
                gamma_fd, R_fd = _fd_oracles(sys, spec, E)
                worst_gamma = max(worst_gamma, rel(christoffel(sys, spec, E), gamma_fd))
                R = scalar_curvature(sys, spec, E)
                # relative above |R| = 1, absolute below (flat cases)
                worst_R = max(worst_R, abs(R - R_fd) / max(abs(R_fd), 1.0))
    ok = worst_gamma < 1e-5 and worst_R < 1e-5
    assert report(6, ok, f"Christoffel rel={worst_gamma:.3g}, scalar R rel={worst_R:.3g}")


def test_7_vdw_geodesic_incompleteness():
    sys, spec = van_der_waals(), MetricSpec.ginv2(-1, 1.0)
    V0 = 0.1 + 1e-3
    statuses, ok = [], True
    for U0 in (0.5, 1.0, 2.0, 4.0):
        D0 = abs(vdw_singularity_indicator(sys, (U0, V0)))
        a = integrate(sys, spec, (U0, V0), VDW_SWEEP_VELOCITY, 5.0, 1e-3)
        b = integrate(sys, spec, (U0, V0), VDW_SWEEP_VELOCITY, 5.0, 5e-4)
        ratio = abs(vdw_singularity_indicator(sys, a.E[-1])) / D0
        stable = np.allclose(a.E[-1], b.E[-1], rtol=1e-4, atol=0)
        hit = a.status is Status.SINGULARITY_HIT and b.status is Status.SINGULARITY_HIT
        ok &= hit and ratio < 1e-3 and stable
        statuses.append(f"U0={U0}:{a.status.value}(|D|/D0={ratio:.2g})")
    assert report(7, ok, "; ".join(statuses))


def test_8_contact_condition():
    coefs = [contact_condition(n) for n in (1, 2, 3)]
    exact = contact_condition(2, form=lambda Z: [1.0, 0.0, 0.0, 0.0, 0.0])
    ok = all(abs(abs(c) - math.factorial(n)) <= 1e-12 for n, c in zip((1, 2, 3), coefs)) and exact == 0.0
    assert report(8, ok, f"coefficients={coefs}; d(phi) control={exact}")
