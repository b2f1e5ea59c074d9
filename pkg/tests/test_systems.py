import numpy as np
import pytest
import sympy as sp

from gtd.errors import ConfigError, DomainError
from gtd.systems import (
    equations_of_state,
    entropy_monotonicity,
    ideal_gas,
    is_in_domain,
    load_system,
    van_der_waals,
    vdw_singularity_indicator,
)
from gtd.equilibrium import singular_curve_scan

GRID = np.linspace(0.1, 10.0, 20)


@pytest.mark.parametrize("E,T,P", [((1.5, 1.0), 1.0, 1.0), ((3.0, 2.0), 2.0, 1.0)])
def test_ideal_gas_state_by_hand(ideal, E, T, P):
    st = equations_of_state(ideal, E)
    assert st.T == pytest.approx(T, rel=1e-15) and st.P == pytest.approx(P, rel=1e-15)


@pytest.mark.parametrize("kappa", [1.0, 2.5])
def test_ideal_gas_laws_on_grid(kappa):
    sys = ideal_gas(kappa)
    for U in GRID:
        for V in GRID:
            st = equations_of_state(sys, (U, V))
            assert abs(st.P * st.V - kappa * st.T) <= 1e-12 * kappa * st.T
            assert abs(st.U - 1.5 * kappa * st.T) <= 1e-12 * st.U


def test_vdw_without_interaction_is_ideal():
    ideal = ideal_gas()
    free = van_der_waals(a=0.0, b=0.0)
    for U in GRID[::3]:
        for V in GRID[::3]:
            a, b = equations_of_state(ideal, (U, V)), equations_of_state(free, (U, V))
            assert (a.T, a.P) == pytest.approx((b.T, b.P), rel=1e-14)


def test_vdw_limit_small_parameters():
    # the physical gap is about a/(UV), which reaches 1e-6 at U = V = 0.1
    ideal = ideal_gas()
    near = van_der_waals(a=1e-8, b=1e-8)
    for U in np.linspace(0.5, 10.0, 20):
        for V in np.linspace(0.5, 10.0, 20):
            a, b = equations_of_state(ideal, (U, V)), equations_of_state(near, (U, V))
            assert abs(a.T - b.T) / a.T < 1e-6 and abs(a.P - b.P) / a.P < 1e-6
            assert abs(a.S - b.S) <= 1e-6 * max(1.0, abs(a.S))


def test_indicator_without_attraction_is_positive():
    sys = van_der_waals(a=0.0, b=0.0)
    for U in GRID[::5]:
        for V in GRID[::5]:
            assert vdw_singularity_indicator(sys, (U, V)) > 0


def test_indicator_matches_symbolic_substitution(vdw):
    U, V, k, a, b = sp.symbols("U V kappa a b", positive=True)
    S = sp.Rational(3, 2) * k * sp.log(U + a / V) + k * sp.log(V - b)
    T = 1 / sp.diff(S, U)
    P = T * sp.diff(S, V)
    D = sp.lambdify((U, V), (P * V**3 - a * V + 2 * a * b).subs({k: 1, a: 1, b: sp.Rational(1, 10)}))
    for E in [(1.0, 1.0), (0.2, 0.25), (4.0, 0.101), (2.0, 3.0)]:
        assert vdw_singularity_indicator(vdw, E) == pytest.approx(D(*E), rel=1e-12)


def test_indicator_root_on_U_line(vdw):
    roots = singular_curve_scan(vdw, U_lines=[0.2])
    assert roots, "D must change sign along U = 0.2"
    for p in roots:
        assert abs(p.D) < 1e-10


def test_no_roots_without_attraction():
    assert singular_curve_scan(van_der_waals(a=0.0, b=0.0), U_lines=[0.2, 1.0], V_range=(0.2, 5.0, 50)) == []


def test_indicator_rejects_ideal(ideal):
    with pytest.raises(ValueError):
        vdw_singularity_indicator(ideal, (1.0, 1.0))


def test_domain_guards(vdw, ideal):
    with pytest.raises(DomainError):
        vdw.jet((1.0, 0.1))
    with pytest.raises(DomainError):
        vdw.jet((-20.0, 0.2))
    with pytest.raises(DomainError):
        ideal.jet((0.0, 1.0))
    assert not is_in_domain(vdw, (1.0, 0.05))
    assert is_in_domain(vdw, (1.0, 0.5))


def test_unphysical_temperature_flagged():
    # negative kappa flips dS/dU
    sys = ideal_gas(-1.0)
    with pytest.raises(DomainError):
        equations_of_state(sys, (1.0, 1.0))


def test_entropy_monotonicity_reported_not_assumed(vdw):
    assert entropy_monotonicity(vdw, (2.0, 2.0)) == (True, True)
    # close to the attraction-dominated corner dS/dV turns negative
    dv_signs = {entropy_monotonicity(vdw, (0.05, V))[1] for V in np.linspace(0.2, 0.6, 20)}
    assert dv_signs == {True, False}


def test_load_system(tmp_path):
    assert load_system("vdw", a=2.0).parameters["a"] == 2.0
    f = tmp_path / "sys.txt"
    f.write_text("name = toy\nvariables = x\nequation = ln(x)\n")
    assert load_system(str(f)).n == 1
    with pytest.raises(ConfigError):
        load_system("nonexistent-system")
