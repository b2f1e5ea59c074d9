"""Built-in thermodynamic systems in the entropy representation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from .errors import ConfigError, DomainError
from .expr import Expression, jet_of, parse, parse_keyvalue, parse_params
from .jet import Jet

IDEAL_SOURCE = "(3/2)*kappa*ln(U) + kappa*ln(V)"
VDW_SOURCE = "(3/2)*kappa*ln(U + a/V) + kappa*ln(V - b)"


@dataclass(frozen=True)
class ThermoSystem:
    """A fundamental equation ``potential = f(extensive variables)``."""

    name: str
    fundamental: Expression
    parameters: Mapping[str, float] = field(default_factory=dict)
    potential_name: str = "S"
    kind: str = "custom"

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("a system needs at least one extensive variable")
        missing = set(self.fundamental.parameters) - set(self.parameters)
        if missing:
            raise ConfigError(f"no value for parameter(s) {sorted(missing)}")

    @property
    def extensive_names(self) -> tuple[str, ...]:
        return self.fundamental.variables

    @property
    def n(self) -> int:
        return len(self.fundamental.variables)

    def check_domain(self, E) -> None:
        if len(E) != self.n:
            raise ValueError(f"{self.name}: expected {self.n} coordinates, got {len(E)}")
        if self.kind == "ideal":
            U, V = E
            if U <= 0 or V <= 0:
                raise DomainError(f"ideal gas needs U > 0 and V > 0, got U={U}, V={V}")
        elif self.kind == "vdw":
            U, V = E
            a, b = self.parameters["a"], self.parameters["b"]
            if V <= b:
                raise DomainError(f"van der Waals gas needs V > b, got V={V}, b={b}")
            if U + a / V <= 0:
                raise DomainError(f"van der Waals gas needs U + a/V > 0 at U={U}, V={V}")

    def jet(self, E, order: int = 2) -> Jet:
        """Taylor jet of the potential at ``E`` (exact partials up to ``order``)."""
        self.check_domain(E)
        return jet_of(self.fundamental, [float(x) for x in E], self.parameters, order)

    def potential(self, E) -> float:
        return self.jet(E, 0).value

    def with_parameters(self, **params: float) -> ThermoSystem:
        merged = {**self.parameters, **params}
        return ThermoSystem(self.name, self.fundamental, merged, self.potential_name, self.kind)


def ideal_gas(kappa: float = 1.0) -> ThermoSystem:
    expr = parse(IDEAL_SOURCE, ["U", "V"], ["kappa"])
    return ThermoSystem("ideal", expr, {"kappa": kappa}, "S", "ideal")


def van_der_waals(kappa: float = 1.0, a: float = 1.0, b: float = 0.1) -> ThermoSystem:
    expr = parse(VDW_SOURCE, ["U", "V"], ["kappa", "a", "b"])
    return ThermoSystem("vdw", expr, {"kappa": kappa, "a": a, "b": b}, "S", "vdw")


BUILTIN = {"ideal": ideal_gas, "vdw": van_der_waals}


def system_from_definition(text: str) -> ThermoSystem:
    """Build a system from ``key = value`` definition text.

    Recognised keys: ``name``, ``variables``, ``potential``, ``params``
    and ``equation``.
    """
    kv = parse_keyvalue(text)
    try:
        variables = [v.strip() for v in kv["variables"].split(",") if v.strip()]
        equation = kv["equation"]
    except KeyError as exc:
        raise ConfigError(f"system definition lacks {exc.args[0]!r}") from None
    params = parse_params(kv.get("params", ""))
    name = kv.get("name", "custom")
    expr = parse(equation, variables, list(params))
    kind = name if name in BUILTIN and len(variables) == 2 else "custom"
    if kind == "vdw" and not {"a", "b"} <= set(params):
        kind = "custom"
    return ThermoSystem(name, expr, params, kv.get("potential", "S"), kind)


def load_system(spec: str, **overrides: float) -> ThermoSystem:
    """Resolve a built-in name or a path to a definition file."""
    if spec in BUILTIN:
        sys = BUILTIN[spec]()
    else:
        path = Path(spec)
        if not path.is_file():
            raise ConfigError(f"unknown system {spec!r} (not a built-in name or a file)")
        sys = system_from_definition(path.read_text())
    overrides = {k: v for k, v in overrides.items() if v is not None}
    return sys.with_parameters(**overrides) if overrides else sys


# ---------------------------------------------------------------------------
# Equations of state
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StateVariables:
    T: float
    P: float
    S: float
    U: float
    V: float


def equations_of_state(sys: ThermoSystem, E) -> StateVariables:
    """Temperature and pressure from ``1/T = dS/dU`` and ``P/T = dS/dV``."""
    if sys.n != 2:
        raise ValueError("equations of state are defined for two-variable systems")
    jet = sys.jet(E, 1)
    s_u, s_v = jet.partial(0), jet.partial(1)
    if s_u <= 0:
        raise DomainError(f"dS/dU = {s_u} <= 0 gives an unphysical temperature at {tuple(E)}")
    T = 1.0 / s_u
    return StateVariables(T=T, P=T * s_v, S=jet.value, U=float(E[0]), V=float(E[1]))


def vdw_singularity_indicator(sys: ThermoSystem, E) -> float:
    """``P V^3 - a V + 2 a b``; its zeros mark the van der Waals transitions."""
    if sys.kind != "vdw":
        raise ValueError(f"singularity indicator needs a van der Waals system, got {sys.kind!r}")
    a, b = sys.parameters["a"], sys.parameters["b"]
    st = equations_of_state(sys, E)
    V = st.V
    return st.P * V**3 - a * V + 2 * a * b


def entropy_monotonicity(sys: ThermoSystem, E) -> tuple[bool, bool]:
    """Whether dS/dU > 0 and dS/dV > 0 at ``E``."""
    grad = sys.jet(E, 1).gradient()
    return bool(grad[0] > 0), bool(grad[1] > 0)


def is_in_domain(sys: ThermoSystem, E) -> bool:
    try:
        sys.check_domain(E)
        return math.isfinite(sys.potential(E))
    except (DomainError, ValueError):
        return False

