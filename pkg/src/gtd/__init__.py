"""Geometrothermodynamics: Legendre-invariant metrics, curvature and geodesics of
thermodynamic equilibrium manifolds."""

from .equilibrium import CurvatureReport, curvature, lift, pullback_metric, scalar_curvature
from .errors import (
    ConfigError,
    DegenerateMetricError,
    DomainError,
    GTDError,
    ParseError,
    UndeclaredIdentifierError,
)
from .expr import DerivativeBundle, Expression, evaluate, parse
from .fieldeq import LambdaAnsatz, harmonic_residual, ideal_gas_conditions
from .geodesic import GeodesicTrace, Status, integrate
from .phase import Family, MetricSpec, PhasePoint, legendre_transform
from .systems import ThermoSystem, ideal_gas, load_system, van_der_waals

__all__ = [
    "ConfigError",
    "CurvatureReport",
    "DegenerateMetricError",
    "DerivativeBundle",
    "DomainError",
    "Expression",
    "Family",
    "GTDError",
    "GeodesicTrace",
    "LambdaAnsatz",
    "MetricSpec",
    "ParseError",
    "PhasePoint",
    "Status",
    "ThermoSystem",
    "UndeclaredIdentifierError",
    "curvature",
    "evaluate",
    "harmonic_residual",
    "ideal_gas",
    "ideal_gas_conditions",
    "integrate",
    "legendre_transform",
    "lift",
    "load_system",
    "parse",
    "pullback_metric",
    "scalar_curvature",
    "van_der_waals",
]
