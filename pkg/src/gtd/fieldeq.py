"""Harmonic-map field equations for the embedding of the equilibrium manifold.

For each phase coordinate ``Z^A`` the residual is

    (1/sqrt|g|) d_b(sqrt|g| g^{ab} d_a Z^A) + Gamma^A_BC d_b Z^B d_c Z^C g^{bc}

with ``g`` the induced metric and ``Gamma`` the connection of ``G`` evaluated
on the lifted point.  A vanishing vector means the equilibrium manifold is an
extremal hypersurface of the phase manifold.
"""

from __future__ import annotations

import dataclasses
from typing import Iterable, Sequence

import numpy as np

from . import finite_diff
from .equilibrium import _names, lift, lift_jacobian, metric_jets, pullback_metric
from .errors import DomainError
from .expr import Expression, parse
from .jet import Jet, jet_det, jet_inverse
from .phase import MetricSpec, check_nondegenerate, coordinate_names, eval_lambda, phase_christoffel
from .systems import ThermoSystem, ideal_gas

FD_REL_STEP = 1e-4
ZERO_TOL = 1e-12


@dataclasses.dataclass(frozen=True)
class ResidualComponent:
    A_index: int
    residual: float
    method: str
    fd_error_estimate: float | None = None

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclasses.dataclass(frozen=True)
class HarmonicResidual:
    E: tuple[float, ...]
    components: tuple[ResidualComponent, ...]

    @property
    def vector(self) -> np.ndarray:
        return np.array([c.residual for c in self.components])

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.vector))

    @property
    def method(self) -> str:
        return self.components[0].method

    def to_json(self) -> list[dict]:
        return [c.to_dict() for c in self.components]


@dataclasses.dataclass(frozen=True)
class LambdaAnsatz:
    """Conformal function ``Lambda(Z)`` over phase coordinates together with ``k``."""

    expression: Expression
    k: int = -1

    @classmethod
    def from_source(cls, source: str, k: int = -1, n: int = 2) -> LambdaAnsatz:
        names = list(coordinate_names(n, "S", ("U", "V")))
        return cls(parse(source, names), k)

    def spec(self) -> MetricSpec:
        return MetricSpec.ginv2(self.k, self.expression)


def _divergence_flux_jets(sys: ThermoSystem, spec: MetricSpec, E):
    """``sqrt|g| g^{ab} d_a Z^A`` as order-1 jets, plus ``sqrt|g|`` and ``g^{-1}``."""
    g = metric_jets(sys, spec, E, 1)
    n = sys.n
    g0 = np.array([[x.value for x in row] for row in g])
    check_nondegenerate(g0, "induced metric")
    det = jet_det(g)
    root = (det if det.value > 0 else -det).sqrt()
    ginv = jet_inverse(g)
    phi = sys.jet(E, 3)
    grad = [phi.deriv(a) for a in range(n)]
    # dZ^A/dE^a as order-1 jets
    dZ = [[grad[a].truncate(1) for a in range(n)]]
    dZ += [[1.0 if a == c else 0.0 for a in range(n)] for c in range(n)]
    dZ += [[grad[c].deriv(a) for a in range(n)] for c in range(n)]
    flux = [[root * sum((ginv[a][b] * dZ[A][a] for a in range(n)), 0.0) for b in range(n)] for A in range(len(dZ))]
    return flux, root.value, np.array([[x.value for x in row] for row in ginv])


def _connection_term(sys: ThermoSystem, spec: MetricSpec, E, ginv: np.ndarray) -> np.ndarray:
    gamma = phase_christoffel(spec, lift(sys, E), _names(sys))
    J = lift_jacobian(sys, E)
    return np.einsum("ABC,Bb,Cc,bc->A", gamma, J, J, ginv)


def _residual_parts(sys: ThermoSystem, spec: MetricSpec, E: np.ndarray, method: str):
    n = sys.n
    if method == "exact":
        flux, root, ginv = _divergence_flux_jets(sys, spec, E)
        div = np.array([sum(flux[A][b].partial(b) for b in range(n)) for A in range(2 * n + 1)]) / root
        err = None
    elif method == "fd":
        g = pullback_metric(sys, spec, E)
        check_nondegenerate(g, "induced metric")
        ginv = np.linalg.inv(g)
        root = np.sqrt(abs(np.linalg.det(g)))

        def flux(x):
            gx = pullback_metric(sys, spec, x)
            return np.sqrt(abs(np.linalg.det(gx))) * lift_jacobian(sys, x) @ np.linalg.inv(gx)

        d, err = finite_diff.gradient(flux, E, rel=FD_REL_STEP, levels=5)
        # d[b, A, b'] -> sum over b = b'
        div = np.einsum("bAb->A", d) / root
        err = err / root
    else:
        raise ValueError(f"unknown method {method!r}")
    return div, _connection_term(sys, spec, E, ginv), err


def harmonic_residual(sys: ThermoSystem, spec: MetricSpec, E, method: str = "exact") -> HarmonicResidual:
    """Residual of the field equations per phase coordinate at ``E``.

    ``method="exact"`` differentiates the composed closed forms with jets;
    ``method="fd"`` uses Richardson-extrapolated central differences for the
    divergence term and attaches their error estimate.
    """
    sys.check_domain(E)
    E = np.asarray(E, dtype=float)
    div, conn, err = _residual_parts(sys, spec, E, method)
    res = div + conn
    comps = tuple(ResidualComponent(A, float(r), method, err) for A, r in enumerate(res))
    return HarmonicResidual(tuple(float(x) for x in E), comps)


def _lambda_partials(ansatz: LambdaAnsatz, z: np.ndarray) -> tuple[float, np.ndarray]:
    names = coordinate_names(2, "S", ("U", "V"))
    lam = ansatz.expression
    if lam.is_constant:
        return lam.root.value, np.zeros(5)
    jets = Jet.seed(z, 1)
    used, _ = lam.free_names()
    val = lam.substitute({v: jets[names[v]] for v in used})
    if isinstance(val, Jet):
        return val.value, val.gradient()
    return float(val), np.zeros(5)


def _condition_terms(ansatz: LambdaAnsatz, E, kappa: float) -> np.ndarray:
    U, V = (float(x) for x in E)
    if U <= 0 or V <= 0:
        raise DomainError(f"ideal gas requires U, V > 0 (got U={U}, V={V})")
    z = lift(ideal_gas(kappa), (U, V)).as_array()
    L, dL = _lambda_partials(ansatz, z)
    k = ansatz.k
    return np.array(
        [
            [dL[1], 1.5 * kappa / U**2 * dL[3], 2 * (k + 1) * L / U],
            [dL[2], kappa / V**2 * dL[4], 2 * (k + 1) * L / V],
        ]
    )


def ideal_gas_conditions(ansatz: LambdaAnsatz, E, kappa: float = 1.0) -> np.ndarray:
    """Left-hand sides of the two reduced ideal-gas extremality conditions.

    Uses ``Z^3 = 1/T = 3 kappa / (2U)`` and ``Z^4 = P/T = kappa / V`` on the
    lifted point; partials of Lambda are exact.
    """
    t = _condition_terms(ansatz, E, kappa)
    return t[:, 0] + t[:, 1] + t[:, 2]


def conditions_consistency(ansatz: LambdaAnsatz, samples: Iterable[Sequence[float]], kappa: float = 1.0) -> float:
    """Worst mismatch between the full residual and the reduced conditions.

    The intensive row ``Z^{n+1+a}`` of the harmonic residual is expected to be
    the reduced condition ``a`` times ``1 / (Lambda^2 (E_a I_a)^(2k+1))`` up to
    a constant.  That constant is fitted by least squares across all samples
    per row and the return value is the largest misfit relative to the largest
    residual.

    An entry counts as zero when it is below ``ZERO_TOL`` times the size of the
    terms that cancel in it.  If both sides vanish everywhere the mismatch is
    0; if only one does, it is the largest relative size of the other.
    """
    sys = ideal_gas(kappa)
    spec = ansatz.spec()
    names = coordinate_names(2, "S", ("U", "V"))
    full, model, full_rel, model_rel = [], [], [], []
    for E in samples:
        E = np.asarray(E, dtype=float)
        sys.check_domain(E)
        z = lift(sys, E).as_array()
        lam = float(eval_lambda(spec, list(z), names))
        weight = 1.0 / (lam**2 * (z[1:3] * z[3:5]) ** spec.exponent)
        div, conn, _ = _residual_parts(sys, spec, E, "exact")
        row = (div + conn)[3:5]
        full.append(row)
        full_rel.append(np.abs(row) / np.maximum(np.abs(div[3:5]) + np.abs(conn[3:5]), 1e-300))
        terms = _condition_terms(ansatz, E, kappa)
        c = terms.sum(axis=1)
        model.append(c * weight)
        model_rel.append(np.abs(c) / np.maximum(np.abs(terms).sum(axis=1), 1e-300))
    full, model = np.array(full), np.array(model)
    full_zero = np.max(full_rel) < ZERO_TOL
    model_zero = np.max(model_rel) < ZERO_TOL
    if full_zero and model_zero:
        return 0.0
    if full_zero or model_zero:
        return float(np.max(model_rel if full_zero else full_rel))
    scale = max(np.max(np.abs(full)), np.max(np.abs(model)))
    worst = 0.0
    for col in range(2):
        x, y = model[:, col], full[:, col]
        s = float(x @ y / (x @ x)) if x @ x > 0 else 0.0
        worst = max(worst, float(np.max(np.abs(y - s * x))))
    return worst / scale
