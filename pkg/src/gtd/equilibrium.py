"""Geometry of the equilibrium manifold induced by a fundamental equation."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError
from .jet import Jet, compose_poly, invert_map, monomials
from .phase import (
    Family,
    MetricSpec,
    PhasePoint,
    check_nondegenerate,
    christoffel_from_derivatives,
    coordinate_names,
    eval_lambda,
    phase_metric,
)
from .systems import ThermoSystem, vdw_singularity_indicator


def lift(sys: ThermoSystem, E) -> PhasePoint:
    """Embed ``E`` in the phase manifold with the first law enforced (``I = grad phi``)."""
    jet = sys.jet(E, 1)
    return PhasePoint(jet.value, tuple(float(x) for x in E), tuple(jet.gradient()))


def lift_jacobian(sys: ThermoSystem, E) -> np.ndarray:
    """``dZ^A / dE^a`` of the embedding, shape ``(2n+1, n)``."""
    jet = sys.jet(E, 2)
    return np.vstack([jet.gradient(), np.eye(sys.n), jet.hessian()])


def _names(sys: ThermoSystem):
    return coordinate_names(sys.n, sys.potential_name, sys.extensive_names)


def metric_jets(sys: ThermoSystem, spec: MetricSpec, E, order: int = 0) -> list[list]:
    """Induced metric components as jets of ``order`` in the extensive variables."""
    phi = sys.jet(E, order + 2)
    evars = Jet.seed([float(x) for x in E], order + 2)
    return _metric_from_potential(phi, evars, spec, _names(sys))


def _metric_from_potential(phi: Jet, evars: list, spec: MetricSpec, names) -> list[list]:
    n = phi.nvars
    grad = [phi.deriv(a) for a in range(n)]
    hess = [[grad[a].deriv(b) for b in range(n)] for a in range(n)]
    Z = [phi] + evars + grad
    if spec.family is Family.EUCLIDEAN:
        return [
            [
                (1.0 if a == b else 0.0)
                + grad[a] * grad[b]
                + sum((hess[c][a] * hess[c][b] for c in range(n)), 0.0)
                for b in range(n)
            ]
            for a in range(n)
        ]
    lam = eval_lambda(spec, Z, names)
    x = [evars[a] * grad[a] for a in range(n)]
    if spec.family is Family.GINV2:
        p = spec.exponent
        if p < 0:
            for a in range(n):
                if x[a].value == 0.0:
                    raise DomainError(f"E_{a + 1} dphi/dE_{a + 1} = 0 with negative exponent {p}")
        w = [x[a].power(p) for a in range(n)]
        return [[lam * (0.5 * (w[a] + w[b])) * hess[a][b] for b in range(n)] for a in range(n)]
    xi = spec.xi.diagonal(n)
    chi = spec.chi.diagonal(n)
    factor = lam * sum((xi[a] * x[a] for a in range(n)), 0.0)
    return [[factor * (0.5 * (chi[a] + chi[b])) * hess[a][b] for b in range(n)] for a in range(n)]


def _values(M) -> np.ndarray:
    return np.array([[m.value if isinstance(m, Jet) else float(m) for m in row] for row in M])


def pullback_metric(sys: ThermoSystem, spec: MetricSpec, E) -> np.ndarray:
    """Induced metric ``g_ab`` at ``E`` from the closed-form components."""
    return _values(metric_jets(sys, spec, E, 0))


def pullback_consistency(sys: ThermoSystem, spec: MetricSpec, E) -> float:
    """Relative gap between the closed form and ``J^T G J`` through the embedding."""
    g = pullback_metric(sys, spec, E)
    J = lift_jacobian(sys, E)
    G = phase_metric(spec, lift(sys, E), _names(sys))
    other = J.T @ G @ J
    return float(np.max(np.abs(g - other)) / max(np.max(np.abs(g)), np.finfo(float).tiny))


def metric_derivatives(sys: ThermoSystem, spec: MetricSpec, E):
    """``g``, ``dg[c, a, b]`` and ``d2g[c, d, a, b]`` by exact differentiation."""
    return _split(metric_jets(sys, spec, E, 2), sys.n)


def _split(M, n: int):
    g = np.zeros((n, n))
    dg = np.zeros((n, n, n))
    d2g = np.zeros((n, n, n, n))
    for a in range(n):
        for b in range(n):
            m = M[a][b]
            if not isinstance(m, Jet):
                g[a, b] = m
                continue
            g[a, b] = m.value
            dg[:, a, b] = m.gradient()
            d2g[:, :, a, b] = m.hessian()
    return g, dg, d2g


def riemann_from_derivatives(g, dg, d2g):
    """Christoffel symbols and Riemann tensor from metric derivatives.

    ``R[a, b, c, d] = d_c G^a_db - d_d G^a_cb + G^a_ce G^e_db - G^a_de G^e_cb``.
    """
    ginv = np.linalg.inv(g)
    T = np.einsum("cdb->dbc", dg) + np.einsum("bcd->dbc", dg) - dg
    gamma = 0.5 * np.einsum("ad,dbc->abc", ginv, T)
    # e indexes the extra derivative
    dT = np.einsum("ecdb->edbc", d2g) + np.einsum("ebcd->edbc", d2g) - d2g
    dginv = -np.einsum("ap,epq,qd->ead", ginv, dg, ginv)
    dgamma = 0.5 * (np.einsum("ead,dbc->eabc", dginv, T) + np.einsum("ad,edbc->eabc", ginv, dT))
    # half[a, b, c, d] = d_c G^a_db + G^a_ce G^e_db; antisymmetrising it in
    # (c, d) makes R^a_bcd = -R^a_bdc hold bit for bit
    half = np.einsum("cadb->abcd", dgamma) + np.einsum("ace,edb->abcd", gamma, gamma)
    riemann = half - np.swapaxes(half, 2, 3)
    return ginv, gamma, riemann


@dataclass
class CurvatureReport:
    E: tuple[float, ...]
    g: np.ndarray
    g_inv: np.ndarray
    christoffel: np.ndarray
    riemann: np.ndarray
    ricci: np.ndarray
    scalar_R: float
    det_g: float
    D: float | None = None

    @property
    def riemann_lowered(self) -> np.ndarray:
        return np.einsum("ae,ebcd->abcd", self.g, self.riemann)

    @property
    def R1212(self) -> float:
        """The single independent lowered component when n = 2."""
        return float(self.riemann_lowered[0, 1, 0, 1])

    def to_dict(self) -> dict:
        return {
            "g": self.g.tolist(),
            "g_inv": self.g_inv.tolist(),
            "christoffel": self.christoffel.tolist(),
            "riemann": self.riemann.tolist(),
            "ricci": self.ricci.tolist(),
            "scalar_R": self.scalar_R,
            "det_g": self.det_g,
            "D": self.D,
        }


def curvature(sys: ThermoSystem, spec: MetricSpec, E) -> CurvatureReport:
    """Connection, Riemann, Ricci and scalar curvature of g at ``E``."""
    g, dg, d2g = metric_derivatives(sys, spec, E)
    det = check_nondegenerate(g, "equilibrium metric")
    ginv, gamma, riemann = riemann_from_derivatives(g, dg, d2g)
    ricci = np.einsum("abad->bd", riemann)
    scalar = float(np.einsum("bd,bd->", ginv, ricci))
    D = vdw_singularity_indicator(sys, E) if sys.kind == "vdw" else None
    return CurvatureReport(
        E=tuple(float(x) for x in E),
        g=g,
        g_inv=ginv,
        christoffel=gamma,
        riemann=riemann,
        ricci=ricci,
        scalar_R=scalar,
        det_g=det,
        D=D,
    )


def _scalar_from_metric(M, n: int) -> float:
    g, dg, d2g = _split(M, n)
    check_nondegenerate(g, "equilibrium metric")
    ginv, _, riemann = riemann_from_derivatives(g, dg, d2g)
    return float(np.einsum("bd,abad->", ginv, riemann))


def legendre_dual_scalar(sys: ThermoSystem, spec: MetricSpec, E, idx) -> tuple[np.ndarray, float]:
    """Scalar curvature computed from the Legendre-transformed potential.

    The transformed potential is built as a function of its own extensive
    variables ``E~`` (for ``i`` in ``idx``: ``E~^i = I^i``) by inverting
    ``E -> E~`` as a Taylor series, then run through the same metric formula.
    Returns ``(E~, R)``; for an invariant metric ``R`` equals the curvature at
    ``E``.
    """
    idx = sorted(set(idx))
    n = sys.n
    if any(i < 0 or i >= n for i in idx):
        raise IndexError(f"Legendre index out of range for n={n}: {idx}")
    order = 4
    phi = sys.jet(E, order)
    grad = [phi.deriv(a) for a in range(n)]  # order 3
    evars = Jet.seed([float(x) for x in E], order - 1)
    fwd = [grad[a] if a in idx else evars[a] for a in range(n)]
    dE = invert_map(fwd, order - 1)
    # intensive variables of the dual: I~^i = -E^i for i in idx, I^j otherwise
    dual_grad = [
        -(dE[a] + float(E[a])) if a in idx else compose_poly(grad[a], dE)
        for a in range(n)
    ]
    Et = np.array([f.value for f in fwd])
    phi_t = float(phi.value) + sum(Et[i] * dual_grad[i].value for i in idx)
    phi_jet = _integrate_gradient(phi_t, dual_grad, order)
    evars_t = Jet.seed(Et, order)
    M = _metric_from_potential(phi_jet, evars_t, spec, coordinate_names(n))
    return Et, _scalar_from_metric(M, n)


def _integrate_gradient(value: float, grad: list, order: int) -> Jet:
    """Jet of order ``order`` whose value is ``value`` and whose gradient jets are ``grad``."""
    n = len(grad)
    mons = monomials(n, order)
    lower = {m: i for i, m in enumerate(monomials(n, order - 1))}
    fac = np.array([math.prod(math.factorial(e) for e in m) for m in mons], dtype=float)
    coef = np.zeros(len(mons))
    coef[0] = value
    for k, m in enumerate(mons[1:], start=1):
        v = next(i for i, e in enumerate(m) if e)
        src = list(m)
        src[v] -= 1
        # partial of phi with multi-index m = partial of grad_v with m - e_v
        d = grad[v].coef[lower[tuple(src)]] * math.prod(math.factorial(e) for e in src)
        coef[k] = d / fac[k]
    return Jet(coef, n, order)


def scalar_invariance_deviation(sys: ThermoSystem, spec: MetricSpec, samples, idx) -> float:
    """Largest gap between R and its Legendre-dual recomputation.

    The gap is relative for curvatures above 1 in magnitude and absolute
    below, so that flat systems compare their roundoff absolutely.
    """
    worst = 0.0
    for E in samples:
        R = scalar_curvature(sys, spec, E)
        _, Rt = legendre_dual_scalar(sys, spec, E, idx)
        worst = max(worst, abs(R - Rt) / max(abs(R), abs(Rt), 1.0))
    return worst


def scalar_curvature(sys: ThermoSystem, spec: MetricSpec, E) -> float:
    return curvature(sys, spec, E).scalar_R


def christoffel(sys: ThermoSystem, spec: MetricSpec, E) -> np.ndarray:
    """Christoffel symbols of g only (needs third derivatives of the potential)."""
    M = metric_jets(sys, spec, E, 1)
    n = sys.n
    g = np.zeros((n, n))
    dg = np.zeros((n, n, n))
    for a in range(n):
        for b in range(n):
            m = M[a][b]
            if isinstance(m, Jet):
                g[a, b] = m.value
                dg[:, a, b] = m.gradient()
            else:
                g[a, b] = m
    check_nondegenerate(g, "equilibrium metric")
    return christoffel_from_derivatives(g, dg)


class HessianSignature(str, enum.Enum):
    CONCAVE = "concave"
    CONVEX = "convex"
    INDEFINITE = "indefinite"
    DEGENERATE = "degenerate"


def second_law_classify(sys: ThermoSystem, E, rtol: float = 1e-12) -> HessianSignature:
    """Classify the Hessian of the potential by the signs of its eigenvalues."""
    eig = np.linalg.eigvalsh(sys.jet(E, 2).hessian())
    scale = np.max(np.abs(eig))
    if scale == 0.0 or np.any(np.abs(eig) <= rtol * scale):
        return HessianSignature.DEGENERATE
    if np.all(eig < 0):
        return HessianSignature.CONCAVE
    if np.all(eig > 0):
        return HessianSignature.CONVEX
    return HessianSignature.INDEFINITE


# ---------------------------------------------------------------------------
# Singular curve of the van der Waals gas
# ---------------------------------------------------------------------------


@dataclass
class SingularPoint:
    E: tuple[float, float]
    D: float
    line: str
    # (distance, |D|, |R|) at points approaching the root along the line
    approach: list = field(default_factory=list)

    @property
    def slope(self) -> float | None:
        """Log-log slope of |R| against |D| over the approach samples."""
        pts = [(d, r) for _, d, r in self.approach if d > 0 and r > 0 and math.isfinite(r)]
        if len(pts) < 2:
            return None
        x = np.log([p[0] for p in pts])
        y = np.log([p[1] for p in pts])
        return float(np.polyfit(x, y, 1)[0])


def _find_roots(f, grid: Sequence[float]) -> list[float]:
    roots = []
    vals = []
    for x in grid:
        try:
            vals.append(f(x))
        except (DomainError, ValueError):
            vals.append(math.nan)
    for (x0, f0), (x1, f1) in zip(zip(grid, vals), zip(grid[1:], vals[1:])):
        if not (math.isfinite(f0) and math.isfinite(f1)):
            continue
        if f0 == 0.0:
            roots.append(float(x0))
        elif f0 * f1 < 0:
            roots.append(float(brentq(f, x0, x1, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)))
    return roots


def singular_curve_scan(
    sys: ThermoSystem,
    U_lines: Sequence[float] = (),
    V_range: tuple[float, float, int] | None = None,
    V_lines: Sequence[float] = (),
    U_range: tuple[float, float, int] | None = None,
    spec: MetricSpec | None = None,
    offsets: Sequence[float] = (1e-3, 5e-4, 2.5e-4, 1.25e-4),
) -> list[SingularPoint]:
    """Roots of the singularity indicator along grid lines.

    ``U_lines`` are scanned in V over ``V_range = (lo, hi, count)`` and
    ``V_lines`` in U over ``U_range``.  Each root is tagged with |R| at the
    given distances, on the side of the root where the line started.
    """
    if sys.kind != "vdw":
        raise ValueError("singular curve scan needs a van der Waals system")
    spec = spec or MetricSpec.ginv2(-1, 1.0)
    found = []
    if U_lines:
        lo, hi, count = V_range or (sys.parameters["b"] * 1.0001, 1.0, 200)
        grid = list(np.linspace(lo, hi, int(count)))
        for U in U_lines:
            for V in _find_roots(lambda v: vdw_singularity_indicator(sys, (U, v)), grid):
                found.append(_tag(sys, spec, (U, V), 1, offsets, "U"))
    if V_lines:
        lo, hi, count = U_range or (0.01, 10.0, 200)
        grid = list(np.linspace(lo, hi, int(count)))
        for V in V_lines:
            for U in _find_roots(lambda u: vdw_singularity_indicator(sys, (u, V)), grid):
                found.append(_tag(sys, spec, (U, V), 0, offsets, "V"))
    return found


def _tag(sys, spec, E, axis, offsets, line) -> SingularPoint:
    E = (float(E[0]), float(E[1]))
    point = SingularPoint(E, vdw_singularity_indicator(sys, E), line)
    for side in (-1.0, 1.0):
        approach = []
        try:
            for d in offsets:
                P = list(E)
                P[axis] += side * d
                approach.append((d, abs(vdw_singularity_indicator(sys, P)), abs(scalar_curvature(sys, spec, P))))
        except (DomainError, ArithmeticError, ValueError):
            continue
        point.approach = approach
        break
    return point
