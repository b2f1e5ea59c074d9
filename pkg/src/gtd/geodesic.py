"""Geodesics of the equilibrium metric and the entropy arrow along them."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .equilibrium import metric_jets, pullback_metric
from .errors import DegenerateMetricError, DomainError
from .jet import Jet
from .phase import MetricSpec, check_nondegenerate, christoffel_from_derivatives
from .systems import ThermoSystem, vdw_singularity_indicator

SINGULAR_D_RTOL = 1e-3
ENTROPY_TOL = 1e-10
# van der Waals sweep: start just above the excluded volume and cool at nearly fixed V
VDW_SWEEP_VELOCITY = (-1.0, 1e-3)


class Status(str, enum.Enum):
    COMPLETED = "completed"
    SINGULARITY_HIT = "singularity_hit"
    DOMAIN_EXIT = "domain_exit"
    STEP_UNDERFLOW = "step_underflow"


class Admissibility(str, enum.Enum):
    ADMISSIBLE = "admissible"
    INADMISSIBLE = "inadmissible"
    MIXED = "mixed"


@dataclass(frozen=True)
class Chart:
    """Coordinates ``x`` on the equilibrium manifold with ``E = to_E(x)``.

    ``dE`` and ``d2E`` return the diagonal first and second derivatives of the
    (componentwise) map; both built-in charts act coordinate by coordinate.
    """

    name: str
    to_E: Callable[[np.ndarray], np.ndarray]
    from_E: Callable[[np.ndarray], np.ndarray]
    dE: Callable[[np.ndarray], np.ndarray]
    d2E: Callable[[np.ndarray], np.ndarray]


RAW = Chart(
    "raw",
    to_E=lambda x: np.asarray(x, dtype=float),
    from_E=lambda E: np.asarray(E, dtype=float),
    dE=lambda x: np.ones(len(x)),
    d2E=lambda x: np.zeros(len(x)),
)

LOG = Chart(
    "log",
    to_E=lambda x: np.exp(np.asarray(x, dtype=float)),
    from_E=lambda E: np.log(np.asarray(E, dtype=float)),
    dE=lambda x: np.exp(np.asarray(x, dtype=float)),
    d2E=lambda x: np.exp(np.asarray(x, dtype=float)),
)

CHARTS = {"raw": RAW, "log": LOG}


def geometry(sys: ThermoSystem, spec: MetricSpec, x, chart: Chart = RAW):
    """Metric and Christoffel symbols in chart coordinates at ``x``."""
    x = np.asarray(x, dtype=float)
    E = chart.to_E(x)
    n = sys.n
    M = metric_jets(sys, spec, E, 1)
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
    gamma = christoffel_from_derivatives(g, dg)
    if chart is RAW:
        return g, gamma
    j = chart.dE(x)
    j2 = chart.d2E(x)
    g_chart = g * np.outer(j, j)
    # Gamma~^a_bc = (Gamma^a_bc j_b j_c + delta_abc j2_a) / j_a
    gamma_chart = gamma * j[None, :, None] * j[None, None, :]
    for a in range(n):
        gamma_chart[a, a, a] += j2[a]
    gamma_chart /= j[:, None, None]
    return g_chart, gamma_chart


@dataclass
class GeodesicTrace:
    tau: np.ndarray
    x: np.ndarray
    v: np.ndarray
    E: np.ndarray
    S: np.ndarray
    ds: np.ndarray
    status: Status
    chart: str = "raw"
    speed2: np.ndarray = field(default=None, repr=False)

    @property
    def length(self) -> float:
        return float(self.ds[-1]) if len(self.ds) else 0.0

    @property
    def endpoint(self) -> np.ndarray:
        return self.E[-1]

    def __len__(self):
        return len(self.tau)

    def rows(self):
        """Rows for the trace CSV; the status appears on the final row only."""
        n = self.x.shape[1]
        for i in range(len(self.tau)):
            status = self.status.value if i == len(self.tau) - 1 else ""
            yield (self.tau[i], *self.E[i][:n], *self.v[i][:n], self.S[i], self.ds[i], status)


def _rk4(f, y, h):
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


class _Halt(Exception):
    def __init__(self, status):
        self.status = status


def integrate(
    sys: ThermoSystem,
    spec: MetricSpec,
    E0,
    v0,
    tau_max: float,
    step: float,
    chart: Chart | str = RAW,
    d_rtol: float = SINGULAR_D_RTOL,
) -> GeodesicTrace:
    """Fixed-step RK4 solution of the geodesic equation.

    ``E0`` is given in extensive variables; ``v0`` is the initial velocity in
    chart coordinates.  Integration stops early on a degenerate metric, on a
    van der Waals indicator below ``d_rtol`` times its initial magnitude (the
    crossing point is located by bisection on the last step) or on leaving
    the domain.
    """
    chart = CHARTS[chart] if isinstance(chart, str) else chart
    if step <= 0:
        raise ValueError("step must be positive")
    if tau_max < 0:
        raise ValueError("tau_max must be non-negative")
    E0 = np.asarray(E0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    if not np.all(np.isfinite(v0)) or len(v0) != sys.n:
        raise ValueError("v0 must be a finite vector of length n")
    sys.check_domain(E0)
    n = sys.n
    watch_D = sys.kind == "vdw"
    D0 = abs(vdw_singularity_indicator(sys, E0)) if watch_D else None

    def rhs(y):
        x, v = y[:n], y[n:]
        if not np.all(np.isfinite(y)):
            raise _Halt(Status.STEP_UNDERFLOW)
        try:
            sys.check_domain(chart.to_E(x))
            _, gamma = geometry(sys, spec, x, chart)
        except DegenerateMetricError:
            raise _Halt(Status.SINGULARITY_HIT) from None
        except (DomainError, ValueError):
            raise _Halt(Status.DOMAIN_EXIT) from None
        except ArithmeticError:
            raise _Halt(Status.STEP_UNDERFLOW) from None
        return np.concatenate([v, -np.einsum("abc,b,c->a", gamma, v, v)])

    def observe(y):
        x = y[:n]
        E = chart.to_E(x)
        j = chart.dE(x)
        g = pullback_metric(sys, spec, E) * np.outer(j, j)
        return E, sys.potential(E), float(y[n:] @ g @ y[n:])

    y = np.concatenate([chart.from_E(E0), v0])
    E, S, sp2 = observe(y)
    taus, ys, Es, Ss, ds, sps = [0.0], [y], [E], [S], [0.0], [sp2]
    status = Status.COMPLETED
    nsteps = int(math.floor(tau_max / step + 1e-9))
    remainder = tau_max - nsteps * step
    plan = [step] * nsteps + ([remainder] if remainder > 1e-12 * step else [])
    tau = 0.0
    for h in plan:
        try:
            y_new = _rk4(rhs, y, h)
            if not np.all(np.isfinite(y_new)):
                raise _Halt(Status.STEP_UNDERFLOW)
            E_new = chart.to_E(y_new[:n])
            sys.check_domain(E_new)
        except _Halt as halt:
            status = halt.status
            break
        except DomainError:
            status = Status.DOMAIN_EXIT
            break
        if watch_D:
            D_prev = vdw_singularity_indicator(sys, chart.to_E(y[:n]))
            D_new = vdw_singularity_indicator(sys, E_new)
            thr = d_rtol * D0
            if abs(D_new) < thr or D_prev * D_new < 0:
                h_hit = _locate(lambda t: _D_along(sys, chart, rhs, y, t, n), h, D_prev, thr)
                y_new = _rk4(rhs, y, h_hit)
                h = h_hit
                status = Status.SINGULARITY_HIT
        try:
            E, S, sp2 = observe(y_new)
        except (DegenerateMetricError, DomainError, ValueError):
            status = Status.SINGULARITY_HIT
            break
        tau += h
        ds.append(ds[-1] + 0.5 * (math.sqrt(abs(sps[-1])) + math.sqrt(abs(sp2))) * h)
        taus.append(tau)
        ys.append(y_new)
        Es.append(E)
        Ss.append(S)
        sps.append(sp2)
        y = y_new
        if status is not Status.COMPLETED:
            break
    Y = np.array(ys)
    return GeodesicTrace(
        tau=np.array(taus),
        x=Y[:, :n],
        v=Y[:, n:],
        E=np.array(Es),
        S=np.array(Ss),
        ds=np.array(ds),
        status=status,
        chart=chart.name,
        speed2=np.array(sps),
    )


def _D_along(sys, chart, rhs, y, t, n) -> float:
    return vdw_singularity_indicator(sys, chart.to_E(_rk4(rhs, y, t)[:n]))


def _locate(D_of, h, D_start, thr, iters: int = 80) -> float:
    """Smallest partial step (to bisection precision) where |D| reaches ``thr``."""
    lo, hi = 0.0, h
    # shrink the bracket to the first zero crossing if there is one
    if D_start * D_of(h) < 0:
        a, b = 0.0, h
        for _ in range(iters):
            mid = 0.5 * (a + b)
            if D_start * D_of(mid) > 0:
                a = mid
            else:
                b = mid
        hi = b
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if abs(D_of(mid)) > thr:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * h:
            break
    return hi


def geodesic_residual(trace: GeodesicTrace, sys: ThermoSystem, spec: MetricSpec) -> np.ndarray:
    """Norm of ``x'' + Gamma x' x'`` at interior samples.

    ``x''`` comes from a five-point central difference of ``v``, so samples
    within two steps of either end or of an uneven step are skipped.
    """
    chart = CHARTS[trace.chart]
    out = []
    for i in range(2, len(trace.tau) - 2):
        dts = np.diff(trace.tau[i - 2 : i + 3])
        if not np.allclose(dts, dts[0], rtol=1e-9, atol=0):
            continue
        v = trace.v
        acc = (v[i - 2] - 8 * v[i - 1] + 8 * v[i + 1] - v[i + 2]) / (12 * dts[0])
        _, gamma = geometry(sys, spec, trace.x[i], chart)
        out.append(np.linalg.norm(acc + np.einsum("abc,b,c->a", gamma, v[i], v[i])))
    return np.array(out)


def admissibility(trace: GeodesicTrace, tol: float = ENTROPY_TOL) -> Admissibility:
    """Whether entropy never decreases along the trace (per-step tolerance ``tol``)."""
    if len(trace.S) < 2:
        raise ValueError("admissibility needs at least two samples")
    bad = np.nonzero(np.diff(trace.S) < -tol)[0]
    if len(bad) == 0:
        return Admissibility.ADMISSIBLE
    return Admissibility.MIXED if bad[0] > 0 else Admissibility.INADMISSIBLE


@dataclass
class RayResult:
    angle: float
    direction: tuple[float, ...]
    admissibility: Admissibility
    trace: GeodesicTrace = field(repr=False)


def reachable_region(
    sys: ThermoSystem,
    spec: MetricSpec,
    E_start,
    directions: Sequence,
    tau_max: float = 1.0,
    step: float = 1e-2,
    chart: Chart | str = LOG,
) -> list[RayResult]:
    """Classify geodesics leaving ``E_start`` along each direction.

    ``directions`` holds angles in radians (n = 2) or explicit chart-velocity
    vectors; each is normalised to unit Euclidean length in the chart.
    """
    out = []
    for d in directions:
        if np.ndim(d) == 0:
            vec = np.array([math.cos(d), math.sin(d)])
            angle = float(d)
        else:
            vec = np.asarray(d, dtype=float)
            angle = float(math.atan2(vec[1], vec[0])) if len(vec) == 2 else math.nan
        vec = vec / np.linalg.norm(vec)
        trace = integrate(sys, spec, E_start, vec, tau_max, step, chart)
        out.append(RayResult(angle, tuple(vec), admissibility(trace), trace))
    return out


def chord_deviation(points: np.ndarray) -> float:
    """Largest perpendicular distance of ``points`` from the chord joining the ends."""
    p0, p1 = points[0], points[-1]
    d = p1 - p0
    length = np.linalg.norm(d)
    if length == 0.0:
        return float(np.max(np.linalg.norm(points - p0, axis=1)))
    rel = points - p0
    proj = np.outer(rel @ d / length**2, d)
    return float(np.max(np.linalg.norm(rel - proj, axis=1)))
