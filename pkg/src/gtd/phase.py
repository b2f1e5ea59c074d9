"""The (2n+1)-dimensional phase manifold.

Coordinates are ordered ``(phi, E1..En, I1..In)``.  A line-element term
``c dx dy`` with ``x != y`` contributes ``c/2`` to both matrix entries
``(x, y)`` and ``(y, x)``; every metric in this package follows that rule.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigError, DegenerateMetricError, DomainError
from .expr import Expression, constant, parse
from .jet import Jet

DEGENERACY_RTOL = 1e-12


@dataclass(frozen=True)
class PhasePoint:
    phi: float
    E: tuple[float, ...]
    I: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "E", tuple(float(x) for x in self.E))
        object.__setattr__(self, "I", tuple(float(x) for x in self.I))
        if len(self.E) != len(self.I):
            raise ValueError(f"len(E)={len(self.E)} differs from len(I)={len(self.I)}")

    @property
    def n(self) -> int:
        return len(self.E)

    def as_array(self) -> np.ndarray:
        return np.array([self.phi, *self.E, *self.I])

    @classmethod
    def from_array(cls, z) -> PhasePoint:
        z = [float(x) for x in z]
        if len(z) % 2 != 1:
            raise ValueError("phase coordinates must have odd length 2n+1")
        n = (len(z) - 1) // 2
        return cls(z[0], tuple(z[1 : n + 1]), tuple(z[n + 1 :]))


class Family(str, enum.Enum):
    GINV2 = "ginv2"
    GUP1 = "gup1"
    # flat delta_AB; exists as a negative control for invariance checks
    EUCLIDEAN = "euclidean"


class Tensor(str, enum.Enum):
    DELTA = "delta"
    ETA = "eta"
    HALF_DELTA_MINUS_ETA = "half_delta_minus_eta"

    def diagonal(self, n: int) -> np.ndarray:
        delta = np.ones(n)
        eta = np.ones(n)
        eta[0] = -1.0
        if self is Tensor.DELTA:
            return delta
        if self is Tensor.ETA:
            return eta
        return 0.5 * (delta - eta)


@dataclass(frozen=True)
class MetricSpec:
    """Choice of Legendre-invariant metric on the phase manifold.

    ``lam`` may reference phase coordinates by the names understood by
    :func:`coordinate_names` (``Z0..Z2n``, ``phi``, ``E1..``, ``I1..`` and,
    when a system is known, its potential and extensive names).
    """

    family: Family = Family.GINV2
    k: int = 0
    lam: Expression = field(default_factory=lambda: constant(1.0))
    xi: Tensor = Tensor.DELTA
    chi: Tensor = Tensor.DELTA
    lam_params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        object.__setattr__(self, "xi", Tensor(self.xi))
        object.__setattr__(self, "chi", Tensor(self.chi))
        if isinstance(self.lam, (int, float)):
            object.__setattr__(self, "lam", constant(self.lam))
        elif isinstance(self.lam, str):
            object.__setattr__(self, "lam", parse(self.lam, None, tuple(self.lam_params)))
        if int(self.k) != self.k:
            raise ValueError(f"k must be an integer, got {self.k}")
        object.__setattr__(self, "k", int(self.k))

    @classmethod
    def ginv2(cls, k: int = -1, lam=1.0, **kw) -> MetricSpec:
        return cls(Family.GINV2, k, lam, **kw)

    @classmethod
    def gup1(cls, xi=Tensor.DELTA, chi=Tensor.DELTA, lam=1.0, **kw) -> MetricSpec:
        return cls(Family.GUP1, 0, lam, Tensor(xi), Tensor(chi), **kw)

    @classmethod
    def mfo(cls, lam=1.0) -> MetricSpec:
        return cls.gup1(Tensor.DELTA, Tensor.DELTA, lam)

    @classmethod
    def mso(cls, lam=1.0) -> MetricSpec:
        return cls.gup1(Tensor.DELTA, Tensor.ETA, lam)

    @classmethod
    def msot0(cls, lam=1.0) -> MetricSpec:
        return cls.gup1(Tensor.HALF_DELTA_MINUS_ETA, Tensor.ETA, lam)

    @classmethod
    def euclidean(cls) -> MetricSpec:
        return cls(Family.EUCLIDEAN)

    @property
    def exponent(self) -> int:
        return 2 * self.k + 1

    def to_config(self) -> dict[str, str]:
        return {
            "family": self.family.value,
            "k": str(self.k),
            "lambda": str(self.lam),
            "xi": self.xi.value,
            "chi": self.chi.value,
        }

    @classmethod
    def from_config(cls, cfg: Mapping[str, str]) -> MetricSpec:
        try:
            return cls(
                family=Family(cfg.get("family", "ginv2").lower()),
                k=int(cfg.get("k", 0)),
                lam=str(cfg.get("lambda", "1")),
                xi=Tensor(cfg.get("xi", "delta").lower()),
                chi=Tensor(cfg.get("chi", "delta").lower()),
            )
        except ValueError as exc:
            raise ConfigError(f"invalid metric configuration: {exc}") from None


def coordinate_names(n: int, potential: str | None = None, extensive: Sequence[str] = ()) -> dict[str, int]:
    """Names accepted for phase coordinate ``Z^A``, mapped to ``A``."""
    names = {f"Z{A}": A for A in range(2 * n + 1)}
    names["phi"] = 0
    for a in range(n):
        names[f"E{a + 1}"] = 1 + a
        names[f"I{a + 1}"] = 1 + n + a
    if potential:
        names[potential] = 0
    for a, name in enumerate(extensive):
        names[name] = 1 + a
    return names


def eval_lambda(spec: MetricSpec, Z: Sequence, names: Mapping[str, int] | None = None):
    """Conformal function at phase coordinates ``Z`` (floats or jets)."""
    if spec.lam.is_constant:
        return spec.lam.root.value
    n = (len(Z) - 1) // 2
    names = names or coordinate_names(n)
    used, _ = spec.lam.free_names()
    env = {}
    for v in used:
        if v not in names:
            raise ConfigError(f"Lambda refers to unknown phase coordinate {v!r}")
        env[v] = Z[names[v]]
    return spec.lam.substitute(env, spec.lam_params)


# ---------------------------------------------------------------------------
# Legendre transformations and the contact structure
# ---------------------------------------------------------------------------


def _legendre(Z: Sequence, n: int, idx: Iterable[int]) -> list:
    idx = sorted(set(idx))
    for i in idx:
        if not 0 <= i < n:
            raise IndexError(f"Legendre index {i} out of range for n={n}")
    out = list(Z)
    shift = 0.0
    for i in idx:
        e, p = Z[1 + i], Z[1 + n + i]
        out[1 + i] = p
        out[1 + n + i] = -e
        shift = shift + p * (-e)
    out[0] = Z[0] + shift
    return out


def legendre_transform(z: PhasePoint, idx: Iterable[int] = ()) -> PhasePoint:
    """Swap ``E^i -> I^i``, ``I^i -> -E^i`` for ``i`` in ``idx`` (0-based).

    The potential becomes ``phi + sum_i E~^i I~^i``; ``idx`` empty is the
    identity and ``range(n)`` the total transformation.
    """
    return PhasePoint.from_array(_legendre(z.as_array(), z.n, idx))


def total(n: int) -> tuple[int, ...]:
    return tuple(range(n))


def legendre_jacobian(z: PhasePoint, idx: Iterable[int]) -> np.ndarray:
    """Matrix ``d Z~^A / d Z^B`` of the coordinate change at ``z``."""
    jets = Jet.seed(z.as_array(), 1)
    out = _legendre(jets, z.n, idx)
    return np.array([o.gradient() if isinstance(o, Jet) else np.zeros(len(jets)) for o in out])


def _canonical_theta(Z: Sequence) -> list:
    n = (len(Z) - 1) // 2
    return [1.0] + [-x for x in Z[n + 1 :]] + [0.0] * n


def contact_form(z: PhasePoint) -> np.ndarray:
    """Components of ``d phi - I_a dE^a`` in the order ``(phi, E, I)``."""
    return np.array(_canonical_theta(z.as_array()), dtype=float)


def _wedge(alpha: dict, beta: dict) -> dict:
    out: dict = {}
    for ia, ca in alpha.items():
        for ib, cb in beta.items():
            if set(ia) & set(ib):
                continue
            merged = ia + ib
            order = sorted(range(len(merged)), key=merged.__getitem__)
            key = tuple(merged[i] for i in order)
            out[key] = out.get(key, 0.0) + _parity(order) * ca * cb
    return {k: v for k, v in out.items() if v != 0.0}


def _parity(perm: Sequence[int]) -> int:
    perm = list(perm)
    sign = 1
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            sign = -sign
    return sign


def contact_condition(
    n: int,
    form: Callable[[Sequence], Sequence] | None = None,
    z: Sequence[float] | None = None,
) -> float:
    """Coefficient of ``theta ^ (d theta)^n`` on ``dphi ^ dE1 ^ dI1 ^ ... ^ dEn ^ dIn``.

    ``form`` maps phase coordinates (floats or jets) to the 2n+1 components
    of a one-form; it defaults to the canonical contact form.  Nonzero means
    the form is maximally non-integrable at ``z``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    dim = 2 * n + 1
    form = form or _canonical_theta
    if z is None:
        z = [0.1 * (A + 1) for A in range(dim)]
    jets = Jet.seed(z, 1)
    theta = [c if isinstance(c, Jet) else Jet.constant(float(c), dim, 1) for c in form(jets)]
    one = {(A,): theta[A].value for A in range(dim) if theta[A].value != 0.0}
    dtheta: dict = {}
    for B in range(dim):
        for C in range(B + 1, dim):
            # d(theta_C dZ^C) contributes d_B theta_C dZ^B ^ dZ^C
            coef = theta[C].partial(B) - theta[B].partial(C)
            if coef != 0.0:
                dtheta[(B, C)] = coef
    top = one
    for _ in range(n):
        top = _wedge(top, dtheta)
    c = top.get(tuple(range(dim)), 0.0)
    basis = [0] + list(itertools.chain.from_iterable((1 + a, 1 + n + a) for a in range(n)))
    return c * _parity(basis)


# ---------------------------------------------------------------------------
# Metrics and connection
# ---------------------------------------------------------------------------


def metric_entries(spec: MetricSpec, Z: Sequence, names: Mapping[str, int] | None = None) -> list[list]:
    """Components of G at ``Z`` as nested lists (floats or jets)."""
    dim = len(Z)
    n = (dim - 1) // 2
    if spec.family is Family.EUCLIDEAN:
        return [[1.0 if A == B else 0.0 for B in range(dim)] for A in range(dim)]
    theta = _canonical_theta(Z)
    G = [[theta[A] * theta[B] for B in range(dim)] for A in range(dim)]
    lam = eval_lambda(spec, Z, names)
    if spec.family is Family.GINV2:
        p = spec.exponent
        for a in range(n):
            prod = Z[1 + a] * Z[1 + n + a]
            if p < 0 and _value(prod) == 0.0:
                raise DomainError(f"E_{a + 1} I_{a + 1} = 0 with negative exponent {p}")
            c = lam * _power(prod, p) * 0.5
            G[1 + a][1 + n + a] = G[1 + a][1 + n + a] + c
            G[1 + n + a][1 + a] = G[1 + n + a][1 + a] + c
    else:
        xi = spec.xi.diagonal(n)
        chi = spec.chi.diagonal(n)
        factor = 0.0
        for a in range(n):
            factor = factor + xi[a] * Z[1 + a] * Z[1 + n + a]
        factor = lam * factor
        for a in range(n):
            c = factor * (0.5 * chi[a])
            G[1 + a][1 + n + a] = G[1 + a][1 + n + a] + c
            G[1 + n + a][1 + a] = G[1 + n + a][1 + a] + c
    return G


def phase_metric(spec: MetricSpec, z: PhasePoint, names: Mapping[str, int] | None = None) -> np.ndarray:
    """Symmetric (2n+1)x(2n+1) matrix of G at ``z``."""
    G = metric_entries(spec, list(z.as_array()), names)
    return np.array([[_value(x) for x in row] for row in G])


def check_nondegenerate(M: np.ndarray, what: str = "metric") -> float:
    """Return det(M); raise when it is negligible against the row-norm scale."""
    det = float(np.linalg.det(M))
    scale = float(np.prod(np.linalg.norm(M, axis=1)))
    if not np.isfinite(det) or scale == 0.0 or abs(det) <= DEGENERACY_RTOL * scale:
        raise DegenerateMetricError(f"{what} is degenerate (det={det:.3e}, scale={scale:.3e})")
    return det


def phase_metric_derivatives(spec: MetricSpec, z: PhasePoint, names=None) -> tuple[np.ndarray, np.ndarray]:
    """``G`` and ``dG[C, A, B] = dG_AB / dZ^C`` by exact differentiation."""
    jets = Jet.seed(z.as_array(), 1)
    dim = len(jets)
    G = metric_entries(spec, jets, names)
    G0 = np.array([[_value(x) for x in row] for row in G])
    dG = np.zeros((dim, dim, dim))
    for A in range(dim):
        for B in range(dim):
            if isinstance(G[A][B], Jet):
                dG[:, A, B] = G[A][B].gradient()
    return G0, dG


def christoffel_from_derivatives(g: np.ndarray, dg: np.ndarray) -> np.ndarray:
    """Levi-Civita symbols ``Gamma[a, b, c]`` from ``g`` and ``dg[c, a, b]``."""
    ginv = np.linalg.inv(g)
    # T[d, b, c] = d_c g_db + d_b g_cd - d_d g_bc
    T = np.einsum("cdb->dbc", dg) + np.einsum("bcd->dbc", dg) - dg
    return 0.5 * np.einsum("ad,dbc->abc", ginv, T)


def phase_christoffel(spec: MetricSpec, z: PhasePoint, names=None) -> np.ndarray:
    """Christoffel symbols ``Gamma[A, B, C]`` of G at ``z``."""
    G, dG = phase_metric_derivatives(spec, z, names)
    check_nondegenerate(G, "phase metric")
    return christoffel_from_derivatives(G, dG)


def check_metric_invariance(
    spec: MetricSpec, idx: Iterable[int], samples: Sequence[PhasePoint]
) -> float:
    """Largest deviation between G and its pullback through a Legendre map.

    For each sample the metric evaluated at the transformed point is pulled
    back with the Jacobian and compared with G at the sample, normalised by
    the largest component of the latter.
    """
    idx = tuple(idx)
    worst = 0.0
    for z in samples:
        zt = legendre_transform(z, idx)
        J = legendre_jacobian(z, idx)
        pulled = J.T @ phase_metric(spec, zt) @ J
        ref = phase_metric(spec, z)
        dev = np.max(np.abs(pulled - ref)) / max(np.max(np.abs(ref)), np.finfo(float).tiny)
        worst = max(worst, float(dev))
    return worst


def _value(x) -> float:
    return x.value if isinstance(x, Jet) else float(x)


def _power(x, p: int):
    if isinstance(x, Jet):
        return x.power(p)
    return float(x) ** p
