"""Truncated multivariate Taylor arithmetic.

A :class:`Jet` holds the Taylor coefficients of a smooth function of ``nvars``
variables around a point, up to total degree ``order``.  Coefficients are
stored in graded order (all degree-0 monomials, then degree-1, ...) so that a
lower-order truncation is a prefix of the coefficient vector.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np

MAX_ORDER = 4


@lru_cache(maxsize=None)
def monomials(nvars: int, order: int) -> tuple[tuple[int, ...], ...]:
    """Exponent tuples of all monomials of degree <= order, graded."""
    out = []
    for deg in range(order + 1):
        # reverse lexicographic within a degree keeps x0 first
        for combo in itertools.combinations_with_replacement(range(nvars), deg):
            exps = [0] * nvars
            for v in combo:
                exps[v] += 1
            out.append(tuple(exps))
    return tuple(out)


@lru_cache(maxsize=None)
def _index(nvars: int, order: int) -> dict:
    return {m: i for i, m in enumerate(monomials(nvars, order))}


@lru_cache(maxsize=None)
def _mul_table(nvars: int, order: int):
    mons = monomials(nvars, order)
    index = _index(nvars, order)
    rows, cols, dest = [], [], []
    for i, mi in enumerate(mons):
        for j, mj in enumerate(mons):
            if sum(mi) + sum(mj) > order:
                continue
            rows.append(i)
            cols.append(j)
            dest.append(index[tuple(p + q for p, q in zip(mi, mj))])
    return np.array(rows), np.array(cols), np.array(dest)


@lru_cache(maxsize=None)
def _deriv_table(nvars: int, order: int, var: int):
    """Source indices and weights so that d/dx_var maps order -> order-1."""
    src_index = _index(nvars, order)
    targets = monomials(nvars, order - 1)
    src, weight = [], []
    for m in targets:
        up = list(m)
        up[var] += 1
        src.append(src_index[tuple(up)])
        weight.append(float(up[var]))
    return np.array(src, dtype=int), np.array(weight)


@lru_cache(maxsize=None)
def _factorials(nvars: int, order: int) -> np.ndarray:
    return np.array(
        [math.prod(math.factorial(e) for e in m) for m in monomials(nvars, order)],
        dtype=float,
    )


def _mul_coef(a: np.ndarray, b: np.ndarray, nvars: int, order: int) -> np.ndarray:
    rows, cols, dest = _mul_table(nvars, order)
    return np.bincount(dest, weights=a[rows] * b[cols], minlength=len(a))


def _size(nvars: int, order: int) -> int:
    return math.comb(nvars + order, order)


class Jet:
    """Taylor polynomial in ``nvars`` variables truncated at ``order``."""

    __slots__ = ("coef", "nvars", "order")
    __array_priority__ = 100

    def __init__(self, coef, nvars: int, order: int):
        self.coef = np.asarray(coef, dtype=float)
        self.nvars = nvars
        self.order = order

    @classmethod
    def _new(cls, coef: np.ndarray, nvars: int, order: int) -> Jet:
        jet = object.__new__(cls)
        jet.coef = coef
        jet.nvars = nvars
        jet.order = order
        return jet

    # -- construction ---------------------------------------------------
    @classmethod
    def constant(cls, value: float, nvars: int, order: int) -> Jet:
        coef = np.zeros(_size(nvars, order))
        coef[0] = value
        return cls(coef, nvars, order)

    @classmethod
    def variable(cls, value: float, var: int, nvars: int, order: int) -> Jet:
        coef = np.zeros(_size(nvars, order))
        coef[0] = value
        if order >= 1:
            coef[1 + var] = 1.0
        return cls(coef, nvars, order)

    @classmethod
    def seed(cls, point, order: int) -> list[Jet]:
        """Independent-variable jets at ``point``."""
        n = len(point)
        return [cls.variable(float(x), i, n, order) for i, x in enumerate(point)]

    # -- accessors ------------------------------------------------------
    @property
    def value(self) -> float:
        return float(self.coef[0])

    def partial(self, *vars: int) -> float:
        """Partial derivative d^m/dx_{vars[0]}...dx_{vars[-1]} at the base point."""
        exps = [0] * self.nvars
        for v in vars:
            exps[v] += 1
        if len(vars) > self.order:
            raise ValueError(f"derivative order {len(vars)} exceeds jet order {self.order}")
        i = _index(self.nvars, self.order)[tuple(exps)]
        return float(self.coef[i] * _factorials(self.nvars, self.order)[i])

    def partials(self) -> dict[tuple[int, ...], float]:
        """All partial derivatives keyed by exponent tuple."""
        fac = _factorials(self.nvars, self.order)
        return {
            m: float(c * f)
            for m, c, f in zip(monomials(self.nvars, self.order), self.coef, fac)
        }

    def gradient(self) -> np.ndarray:
        return np.array([self.partial(i) for i in range(self.nvars)])

    def hessian(self) -> np.ndarray:
        n = self.nvars
        h = np.empty((n, n))
        for i in range(n):
            for j in range(i, n):
                h[i, j] = h[j, i] = self.partial(i, j)
        return h

    def truncate(self, order: int) -> Jet:
        if order >= self.order:
            return self
        return Jet(self.coef[: _size(self.nvars, order)], self.nvars, order)

    def deriv(self, var: int) -> Jet:
        """Jet of the partial derivative along ``var`` (one order lower)."""
        if self.order == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        src, w = _deriv_table(self.nvars, self.order, var)
        return Jet(self.coef[src] * w, self.nvars, self.order - 1)

    # -- arithmetic -----------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, Jet):
            if other.order == self.order and other.nvars == self.nvars:
                return self, other
            if other.nvars != self.nvars:
                raise ValueError("jets over different variable sets")
            order = min(self.order, other.order)
            return self.truncate(order), other.truncate(order)
        return self, Jet.constant(float(other), self.nvars, self.order)

    def __add__(self, other):
        if not isinstance(other, Jet):
            coef = self.coef.copy()
            coef[0] += float(other)
            return Jet._new(coef, self.nvars, self.order)
        a, b = self._coerce(other)
        return Jet._new(a.coef + b.coef, a.nvars, a.order)

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, Jet):
            return self + (-float(other))
        a, b = self._coerce(other)
        return Jet._new(a.coef - b.coef, a.nvars, a.order)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return Jet._new(-self.coef, self.nvars, self.order)

    def __pos__(self):
        return self

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet._new(self.coef * float(other), self.nvars, self.order)
        a, b = self._coerce(other)
        return Jet._new(_mul_coef(a.coef, b.coef, a.nvars, a.order), a.nvars, a.order)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return Jet._new(self.coef / float(other), self.nvars, self.order)
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * float(other)

    def __pow__(self, p):
        if isinstance(p, Jet):
            return (p * self.log()).exp()
        return self.power(float(p))

    def __repr__(self):
        return f"Jet(value={self.value!r}, nvars={self.nvars}, order={self.order})"

    # -- elementary functions -------------------------------------------
    def compose(self, derivs) -> Jet:
        """Apply a scalar function given its derivatives f, f', f'', ... at the base value."""
        h = self.coef.copy()
        h[0] = 0.0
        out = h * derivs[1] if self.order else np.zeros_like(h)
        out[0] = derivs[0]
        term = h
        for m in range(2, self.order + 1):
            term = _mul_coef(term, h, self.nvars, self.order)
            out += term * (derivs[m] / math.factorial(m))
        return Jet._new(out, self.nvars, self.order)

    def reciprocal(self) -> Jet:
        c = self.value
        if c == 0.0:
            raise ZeroDivisionError("division by a jet with zero base value")
        return self.compose([(-1) ** m * math.factorial(m) / c ** (m + 1) for m in range(self.order + 1)])

    def log(self) -> Jet:
        c = self.value
        if c <= 0.0:
            raise ValueError("log of non-positive value")
        d = [math.log(c)]
        d += [(-1) ** (m - 1) * math.factorial(m - 1) / c**m for m in range(1, self.order + 1)]
        return self.compose(d)

    def exp(self) -> Jet:
        e = math.exp(self.value)
        return self.compose([e] * (self.order + 1))

    def sqrt(self) -> Jet:
        return self.power(0.5)

    def power(self, p: float) -> Jet:
        c = self.value
        integer = float(p).is_integer()
        if not integer and c <= 0.0:
            raise ValueError("non-integer power of non-positive value")
        if integer and c == 0.0 and p < 0:
            raise ZeroDivisionError("negative power of zero")
        if integer and p >= 0:
            # repeated squaring keeps exactness for polynomials
            result = Jet.constant(1.0, self.nvars, self.order)
            base, e = self, int(p)
            while e:
                if e & 1:
                    result = result * base
                base = base * base
                e >>= 1
            return result
        d = []
        coeff = 1.0
        for m in range(self.order + 1):
            d.append(coeff * c ** (p - m) if c != 0.0 else 0.0)
            coeff *= p - m
        return self.compose(d)


def jet_inverse(mat):
    """Inverse of a square matrix of jets by Gauss-Jordan with partial pivoting."""
    n = len(mat)
    a = [list(row) for row in mat]
    proto = next(x for row in a for x in row if isinstance(x, Jet))
    inv = [
        [Jet.constant(1.0 if i == j else 0.0, proto.nvars, proto.order) for j in range(n)]
        for i in range(n)
    ]
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(_val(a[r][col])))
        if _val(a[piv][col]) == 0.0:
            raise ZeroDivisionError("singular jet matrix")
        a[col], a[piv] = a[piv], a[col]
        inv[col], inv[piv] = inv[piv], inv[col]
        p = 1.0 / a[col][col] if isinstance(a[col][col], Jet) else 1.0 / a[col][col]
        a[col] = [x * p for x in a[col]]
        inv[col] = [x * p for x in inv[col]]
        for r in range(n):
            if r == col:
                continue
            f = a[r][col]
            a[r] = [x - f * y for x, y in zip(a[r], a[col])]
            inv[r] = [x - f * y for x, y in zip(inv[r], inv[col])]
    return inv


def jet_det(mat):
    """Determinant of a square matrix of jets by cofactor expansion (small n)."""
    n = len(mat)
    if n == 1:
        return mat[0][0]
    if n == 2:
        return mat[0][0] * mat[1][1] - mat[0][1] * mat[1][0]
    total = 0.0
    for j in range(n):
        minor = [row[:j] + row[j + 1:] for row in mat[1:]]
        term = mat[0][j] * jet_det(minor)
        total = total + term if j % 2 == 0 else total - term
    return total


def _val(x) -> float:
    return x.value if isinstance(x, Jet) else float(x)


def compose_poly(poly: Jet, args: list) -> Jet:
    """Substitute jets ``args`` (zero base values) for the variables of ``poly``.

    ``poly`` is read as a Taylor polynomial around its own base point, so the
    result is ``poly(base + args)`` truncated at the order of ``args``.
    """
    if len(args) != poly.nvars:
        raise ValueError("need one argument jet per variable")
    proto = args[0]
    out = Jet.constant(poly.coef[0], proto.nvars, proto.order)
    powers = [[Jet.constant(1.0, proto.nvars, proto.order)] for _ in args]
    for m, c in zip(monomials(poly.nvars, poly.order), poly.coef):
        if c == 0.0 or sum(m) == 0:
            continue
        term = Jet.constant(c, proto.nvars, proto.order)
        for v, e in enumerate(m):
            while len(powers[v]) <= e:
                powers[v].append(powers[v][-1] * args[v])
            if e:
                term = term * powers[v][e]
        out = out + term
    return out


def invert_map(F: list, order: int) -> list:
    """Taylor jets of the local inverse of the map with component jets ``F``.

    Returns ``dx(s)`` with ``F(x0 + dx(s)) = F(x0) + s`` to ``order``; the
    linear part must be invertible.
    """
    n = len(F)
    A = np.array([f.gradient() for f in F])
    Ainv = np.linalg.inv(A)
    s = [Jet.variable(0.0, i, n, order) for i in range(n)]
    dx = [sum((Ainv[i, j] * s[j] for j in range(n)), Jet.constant(0.0, n, order)) for i in range(n)]
    for _ in range(order):
        miss = [s[i] - (compose_poly(F[i], dx) - F[i].value) for i in range(n)]
        dx = [dx[i] + sum((Ainv[i, j] * miss[j] for j in range(n)), 0.0) for i in range(n)]
    return dx
