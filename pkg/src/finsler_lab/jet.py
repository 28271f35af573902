"""Truncated multivariate Taylor arithmetic.

A :class:`Jet` carries a value together with its exact partial derivatives
up to a fixed order with respect to ``nvars`` independent variables.  The
derivative of order ``k`` is stored as a dense, fully symmetric array whose
last ``k`` axes run over the variables; any leading axes form the *base
shape* (scalar jets have base shape ``()``, vector jets ``(n,)``).

Products use the Leibniz rule and composition with univariate functions
uses Faa di Bruno's formula, both written with explicit symmetrisation, so
derivatives are exact up to rounding (no differencing anywhere).
"""

from __future__ import annotations

import itertools
from functools import lru_cache
from math import comb

import numpy as np

from .errors import SingularEvaluation

MAX_ORDER = 4
SINGULAR_EPS = 1e-14


@lru_cache(maxsize=None)
def _perms(k):
    return tuple(itertools.permutations(range(k)))


@lru_cache(maxsize=None)
def _canonical_index(n, k):
    """Flat index of the sorted multi-index, for every multi-index in range(n)**k."""
    shape = (n,) * k
    idx = np.indices(shape).reshape(k, -1)
    return np.ravel_multi_index(np.sort(idx, axis=0), shape)


def _canon(arr, k):
    """Copy each entry from its sorted multi-index so symmetry holds bit for bit."""
    if k <= 1 or arr.size == 0:
        return arr
    n = arr.shape[-1]
    lead = arr.shape[: arr.ndim - k]
    flat = arr.reshape(lead + (n**k,))
    return flat[..., _canonical_index(n, k)].reshape(arr.shape)


def _sym(arr, k):
    """Average ``arr`` over all permutations of its last ``k`` axes."""
    if k <= 1:
        return arr
    lead = arr.ndim - k
    base = tuple(range(lead))
    out = np.zeros_like(arr)
    perms = _perms(k)
    for p in perms:
        out += arr.transpose(base + tuple(lead + i for i in p))
    return out / len(perms)


def _outer(a, ka, b, kb, nbase):
    """Outer product over derivative axes, broadcasting the base axes."""
    a = a.reshape(a.shape + (1,) * kb)
    b = b.reshape(b.shape[:nbase] + (1,) * ka + b.shape[nbase:])
    return a * b


def _pad_base(c, k, nbase):
    """Prepend singleton axes so the base part of ``c`` has ``nbase`` axes."""
    have = c.ndim - k
    if have == nbase:
        return c
    return c.reshape((1,) * (nbase - have) + c.shape)


def _scale(f, k):
    """Reshape a base-shaped array so it broadcasts against an order-k coefficient."""
    f = np.asarray(f, dtype=float)
    return f.reshape(f.shape + (1,) * k)


class Jet:
    """Value plus exact derivatives up to ``order`` in ``nvars`` variables."""

    __slots__ = ("coeffs", "nvars")
    __array_priority__ = 100

    def __init__(self, coeffs, nvars):
        self.coeffs = [_canon(np.asarray(c, dtype=float), k) for k, c in enumerate(coeffs)]
        self.nvars = nvars

    # construction -------------------------------------------------------

    @classmethod
    def constant(cls, value, nvars, order):
        value = np.asarray(value, dtype=float)
        coeffs = [value] + [np.zeros(value.shape + (nvars,) * k) for k in range(1, order + 1)]
        return cls(coeffs, nvars)

    @classmethod
    def variables(cls, point, order):
        """Vector jet seeding each entry of ``point`` as an independent variable."""
        point = np.asarray(point, dtype=float)
        n = point.shape[0]
        coeffs = [point.copy()]
        if order >= 1:
            coeffs.append(np.eye(n))
        for k in range(2, order + 1):
            coeffs.append(np.zeros((n,) * (k + 1)))
        return cls(coeffs, n)

    @staticmethod
    def stack(jets):
        order = min(j.order for j in jets)
        coeffs = [np.stack([j.coeffs[k] for j in jets]) for k in range(order + 1)]
        return Jet(coeffs, jets[0].nvars)

    # accessors ------------------------------------------------------------

    @property
    def order(self):
        return len(self.coeffs) - 1

    @property
    def base_shape(self):
        return self.coeffs[0].shape

    @property
    def value(self):
        return self.coeffs[0]

    def deriv(self, k):
        return self.coeffs[k]

    d1 = property(lambda self: self.coeffs[1])
    d2 = property(lambda self: self.coeffs[2])
    d3 = property(lambda self: self.coeffs[3])
    d4 = property(lambda self: self.coeffs[4])

    def __getitem__(self, idx):
        return Jet([c[idx] for c in self.coeffs], self.nvars)

    def __len__(self):
        return self.base_shape[0]

    def __repr__(self):
        return f"Jet(value={self.value!r}, order={self.order}, nvars={self.nvars})"

    def truncate(self, order):
        return Jet(self.coeffs[: order + 1], self.nvars)

    def sum(self):
        """Sum over the (single) base axis."""
        return Jet([c.sum(axis=0) for c in self.coeffs], self.nvars)

    # arithmetic -----------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, Jet):
            return other
        return Jet.constant(other, self.nvars, self.order)

    def __add__(self, other):
        if not isinstance(other, Jet):
            other = np.asarray(other, dtype=float)
            if other.ndim <= len(self.base_shape):
                return Jet([self.coeffs[0] + other] + self.coeffs[1:], self.nvars)
            other = Jet.constant(other, self.nvars, self.order)
        order = min(self.order, other.order)
        nb = max(len(self.base_shape), len(other.base_shape))
        return Jet(
            [_pad_base(a, k, nb) + _pad_base(b, k, nb)
             for k, (a, b) in enumerate(zip(self.coeffs[: order + 1], other.coeffs[: order + 1]))],
            self.nvars,
        )

    __radd__ = __add__

    def __neg__(self):
        return Jet([-c for c in self.coeffs], self.nvars)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            other = np.asarray(other, dtype=float)
            return Jet([c * _scale(other, k) for k, c in enumerate(self.coeffs)], self.nvars)
        order = min(self.order, other.order)
        nb = max(len(self.base_shape), len(other.base_shape))
        u = [_pad_base(c, k, nb) for k, c in enumerate(self.coeffs[: order + 1])]
        v = [_pad_base(c, k, nb) for k, c in enumerate(other.coeffs[: order + 1])]
        out = []
        for K in range(order + 1):
            acc = _outer(u[0], 0, v[K], K, nb) + _outer(u[K], K, v[0], 0, nb) if K else u[0] * v[0]
            mixed = None
            for j in range(1, K):
                term = comb(K, j) * _outer(u[j], j, v[K - j], K - j, nb)
                mixed = term if mixed is None else mixed + term
            if mixed is not None:
                acc = acc + _sym(mixed, K)
            out.append(acc)
        return Jet(out, self.nvars)

    __rmul__ = __mul__

    def compose(self, derivs):
        """Apply a univariate function given its derivatives at ``self.value``.

        ``derivs[j]`` is the j-th derivative of the function evaluated
        elementwise at the base values; at least ``order + 1`` entries.
        """
        order = self.order
        if len(derivs) < order + 1:
            raise ValueError("need %d derivatives, got %d" % (order + 1, len(derivs)))
        if order > MAX_ORDER:
            raise ValueError("composition implemented up to order %d" % MAX_ORDER)
        nb = len(self.base_shape)
        u = self.coeffs
        f = [np.asarray(d, dtype=float) for d in derivs]
        out = [f[0] * np.ones(self.base_shape)]
        if order >= 1:
            out.append(_scale(f[1], 1) * u[1])
        if order >= 2:
            u11 = _outer(u[1], 1, u[1], 1, nb)
            out.append(_scale(f[2], 2) * u11 + _scale(f[1], 2) * u[2])
        if order >= 3:
            u111 = _outer(u11, 2, u[1], 1, nb)
            u12 = _sym(_outer(u[1], 1, u[2], 2, nb), 3)
            out.append(_scale(f[3], 3) * u111 + 3 * _scale(f[2], 3) * u12 + _scale(f[1], 3) * u[3])
        if order >= 4:
            u1111 = _outer(u111, 3, u[1], 1, nb)
            u112 = _sym(_outer(u11, 2, u[2], 2, nb), 4)
            u13 = _sym(_outer(u[1], 1, u[3], 3, nb), 4)
            u22 = _sym(_outer(u[2], 2, u[2], 2, nb), 4)
            out.append(
                _scale(f[4], 4) * u1111
                + 6 * _scale(f[3], 4) * u112
                + _scale(f[2], 4) * (4 * u13 + 3 * u22)
                + _scale(f[1], 4) * u[4]
            )
        return Jet(out, self.nvars)

    def reciprocal(self):
        v = self.value
        if np.any(np.abs(v) <= SINGULAR_EPS):
            raise SingularEvaluation("division by a vanishing jet value %r" % (v,))
        inv = 1.0 / v
        derivs = [inv]
        for j in range(1, self.order + 1):
            derivs.append(-j * derivs[-1] * inv)
        return self.compose(derivs)

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        other = np.asarray(other, dtype=float)
        if np.any(np.abs(other) <= SINGULAR_EPS):
            raise SingularEvaluation("division by a vanishing constant")
        return self * (1.0 / other)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        p = float(p)
        v = self.value
        if np.any(v <= 0.0) and not p.is_integer():
            raise SingularEvaluation("non-integer power of a non-positive value")
        derivs = []
        coef = 1.0
        for j in range(self.order + 1):
            derivs.append(coef * v ** (p - j))
            coef *= p - j
        return self.compose(derivs)

    def sqrt(self):
        if np.any(self.value <= 0.0):
            raise SingularEvaluation("square root of a non-positive value")
        return self ** 0.5


def matvec(matrix, vec):
    """Apply a constant matrix to the base axis of a vector jet."""
    matrix = np.asarray(matrix, dtype=float)
    return Jet([np.tensordot(matrix, c, axes=([1], [0])) for c in vec.coeffs], vec.nvars)


def dot(u, v):
    """Contract two vector jets (or a jet and a constant vector) over the base axis."""
    if not isinstance(u, Jet):
        u, v = v, u
    return (u * v).sum()


def jet3_compose(f, x, y, order=3):
    """Evaluate ``f(x, y_jet)`` with ``y`` seeded as the fiber variables.

    ``f`` receives the chart point and a vector :class:`Jet` for ``y`` and
    must return a scalar (or vector) jet.  The result carries exact
    y-derivatives up to ``order``.
    """
    yj = Jet.variables(y, order)
    return f(np.asarray(x, dtype=float), yj)
