"""Analytic Riemannian metric fields a_ij(x) and 1-form fields b_i(x).

Each family in the registry provides exact first x-derivatives.  A central
difference path with one Richardson level is kept alongside so the analytic
derivatives can be cross-checked (and used for families that lack them).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NonPositiveDefinite, SpecError

RIEMANN_FAMILIES = ("euclidean", "diagonal-polynomial", "conformally-flat")
ONEFORM_FAMILIES = ("constant", "affine", "gradient-of-polynomial")

FD_REL_STEP = 1e-5


@dataclass(frozen=True)
class Polynomial:
    """Multivariate polynomial stored as ``((coef, (e_1, ..., e_n)), ...)``."""

    terms: tuple
    dim: int

    @classmethod
    def from_terms(cls, terms, dim):
        out = []
        for coef, exps in terms:
            exps = tuple(int(e) for e in exps)
            if len(exps) != dim or any(e < 0 for e in exps):
                raise SpecError("polynomial exponents %r do not match dim %d" % (exps, dim))
            out.append((float(coef), exps))
        return cls(tuple(out), dim)

    def to_terms(self):
        return [[c, list(e)] for c, e in self.terms]

    def _monomial(self, x, exps, shift):
        # derivative of x^exps with respect to the multi-index ``shift``
        coef = 1.0
        val = 1.0
        for xi, e, s in zip(x, exps, shift):
            if s > e:
                return 0.0
            for j in range(s):
                coef *= e - j
            val *= xi ** (e - s)
        return coef * val

    def _partial(self, x, shift):
        return sum(c * self._monomial(x, e, shift) for c, e in self.terms)

    def __call__(self, x):
        return self._partial(x, (0,) * self.dim)

    def grad(self, x):
        eye = np.eye(self.dim, dtype=int)
        return np.array([self._partial(x, tuple(eye[i])) for i in range(self.dim)])

    def hessian(self, x):
        eye = np.eye(self.dim, dtype=int)
        h = np.empty((self.dim, self.dim))
        for i in range(self.dim):
            for j in range(i, self.dim):
                h[i, j] = h[j, i] = self._partial(x, tuple(eye[i] + eye[j]))
        return h


@dataclass(frozen=True)
class RiemannFieldSpec:
    family: str
    dim: int
    diagonal: tuple = ()  # diagonal-polynomial: one Polynomial per a_ii
    u: Polynomial | None = None  # conformally-flat: a_ij = exp(2u) delta_ij

    def __post_init__(self):
        if self.family not in RIEMANN_FAMILIES:
            raise SpecError("unknown Riemannian family %r" % self.family)
        if self.family == "diagonal-polynomial" and len(self.diagonal) != self.dim:
            raise SpecError("diagonal-polynomial needs %d diagonal entries" % self.dim)
        if self.family == "conformally-flat" and self.u is None:
            raise SpecError("conformally-flat needs an exponent polynomial 'u'")


@dataclass(frozen=True)
class OneFormFieldSpec:
    family: str
    dim: int
    c: tuple = ()  # constant / affine offset
    M: tuple = ()  # affine linear part, b_i = c_i + M_ij x^j
    f: Polynomial | None = None  # gradient-of-polynomial potential

    def __post_init__(self):
        if self.family not in ONEFORM_FAMILIES:
            raise SpecError("unknown 1-form family %r" % self.family)
        if self.family in ("constant", "affine") and len(self.c) != self.dim:
            raise SpecError("%s 1-form needs %d components in 'c'" % (self.family, self.dim))
        if self.family == "affine" and (
            len(self.M) != self.dim or any(len(row) != self.dim for row in self.M)
        ):
            raise SpecError("affine 1-form needs a %dx%d matrix 'M'" % (self.dim, self.dim))
        if self.family == "gradient-of-polynomial" and self.f is None:
            raise SpecError("gradient-of-polynomial needs a potential 'f'")


def _point(x, dim):
    x = np.asarray(x, dtype=float)
    if x.shape != (dim,):
        raise DomainError("expected a chart point of length %d, got shape %s" % (dim, x.shape))
    if not np.all(np.isfinite(x)):
        raise DomainError("chart point has non-finite entries")
    return x


def check_positive_definite(a):
    """Raise NonPositiveDefinite unless every leading principal minor is positive."""
    for k in range(1, a.shape[0] + 1):
        if np.linalg.det(a[:k, :k]) <= 0.0:
            raise NonPositiveDefinite("leading minor %d of the metric is not positive" % k)


def eval_metric(spec, x):
    """Metric matrix a_ij at ``x``."""
    return metric_x_jet(spec, x)[0]


def _metric_analytic(spec, x):
    n = spec.dim
    if spec.family == "euclidean":
        return np.eye(n), np.zeros((n, n, n))
    if spec.family == "diagonal-polynomial":
        a = np.diag([p(x) for p in spec.diagonal])
        da = np.zeros((n, n, n))
        for i, p in enumerate(spec.diagonal):
            da[i, i, :] = p.grad(x)
        return a, da
    # conformally-flat
    u = spec.u(x)
    with np.errstate(over="raise"):
        try:
            e2u = np.exp(2.0 * u)
        except FloatingPointError:
            raise DomainError("conformal factor overflows at x = %s" % (x,)) from None
    a = e2u * np.eye(n)
    da = 2.0 * e2u * np.einsum("ij,k->ijk", np.eye(n), spec.u.grad(x))
    return a, da


def _richardson(fun, x, out_shape):
    """Central-difference Jacobian with one Richardson level; last axis = d/dx^k."""
    n = x.shape[0]
    out = np.empty(out_shape + (n,))
    for k in range(n):
        h = FD_REL_STEP * max(1.0, abs(x[k]))
        e = np.zeros(n)
        e[k] = 1.0
        d1 = (fun(x + h * e) - fun(x - h * e)) / (2 * h)
        d2 = (fun(x + 0.5 * h * e) - fun(x - 0.5 * h * e)) / h
        out[..., k] = (4.0 * d2 - d1) / 3.0
    return out


def metric_x_jet(spec, x, method="analytic"):
    """Return ``(a_ij, da_ij/dx^k)`` with the derivative index last.

    ``method="fd"`` uses the finite-difference fallback instead of the
    family's analytic derivative.
    """
    x = _point(x, spec.dim)
    a, da = _metric_analytic(spec, x)
    if method == "fd":
        da = _richardson(lambda z: _metric_analytic(spec, z)[0], x, a.shape)
    elif method != "analytic":
        raise ValueError("method must be 'analytic' or 'fd'")
    if not np.all(np.isfinite(a)):
        raise DomainError("metric is not finite at x = %s" % (x,))
    check_positive_definite(a)
    return a, da


def _oneform_analytic(spec, x):
    n = spec.dim
    if spec.family == "constant":
        return np.array(spec.c, dtype=float), np.zeros((n, n))
    if spec.family == "affine":
        M = np.array(spec.M, dtype=float)
        return np.array(spec.c, dtype=float) + M @ x, M
    return spec.f.grad(x), spec.f.hessian(x)


def eval_oneform_x_jet(spec, x, method="analytic"):
    """Return ``(b_i, db_i/dx^j)``."""
    x = _point(x, spec.dim)
    b, db = _oneform_analytic(spec, x)
    if method == "fd":
        db = _richardson(lambda z: _oneform_analytic(spec, z)[0], x, b.shape)
    elif method != "analytic":
        raise ValueError("method must be 'analytic' or 'fd'")
    if not (np.all(np.isfinite(b)) and np.all(np.isfinite(db))):
        raise DomainError("1-form is not finite at x = %s" % (x,))
    return b, db


# -- document (de)serialisation -------------------------------------------


def _poly_from_doc(doc, dim):
    if isinstance(doc, dict):
        doc = doc.get("terms")
    if not isinstance(doc, list):
        raise SpecError("polynomial must be a list of [coef, exponents] terms")
    try:
        return Polynomial.from_terms(doc, dim)
    except (TypeError, ValueError) as exc:
        raise SpecError("bad polynomial terms: %s" % exc) from None


def riemann_from_doc(doc, dim):
    family = doc.get("family")
    params = doc.get("params") or {}
    if family == "diagonal-polynomial":
        diag = params.get("diagonal")
        if not isinstance(diag, list):
            raise SpecError("diagonal-polynomial needs params.diagonal")
        return RiemannFieldSpec(family, dim, diagonal=tuple(_poly_from_doc(p, dim) for p in diag))
    if family == "conformally-flat":
        if "u" not in params:
            raise SpecError("conformally-flat needs params.u")
        return RiemannFieldSpec(family, dim, u=_poly_from_doc(params["u"], dim))
    return RiemannFieldSpec(family, dim)


def riemann_to_doc(spec):
    if spec.family == "diagonal-polynomial":
        return {"family": spec.family, "params": {"diagonal": [p.to_terms() for p in spec.diagonal]}}
    if spec.family == "conformally-flat":
        return {"family": spec.family, "params": {"u": spec.u.to_terms()}}
    return {"family": spec.family, "params": {}}


def oneform_from_doc(doc, dim):
    family = doc.get("family")
    params = doc.get("params") or {}
    try:
        if family == "constant":
            return OneFormFieldSpec(family, dim, c=tuple(float(v) for v in params["c"]))
        if family == "affine":
            return OneFormFieldSpec(
                family,
                dim,
                c=tuple(float(v) for v in params["c"]),
                M=tuple(tuple(float(v) for v in row) for row in params["M"]),
            )
        if family == "gradient-of-polynomial":
            return OneFormFieldSpec(family, dim, f=_poly_from_doc(params["f"], dim))
    except KeyError as exc:
        raise SpecError("1-form family %r is missing parameter %s" % (family, exc)) from None
    except (TypeError, ValueError) as exc:
        raise SpecError("bad 1-form parameters: %s" % exc) from None
    raise SpecError("unknown 1-form family %r" % family)


def oneform_to_doc(spec):
    if spec.family == "constant":
        params = {"c": list(spec.c)}
    elif spec.family == "affine":
        params = {"c": list(spec.c), "M": [list(r) for r in spec.M]}
    else:
        params = {"f": spec.f.to_terms()}
    return {"family": spec.family, "params": params}
