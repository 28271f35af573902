"""Spray coefficients and the curvature tensors built from them.

The (alpha, beta) spray formula
    G^i = G^i_alpha + alpha Q s^i_0 + (-2 Q alpha s_0 + r_00)(Psi b^i + Theta y^i / alpha)
is the production path; every curvature tensor is a fiber jet of it.  The
definitional spray
    G^i = 1/4 g^{il} ([F^2]_{x^m y^l} y^m - [F^2]_{x^l})
is computed independently (chain rule through a_ij(x), b_i(x)) and serves
as its oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .alphabeta import qtp_generic, qtp_prime, regularity
from .errors import DomainError, NonPositiveDefinite, SingularEvaluation
from .fields import eval_oneform_x_jet, metric_x_jet
from .jet import Jet, dot, matvec
from .riemann import point_data, spd_inverse


@dataclass(frozen=True)
class SprayPointData:
    G: np.ndarray
    G_from_definition: np.ndarray
    B: np.ndarray
    D: np.ndarray
    E: np.ndarray
    g: np.ndarray
    C: np.ndarray


@dataclass(frozen=True)
class TiData:
    T: np.ndarray
    divT: float
    H00: np.ndarray | None = None


def _check_regular_point(spec, bd):
    b = math.sqrt(max(bd.b2, 0.0))
    if not b < spec.phi.b0:
        raise DomainError("||beta||_alpha = %.6g is not below b0 = %.6g" % (b, spec.phi.b0))
    return b


def _fiber(spec, y):
    y = np.asarray(y, dtype=float)
    if y.shape != (spec.dim,) or not np.all(np.isfinite(y)):
        raise DomainError("bad fiber vector %r" % (y,))
    if not np.any(y):
        raise SingularEvaluation("zero fiber vector")
    return y


def _phi_jets(phi, s, count):
    """Jets of phi, phi', ..., phi^(count-1) composed with the jet ``s``."""
    order = s.order
    d = phi.derivs(float(s.value), order + count)
    return [s.compose(d[j : j + order + 1]) for j in range(count)]


def _qtp_jets(phi, s, b2):
    p0, p1, p2 = _phi_jets(phi, s, 3)
    base = p0 - s * p1
    den = base + (b2 - s * s) * p2
    Q = p1 / base
    Theta = (p0 * p1 - s * (p0 * p2 + p1 * p1)) / (2.0 * p0 * den)
    Psi = 0.5 * p2 / den
    return Q, Theta, Psi


def _basic_jets(spec, x, y, order):
    rd, bd = point_data(spec, x)
    _check_regular_point(spec, bd)
    y = _fiber(spec, y)
    yj = Jet.variables(y, order)
    alpha = dot(yj, matvec(rd.a, yj)).sqrt()
    beta = dot(yj, bd.b)
    return rd, bd, yj, alpha, beta


def spray_jet(spec, x, y, order=3):
    """Vector jet of G^i from the (alpha, beta) spray formula."""
    rd, bd, yj, alpha, beta = _basic_jets(spec, x, y, order)
    s = beta / alpha
    if not regularity(spec.phi, float(s.value), math.sqrt(bd.b2)):
        raise DomainError("metric is not regular at (x, y)")
    Q, Theta, Psi = _qtp_jets(spec.phi, s, bd.b2)
    G_alpha = 0.5 * Jet.stack([dot(yj, matvec(rd.christoffel[i], yj)) for i in range(spec.dim)])
    s_i0 = matvec(bd.s_up, yj)
    s_0 = dot(yj, bd.s_vec)
    r_00 = dot(yj, matvec(bd.r, yj))
    bracket = r_00 - 2.0 * Q * alpha * s_0
    return G_alpha + alpha * Q * s_i0 + bracket * (Psi * bd.b_up + (Theta / alpha) * yj)


def _float_scalars(spec, x, y):
    rd, bd = point_data(spec, x)
    b = _check_regular_point(spec, bd)
    y = _fiber(spec, y)
    alpha = math.sqrt(float(y @ rd.a @ y))
    beta = float(bd.b @ y)
    s = beta / alpha
    if not regularity(spec.phi, s, b):
        raise DomainError("metric is not regular at (x, y)")
    return rd, bd, y, alpha, beta, s


def spray_via_alphabeta(spec, x, y):
    """G^i from the (alpha, beta) spray formula (plain floats)."""
    rd, bd, y, alpha, beta, s = _float_scalars(spec, x, y)
    Q, Theta, Psi = qtp_generic(spec.phi, s, bd.b2)
    G_alpha = 0.5 * np.einsum("ijk,j,k->i", rd.christoffel, y, y)
    s_i0 = bd.s_up @ y
    s_0 = float(bd.s_vec @ y)
    r_00 = float(y @ bd.r @ y)
    return G_alpha + alpha * Q * s_i0 + (r_00 - 2.0 * Q * alpha * s_0) * (Psi * bd.b_up + Theta / alpha * y)


def _f2_jet_xy(spec, x, y):
    """F^2 as an order-2 jet in (y^1..y^n, t^1..t^n) with a(x + t), b(x + t) linearised in t.

    Only the t-first-order coefficients are meaningful, which is all the
    definitional spray needs.
    """
    x = spec.check_point(x)
    n = spec.dim
    a, da = metric_x_jet(spec.alpha, x)
    b, db = eval_oneform_x_jet(spec.beta, x)
    z = Jet.variables(np.concatenate([y, np.zeros(n)]), 2)
    yj = z[:n]
    alpha2 = dot(yj, matvec(a, yj))
    beta = dot(yj, b)
    for m in range(n):
        t = z[n + m]
        alpha2 = alpha2 + t * dot(yj, matvec(da[:, :, m], yj))
        beta = beta + t * dot(yj, db[:, m])
    s = beta / alpha2.sqrt()
    (phi,) = _phi_jets(spec.phi, s, 1)
    return alpha2 * phi * phi


def spray_via_definition(spec, x, y):
    """G^i = 1/4 g^{il} ([F^2]_{x^m y^l} y^m - [F^2]_{x^l})."""
    _float_scalars(spec, x, y)  # domain and regularity checks
    y = np.asarray(y, dtype=float)
    n = spec.dim
    F2 = _f2_jet_xy(spec, x, y)
    g = 0.5 * F2.d2[:n, :n]
    F2_x = F2.d1[n:]
    F2_xy = F2.d2[:n, n:]  # [l, m] = d^2 F^2 / dy^l dx^m
    return 0.25 * spd_inverse(g) @ (F2_xy @ y - F2_x)


def finsler_jet(spec, x, y, order=3):
    """Jet of F(x, .) in the fiber variables."""
    rd, bd, yj, alpha, beta = _basic_jets(spec, x, y, order)
    s = beta / alpha
    if not regularity(spec.phi, float(s.value), math.sqrt(bd.b2)):
        raise DomainError("metric is not regular at (x, y)")
    (phi,) = _phi_jets(spec.phi, s, 1)
    return alpha * phi


def fundamental_tensor(spec, x, y):
    """(g_ij, C_ijk) from the fiber jet of F^2."""
    F = finsler_jet(spec, x, y, order=3)
    F2 = F * F
    g = 0.5 * F2.d2
    C = 0.25 * F2.d3
    try:
        np.linalg.cholesky(g)
    except np.linalg.LinAlgError:
        raise NonPositiveDefinite("fundamental tensor is not positive definite") from None
    return g, C


def _divergence(G):
    """Jet of dG^m/dy^m, one order lower than ``G``."""
    return Jet([np.trace(G.coeffs[k + 1], axis1=0, axis2=1) for k in range(G.order)], G.nvars)


def berwald_tensor(spec, x, y):
    """B^i_jkl = d^3 G^i / dy^j dy^k dy^l, as B[i, j, k, l]."""
    return spray_jet(spec, x, y, order=3).d3


def douglas_from_spray(G, y):
    """Douglas tensor from an order-4 spray jet seeded at fiber point ``y``."""
    n = G.base_shape[0]
    H = _divergence(G)
    yj = Jet.variables(y, 3)
    return G.d3 - (H * yj).d3 / (n + 1)


def douglas_tensor(spec, x, y, perturbation=None):
    """D^i_jkl = d^3/dy^j dy^k dy^l (G^i - (dG^m/dy^m) y^i / (n + 1)).

    ``perturbation(alpha, beta, y)`` may return a scalar jet P; the spray is
    then replaced by G^i + P y^i (a projective change).
    """
    y = np.asarray(y, dtype=float)
    G = spray_jet(spec, x, y, order=4)
    if perturbation is not None:
        rd, bd, yj, alpha, beta = _basic_jets(spec, x, y, 4)
        G = G + perturbation(alpha, beta, yj) * yj
    return douglas_from_spray(G, y)


def mean_berwald(spec, x, y):
    """E_ij = 1/2 d^2 (dG^m/dy^m) / dy^i dy^j."""
    return 0.5 * _divergence(spray_jet(spec, x, y, order=3)).d2


def spray_point_data(spec, x, y):
    """Everything at one (x, y), sharing a single order-4 spray jet."""
    y = np.asarray(y, dtype=float)
    G = spray_jet(spec, x, y, order=4)
    H = _divergence(G)
    g, C = fundamental_tensor(spec, x, y)
    return SprayPointData(
        G=G.value.copy(),
        G_from_definition=spray_via_definition(spec, x, y),
        B=G.d3.copy(),
        D=douglas_from_spray(G, y),
        E=0.5 * H.d2,
        g=g,
        C=C,
    )


# -- T^i machinery -----------------------------------------------------------


def _t_vector(alpha, s, Q, Psi, s_i0, s_0, r_00, b_up):
    return alpha * Q * s_i0 + Psi * (r_00 - 2.0 * Q * alpha * s_0) * b_up


def compute_Ti(spec, x, y):
    """T^i and its closed-form divergence T^m_{y^m}."""
    rd, bd, y, alpha, beta, s = _float_scalars(spec, x, y)
    Q, _, Psi = qtp_generic(spec.phi, s, bd.b2)
    dQ, dPsi = qtp_prime(spec.phi, s, bd.b2)
    s_i0 = bd.s_up @ y
    s_0 = float(bd.s_vec @ y)
    r_0 = float(bd.r_vec @ y)
    r_00 = float(y @ bd.r @ y)
    b2 = bd.b2
    T = _t_vector(alpha, s, Q, Psi, s_i0, s_0, r_00, bd.b_up)
    divT = (
        dQ * s_0
        + dPsi / alpha * (b2 - s * s) * (r_00 - 2.0 * Q * alpha * s_0)
        + 2.0 * Psi * (r_0 - dQ * (b2 - s * s) * s_0 - Q * s * s_0)
    )
    return TiData(T=T, divT=divT)


def t_jet(spec, x, y, order=1):
    """Fiber jet of T^i built directly from its definition (divergence oracle)."""
    rd, bd, yj, alpha, beta = _basic_jets(spec, x, y, order)
    s = beta / alpha
    Q, _, Psi = _qtp_jets(spec.phi, s, bd.b2)
    s_i0 = matvec(bd.s_up, yj)
    s_0 = dot(yj, bd.s_vec)
    r_00 = dot(yj, matvec(bd.r, yj))
    return alpha * Q * s_i0 + Psi * (r_00 - 2.0 * Q * alpha * s_0) * bd.b_up


def h00_residual(spec, spec_bar, x, y):
    """H^i_00 = T^i - Tbar^i - (T^m_{y^m} - Tbar^m_{y^m}) y^i / (n + 1)."""
    if spec.dim != spec_bar.dim:
        raise ValueError("metrics live on charts of different dimension")
    y = np.asarray(y, dtype=float)
    t = compute_Ti(spec, x, y)
    tb = compute_Ti(spec_bar, x, y)
    return t.T - tb.T - (t.divT - tb.divT) / (spec.dim + 1) * y
