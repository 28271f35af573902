"""Levi-Civita data of alpha and the covariant derivative of beta."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import NonPositiveDefinite
from .fields import eval_oneform_x_jet, metric_x_jet

PIVOT_RATIO = 1e-12


@dataclass(frozen=True)
class RiemannPointData:
    a: np.ndarray
    a_inv: np.ndarray
    christoffel: np.ndarray  # gamma[i, j, k] = gamma^i_jk

    def spray_alpha(self, y):
        return riemann_spray(self.christoffel, y)


@dataclass(frozen=True)
class BetaCovariantData:
    b: np.ndarray
    b_up: np.ndarray
    b2: float
    cov: np.ndarray  # cov[i, j] = b_{i|j}
    r: np.ndarray
    s: np.ndarray
    s_up: np.ndarray  # s^i_j = a^{il} s_lj
    s_vec: np.ndarray  # s_j = b^i s_ij
    r_vec: np.ndarray  # r_j = b^i r_ij


def spd_inverse(a):
    """Inverse of a symmetric positive definite matrix via Cholesky.

    Rejects matrices whose smallest LDL^T pivot falls below ``PIVOT_RATIO``
    times the largest.
    """
    try:
        L = np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        raise NonPositiveDefinite("matrix is not positive definite") from None
    pivots = np.diag(L) ** 2
    if pivots.min() < PIVOT_RATIO * pivots.max():
        raise NonPositiveDefinite("matrix is numerically singular (pivot ratio %.2e)" % (pivots.min() / pivots.max()))
    Linv = np.linalg.inv(L)
    return Linv.T @ Linv


def christoffel(a, da, a_inv=None):
    """gamma^i_jk from a_ij and da[i, j, k] = d a_ij / d x^k."""
    if a_inv is None:
        a_inv = spd_inverse(a)
    # lowered symbols gamma_{r jk} = 1/2 (d_j a_rk + d_k a_rj - d_r a_jk)
    low = 0.5 * (da.transpose(0, 2, 1) + da - da.transpose(2, 0, 1))
    return np.einsum("ir,rjk->ijk", a_inv, low)


def riemann_spray(gamma, y):
    """G^i_alpha = 1/2 gamma^i_jk y^j y^k."""
    return 0.5 * np.einsum("ijk,j,k->i", gamma, y, y)


def beta_covariant(b, db, gamma, a_inv):
    """Covariant derivative b_{i|j} = d_j b_i - b_m gamma^m_ij and its split."""
    cov = db - np.einsum("m,mij->ij", b, gamma)
    r = 0.5 * (cov + cov.T)
    s = 0.5 * (cov - cov.T)
    b_up = a_inv @ b
    return BetaCovariantData(
        b=b,
        b_up=b_up,
        b2=float(b @ b_up),
        cov=cov,
        r=r,
        s=s,
        s_up=a_inv @ s,
        s_vec=b_up @ s,
        r_vec=b_up @ r,
    )


def contract_scalars(data, y):
    """(r_00, r_0, s_0, s^i_0) for the fiber vector ``y``."""
    y = np.asarray(y, dtype=float)
    return float(y @ data.r @ y), float(data.r_vec @ y), float(data.s_vec @ y), data.s_up @ y


@lru_cache(maxsize=8192)
def _point_data_cached(spec, key):
    x = np.array(key)
    a, da = metric_x_jet(spec.alpha, x)
    a_inv = spd_inverse(a)
    gamma = christoffel(a, da, a_inv)
    b, db = eval_oneform_x_jet(spec.beta, x)
    rd = RiemannPointData(a, a_inv, gamma)
    bd = beta_covariant(b, db, gamma, a_inv)
    for arr in (a, a_inv, gamma, b, db, bd.b_up, bd.cov, bd.r, bd.s, bd.s_up, bd.s_vec, bd.r_vec):
        arr.setflags(write=False)
    return rd, bd


def point_data(spec, x):
    """Cached (RiemannPointData, BetaCovariantData) for ``spec`` at ``x``."""
    x = spec.check_point(x)
    return _point_data_cached(spec, tuple(float(v) for v in x))
