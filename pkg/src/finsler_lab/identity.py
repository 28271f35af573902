"""Audit of the rational form of H^i_00 for the quadratic / Matsumoto pair.

``verify_334_identity`` evaluates the published rational expression (tables
in :mod:`finsler_lab.identity_tables`) at a sample and compares it with
H^i_00 computed from first principles.  ``isolate_terms`` pins down which
coefficient group is wrong: with every invariant except alpha frozen as an
exact rational, T^i - mu T^m_{y^m} y^i is a rational function of alpha
whose denominator is known from the denominators of Q, Q', Psi, Psi'.
Multiplying through and interpolating in exact arithmetic recovers the true
coefficient of every power of alpha, which is then compared group by group
with the table.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Any, NamedTuple

import numpy as np

from . import identity_tables as tables
from .errors import SingularEvaluation
from .riemann import point_data
from .spray import h00_residual

TOLERANCE = 1e-6


class Invariants(NamedTuple):
    k: Any
    eps: Any
    mu: Any
    b2: Any
    beta: Any
    r00: Any
    r0: Any
    s0: Any
    s_i0: Any
    b_up: Any
    y: Any


def invariants(spec, x, y):
    """(alpha, Invariants) of ``spec`` at (x, y) as floats."""
    rd, bd = point_data(spec, x)
    y = np.asarray(y, dtype=float)
    alpha = math.sqrt(float(y @ rd.a @ y))
    q = Invariants(
        k=spec.phi.k if spec.phi.family == "quadratic" else 0.0,
        eps=spec.phi.epsilon if spec.phi.family == "quadratic" else 0.0,
        mu=1.0 / (spec.dim + 1),
        b2=bd.b2,
        beta=float(bd.b @ y),
        r00=float(y @ bd.r @ y),
        r0=float(bd.r_vec @ y),
        s0=float(bd.s_vec @ y),
        s_i0=bd.s_up @ y,
        b_up=np.array(bd.b_up),
        y=y,
    )
    return alpha, q


def _exact(q, dim):
    def vec(v):
        return np.array([Fraction(float(c)) for c in v], dtype=object)

    return Invariants(
        k=Fraction(q.k), eps=Fraction(q.eps), mu=Fraction(1, dim + 1), b2=Fraction(q.b2),
        beta=Fraction(q.beta), r00=Fraction(q.r00), r0=Fraction(q.r0), s0=Fraction(q.s0),
        s_i0=vec(q.s_i0), b_up=vec(q.b_up), y=vec(q.y),
    )


# -- first principles ----------------------------------------------------------


def _phi_derivs(family, q, s):
    if family == "quadratic":
        return 1 + q.eps * s + q.k * s * s, q.eps + 2 * q.k * s, 2 * q.k, 0 * s
    d = 1 - s
    return 1 / d, 1 / d**2, 2 / d**3, 6 / d**4


def projected_t(family, alpha, q):
    """T^i - mu T^m_{y^m} y^i with alpha treated as a free variable.

    Works for floats and for exact Fractions.  Only phi and its derivatives
    enter, so this is independent of any closed form.
    """
    s = q.beta / alpha
    p0, p1, p2, p3 = _phi_derivs(family, q, s)
    base = p0 - s * p1
    den = base + (q.b2 - s * s) * p2
    Q = p1 / base
    Psi = p2 / (2 * den)
    dQ = p0 * p2 / base**2
    dPsi = (p3 * den - p2 * (-3 * s * p2 + (q.b2 - s * s) * p3)) / (2 * den**2)
    bracket = q.r00 - 2 * Q * alpha * q.s0
    T = alpha * Q * q.s_i0 + Psi * bracket * q.b_up
    divT = (
        dQ * q.s0
        + dPsi / alpha * (q.b2 - s * s) * bracket
        + 2 * Psi * (q.r0 - dQ * (q.b2 - s * s) * q.s0 - Q * s * q.s0)
    )
    return T - q.mu * divT * q.y


def _poly_mul(a, b):
    out = [0] * (len(a) + len(b) - 1)
    for i, ca in enumerate(a):
        for j, cb in enumerate(b):
            out[i + j] = out[i + j] + ca * cb
    return out


def reference_denominator(family, q):
    """Coefficients (low to high power of alpha) of the common denominator.

    quadratic: (alpha^2 - k beta^2)^2 ((1 + 2 k b^2) alpha^2 - 3 k beta^2)^2
    matsumoto: alpha (alpha - 2 beta)^2 ((1 + 2 b^2) alpha - 3 beta)^2
    """
    if family == "quadratic":
        f1 = [-q.k * q.beta**2, 0, 1]
        f2 = [-3 * q.k * q.beta**2, 0, 1 + 2 * q.k * q.b2]
        return _poly_mul(_poly_mul(f1, f1), _poly_mul(f2, f2))
    f1 = [-2 * q.beta, 1]
    f2 = [-3 * q.beta, 1 + 2 * q.b2]
    return _poly_mul([0, 1], _poly_mul(_poly_mul(f1, f1), _poly_mul(f2, f2)))


def _interpolate(points, values):
    """Exact monomial coefficients of the interpolating polynomial (Newton form)."""
    n = len(points)
    coef = list(values)
    for j in range(1, n):
        for i in range(n - 1, j - 1, -1):
            coef[i] = (coef[i] - coef[i - 1]) / (points[i] - points[i - j])
    mono = [0 * values[0] for _ in range(n)]
    # Horner expansion of the Newton form
    for i in range(n - 1, -1, -1):
        shifted = [0 * values[0]] + mono[:-1]
        mono = [shifted[m] - points[i] * mono[m] for m in range(n)]
        mono[0] = mono[0] + coef[i]
    return mono


def _poly_eval(coeffs, t):
    acc = 0
    for c in reversed(coeffs):
        acc = acc * t + c
    return acc


def derived_coefficients(family, q, max_degree):
    """True numerator coefficients of ``projected_t * reference_denominator``.

    Returns ``(coeffs, exact_polynomial)`` where ``coeffs[p]`` multiplies
    alpha**p and ``exact_polynomial`` says whether interpolation through
    ``max_degree + 4`` points left no higher-order remainder.
    """
    den = reference_denominator(family, q)
    scale = (1 + abs(q.beta)) * (1 + abs(q.k))
    pts, vals = [], []
    j = 3
    while len(pts) < max_degree + 4:
        t = Fraction(j) * scale
        j += 1
        try:
            vals.append(projected_t(family, t, q) * _poly_eval(den, t))
        except ZeroDivisionError:
            continue
        pts.append(t)
    mono = _interpolate(pts, vals)
    exact = all(not np.any(c != 0) for c in mono[max_degree + 1 :])
    return mono[: max_degree + 1], exact


# -- printed expression --------------------------------------------------------


def _ratio(num, num_pow, den, den_pow, t):
    top = sum(num[g] * t ** num_pow[g] for g in num)
    terms = [den[g] * t ** den_pow[g] for g in den]
    bottom = sum(terms)
    if abs(bottom) <= 1e-14 * max(1.0, max(abs(v) for v in terms)):
        raise SingularEvaluation("printed denominator vanishes")
    return top / bottom


def printed_parts(alpha, q, alpha_bar, q_bar, overrides=None):
    """The two printed fractions, optionally with some groups replaced."""
    num_f, den_f = tables.f_numerator(q), tables.f_denominator(q)
    num_b, den_b = tables.bar_numerator(q_bar), tables.bar_denominator(q_bar)
    for name, value in (overrides or {}).items():
        for d in (num_f, den_f, num_b, den_b):
            if name in d:
                d[name] = value
    part_f = _ratio(num_f, tables.F_NUM_POWERS, den_f, tables.F_DEN_POWERS, alpha)
    part_b = _ratio(num_b, tables.BAR_NUM_POWERS, den_b, tables.BAR_DEN_POWERS, alpha_bar)
    return np.asarray(part_f, dtype=float) * np.ones(len(q.y)), np.asarray(part_b, dtype=float) * np.ones(len(q.y))


def _rel(diff, ref):
    top = float(np.max(np.abs(diff)))
    if top == 0.0:
        return 0.0
    return top / max(float(np.max(np.abs(ref))), 1e-300)


def verify_334_identity(spec, spec_bar, x, y, overrides=None):
    """Compare the printed rational H^i_00 with the first-principles one.

    Returns a dict with the overall max relative residual over the vector
    index, the residual of each part, and the residual of the multiplied
    form under both readings of the factor ``l`` (with and without the
    alpha-bar^2 term).
    """
    if spec.phi.family != "quadratic" or spec_bar.phi.family != "matsumoto":
        raise ValueError("identity audit needs a quadratic F and a Matsumoto F-bar")
    alpha, q = invariants(spec, x, y)
    alpha_b, q_b = invariants(spec_bar, x, y)
    h = h00_residual(spec, spec_bar, x, y)
    part_f, part_b = printed_parts(alpha, q, alpha_b, q_b, overrides)
    true_f = projected_t("quadratic", alpha, q)
    true_b = projected_t("matsumoto", alpha_b, q_b)

    num_f = sum(v * alpha ** tables.F_NUM_POWERS[g] for g, v in tables.f_numerator(q).items())
    den_f = sum(v * alpha ** tables.F_DEN_POWERS[g] for g, v in tables.f_denominator(q).items())
    bar_den = tables.bar_denominator(q_b)
    m = sum(v * alpha_b ** tables.BAR_NUM_POWERS[g] for g, v in tables.bar_numerator(q_b).items())
    l_full = sum(v * alpha_b ** tables.BAR_DEN_POWERS[g] for g, v in bar_den.items())
    l_printed = l_full - bar_den["Lbar"] * alpha_b**2
    readings = {}
    for name, l in (("printed", l_printed), ("with_Lbar", l_full)):
        lhs = h * l * den_f
        rhs = l * num_f - m * den_f
        readings[name] = _rel(lhs - rhs, np.maximum(np.abs(l * num_f), np.abs(m * den_f)))
    return {
        "residual": _rel(part_f - part_b - h, h),
        "residual_F_part": _rel(part_f - true_f, true_f),
        "residual_Fbar_part": _rel(part_b - true_b, true_b),
        "l_readings": readings,
    }


# -- term isolation ------------------------------------------------------------


def _compare(printed, derived):
    diff = printed - derived
    bad = bool(np.any(np.asarray(diff, dtype=object) != 0))
    return {
        "status": "mismatch" if bad else "ok",
        "printed": np.asarray(np.asarray(printed, dtype=object) * np.ones(1, dtype=object), dtype=float).tolist(),
        "derived": np.asarray(np.asarray(derived, dtype=object) * np.ones(1, dtype=object), dtype=float).tolist(),
        "max_abs_difference": float(np.max(np.abs(np.asarray(diff * np.ones(1, dtype=object), dtype=float)))),
    }


def _isolate_part(family, q, num_groups, num_powers, den_groups, den_powers, max_degree):
    out = {"denominator": {}, "numerator": {}, "unlisted_powers": {}}
    ref_den = reference_denominator(family, q)
    for g, p in den_powers.items():
        out["denominator"][g] = _compare(den_groups[g], ref_den[p])
    listed_den = set(den_powers.values())
    for p, c in enumerate(ref_den):
        if p not in listed_den and c != 0:
            out["unlisted_powers"]["den_alpha^%d" % p] = float(c)
    coeffs, exact = derived_coefficients(family, q, max_degree)
    out["numerator_is_polynomial"] = exact
    for g, p in num_powers.items():
        out["numerator"][g] = _compare(num_groups[g], coeffs[p])
    listed = set(num_powers.values())
    for p, c in enumerate(coeffs):
        if p not in listed and np.any(c != 0):
            out["unlisted_powers"]["num_alpha^%d" % p] = np.asarray(c, dtype=float).tolist()
    bad = [g for g, r in out["denominator"].items() if r["status"] == "mismatch"]
    bad += [g for g, r in out["numerator"].items() if r["status"] == "mismatch"]
    out["inconsistent_groups"] = bad
    return out, coeffs, ref_den


def isolate_terms(spec, spec_bar, x, y):
    """Exact group-by-group comparison of the tables with derived coefficients.

    Also reports, for every inconsistent group, the float residual of the
    whole identity when only that group is replaced by its derived value
    (leave-one-out), and the residual with every inconsistent group replaced.
    """
    alpha, q = invariants(spec, x, y)
    alpha_b, q_b = invariants(spec_bar, x, y)
    eq, eq_b = _exact(q, spec.dim), _exact(q_b, spec_bar.dim)
    rep_f, coeffs_f, den_f = _isolate_part(
        "quadratic", eq, tables.f_numerator(eq), tables.F_NUM_POWERS,
        tables.f_denominator(eq), tables.F_DEN_POWERS, 9,
    )
    rep_b, coeffs_b, den_b = _isolate_part(
        "matsumoto", eq_b, tables.bar_numerator(eq_b), tables.BAR_NUM_POWERS,
        tables.bar_denominator(eq_b), tables.BAR_DEN_POWERS, 6,
    )

    def derived_value(group):
        if group in tables.F_NUM_POWERS:
            return np.asarray(coeffs_f[tables.F_NUM_POWERS[group]], dtype=float)
        if group in tables.F_DEN_POWERS:
            return float(den_f[tables.F_DEN_POWERS[group]])
        if group in tables.BAR_NUM_POWERS:
            return np.asarray(coeffs_b[tables.BAR_NUM_POWERS[group]], dtype=float)
        return float(den_b[tables.BAR_DEN_POWERS[group]])

    ordered = rep_f["inconsistent_groups"] + rep_b["inconsistent_groups"]
    loo = {}
    for g in ordered:
        loo[g] = verify_334_identity(spec, spec_bar, x, y, overrides={g: derived_value(g)})["residual"]
    all_fixed = verify_334_identity(spec, spec_bar, x, y, overrides={g: derived_value(g) for g in ordered})
    return {
        "F": rep_f,
        "Fbar": rep_b,
        "inconsistent_groups": ordered,
        "first_inconsistent_group": ordered[0] if ordered else None,
        "residual_if_only_group_replaced": loo,
        "residual_all_replaced": all_fixed["residual"],
    }


def audit_identity(spec, spec_bar, samples, tol=TOLERANCE, isolate_all=False):
    """Run the identity check on ``samples`` of (x, y) and summarise.

    The outcome is either ``confirmed`` (every residual below ``tol``) or a
    term-isolation report for the first failing sample, together with the
    set of groups flagged across all isolated samples.
    """
    residuals = []
    first_fail = None
    flagged = None
    isolated = 0
    for idx, (x, y) in enumerate(samples):
        res = verify_334_identity(spec, spec_bar, x, y)
        residuals.append(res)
        if res["residual"] >= tol and (first_fail is None or isolate_all):
            iso = isolate_terms(spec, spec_bar, x, y)
            isolated += 1
            groups = tuple(iso["inconsistent_groups"])
            flagged = groups if flagged is None else tuple(g for g in flagged if g in groups)
            if first_fail is None:
                first_fail = {"sample_index": idx, "x": list(map(float, x)), "y": list(map(float, y)), **iso}
    worst = max((r["residual"] for r in residuals), default=0.0)
    return {
        "samples": len(samples),
        "tolerance": tol,
        "max_residual": worst,
        "max_residual_F_part": max((r["residual_F_part"] for r in residuals), default=0.0),
        "max_residual_Fbar_part": max((r["residual_Fbar_part"] for r in residuals), default=0.0),
        "max_l_reading_residual": {
            name: max((r["l_readings"][name] for r in residuals), default=0.0)
            for name in ("printed", "with_Lbar")
        },
        "confirmed": worst < tol,
        "isolation": first_fail,
        "samples_isolated": isolated,
        "groups_flagged_in_every_isolated_sample": list(flagged) if flagged is not None else [],
    }
