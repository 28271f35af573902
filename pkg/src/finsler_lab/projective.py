"""Characterization checks: Douglas conditions, projective relatedness, isotropy.

Every check returns a :class:`CheckVerdict` whose ``residual`` is the worst
value over the samples of a :class:`SamplePlan`.  Samples where an upstream
evaluation is singular are excluded and counted, never silently dropped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateFit, DomainError, FinslerLabError, NonPositiveDefinite, SingularEvaluation
from .fields import metric_x_jet
from .parallel import pmap
from .riemann import christoffel, point_data, riemann_spray, spd_inverse
from .spray import douglas_tensor, finsler_jet, mean_berwald, spray_jet, spray_via_alphabeta

SPRAY_TOL = 1e-7
TAU_TOL = 1e-8
ODE_TOL = 1e-10
COV_TOL = 1e-9
KILLING_TOL = 1e-9
ISOTROPY_TOL = 1e-7
DOUGLAS_CROSS_TOL = 1e-7
FIT_FLOOR = 1e-14

_SAMPLE_ERRORS = (SingularEvaluation, NonPositiveDefinite, DomainError)


@dataclass
class CheckVerdict:
    name: str
    passed: bool
    residual: float
    tolerance: float
    fitted: dict = field(default_factory=dict)
    samples_used: int = 0
    samples_excluded: int = 0
    seed: int | None = None

    def to_record(self):
        return {
            "check": self.name,
            "pass": self.passed,
            "residual": self.residual,
            "tolerance": self.tolerance,
            "fitted": self.fitted,
            "seed": self.seed,
            "samples_used": self.samples_used,
            "samples_excluded": self.samples_excluded,
        }


def _verdict(name, residual, tol, fitted, used, excluded, plan):
    residual = float(residual) if used else math.inf
    return CheckVerdict(name, bool(residual < tol), residual, tol, fitted, used, excluded,
                        plan.seed if plan is not None else None)


@dataclass(frozen=True)
class SamplePlan:
    """Chart points with ``fibers`` unit fiber vectors each, all derived from ``seed``."""

    points: tuple
    fibers: int = 16
    seed: int = 42

    def __post_init__(self):
        if self.fibers < 1:
            raise ValueError("fibers must be positive")
        object.__setattr__(self, "points", tuple(tuple(float(v) for v in p) for p in self.points))

    @property
    def dim(self):
        return len(self.points[0]) if self.points else 0

    def fiber_vectors(self, index):
        rng = np.random.default_rng([self.seed, index])
        out = []
        while len(out) < self.fibers:
            v = rng.standard_normal(self.dim)
            norm = np.linalg.norm(v)
            if norm > 1e-3:
                out.append(v / norm)
        return out

    def samples(self):
        """[(point index, x, [y, ...]), ...]."""
        return [(i, np.array(p), self.fiber_vectors(i)) for i, p in enumerate(self.points)]

    @classmethod
    def in_box(cls, lo, hi, points=8, fibers=16, seed=42, accept=None, margin=0.1, max_tries=10000):
        """Uniform points in the box shrunk by ``margin`` on each side.

        ``accept(x)`` filters candidates (e.g. regularity of the metrics).
        """
        lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
        width = hi - lo
        rng = np.random.default_rng(seed)
        out = []
        for _ in range(max_tries):
            if len(out) == points:
                break
            x = lo + width * (margin + (1 - 2 * margin) * rng.random(len(lo)))
            if accept is None or accept(x):
                out.append(x)
        if len(out) < points:
            raise DomainError("could not find %d admissible sample points" % points)
        return cls(tuple(out), fibers, seed)

    @classmethod
    def for_specs(cls, specs, points=8, fibers=16, seed=42):
        """Plan inside the first spec's chart where every spec is regular."""
        first = specs[0]

        def ok(x):
            try:
                for spec in specs:
                    _, bd = point_data(spec, x)
                    if not math.sqrt(max(bd.b2, 0.0)) < spec.phi.b0:
                        return False
            except FinslerLabError:
                return False
            return True

        return cls.in_box(first.domain_min, first.domain_max, points, fibers, seed, ok)


def _per_point(plan, fn):
    """Apply ``fn(x, ys)`` to every plan point, in order (optionally in parallel)."""
    return pmap(lambda item: fn(item[1], item[2]), plan.samples())


def _safe(fn, *args):
    try:
        return fn(*args)
    except _SAMPLE_ERRORS:
        return None


def _scalar_fit(targets, basis, floor_ref=None):
    """Least-squares c with targets ~ c * basis (lists of arrays).

    Returns (c, residual) with the residual normalized by max(1, |model|),
    or by max(1, |floor_ref|) when given.
    """
    t = np.concatenate([np.ravel(v) for v in targets])
    b = np.concatenate([np.ravel(v) for v in basis])
    bb = float(b @ b)
    if bb < FIT_FLOOR**2:
        raise DegenerateFit("fit basis vanishes")
    c = float(t @ b) / bb
    ref = np.linalg.norm(c * b) if floor_ref is None else floor_ref
    return c, float(np.linalg.norm(t - c * b)) / max(1.0, ref)


def _y_proportional_fit(deltas, ys):
    """Fit theta with delta^i(y) = (theta . y) y^i over the fibers ``ys``."""
    n = len(ys[0])
    if len(ys) < n + 1:
        raise DegenerateFit("need at least n + 1 fibers to recover theta")
    rows = np.concatenate([np.outer(y, y) for y in ys])
    rhs = np.concatenate(deltas)
    theta, *_ = np.linalg.lstsq(rows, rhs, rcond=None)
    resid = float(np.linalg.norm(rows @ theta - rhs)) / max(1.0, float(np.linalg.norm(rhs)))
    return theta, resid


# -- projective relatedness ----------------------------------------------------


def check_spray_proportional(spec, spec_bar, plan, tol=SPRAY_TOL):
    """G^i - Gbar^i = P(x, y) y^i with P positively 1-homogeneous in y."""
    if spec.dim != spec_bar.dim:
        raise DomainError("metrics live on charts of different dimension")

    def at(x, ys):
        res, hom, pmax, used, skipped = 0.0, 0.0, 0.0, 0, 0
        for y in ys:
            d1 = _safe(lambda v: spray_via_alphabeta(spec, x, v) - spray_via_alphabeta(spec_bar, x, v), y)
            d2 = _safe(lambda v: spray_via_alphabeta(spec, x, v) - spray_via_alphabeta(spec_bar, x, v), 2 * y)
            if d1 is None or d2 is None:
                skipped += 1
                continue
            P = float(d1 @ y) / float(y @ y)
            P2 = float(d2 @ (2 * y)) / float(4 * y @ y)
            res = max(res, float(np.linalg.norm(d1 - P * y)) / max(1.0, float(np.linalg.norm(d1))))
            hom = max(hom, abs(P2 - 2 * P) / max(1.0, abs(P)))
            pmax = max(pmax, abs(P))
            used += 1
        return res, hom, pmax, used, skipped

    rows = _per_point(plan, at)
    res = max((r[0] for r in rows), default=0.0)
    hom = max((r[1] for r in rows), default=0.0)
    fitted = {"P_max_abs": max((r[2] for r in rows), default=0.0), "P_homogeneity_residual": hom}
    return _verdict("spray_proportional", max(res, hom), tol, fitted,
                    sum(r[3] for r in rows), sum(r[4] for r in rows), plan)


def _riemann_gamma(field, x):
    a, da = metric_x_jet(field, x)
    return christoffel(a, da, spd_inverse(a)), a


def check_riemann_projective(alpha_field, alpha_bar_field, plan, tol=SPRAY_TOL):
    """G_alpha - G_alphabar = (lambda_k y^k) y^i for some 1-form d(lambda)."""
    if alpha_field.dim != alpha_bar_field.dim:
        raise DomainError("fields have different dimensions")

    def at(x, ys):
        gamma, _ = _riemann_gamma(alpha_field, x)
        gamma_bar, _ = _riemann_gamma(alpha_bar_field, x)
        deltas = [riemann_spray(gamma, y) - riemann_spray(gamma_bar, y) for y in ys]
        return _y_proportional_fit(deltas, ys)

    rows = _per_point(plan, at)
    fitted = {"lambda_gradient": [r[0].tolist() for r in rows]}
    n = sum(len(plan.fiber_vectors(i)) for i in range(len(plan.points)))
    return _verdict("riemann_projective", max(r[1] for r in rows), tol, fitted, n, 0, plan)


# -- Douglas conditions -------------------------------------------------------


def _max_douglas(spec, x, ys, perturbation=None):
    worst, used = 0.0, 0
    for y in ys:
        D = _safe(douglas_tensor, spec, x, y, perturbation)
        if D is not None:
            worst = max(worst, float(np.max(np.abs(D))))
            used += 1
    return worst, used


def tau_fit(spec, x):
    """Fit tau(x) in b_{i|j} = 2 tau ((1 + 2k b^2) a_ij - 3k b_i b_j).

    Returns (tau, residual, degenerate) with the residual normalized by
    max(1, |b_{i|j}|).  ``degenerate`` flags b = 0, where the b (x) b part
    carries no information and the fit uses a_ij alone.
    """
    rd, bd = point_data(spec, x)
    k = spec.phi.k
    basis = 2.0 * ((1.0 + 2.0 * k * bd.b2) * rd.a - 3.0 * k * np.outer(bd.b, bd.b))
    tau, resid = _scalar_fit([bd.cov], [basis], floor_ref=float(np.linalg.norm(bd.cov)))
    return tau, resid, bd.b2 < FIT_FLOOR


def check_douglas_quadratic(spec, plan, tol=TAU_TOL, cross_check=True):
    """Douglas condition for F = alpha + eps beta + k beta^2 / alpha."""
    if spec.phi.family != "quadratic":
        raise DomainError("check_douglas_quadratic needs the quadratic phi-family")

    def at(x, ys):
        tau, resid, degenerate = tau_fit(spec, x)
        dmax, used = _max_douglas(spec, x, ys) if cross_check else (None, len(ys))
        return tau, resid, degenerate, dmax, used, len(ys) - used

    rows = _per_point(plan, at)
    resid = max(r[1] for r in rows)
    fitted = {"tau": [r[0] for r in rows], "degenerate_points": sum(r[2] for r in rows)}
    if cross_check:
        dmax = max(r[3] for r in rows)
        fitted["max_abs_D"] = dmax
        fitted["douglas_consistent"] = (resid < tol) <= (dmax < DOUGLAS_CROSS_TOL)
    return _verdict("douglas_quadratic", resid, tol, fitted,
                    sum(r[4] for r in rows), sum(r[5] for r in rows), plan)


def check_douglas_ode(fam, k1, k2, k3, tol=ODE_TOL, grid=2001, margin=0.999):
    """[1 + (k1 + k2 s^2) s^2 + k3 s^2] phi'' - (k1 + k2 s^2)(phi - s phi') on |s| < b0.

    ``fam`` only needs ``b0`` and ``derivs_array`` (or ``derivs``).
    """
    if abs(fam.derivs(0.0, 0)[0] - 1.0) > 1e-15:
        raise DomainError("the ODE is stated for phi(0) = 1")
    bound = margin * min(fam.b0, 1e3)
    s = np.linspace(-bound, bound, grid)
    if hasattr(fam, "derivs_array"):
        p0, p1, p2 = fam.derivs_array(s, 2)[:3]
    else:
        p0, p1, p2 = np.array([fam.derivs(v, 2)[:3] for v in s]).T
    lam = k1 + k2 * s * s
    res = (1.0 + lam * s * s + k3 * s * s) * p2 - lam * (p0 - s * p1)
    worst = float(np.max(np.abs(res)))
    fitted = {"k1": k1, "k2": k2, "k3": k3, "s_max": bound, "worst_s": float(s[np.argmax(np.abs(res))])}
    return CheckVerdict("douglas_ode", worst < tol, worst, tol, fitted, grid, 0, None)


def check_matsumoto_douglas(spec, plan, tol=COV_TOL, cross_check=True):
    """Douglas condition for the Matsumoto metric: b_{i|j} = 0."""
    if spec.phi.family != "matsumoto":
        raise DomainError("check_matsumoto_douglas needs the matsumoto phi-family")

    def at(x, ys):
        _, bd = point_data(spec, x)
        dmax, used = _max_douglas(spec, x, ys) if cross_check else (None, len(ys))
        return float(np.max(np.abs(bd.cov))), dmax, used, len(ys) - used

    rows = _per_point(plan, at)
    resid = max(r[0] for r in rows)
    fitted = {}
    if cross_check:
        dmax = max(r[1] for r in rows)
        fitted["max_abs_D"] = dmax
        fitted["douglas_consistent"] = (resid < tol) == (dmax < DOUGLAS_CROSS_TOL)
    return _verdict("matsumoto_douglas", resid, tol, fitted,
                    sum(r[2] for r in rows), sum(r[3] for r in rows), plan)


def check_theorem31(spec, spec_bar, plan, tol_tau=TAU_TOL, tol_theta=SPRAY_TOL, tol_closed=COV_TOL):
    """The three conditions for a quadratic F to be projectively related to a Matsumoto F-bar.

    (i) b_{i|j} = 2 tau ((1 + 2k b^2) a_ij - 3k b_i b_j);
    (ii) G_alpha - G_alphabar + 2k tau alpha^2 b^i = theta_k y^k y^i;
    (iii) beta-bar is closed.

    Each condition is measured against its own tolerance; the verdict
    residual is the worst ratio residual / tolerance and passes below 1.
    When all three hold, spray proportionality is run as a cross-check.
    """
    if spec.phi.family != "quadratic" or spec_bar.phi.family != "matsumoto":
        raise DomainError("check_theorem31 needs a quadratic F and a Matsumoto F-bar")
    if spec.dim < 3:
        raise DomainError("the characterization is stated for n >= 3")
    if spec.dim != spec_bar.dim:
        raise DomainError("metrics live on charts of different dimension")
    k = spec.phi.k

    def at(x, ys):
        tau, r_tau, _ = tau_fit(spec, x)
        rd, bd = point_data(spec, x)
        rd_bar, bd_bar = point_data(spec_bar, x)
        deltas = []
        for y in ys:
            a2 = float(y @ rd.a @ y)
            deltas.append(rd.spray_alpha(y) - rd_bar.spray_alpha(y) + 2.0 * k * tau * a2 * bd.b_up)
        theta, r_theta = _y_proportional_fit(deltas, ys)
        return tau, theta, r_tau, r_theta, float(np.max(np.abs(bd_bar.s)))

    rows = _per_point(plan, at)
    conditions = {
        "i": (max(r[2] for r in rows), tol_tau),
        "ii": (max(r[3] for r in rows), tol_theta),
        "iii": (max(r[4] for r in rows), tol_closed),
    }
    fitted = {
        "tau": [r[0] for r in rows],
        "theta": [r[1].tolist() for r in rows],
        "conditions": {c: {"residual": r, "tolerance": t, "pass": r < t} for c, (r, t) in conditions.items()},
    }
    ratio = max(r / t for r, t in conditions.values())
    if ratio < 1.0:
        sp = check_spray_proportional(spec, spec_bar, plan)
        fitted["spray_proportional_pass"] = sp.passed
        fitted["spray_proportional_residual"] = sp.residual
    n = len(plan.points) * plan.fibers
    return _verdict("theorem31", ratio, 1.0, fitted, n, 0, plan)


# -- isotropy ------------------------------------------------------------------


def check_killing_constant_length(spec, plan, tol=KILLING_TOL):
    """beta is Killing of constant length: r_00 = 0 and s_0 = 0."""

    def at(x, ys):
        _, bd = point_data(spec, x)
        r00 = max(abs(float(y @ bd.r @ y)) for y in ys)
        s0 = max(abs(float(bd.s_vec @ y)) for y in ys)
        return r00, s0

    rows = _per_point(plan, at)
    r00 = max(r[0] for r in rows)
    s0 = max(r[1] for r in rows)
    fitted = {"max_abs_r00": r00, "max_abs_s0": s0}
    n = len(plan.points) * plan.fibers
    return _verdict("killing_constant_length", max(r00, s0), tol, fitted, n, 0, plan)


def check_isotropic_mean_berwald(spec, plan, tol=ISOTROPY_TOL, consistency=True):
    """E_ij = (n + 1)/2 c(x) F_{y^i y^j}, one c per chart point."""
    n = spec.dim

    def at(x, ys):
        targets, basis = [], []
        for y in ys:
            try:
                E = mean_berwald(spec, x, y)
                Fyy = finsler_jet(spec, x, y, order=2).d2
            except _SAMPLE_ERRORS:
                continue
            targets.append(E)
            basis.append(0.5 * (n + 1) * Fyy)
        if not targets:
            return None, 0.0, 0, len(ys)
        c, resid = _scalar_fit(targets, basis)
        return c, resid, len(targets), len(ys) - len(targets)

    rows = _per_point(plan, at)
    resid = max(r[1] for r in rows)
    cs = [r[0] for r in rows]
    fitted = {"c": cs}
    if consistency and spec.phi.family == "quadratic":
        killing = check_killing_constant_length(spec, plan)
        zero_c = resid < tol and all(c is not None and abs(c) < tol for c in cs)
        fitted["killing_constant_length_pass"] = killing.passed
        fitted["consistent_with_killing"] = zero_c == killing.passed
    return _verdict("isotropic_mean_berwald", resid, tol, fitted,
                    sum(r[2] for r in rows), sum(r[3] for r in rows), plan)


def berwald_ansatz(Fjet, y):
    """F_jk d^i_l + F_jl d^i_k + F_kl d^i_j + F_jkl y^i as A[i, j, k, l]."""
    n = len(y)
    F2, F3 = Fjet.d2, Fjet.d3
    eye = np.eye(n)
    return (
        np.einsum("jk,il->ijkl", F2, eye)
        + np.einsum("jl,ik->ijkl", F2, eye)
        + np.einsum("kl,ij->ijkl", F2, eye)
        + np.einsum("jkl,i->ijkl", F3, y)
    )


def check_isotropic_berwald(spec, plan, tol=ISOTROPY_TOL):
    """B^i_jkl = c(x) (F_jk d^i_l + F_jl d^i_k + F_kl d^i_j + F_jkl y^i)."""

    def at(x, ys):
        targets, basis = [], []
        for y in ys:
            try:
                B = spray_jet(spec, x, y, order=3).d3
                Fj = finsler_jet(spec, x, y, order=3)
            except _SAMPLE_ERRORS:
                continue
            targets.append(B)
            basis.append(berwald_ansatz(Fj, np.asarray(y, dtype=float)))
        if not targets:
            return None, 0.0, 0, len(ys)
        c, resid = _scalar_fit(targets, basis)
        return c, resid, len(targets), len(ys) - len(targets)

    rows = _per_point(plan, at)
    fitted = {"c": [r[0] for r in rows]}
    return _verdict("isotropic_berwald", max(r[1] for r in rows), tol, fitted,
                    sum(r[2] for r in rows), sum(r[3] for r in rows), plan)
