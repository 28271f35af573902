"""phi-families of (alpha, beta)-metrics and the Q / Theta / Psi functions.

Two families are shipped:

* ``quadratic``: phi(s) = 1 + eps*s + k*s**2 (k != 0), i.e. F = alpha + eps*beta + k*beta**2/alpha
* ``matsumoto``: phi(s) = 1 / (1 - s), i.e. F = alpha**2 / (alpha - beta)

``qtp_generic`` evaluates Q, Theta, Psi from phi and its derivatives;
``qtp_closed`` evaluates the published family-specific closed forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError, SingularEvaluation, SpecError

PHI_FAMILIES = ("quadratic", "matsumoto")
B0_CAP = 1e6
SINGULAR_EPS = 1e-14


def _check_denominator(value, scale, what):
    if abs(value) <= SINGULAR_EPS * max(1.0, abs(scale)):
        raise SingularEvaluation("%s vanishes (%.3e)" % (what, value))


@dataclass(frozen=True)
class PhiFamily:
    family: str
    epsilon: float = 0.0
    k: float = 1.0

    def __post_init__(self):
        if self.family not in PHI_FAMILIES:
            raise SpecError("unknown phi family %r" % self.family)
        if self.family == "quadratic" and self.k == 0.0:
            raise SpecError("quadratic phi-family requires k != 0")

    @property
    def b0(self):
        """Supremum of the admissible alpha-norms of beta."""
        if self.family == "matsumoto":
            return 0.5
        eps, k = self.epsilon, self.k
        # phi - s phi' + (b^2 - s^2) phi'' = 1 + 2 k b^2 - 3 k s^2, worst case |s| = b (k > 0) or s = 0 (k < 0)
        bound = 1.0 / math.sqrt(k) if k > 0 else math.sqrt(-1.0 / (2.0 * k))
        # phi itself must stay positive on |s| <= b
        disc = eps * eps - 4.0 * k
        if disc >= 0.0:
            roots = ((-eps + math.sqrt(disc)) / (2.0 * k), (-eps - math.sqrt(disc)) / (2.0 * k))
            bound = min(bound, min(abs(r) for r in roots))
        return min(bound, B0_CAP)

    def derivs(self, s, count):
        """[phi(s), phi'(s), ..., phi^(count)(s)] without domain checks."""
        if self.family == "quadratic":
            out = [1.0 + self.epsilon * s + self.k * s * s, self.epsilon + 2.0 * self.k * s, 2.0 * self.k]
            out += [0.0] * max(0, count - 2)
            return out[: count + 1]
        d = 1.0 - s
        _check_denominator(d, 1.0, "1 - s")
        return [math.factorial(j) / d ** (j + 1) for j in range(count + 1)]

    def derivs_array(self, s, count):
        """Vectorised :meth:`derivs` for an array of ``s``."""
        s = np.asarray(s, dtype=float)
        if self.family == "quadratic":
            out = [1.0 + self.epsilon * s + self.k * s * s, self.epsilon + 2.0 * self.k * s,
                   np.full_like(s, 2.0 * self.k)]
            out += [np.zeros_like(s)] * max(0, count - 2)
            return out[: count + 1]
        d = 1.0 - s
        if np.any(np.abs(d) <= SINGULAR_EPS):
            raise SingularEvaluation("1 - s vanishes")
        return [math.factorial(j) / d ** (j + 1) for j in range(count + 1)]

    def to_doc(self):
        if self.family == "quadratic":
            return {"family": "quadratic", "epsilon": self.epsilon, "k": self.k}
        return {"family": "matsumoto"}

    @classmethod
    def from_doc(cls, doc):
        if not isinstance(doc, dict):
            raise SpecError("phi section must be an object")
        params = dict(doc.get("params") or {})
        params.update({k: v for k, v in doc.items() if k not in ("family", "params")})
        family = doc.get("family")
        if family == "quadratic":
            try:
                return cls("quadratic", float(params.get("epsilon", 0.0)), float(params["k"]))
            except KeyError:
                raise SpecError("quadratic phi-family needs 'k'") from None
            except (TypeError, ValueError) as exc:
                raise SpecError("bad quadratic parameters: %s" % exc) from None
        return cls(family)


class QTPTriple(NamedTuple):
    Q: float
    Theta: float
    Psi: float


def phi_jet(fam, s):
    """(phi, phi', phi'') at ``s``; DomainError outside |s| < b0."""
    if not abs(s) < fam.b0:
        raise DomainError("s = %g outside the regular range |s| < %g" % (s, fam.b0))
    return tuple(fam.derivs(s, 2))


def regularity(fam, s, b):
    """True iff phi - s phi' + (b^2 - s^2) phi'' > 0."""
    try:
        p0, p1, p2 = fam.derivs(s, 2)
    except SingularEvaluation:
        return False
    return p0 - s * p1 + (b * b - s * s) * p2 > 0.0


def qtp_generic(fam, s, b2):
    p0, p1, p2 = fam.derivs(s, 2)
    base = p0 - s * p1
    _check_denominator(base, p0, "phi - s phi'")
    den = base + (b2 - s * s) * p2
    _check_denominator(den, p0, "phi - s phi' + (b^2 - s^2) phi''")
    _check_denominator(p0, 1.0, "phi")
    Q = p1 / base
    Theta = (p0 * p1 - s * (p0 * p2 + p1 * p1)) / (2.0 * p0 * den)
    Psi = 0.5 * p2 / den
    return QTPTriple(Q, Theta, Psi)


def qtp_closed(fam, s, b2, theta_reading="printed"):
    """Published closed forms for the two families.

    For the quadratic family the Theta numerator is printed as
    ``eps - 3 eps k s^2 - 4 k^2 s^2``; ``theta_reading="cubic"`` evaluates
    ``eps - 3 eps k s^2 - 4 k^2 s^3`` instead (the reading consistent with
    the generic formula).  The Matsumoto forms have a single reading.
    """
    if fam.family == "matsumoto":
        d_q = 1.0 - 2.0 * s
        d = 1.0 + 2.0 * b2 - 3.0 * s
        _check_denominator(d_q, 1.0, "1 - 2s")
        _check_denominator(d, 1.0, "1 + 2b^2 - 3s")
        return QTPTriple(1.0 / d_q, (1.0 - 4.0 * s) / (2.0 * d), 1.0 / d)
    eps, k = fam.epsilon, fam.k
    d_q = 1.0 - k * s * s
    d = 1.0 + 2.0 * k * b2 - 3.0 * k * s * s
    phi = 1.0 + eps * s + k * s * s
    _check_denominator(d_q, 1.0, "1 - k s^2")
    _check_denominator(d, 1.0, "1 + 2kb^2 - 3ks^2")
    _check_denominator(phi, 1.0, "1 + eps s + k s^2")
    if theta_reading == "printed":
        num = eps - 3.0 * eps * k * s * s - 4.0 * k * k * s * s
    elif theta_reading == "cubic":
        num = eps - 3.0 * eps * k * s * s - 4.0 * k * k * s ** 3
    else:
        raise ValueError("theta_reading must be 'printed' or 'cubic'")
    return QTPTriple((eps + 2.0 * k * s) / d_q, num / (2.0 * d * phi), k / d)


def qtp_prime(fam, s, b2):
    """Analytic s-derivatives (Q'(s), Psi'(s)) at fixed b^2."""
    if fam.family == "matsumoto":
        d_q = 1.0 - 2.0 * s
        d = 1.0 + 2.0 * b2 - 3.0 * s
        _check_denominator(d_q, 1.0, "1 - 2s")
        _check_denominator(d, 1.0, "1 + 2b^2 - 3s")
        return 2.0 / d_q ** 2, 3.0 / d ** 2
    eps, k = fam.epsilon, fam.k
    d_q = 1.0 - k * s * s
    d = 1.0 + 2.0 * k * b2 - 3.0 * k * s * s
    _check_denominator(d_q, 1.0, "1 - k s^2")
    _check_denominator(d, 1.0, "1 + 2kb^2 - 3ks^2")
    return 2.0 * k * (1.0 + eps * s + k * s * s) / d_q ** 2, 6.0 * k * k * s / d ** 2


def audit_closed_forms(fam, samples, tol=1e-10, theta_reading="printed"):
    """Compare closed forms against the generic formulas on ``(s, b2)`` samples.

    Errors are relative to ``max(|generic|, 1)`` so values crossing zero
    (Theta does) do not blow up.  Returns the worst error per function and a
    ``suspected_typos`` list naming every function that reaches ``tol``.
    """
    worst = {"Q": 0.0, "Theta": 0.0, "Psi": 0.0}
    for s, b2 in samples:
        gen = qtp_generic(fam, s, b2)
        clo = qtp_closed(fam, s, b2, theta_reading)
        for name in worst:
            g, c = getattr(gen, name), getattr(clo, name)
            err = abs(g - c) / max(abs(g), 1.0)
            worst[name] = max(worst[name], err)
    return {
        "family": fam.family,
        "theta_reading": theta_reading,
        "max_rel_error": worst,
        "suspected_typos": sorted(name for name, e in worst.items() if e >= tol),
        "samples": len(samples),
    }


def random_regular_samples(fam, count, rng, margin=0.95):
    """Draw ``(s, b2)`` pairs with b < margin * b0 and |s| <= b, regular and non-singular."""
    out = []
    bmax = margin * min(fam.b0, 2.0)
    while len(out) < count:
        b = rng.uniform(0.0, bmax)
        s = rng.uniform(-b, b)
        if regularity(fam, s, b) and fam.derivs(s, 0)[0] > 0.0:
            out.append((s, b * b))
    return out


def finsler_value(spec, x, y):
    """F(x, y) = alpha * phi(beta / alpha)."""
    from .fields import eval_metric, eval_oneform_x_jet

    spec.check_point(x)
    y = np.asarray(y, dtype=float)
    a = eval_metric(spec.alpha, x)
    b, _ = eval_oneform_x_jet(spec.beta, x)
    alpha2 = float(y @ a @ y)
    _check_denominator(alpha2, 1.0, "alpha")
    alpha = math.sqrt(alpha2)
    s = float(b @ y) / alpha
    bnorm = math.sqrt(float(b @ np.linalg.solve(a, b)))
    if not (bnorm < spec.phi.b0 and regularity(spec.phi, s, bnorm)):
        raise DomainError("(alpha, beta)-metric is not regular at x = %s" % (x,))
    return alpha * spec.phi.derivs(s, 0)[0]
