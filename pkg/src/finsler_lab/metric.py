"""MetricSpec: the full definition of one (alpha, beta)-metric on a chart box."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .alphabeta import PhiFamily
from .errors import DomainError, SpecError
from .fields import (
    OneFormFieldSpec,
    RiemannFieldSpec,
    oneform_from_doc,
    oneform_to_doc,
    riemann_from_doc,
    riemann_to_doc,
)


@dataclass(frozen=True)
class MetricSpec:
    dim: int
    alpha: RiemannFieldSpec
    beta: OneFormFieldSpec
    phi: PhiFamily
    domain_min: tuple
    domain_max: tuple
    name: str = ""

    def __post_init__(self):
        if self.alpha.dim != self.dim or self.beta.dim != self.dim:
            raise SpecError("alpha/beta dimensions disagree with dim = %d" % self.dim)
        if len(self.domain_min) != self.dim or len(self.domain_max) != self.dim:
            raise SpecError("domain bounds must have length %d" % self.dim)
        if any(lo >= hi for lo, hi in zip(self.domain_min, self.domain_max)):
            raise SpecError("domain min must be strictly below max in every coordinate")

    def check_point(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,) or not np.all(np.isfinite(x)):
            raise DomainError("bad chart point %r for dim %d" % (x, self.dim))
        lo, hi = np.asarray(self.domain_min), np.asarray(self.domain_max)
        if np.any(x < lo) or np.any(x > hi):
            raise DomainError("x = %s outside the chart domain" % (x,))
        return x

    def with_phi(self, phi):
        return MetricSpec(self.dim, self.alpha, self.beta, phi, self.domain_min, self.domain_max, self.name)

    def to_doc(self):
        doc = {
            "dim": self.dim,
            "alpha": riemann_to_doc(self.alpha),
            "beta": oneform_to_doc(self.beta),
            "phi": self.phi.to_doc(),
            "domain": {"min": list(self.domain_min), "max": list(self.domain_max)},
        }
        if self.name:
            doc["name"] = self.name
        return doc

    @classmethod
    def from_doc(cls, doc):
        if not isinstance(doc, dict):
            raise SpecError("metric specification must be a JSON object")
        missing = [key for key in ("dim", "alpha", "beta", "phi") if key not in doc]
        if missing:
            raise SpecError("metric specification is missing %s" % ", ".join(missing))
        dim = doc["dim"]
        if not isinstance(dim, int) or dim < 1:
            raise SpecError("dim must be a positive integer")
        for key in ("alpha", "beta"):
            if not isinstance(doc[key], dict):
                raise SpecError("%s section must be an object" % key)
        domain = doc.get("domain") or {"min": [-1.0] * dim, "max": [1.0] * dim}
        try:
            lo = tuple(float(v) for v in domain["min"])
            hi = tuple(float(v) for v in domain["max"])
        except (KeyError, TypeError, ValueError):
            raise SpecError("domain needs numeric 'min' and 'max' lists") from None
        return cls(
            dim,
            riemann_from_doc(doc["alpha"], dim),
            oneform_from_doc(doc["beta"], dim),
            PhiFamily.from_doc(doc["phi"]),
            lo,
            hi,
            str(doc.get("name", "")),
        )


def load_spec(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SpecError("%s: invalid JSON (%s)" % (path, exc)) from None
    except OSError as exc:
        raise SpecError("%s: %s" % (path, exc.strerror)) from None
    return MetricSpec.from_doc(doc)
