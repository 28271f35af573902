"""Geodesics x'' + 2 G(x, x') = 0 by fixed-step RK4, and point-set trace comparison."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, EmptyTrace, SingularEvaluation
from .riemann import point_data
from .spray import spray_via_alphabeta

DEFAULT_DT = 1e-3


@dataclass
class GeodesicTrace:
    points: np.ndarray
    velocities: np.ndarray
    params: np.ndarray
    arclengths: np.ndarray
    spec_id: str = ""
    flags: list = field(default_factory=list)

    def __len__(self):
        return len(self.params)

    @property
    def truncated(self):
        return bool(self.flags)

    def rows(self):
        for t, x, v, s in zip(self.params, self.points, self.velocities, self.arclengths):
            yield float(t), [float(c) for c in x], [float(c) for c in v], float(s)


def finsler_norm(spec, x, y):
    """F(x, y) through the cached point data (no regularity re-check)."""
    rd, bd = point_data(spec, x)
    alpha = math.sqrt(float(y @ rd.a @ y))
    if alpha == 0.0:
        return 0.0
    return alpha * spec.phi.derivs(float(bd.b @ y) / alpha, 0)[0]


def integrate_geodesic(spec, x0, y0, t_end, dt=DEFAULT_DT, spray=None):
    """Classical RK4 on (x, v)' = (v, -2 G(x, v)) from t = 0 to ``t_end``.

    The step is ``t_end / round(t_end / dt)`` so the last point lands on
    ``t_end``.  Leaving the chart or hitting a singular evaluation stops the
    integration; the trace keeps the points reached so far and records a
    ``domain_exit`` or ``singular`` flag.  ``spray(x, v)`` overrides the
    spray (default: the (alpha, beta) formula for ``spec``).
    """
    x = spec.check_point(x0).copy()
    v = np.asarray(y0, dtype=float).copy()
    if not np.any(v):
        raise SingularEvaluation("zero initial velocity")
    if not dt > 0 or not t_end > 0:
        raise ValueError("dt and t_end must be positive")
    G = spray or (lambda p, q: spray_via_alphabeta(spec, p, q))
    steps = max(1, int(round(t_end / dt)))
    h = t_end / steps

    def rhs(p, q):
        return q, -2.0 * G(p, q)

    xs, vs, ts = [x.copy()], [v.copy()], [0.0]
    flags = []
    G(x, v)  # regularity at the start point is a precondition, not a flag
    for step in range(1, steps + 1):
        try:
            k1x, k1v = rhs(x, v)
            k2x, k2v = rhs(x + 0.5 * h * k1x, v + 0.5 * h * k1v)
            k3x, k3v = rhs(x + 0.5 * h * k2x, v + 0.5 * h * k2v)
            k4x, k4v = rhs(x + h * k3x, v + h * k3v)
            x_new = x + h / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
            v_new = v + h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
            spec.check_point(x_new)
        except DomainError as exc:
            flags.append("domain_exit" if "outside the chart" in str(exc) else "singular")
            break
        except SingularEvaluation:
            flags.append("singular")
            break
        x, v = x_new, v_new
        xs.append(x.copy())
        vs.append(v.copy())
        ts.append(step * h)
    points, velocities = np.array(xs), np.array(vs)
    speeds = np.array([finsler_norm(spec, p, q) for p, q in zip(points, velocities)])
    times = np.array(ts)
    arcs = np.concatenate([[0.0], np.cumsum(0.5 * (speeds[1:] + speeds[:-1]) * np.diff(times))])
    return GeodesicTrace(points, velocities, times, arcs, spec.name, flags)


def _cut(points, length):
    """Polyline prefix of Euclidean length ``length``."""
    seg = np.linalg.norm(np.diff(points, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    if length >= cum[-1]:
        return points
    j = int(np.searchsorted(cum, length, side="right"))
    frac = (length - cum[j - 1]) / seg[j - 1] if seg[j - 1] > 0 else 0.0
    tip = points[j - 1] + frac * (points[j] - points[j - 1])
    return np.vstack([points[:j], tip])


def polyline_distance(samples, polyline, chunk=256):
    """max over ``samples`` of the distance to the polyline."""
    if len(polyline) == 1:
        return float(np.max(np.linalg.norm(samples - polyline[0], axis=1)))
    a, b = polyline[:-1], polyline[1:]
    ab = b - a
    ab2 = np.einsum("ij,ij->i", ab, ab)
    ab2 = np.where(ab2 > 0, ab2, 1.0)
    worst = 0.0
    for start in range(0, len(samples), chunk):
        p = samples[start : start + chunk, None, :]
        t = np.clip(np.einsum("pjk,jk->pj", p - a, ab) / ab2, 0.0, 1.0)
        d = np.linalg.norm(a + t[..., None] * ab - p, axis=2).min(axis=1)
        worst = max(worst, float(d.max()))
    return worst


def compare_traces(trace_a, trace_b):
    """Symmetric polyline Hausdorff distance between two geodesic traces.

    Both traces are cut to their common Euclidean arc length (the chart's
    coordinate metric is the shared reference), so traces run with different
    speeds compare as point sets.
    """
    pa, pb = np.asarray(trace_a.points, dtype=float), np.asarray(trace_b.points, dtype=float)
    if len(pa) == 0 or len(pb) == 0:
        raise EmptyTrace("cannot compare an empty trace")
    len_a = float(np.sum(np.linalg.norm(np.diff(pa, axis=0), axis=1)))
    len_b = float(np.sum(np.linalg.norm(np.diff(pb, axis=0), axis=1)))
    common = min(len_a, len_b)
    pa, pb = _cut(pa, common), _cut(pb, common)
    return max(polyline_distance(pa, pb), polyline_distance(pb, pa))


def trace_header(dim):
    return ["t"] + ["x%d" % (i + 1) for i in range(dim)] + ["v%d" % (i + 1) for i in range(dim)] + ["arclength"]


def write_trace_csv(trace, fh, fmt="%.16e"):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(trace_header(trace.points.shape[1]))
    for t, x, v, s in trace.rows():
        writer.writerow([fmt % c for c in [t, *x, *v, s]])


def trace_records(trace):
    for t, x, v, s in trace.rows():
        yield {"t": t, "x": x, "v": v, "arclength": s}
