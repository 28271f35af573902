"""JSON-lines / CSV serialization with every float at 17 significant digits."""

from __future__ import annotations

import json
import math

import numpy as np

from .errors import FinslerLabError
from .spray import finsler_jet, spray_point_data

FLOAT_FMT = "%.16e"


def format_float(x):
    x = float(x)
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return FLOAT_FMT % x


def dumps(obj):
    """Deterministic compact JSON; floats use :data:`FLOAT_FMT`, keys keep insertion order."""
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ",".join(json.dumps(str(k)) + ":" + dumps(v) for k, v in obj.items()) + "}"
    if isinstance(obj, np.ndarray):
        return dumps(obj.tolist())
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(dumps(v) for v in obj) + "]"
    raise TypeError("cannot serialize %r" % type(obj))


def _max_abs(a):
    return float(np.max(np.abs(a))) if np.size(a) else 0.0


def tensor_record(spec, x, y, point_index=0, fiber_index=0):
    """Per-sample tensor summary; norms are max-absolute-entry."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    rec = {"point": point_index, "fiber": fiber_index, "x": x, "y": y}
    try:
        data = spray_point_data(spec, x, y)
        F = float(finsler_jet(spec, x, y, order=1).value)
    except FinslerLabError as exc:
        rec["error"] = "%s: %s" % (type(exc).__name__, exc)
        return rec
    trace_B = 0.5 * np.einsum("mjkm->jk", data.B)
    rec.update(
        F=F,
        g=data.g,
        G=data.G,
        B_norm=_max_abs(data.B),
        D_norm=_max_abs(data.D),
        E_norm=_max_abs(data.E),
        residuals={
            "spray_identity": _max_abs(data.G - data.G_from_definition) / max(1.0, _max_abs(data.G)),
            "B_symmetry": max(_max_abs(data.B - data.B.transpose(0, 2, 1, 3)),
                              _max_abs(data.B - data.B.transpose(0, 1, 3, 2))),
            "E_half_trace_B": _max_abs(data.E - trace_B),
            "D_trace": _max_abs(np.einsum("mjkm->jk", data.D)),
        },
    )
    return rec
