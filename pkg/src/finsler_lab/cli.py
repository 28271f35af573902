"""Command-line front end.

Exit status: 0 when every check passes, 1 when any check fails, 2 on bad
input (a single ``{"error": ...}`` record is written instead of a report).
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import sys

from . import projective as pj
from .errors import FinslerLabError
from .geodesics import compare_traces, integrate_geodesic, trace_header, trace_records
from .identity import audit_identity
from .metric import load_spec
from .parallel import pmap
from .report import FLOAT_FMT, dumps, tensor_record

TIERS = {"fiber": 1e-10, "analytic": 1e-7, "fd": 1e-4}
TRACE_TOL = 1e-5
COMMANDS = ("tensors", "douglas-check", "projective-check", "isotropy-check", "verify-identity", "geodesics")
PAIRWISE = ("projective-check", "verify-identity")


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


def build_parser():
    p = _Parser(prog="finsler-lab", description="Spray, curvature and projective checks for (alpha, beta)-metrics.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("specs", nargs="+", help="metric specification JSON file(s)")
    p.add_argument("--output", "-o", help="write here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--points", type=int, default=8)
    p.add_argument("--fibers", type=int, default=16)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--t-end", type=float, default=1.0)
    p.add_argument("--tolerance-tier", choices=sorted(TIERS), help="override every check tolerance")
    return p


def _fmt(value):
    if isinstance(value, float):
        return FLOAT_FMT % value
    return value


# -- commands ------------------------------------------------------------------


def _verdict_rows(verdicts):
    records = [v.to_record() for v in verdicts]
    header = ["check", "pass", "residual", "tolerance", "seed"]
    rows = [[r["check"], r["pass"], r["residual"], r["tolerance"], r["seed"]] for r in records]
    return records, header, rows, all(v.passed for v in verdicts)


def _tol_kwargs(tier, *names):
    if tier is None:
        return {}
    return {name: TIERS[tier] for name in names}


def cmd_tensors(args, specs, plan):
    spec = specs[0]
    tol = TIERS[args.tolerance_tier or "analytic"]

    def point_records(item):
        i, x, ys = item
        return [tensor_record(spec, x, y, i, j) for j, y in enumerate(ys)]

    records = [r for group in pmap(point_records, plan.samples()) for r in group]
    ok = all("error" not in r and r["residuals"]["spray_identity"] < tol for r in records)
    n = spec.dim
    header = (["point", "fiber"] + ["x%d" % (i + 1) for i in range(n)] + ["y%d" % (i + 1) for i in range(n)]
              + ["F", "B_norm", "D_norm", "E_norm", "spray_identity"])
    rows = []
    for r in records:
        if "error" in r:
            continue
        rows.append([r["point"], r["fiber"], *map(float, r["x"]), *map(float, r["y"]),
                     r["F"], r["B_norm"], r["D_norm"], r["E_norm"], r["residuals"]["spray_identity"]])
    return records, header, rows, ok


def cmd_douglas(args, specs, plan):
    spec = specs[0]
    if spec.phi.family == "quadratic":
        v = pj.check_douglas_quadratic(spec, plan, **_tol_kwargs(args.tolerance_tier, "tol"))
    else:
        v = pj.check_matsumoto_douglas(spec, plan, **_tol_kwargs(args.tolerance_tier, "tol"))
    return _verdict_rows([v])


def cmd_projective(args, specs, plan):
    spec, spec_bar = specs
    verdicts = [pj.check_spray_proportional(spec, spec_bar, plan, **_tol_kwargs(args.tolerance_tier, "tol"))]
    if spec.phi.family == "quadratic" and spec_bar.phi.family == "matsumoto" and spec.dim >= 3:
        verdicts.append(pj.check_theorem31(
            spec, spec_bar, plan, **_tol_kwargs(args.tolerance_tier, "tol_tau", "tol_theta", "tol_closed")))
    return _verdict_rows(verdicts)


def cmd_isotropy(args, specs, plan):
    spec = specs[0]
    kw = _tol_kwargs(args.tolerance_tier, "tol")
    return _verdict_rows([
        pj.check_killing_constant_length(spec, plan, **kw),
        pj.check_isotropic_mean_berwald(spec, plan, **kw),
        pj.check_isotropic_berwald(spec, plan, **kw),
    ])


def cmd_identity(args, specs, plan):
    spec, spec_bar = specs
    samples = [(x, y) for _, x, ys in plan.samples() for y in ys]
    kw = _tol_kwargs(args.tolerance_tier, "tol")
    report = audit_identity(spec, spec_bar, samples, **kw)
    report = {"check": "identity_audit", "pass": report["confirmed"], "seed": plan.seed, **report}
    header = ["check", "pass", "residual", "tolerance", "seed", "first_inconsistent_group"]
    iso = report["isolation"] or {}
    row = [report["check"], report["pass"], report["max_residual"], report["tolerance"], plan.seed,
           iso.get("first_inconsistent_group") or ""]
    return [report], header, [row], report["confirmed"]


def cmd_geodesics(args, specs, plan):
    traces = []
    for spec in specs:
        traces.append([integrate_geodesic(spec, x, ys[0], args.t_end, args.dt) for _, x, ys in plan.samples()])
    records, rows = [], []
    for s_idx, spec_traces in enumerate(traces):
        for t_idx, tr in enumerate(spec_traces):
            for rec in trace_records(tr):
                records.append({"spec": s_idx, "trace": t_idx, **rec})
                rows.append([s_idx, t_idx, rec["t"], *rec["x"], *rec["v"], rec["arclength"]])
    ok = True  # truncated traces are reported but do not fail the run
    if len(traces) == 2:
        dists = [compare_traces(a, b) for a, b in zip(*traces)]
        records.append({"check": "trace_distance", "pass": max(dists) < TRACE_TOL, "residual": max(dists),
                        "tolerance": TRACE_TOL, "distances": dists, "seed": plan.seed})
        ok = max(dists) < TRACE_TOL
    for s_idx, group in enumerate(traces):
        for t_idx, tr in enumerate(group):
            if tr.flags:
                records.append({"spec": s_idx, "trace": t_idx, "flags": tr.flags})
    header = ["spec", "trace"] + trace_header(specs[0].dim)
    return records, header, rows, ok


HANDLERS = {
    "tensors": cmd_tensors,
    "douglas-check": cmd_douglas,
    "projective-check": cmd_projective,
    "isotropy-check": cmd_isotropy,
    "verify-identity": cmd_identity,
    "geodesics": cmd_geodesics,
}


# -- driver --------------------------------------------------------------------


def _emit(fh, fmt, records, header, rows):
    if fmt == "csv":
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    else:
        for rec in records:
            fh.write(dumps(rec) + "\n")


@contextlib.contextmanager
def _open_output(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w") as fh:
            yield fh


def _error(path, message):
    with _open_output(path) as fh:
        fh.write(dumps({"error": message}) + "\n")
    return 2


def _load(args):
    want = 2 if args.command in PAIRWISE else (1, 2) if args.command == "geodesics" else 1
    count = len(args.specs)
    if (count != want) if isinstance(want, int) else (count not in want):
        raise InputError("%s takes %s spec file(s), got %d" % (args.command, want, count))
    specs = [load_spec(path) for path in args.specs]
    if len({s.dim for s in specs}) != 1:
        raise InputError("spec files have different dimensions")
    if args.points < 1 or args.fibers < 1:
        raise InputError("--points and --fibers must be positive")
    if args.command == "projective-check" or args.command == "isotropy-check":
        if args.fibers < specs[0].dim + 1:
            raise InputError("--fibers must be at least dim + 1 for the fits")
    if not (args.dt > 0 and args.t_end > 0):
        raise InputError("--dt and --t-end must be positive")
    return specs


def _output_path(argv):
    """``--output`` as given, even when the rest of the command line is invalid."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--output", "-o")
    try:
        return pre.parse_known_args(argv)[0].output
    except SystemExit:
        return None


def main(argv=None):
    output = _output_path(argv)
    try:
        args = build_parser().parse_args(argv)
        output = args.output
        specs = _load(args)
        plan = pj.SamplePlan.for_specs(specs, args.points, args.fibers, args.seed)
        records, header, rows, ok = HANDLERS[args.command](args, specs, plan)
    except (InputError, FinslerLabError) as exc:
        return _error(output, "%s: %s" % (type(exc).__name__, exc))
    with _open_output(output) as fh:
        _emit(fh, args.format, records, header, rows)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
