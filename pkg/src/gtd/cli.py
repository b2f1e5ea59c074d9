"""Command-line entry point: ``gtd curvature | geodesic | verify``.

Exit codes: 0 success, 1 a check failed, 2 usage or configuration error,
3 domain error at runtime (rows computed so far are flushed first).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from . import equilibrium, fieldeq, geodesic, phase
from .errors import ConfigError, DegenerateMetricError, DomainError, GTDError
from .expr import parse_keyvalue
from .rng import SplitMix64
from .systems import ThermoSystem, load_system

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_DOMAIN = 0, 1, 2, 3
FLAG_R = 1e6
CURVATURE_HEADER = ("E1", "E2", "scalar_R", "det_g", "D")
TRACE_HEADER = ("tau", "E1", "E2", "v1", "v2", "S", "ds_accum", "status_final_row_only")
SWEEP_HEADER = ("ray", "U0", "V0", "v1", "v2", "status", "admissibility", "E1_end", "E2_end", "length")

# defaults per system for the metric when none is given
DEFAULT_LAMBDA = {"ideal": "-1", "vdw": "1"}


class UsageError(Exception):
    pass


def fmt(x) -> str:
    """17 significant digits, round-trip exact for doubles; empty for None."""
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.17g}"


def threads() -> int:
    raw = os.environ.get("GTD_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = os.cpu_count() or 1
    return max(1, n)


def ordered_map(fn: Callable, items: Sequence) -> Iterable:
    """Map lazily in order; parallel when GTD_THREADS allows more than one worker."""
    n = threads()
    if n == 1 or len(items) < 2:
        for item in items:
            yield fn(item)
        return
    with ThreadPoolExecutor(max_workers=n) as pool:
        yield from pool.map(fn, items)


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


def parse_grid(text: str) -> list[tuple[str, np.ndarray]]:
    """``U=lo:hi:count,V=lo:hi:count`` into named linspaces."""
    axes = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        name, sep, rng = part.partition("=")
        bits = rng.split(":")
        if not sep or len(bits) != 3:
            raise UsageError(f"grid axis {part!r} must look like NAME=lo:hi:count")
        try:
            lo, hi, count = float(bits[0]), float(bits[1]), int(bits[2])
        except ValueError:
            raise UsageError(f"grid axis {part!r} has a non-numeric bound or count") from None
        if count < 1:
            raise UsageError(f"grid axis {name!r} is empty (count {count})")
        axes.append((name.strip(), np.linspace(lo, hi, count)))
    if not axes:
        raise UsageError("empty grid")
    return axes


def parse_vector(text: str, what: str) -> np.ndarray:
    try:
        vals = [float(x) for x in text.split(",")]
    except ValueError:
        raise UsageError(f"{what} must be comma-separated numbers, got {text!r}") from None
    if not all(math.isfinite(v) for v in vals):
        raise UsageError(f"{what} must be finite")
    return np.array(vals)


# config keys whose option name differs from the argparse destination
CONFIG_ALIASES = {"lambda": "lam", "trace-dir": "trace_dir", "tau-max": "tau_max"}


def apply_config(args: argparse.Namespace, parser: argparse.ArgumentParser) -> None:
    """Fill options left at their defaults from the ``key = value`` config file."""
    if not args.config:
        return
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config {args.config}: {exc}") from None
    cfg = parse_keyvalue(text)
    for key, raw in cfg.items():
        dest = CONFIG_ALIASES.get(key, key.replace("-", "_"))
        if not hasattr(args, dest):
            raise UsageError(f"unknown config key {key!r}")
        if getattr(args, dest) != parser.get_default(dest):
            continue  # explicit flag wins
        default = parser.get_default(dest)
        try:
            if isinstance(default, bool):
                value = raw.lower() in ("1", "true", "yes", "on")
            elif isinstance(default, int):
                value = int(raw)
            elif isinstance(default, float):
                value = float(raw)
            else:
                value = raw
        except ValueError:
            raise UsageError(f"config key {key!r}: bad value {raw!r}") from None
        setattr(args, dest, value)


def build_system(args) -> ThermoSystem:
    overrides = {k: getattr(args, k) for k in ("kappa", "a", "b") if getattr(args, k, None) is not None}
    try:
        return load_system(args.system, **overrides)
    except (GTDError, OSError, KeyError, ValueError) as exc:
        raise UsageError(f"cannot load system {args.system!r}: {exc}") from None


def build_spec(args, sys: ThermoSystem) -> phase.MetricSpec:
    lam = args.lam if args.lam is not None else DEFAULT_LAMBDA.get(sys.name, "1")
    cfg = {"family": args.family, "k": str(args.k), "lambda": lam}
    if args.xi:
        cfg["xi"] = args.xi
    if args.chi:
        cfg["chi"] = args.chi
    try:
        return phase.MetricSpec.from_config(cfg)
    except (GTDError, ValueError) as exc:
        raise UsageError(str(exc)) from None


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def _json_value(x):
    if x is None or isinstance(x, str):
        return x
    x = float(x)
    return x if math.isfinite(x) else None


class Sink:
    """CSV or JSON-lines writer that flushes every row.

    In JSON mode each row becomes an object keyed by the header; non-finite
    numbers are written as null.
    """

    def __init__(self, path: str | None, header: Sequence[str] | None = None, fmt: str = "csv"):
        self.stream = open(path, "w", newline="") if path and path != "-" else sys.stdout
        self.owned = self.stream is not sys.stdout
        self.header = header
        self.format = fmt
        self.writer = csv.writer(self.stream, lineterminator="\n")
        if header and fmt == "csv":
            self.writer.writerow(header)

    def row(self, values) -> None:
        if self.format == "json":
            self.json({k: _json_value(v) for k, v in zip(self.header, values)})
            return
        self.writer.writerow([fmt(v) for v in values])
        self.stream.flush()

    def json(self, obj) -> None:
        self.stream.write(json.dumps(obj, sort_keys=True) + "\n")
        self.stream.flush()

    def close(self) -> None:
        self.stream.flush()
        if self.owned:
            self.stream.close()


def warn(msg: str) -> None:
    print(f"gtd: {msg}", file=sys.stderr)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_curvature(args) -> int:
    sys_ = build_system(args)
    spec = build_spec(args, sys_)
    axes = parse_grid(args.grid)
    names = [name for name, _ in axes]
    if sorted(names) != sorted(sys_.extensive_names):
        raise UsageError(f"grid must name each of {', '.join(sys_.extensive_names)}")
    order = [names.index(v) for v in sys_.extensive_names]
    values = [axes[i][1] for i in order]
    points = [tuple(p) for p in np.array(np.meshgrid(*values, indexing="ij")).reshape(len(values), -1).T]

    def work(E):
        try:
            return equilibrium.curvature(sys_, spec, E), None
        except (DomainError, DegenerateMetricError, ArithmeticError) as exc:
            return None, exc

    sink = Sink(args.output, CURVATURE_HEADER, args.format)
    flagged = 0
    try:
        for E, (rep, exc) in zip(points, ordered_map(work, points)):
            if exc is not None:
                warn(f"domain error at E={[float(x) for x in E]}: {exc}")
                return EXIT_DOMAIN
            sink.row((*E, rep.scalar_R, rep.det_g, rep.D))
            if not abs(rep.scalar_R) <= FLAG_R:
                flagged += 1
                warn(f"flagged |scalar_R| > {FLAG_R:g} at E={[float(x) for x in E]}: {rep.scalar_R:.6g}")
    finally:
        sink.close()
    if flagged:
        warn(f"{flagged} row(s) flagged as near-singular")
    return EXIT_OK


# built-in sweeps: entropy-arrow rays for the ideal gas, near-excluded-volume starts for vdW
IDEAL_RAY_ANGLES = tuple(i * math.pi / 4 for i in range(8))
VDW_U0 = (0.5, 1.0, 2.0, 4.0)
VDW_V0 = 0.1 + 1e-3


def _trace(sys_, spec, args, E0, v0):
    return geodesic.integrate(sys_, spec, E0, v0, args.tau_max, args.step, args.chart)


def cmd_geodesic(args) -> int:
    sys_ = build_system(args)
    spec = build_spec(args, sys_)
    if args.step <= 0:
        raise UsageError("--step must be positive")
    if args.tau_max < 0:
        raise UsageError("--tau-max must be non-negative")
    if args.sweep:
        return _sweep(args, sys_, spec)
    if args.E0 is None or args.v0 is None:
        raise UsageError("geodesic needs --E0 and --v0 (or --sweep)")
    E0 = parse_vector(args.E0, "--E0")
    v0 = parse_vector(args.v0, "--v0")
    if len(E0) != sys_.n or len(v0) != sys_.n:
        raise UsageError(f"--E0 and --v0 need {sys_.n} components")
    try:
        trace = _trace(sys_, spec, args, E0, v0)
    except DomainError as exc:
        warn(f"invalid initial point: {exc}")
        return EXIT_DOMAIN
    sink = Sink(args.output, TRACE_HEADER, args.format)
    try:
        for row in trace.rows():
            sink.row(row)
    finally:
        sink.close()
    return EXIT_OK


def sweep_initial_conditions(kind: str, chart: str):
    """Initial data of the built-in sweeps as ``(E0, v0)`` pairs."""
    if kind == "ideal-rays":
        return [((1.0, 1.0), (math.cos(t), math.sin(t))) for t in IDEAL_RAY_ANGLES]
    if kind == "vdw":
        return [((u, VDW_V0), geodesic.VDW_SWEEP_VELOCITY) for u in VDW_U0]
    raise UsageError(f"unknown sweep {kind!r}")


def _sweep(args, sys_, spec) -> int:
    inits = sweep_initial_conditions(args.sweep, args.chart)

    def work(init):
        E0, v0 = init
        try:
            return _trace(sys_, spec, args, E0, v0), None
        except DomainError as exc:
            return None, exc

    sink = Sink(args.output, SWEEP_HEADER, args.format)
    trace_dir = Path(args.trace_dir) if args.trace_dir else None
    if trace_dir:
        trace_dir.mkdir(parents=True, exist_ok=True)
    try:
        for i, ((E0, v0), (trace, exc)) in enumerate(zip(inits, ordered_map(work, inits))):
            if exc is not None:
                warn(f"ray {i}: {exc}")
                return EXIT_DOMAIN
            adm = geodesic.admissibility(trace).value if len(trace) > 1 else ""
            end = trace.endpoint
            sink.row((i, *E0, *v0, trace.status.value, adm, *end, trace.length))
            if trace_dir:
                ext = "jsonl" if args.format == "json" else "csv"
                ts = Sink(str(trace_dir / f"trace_{i:02d}.{ext}"), TRACE_HEADER, args.format)
                for row in trace.rows():
                    ts.row(row)
                ts.close()
    finally:
        sink.close()
    return EXIT_OK


def _points(args, sys_, n: int) -> np.ndarray:
    bounds = {"ideal": [(0.1, 10.0), (0.1, 10.0)], "vdw": [(0.5, 5.0), (0.5, 5.0)]}.get(sys_.name, [(0.5, 5.0)] * sys_.n)
    return SplitMix64(args.seed).points(n, bounds)


def _check(name: str, deviation: float, tol: float, **extra) -> dict:
    ok = bool(np.isfinite(deviation) and deviation < tol)
    return {"check": name, "pass": ok, "max_deviation": float(deviation), "tolerance": tol, **extra}


def suite_invariance(args, sys_) -> list[dict]:
    out = []
    pts = _points(args, sys_, args.n or 20)
    specs = [
        ("ginv2", phase.MetricSpec.ginv2(args.k, args.lam if args.lam is not None else 1.0), [(0,), phase.total(2)]),
        ("mfo", phase.MetricSpec.mfo(), [phase.total(2)]),
        ("mso", phase.MetricSpec.mso(), [phase.total(2)]),
    ]
    zs = [equilibrium.lift(sys_, E) for E in pts]
    for label, spec, idxs in specs:
        for idx in idxs:
            dev = phase.check_metric_invariance(spec, idx, zs)
            out.append(_check(f"metric_invariance[{label},idx={list(idx)}]", dev, 1e-6))
    for label, spec, idxs in specs:
        for idx in idxs:
            dev = equilibrium.scalar_invariance_deviation(sys_, spec, pts, idx)
            out.append(_check(f"scalar_invariance[{label},idx={list(idx)}]", dev, 1e-6))
    pb = max(equilibrium.pullback_consistency(sys_, phase.MetricSpec.ginv2(args.k, 1.0), E) for E in pts)
    out.append(_check("pullback_consistency[ginv2]", pb, 1e-10))
    return out


def suite_contact(args, sys_) -> list[dict]:
    n = 2 if args.n is None else args.n
    if n < 1:
        raise UsageError("--n must be at least 1")
    coef = phase.contact_condition(n)
    return [_check(f"contact[n={n}]", abs(abs(coef) - math.factorial(n)), 1e-12, coefficient=coef)]


def suite_fieldeq(args, sys_) -> list[dict]:
    spec = build_spec(args, sys_)
    pts = _points(args, sys_, args.n or 10)
    out = []
    worst, reports = 0.0, []
    for E in pts:
        res = fieldeq.harmonic_residual(sys_, spec, E)
        worst = max(worst, res.norm)
        reports.append({"E": list(map(float, E)), "components": res.to_json()})
    out.append(_check("harmonic_residual", worst, 1e-8, residuals=reports))
    return out


SUITES = {"invariance": suite_invariance, "contact": suite_contact, "fieldeq": suite_fieldeq}


def cmd_verify(args) -> int:
    sys_ = build_system(args)
    try:
        results = SUITES[args.suite](args, sys_)
    except (DomainError, DegenerateMetricError) as exc:
        warn(f"domain error: {exc}")
        return EXIT_DOMAIN
    sink = Sink(args.output)
    try:
        for r in results:
            sink.json(r)
    finally:
        sink.close()
    return EXIT_OK if all(r["pass"] for r in results) else EXIT_FAIL


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--system", default="ideal", help="built-in name (ideal, vdw) or definition file")
    p.add_argument("--kappa", type=float, default=None)
    p.add_argument("--a", type=float, default=None)
    p.add_argument("--b", type=float, default=None)
    p.add_argument("--family", default="ginv2", choices=["ginv2", "gup1", "euclidean"])
    p.add_argument("--k", type=int, default=-1)
    p.add_argument("--lambda", dest="lam", default=None, help="conformal factor expression")
    p.add_argument("--xi", default=None, choices=["delta", "eta", "half_delta_minus_eta"])
    p.add_argument("--chi", default=None, choices=["delta", "eta", "half_delta_minus_eta"])
    p.add_argument("--config", default=None, help="key = value file supplying any option")
    p.add_argument("--output", "-o", default=None, help="output path (default stdout)")
    p.add_argument("--format", default="csv", choices=["csv", "json"], help="csv, or json lines")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gtd", description="Geometrothermodynamics toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("curvature", help="scalar curvature on a grid")
    _common(p)
    p.add_argument("--grid", default="U=0.1:10:20,V=0.1:10:20")
    p.set_defaults(func=cmd_curvature)

    p = sub.add_parser("geodesic", help="integrate a geodesic or a sweep")
    _common(p)
    p.add_argument("--E0", default=None)
    p.add_argument("--v0", default=None)
    p.add_argument("--tau-max", dest="tau_max", type=float, default=1.0)
    p.add_argument("--step", type=float, default=1e-3)
    p.add_argument("--chart", default="raw", choices=["raw", "log"])
    p.add_argument("--sweep", default=None, choices=["ideal-rays", "vdw"])
    p.add_argument("--trace-dir", dest="trace_dir", default=None)
    p.set_defaults(func=cmd_geodesic)

    p = sub.add_parser("verify", help="run a verification suite, JSON lines out")
    _common(p)
    p.add_argument("--suite", required=False, default=None, choices=sorted(SUITES))
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--n", type=int, default=None, help="sample count, or the dimension n for --suite contact")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    sub = parser._subparsers._group_actions[0].choices[args.command]
    try:
        apply_config(args, sub)
        if args.command == "verify" and args.suite is None:
            raise UsageError("verify needs --suite")
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        warn(str(exc))
        return EXIT_USAGE
    except DomainError as exc:
        warn(f"domain error: {exc}")
        return EXIT_DOMAIN
    except BrokenPipeError:
        # reader went away (e.g. piped into head); not an error of ours
        sys.stderr.close()
        return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
