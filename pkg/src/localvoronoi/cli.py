"""``localvoronoi`` command line: constants, voronoi, signscan, detect.

Exit codes: 0 success (rows may carry quality flags), 2 invalid spec or
parameters, 3 bad coefficient data, 4 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .errors import DataError, NumericError, SpecError, ThresholdError
from .feq import FunctionalEquationSpec, derive_constants, validate_spec
from .gamma_ratio import MAX_J, expansion_coeffs
from .oscillation import DetectionParams, detect_extrema, minimal_window_constant, sign_changes, window_scan
from .providers import BUILTIN_NAMES, builtin_instance, ingest_stream
from .voronoi import TruncationPolicy, voronoi_series
from .weight import WeightProfile

EXIT_OK, EXIT_SPEC, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


@dataclass(frozen=True)
class RunConfig:
    command: str
    instance: str | None
    spec_path: str | None
    coeffs_path: str | None
    X: float
    delta: float
    tolerance: float
    c0: float | None
    J: int
    grid: int
    fmt: str
    out: str | None
    seed: int

    def __post_init__(self):
        for name in ("X", "delta", "tolerance"):
            if not getattr(self, name) > 0:
                raise SpecError(f"--{name} must be positive")
        if self.c0 is not None and not self.c0 > 0:
            raise SpecError("--c0 must be positive")
        if self.grid < 1 or not 1 <= self.J <= MAX_J:
            raise SpecError(f"--grid must be positive and --J in [1, {MAX_J}]")

    def header(self):
        return {k: v for k, v in self.__dict__.items() if k not in ("out",)}


def _load_spec(cfg):
    if cfg.instance:
        return builtin_instance(cfg.instance).spec
    if not cfg.spec_path:
        raise SpecError("one of --instance or --spec is required")
    spec = FunctionalEquationSpec.from_json(cfg.spec_path)
    problems = validate_spec(spec)
    if problems:
        raise SpecError("invalid spec:\n  " + "\n  ".join(problems))
    return spec


def _load_stream(cfg, limit):
    if cfg.coeffs_path:
        return ingest_stream(cfg.coeffs_path)
    if cfg.instance:
        return builtin_instance(cfg.instance).stream_factory(int(limit))
    raise SpecError("--coeffs is required with --spec")


def _c(z):
    z = complex(z)
    return [z.real, z.imag]


def _render(rows, header, fmt):
    if fmt == "json":
        return json.dumps({"header": header, "rows": rows}, indent=1, default=str) + "\n"
    keys = list(rows[0]) if rows else []
    if fmt == "csv":
        buf = io.StringIO()
        for k, v in header.items():
            buf.write(f"# {k}={json.dumps(v, default=str)}\n")
        w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        return buf.getvalue()
    lines = [f"# {k}: {v}" for k, v in header.items()]

    def cell(v):
        return f"{v:.10g}" if isinstance(v, float) else str(v)

    table = [keys] + [[cell(r[k]) for k in keys] for r in rows]
    widths = [max(len(row[i]) for row in table) for i in range(len(keys))]
    lines += ["  ".join(c.rjust(w) for c, w in zip(row, widths)) for row in table]
    return "\n".join(lines) + "\n"


def cmd_constants(cfg):
    spec = _load_spec(cfg)
    consts = derive_constants(spec)
    coeffs = expansion_coeffs(spec, consts, cfg.J)
    header = cfg.header()
    header["constants"] = consts.as_dict()
    header["fit"] = coeffs.fit_diagnostics
    rows = []
    for name, value in (("A", consts.A), ("B", consts.B), ("Btilde", consts.Btilde), ("h", consts.h),
                        ("a", consts.a), ("k", consts.k), ("e0", consts.e0), ("d", consts.d)):
        z = complex(value)
        rows.append({"name": name, "re": z.real, "im": z.imag})
    for j, e in enumerate(coeffs.e):
        rows.append({"name": f"e[{j}]", "re": e.real, "im": e.imag})
    return rows, header


def cmd_voronoi(cfg, min_terms=20_000, max_terms=50_000):
    spec = _load_spec(cfg)
    consts = derive_constants(spec)
    coeffs = expansion_coeffs(spec, consts, cfg.J)
    profile = WeightProfile.for_constants(consts, cfg.delta, cfg.X)
    xs = np.linspace(cfg.X, 4 * cfg.X, cfg.grid)
    step = 1.0
    stream = None
    if cfg.instance:
        inst = builtin_instance(cfg.instance)
        probe = inst.stream_factory(2)
        step = float(probe.lambdas[1] - probe.lambdas[0])
        need = int(4 * cfg.X * (1 + 1 / profile.L) / step) + 2
        stream = inst.stream_factory(max(max_terms, need))
    else:
        stream = _load_stream(cfg, 0)
    policy = TruncationPolicy(tolerance=cfg.tolerance, max_terms=max_terms,
                              min_terms=min(min_terms, max_terms), strict=False)
    rows = []
    for x in xs:
        ev = voronoi_series(spec, consts, coeffs, stream, profile, float(x), policy, J=cfg.J)
        rows.append(ev.to_row(consts))
    header = cfg.header()
    header.update(L=profile.L, constants=consts.as_dict(), e=[_c(e) for e in coeffs.e],
                  min_terms=policy.min_terms, max_terms=policy.max_terms)
    return rows, header


def cmd_signscan(cfg, x_low=1e3, checkpoints=None):
    x_high = cfg.X
    if cfg.instance:
        spec = builtin_instance(cfg.instance).spec
        twoA = spec.degree
        stream = builtin_instance(cfg.instance).stream_factory(int(x_high))
    else:
        stream = _load_stream(cfg, 0)
        twoA = _load_spec(cfg).degree if cfg.spec_path else stream.degree
        if twoA is None:
            raise SpecError("degree unknown: pass --spec or a file with metadata degree2A")
    x_low = min(x_low, x_high / 2)
    exponent = 1 - 1 / twoA
    total = sign_changes(stream, x_high, by="index")
    c_min = minimal_window_constant(stream, max(x_low, 1.0), x_high, exponent)
    c0 = cfg.c0 if cfg.c0 is not None else c_min
    rows = []
    if math.isfinite(c0):
        report = window_scan(stream, max(x_low, 1.0), x_high, c0, exponent)
        windows_found = sum(w.found for w in report.windows)
        max_gap_normalized = report.max_gap_normalized
        window_count = len(report.windows)
    else:
        windows_found, window_count, max_gap_normalized = 0, 0, math.nan
    if checkpoints is None:
        checkpoints = [10.0 ** k for k in range(1, int(math.log10(x_high)) + 1)]
    for x in checkpoints:
        r = sign_changes(stream, x, by="index")
        rows.append({"x": x, "n_plus": r.n_plus, "n_minus": r.n_minus, "n_star": r.n_star,
                     "ratio": r.n_star / x ** (1 / twoA)})
    header = cfg.header()
    header.update(n_plus=total.n_plus, n_minus=total.n_minus, n_star=total.n_star,
                  minimal_c0=c_min, c0_used=c0, exponent=exponent, windows=window_count,
                  windows_with_sign_change=windows_found, max_gap_normalized=max_gap_normalized)
    return rows, header


def cmd_detect(cfg, x_high=None):
    spec = _load_spec(cfg)
    consts = derive_constants(spec)
    x_high = x_high or 10 * cfg.X
    xs = np.geomspace(cfg.X, x_high, cfg.grid) if cfg.grid > 1 else np.array([cfg.X])
    det = DetectionParams(delta=cfg.delta, c0=cfg.c0 or 1.0)
    limit = int(2 * x_high) + 10
    if cfg.instance:
        inst = builtin_instance(cfg.instance)
        probe = inst.stream_factory(2).lambdas
        step = float(probe[1] - probe[0])
        limit = int(1.5 * x_high / step) + 10
    stream = _load_stream(cfg, limit)
    rows, notes = [], []
    for x in xs:
        try:
            r = detect_extrema(spec, consts, stream, float(x), det)
        except ThresholdError as exc:
            notes.append(f"x={x:g} skipped: {exc}")
            continue
        rows.append({"x": r.x, "x_plus": r.x_plus, "x_minus": r.x_minus, "value_plus": r.value_plus,
                     "value_minus": r.value_minus, "norm_plus": r.value_plus / r.scale,
                     "norm_minus": r.value_minus / r.scale, "success": r.success, "crossing": r.crossing})
    header = cfg.header()
    header.update(constants=consts.as_dict(), delta=det.delta, c0=det.c0, N=det.N,
                  alpha=r.alpha if rows else None, X0=r.X0 if rows else None, notes=notes)
    return rows, header


COMMANDS = {"constants": cmd_constants, "voronoi": cmd_voronoi, "signscan": cmd_signscan, "detect": cmd_detect}

DEFAULT_X = {"constants": 1e4, "voronoi": 1e3, "signscan": 1e5, "detect": 1e3}
DEFAULT_GRID = {"voronoi": 17, "detect": 2}


def build_parser():
    p = argparse.ArgumentParser(prog="localvoronoi", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        src = s.add_mutually_exclusive_group()
        src.add_argument("--instance", choices=BUILTIN_NAMES)
        src.add_argument("--spec", dest="spec_path")
        s.add_argument("--coeffs", dest="coeffs_path")
        s.add_argument("--X", type=float, default=None,
                       help="anchor X (voronoi, detect) or scan end (signscan)")
        s.add_argument("--delta", type=float, default=0.1)
        s.add_argument("--tol", dest="tolerance", type=float, default=1e-3)
        s.add_argument("--c0", type=float, default=None)
        s.add_argument("--J", type=int, default=None)
        s.add_argument("--grid", type=int, default=None)
        s.add_argument("--format", dest="fmt", choices=("table", "csv", "json"), default="table")
        s.add_argument("--json", dest="fmt", action="store_const", const="json")
        s.add_argument("--out")
        s.add_argument("--seed", type=int, default=0)
    return p


def run(argv=None, stdout=None, stderr=None):
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig(
            command=args.command, instance=args.instance, spec_path=args.spec_path,
            coeffs_path=args.coeffs_path, X=args.X or DEFAULT_X[args.command], delta=args.delta,
            tolerance=args.tolerance, c0=args.c0,
            J=args.J or (4 if args.command == "constants" else 2),
            grid=args.grid or DEFAULT_GRID.get(args.command, 1), fmt=args.fmt, out=args.out, seed=args.seed,
        )
        rows, header = COMMANDS[cfg.command](cfg)
    except SpecError as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_SPEC
    except DataError as exc:
        print(f"data error: {exc}", file=stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"numeric error: {exc}", file=stderr)
        return EXIT_NUMERIC
    text = _render(rows, header, cfg.fmt)
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        stdout.write(text)
    return EXIT_OK


def main(argv=None):
    sys.exit(run(argv))
