"""Command-line front end.

Exit codes: 0 verified, 1 usage error, 2 a verification tolerance failed,
3 inadmissible or incompatible input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import jsonschema
import numpy as np

from . import __version__
from .constants import DEFAULTS
from .expr import ExprError

EXIT_OK, EXIT_USAGE, EXIT_TOLERANCE, EXIT_REJECTED = 0, 1, 2, 3
SCHEMA_VERSION = "1"

COMMANDS = (
    "solve-line",
    "solve-periodic",
    "solve-dirichlet",
    "solve-neumann",
    "wavemap",
    "curvature-flow",
    "radial3d",
    "check",
)

REPORT_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "tool", "version", "command", "problem", "status", "tolerances", "checks", "metrics"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "tool": {"const": "wavectl"},
        "version": {"type": "string"},
        "command": {"enum": list(COMMANDS)},
        "problem": {"type": "object", "additionalProperties": {"type": ["string", "number", "null", "array"]}},
        "status": {"enum": ["ok", "tolerance_failure", "rejected"]},
        "tolerances": {"type": "object", "additionalProperties": {"type": "number"}},
        "checks": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["value", "tol", "passed"],
                "properties": {
                    "value": {"type": ["number", "null"]},
                    "tol": {"type": "number"},
                    "passed": {"type": "boolean"},
                },
            },
        },
        "metrics": {"type": "object"},
        "admissibility": {"type": "object"},
        "compatibility": {"type": "object"},
        "failure": {
            "type": "object",
            "required": ["reason", "type"],
            "properties": {"reason": {"type": "string"}, "type": {"type": "string"}},
        },
        "wall_clock_s": {"type": "number"},
    },
    "additionalProperties": False,
}


class UsageError(Exception):
    pass


class Rejected(Exception):
    """Input is outside the hypotheses of a construction."""

    def __init__(self, reason: str, kind: str, extra: dict | None = None):
        super().__init__(reason)
        self.kind = kind
        self.extra = extra or {}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# -- output ----------------------------------------------------------------


def _clean(v):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_clean(x) for x in v.tolist()]
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    return v


def report_json(report: dict) -> str:
    data = _clean(report)
    jsonschema.validate(data, REPORT_SCHEMA)
    return json.dumps(data, sort_keys=True, indent=2) + "\n"


def emit_report_json(report: dict, path) -> str:
    text = report_json(report)
    Path(path).write_text(text)
    return text


def field_csv(evaluate: Callable, times, xs, names=("t", "x", "y")) -> str:
    """Rows (t, x, value) ordered by t, then x; 17 significant digits."""
    times, xs = np.asarray(times, dtype=float), np.asarray(xs, dtype=float)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names)
    for t in times:
        vals = np.asarray(evaluate(np.full(xs.shape, t), xs), dtype=float)
        for x, y in zip(xs, vals):
            w.writerow([format(t, ".17g"), format(x, ".17g"), format(y, ".17g")])
    return buf.getvalue()


def emit_field_csv(evaluate: Callable, times, xs, path, names=("t", "x", "y")) -> str:
    text = field_csv(evaluate, times, xs, names)
    Path(path).write_text(text)
    return text


def read_field_csv(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


# -- configuration ---------------------------------------------------------

# option name -> (help, default); every name is also a config-file key
OPTIONS: dict[str, tuple[str, Any]] = {
    "f": ("initial profile (formula in x)", None),
    "g": ("terminal profile (formula in x)", None),
    "T": ("time horizon, exact: 1/4, 2*pi, 2.718", None),
    "L": ("period or interval length, exact", None),
    "kind": ("check: dirichlet, neumann, periodic, line or wavemap", None),
    "left": ("left boundary datum h or H (formula in x = t)", None),
    "right": ("right boundary datum l or K (formula in x = t)", None),
    "window": ("line window a,b", "-5,5"),
    "bridge": ("line bridge: poly or sine", "poly"),
    "kmax": ("Fourier modes", None),
    "k_target": ("target curvature k*", None),
    "points": ("radial3d points 'x,y,z;x,y,z' or 'cube'", "0,0,0"),
    "nt": ("CSV time samples", "11"),
    "nx": ("CSV space samples", "101"),
    "csv": ("write the field to this CSV file", None),
    "report": ("write the JSON report to this file", None),
}
FLAGS = {"json": "print the JSON report on stdout"}
PER_COMMAND = {
    "solve-line": ["f", "g", "T", "window", "bridge"],
    "solve-periodic": ["f", "g", "T", "L", "kmax"],
    "solve-dirichlet": ["f", "g", "T", "L", "left", "right", "kmax"],
    "solve-neumann": ["f", "g", "T", "L", "left", "right", "kmax"],
    "wavemap": ["f", "g", "T", "window"],
    "curvature-flow": ["f", "T", "L", "k_target", "kmax"],
    "radial3d": ["f", "g", "T", "points"],
    "check": ["kind", "f", "g", "T", "L", "left", "right", "window"],
}
REQUIRED = {
    "solve-line": ["f", "g", "T"],
    "solve-periodic": ["f", "g", "T", "L"],
    "solve-dirichlet": ["f", "g", "T", "L"],
    "solve-neumann": ["f", "g", "T", "L"],
    "wavemap": ["f", "g", "T"],
    "curvature-flow": ["f", "T", "L", "k_target"],
    "radial3d": ["f", "g", "T"],
    "check": ["kind", "f"],
}


def read_config(path) -> dict[str, str]:
    """key = value lines; '#' starts a comment; unknown keys are errors."""
    out = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as e:
        raise UsageError(f"cannot read config {path}: {e.strerror}") from None
    known = set(OPTIONS) | set(FLAGS) | {"jobs"}
    for n, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in known:
            raise UsageError(f"{path}:{n}: unknown key {key!r}")
        out[key] = value
    return out


@dataclass
class RunConfig:
    command: str
    values: dict[str, str]
    flags: dict[str, bool]
    tolerances: dict[str, float]
    jobs: int = 1

    def get(self, key, default=None):
        v = self.values.get(key)
        return default if v is None else v

    def problem(self) -> dict:
        return {k: self.values.get(k) for k in PER_COMMAND[self.command] if self.values.get(k) is not None}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="wavectl", description="Exact controls for two-point wave problems, with verification.")
    p.add_argument("--version", action="version", version=f"wavectl {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    for cmd in COMMANDS:
        sp = sub.add_parser(cmd)
        sp.add_argument("--config", help="key = value file; flags override it")
        sp.add_argument("--jobs", type=int, default=None, help="parallel workers (WAVECTL_JOBS overrides)")
        sp.add_argument("--tol", action="append", default=[], metavar="NAME=VALUE", help="override a tolerance")
        for key in PER_COMMAND[cmd] + ["nt", "nx", "csv", "report"]:
            sp.add_argument("--" + key.replace("_", "-"), dest=key, default=None, help=OPTIONS[key][0])
        for key, text in FLAGS.items():
            sp.add_argument("--" + key, dest=key, action="store_true", default=None, help=text)
    return p


def make_config(argv: Sequence[str]) -> RunConfig:
    ns = build_parser().parse_args(list(argv))
    if ns.command is None:
        raise UsageError("missing subcommand; one of " + ", ".join(COMMANDS))
    cmd = ns.command
    file_vals = read_config(ns.config) if ns.config else {}
    allowed = set(PER_COMMAND[cmd]) | {"nt", "nx", "csv", "report", "jobs"} | set(FLAGS)
    for key in file_vals:
        if key not in allowed:
            raise UsageError(f"config key {key!r} does not apply to {cmd}")
    values, flags = {}, {}
    for key in set(PER_COMMAND[cmd]) | {"nt", "nx", "csv", "report"}:
        v = getattr(ns, key)
        values[key] = v if v is not None else file_vals.get(key, OPTIONS[key][1])
    for key in FLAGS:
        v = getattr(ns, key)
        flags[key] = bool(v) if v is not None else file_vals.get(key, "false").lower() in ("1", "true", "yes")
    missing = [k for k in REQUIRED[cmd] if values.get(k) is None]
    if missing:
        raise UsageError(f"{cmd} needs " + ", ".join("--" + m.replace("_", "-") for m in missing))
    tolerances = dict(TOLERANCES[cmd])
    for item in ns.tol:
        name, _, val = item.partition("=")
        if name not in tolerances:
            raise UsageError(f"unknown tolerance {name!r} for {cmd}; known: {', '.join(sorted(tolerances))}")
        try:
            tolerances[name] = float(val)
        except ValueError:
            raise UsageError(f"tolerance {name} needs a number") from None
    jobs = ns.jobs if ns.jobs is not None else int(file_vals.get("jobs", 1))
    env = os.environ.get("WAVECTL_JOBS")
    if env:
        jobs = int(env)
    return RunConfig(cmd, values, flags, tolerances, max(1, jobs))


# -- tolerances and checks -------------------------------------------------

TOLERANCES: dict[str, dict[str, float]] = {
    "solve-line": {"terminal": DEFAULTS.terminal_tol, "initial": DEFAULTS.terminal_tol},
    "solve-periodic": {"terminal": DEFAULTS.periodic_terminal_tol, "initial": DEFAULTS.periodic_terminal_tol},
    "solve-dirichlet": {"terminal": 1e-6, "trace": DEFAULTS.dirichlet_trace_tol, "trace_inhomogeneous": DEFAULTS.inhomog_value_trace_tol, "extension": 1e-9},
    "solve-neumann": {"terminal": 1e-6, "trace": DEFAULTS.neumann_trace_tol, "trace_inhomogeneous": DEFAULTS.inhomog_flux_trace_tol, "extension": 1e-9},
    "wavemap": {
        "residual": DEFAULTS.wavemap_residual_tol,
        "initial": DEFAULTS.wavemap_initial_tol,
        "terminal": DEFAULTS.wavemap_terminal_tol,
        "identity": 1e-12,
    },
    "curvature-flow": {"nonnegative": DEFAULTS.curvature_nonneg_tol, "terminal_constant": 1e-8},
    "radial3d": {"terminal": DEFAULTS.radial_terminal_tol, "initial": 1e-5},
    "check": {"compatibility": DEFAULTS.compat_tol},
}


def _check(value, tol, below=True):
    v = None if value is None else float(value)
    ok = v is not None and math.isfinite(v) and (v <= tol if below else v >= -tol)
    return {"value": v, "tol": float(tol), "passed": bool(ok)}


@dataclass
class Outcome:
    checks: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)
    evaluate: Callable | None = None
    domain: tuple[float, float] | None = None
    T: float | None = None
    names: tuple[str, str, str] = ("t", "x", "y")


def _window(text) -> tuple[float, float]:
    try:
        a, b = (float(s) for s in str(text).split(","))
    except ValueError:
        raise UsageError(f"window must look like a,b (got {text!r})") from None
    if not a < b:
        raise UsageError("window needs a < b")
    return a, b


def _int(cfg, key, default):
    v = cfg.get(key)
    if v is None:
        return default
    try:
        return int(v)
    except ValueError:
        raise UsageError(f"--{key} needs an integer") from None


def _length(text):
    from .periodic_control import as_length

    try:
        return as_length(text)
    except (ValueError, TypeError) as e:
        raise UsageError(f"bad length {text!r}: {e}") from None


# -- commands --------------------------------------------------------------


def _solve_line(cfg: RunConfig, tol) -> Outcome:
    from .line_control import LineTBVP, solve_line

    T = float(_length(cfg.get("T")))
    w = _window(cfg.get("window"))
    bridge = cfg.get("bridge")
    if bridge not in ("poly", "sine"):
        raise UsageError("--bridge must be poly or sine")
    sol = solve_line(LineTBVP(cfg.get("f"), cfg.get("g"), T, window=w), bridge=bridge, integral="antiderivative")
    md = sol.field.metadata
    return Outcome(
        checks={
            "terminal_sup_error": _check(md["terminal_sup_error"], tol["terminal"]),
            "initial_sup_error": _check(md["initial_sup_error"], tol["initial"]),
        },
        metrics=md,
        evaluate=sol.field,
        domain=w,
        T=T,
    )


def _solve_periodic(cfg: RunConfig, tol) -> Outcome:
    from .periodic_control import solve_periodic

    T, L = _length(cfg.get("T")), _length(cfg.get("L"))
    sol = solve_periodic(cfg.get("f"), cfg.get("g"), T, L, K_max=_int(cfg, "kmax", DEFAULTS.k_max))
    md = sol.field.metadata
    adm = sol.coeffs.adm
    return Outcome(
        checks={
            "terminal_sup_error": _check(md["terminal_sup_error"], tol["terminal"]),
            "initial_sup_error": _check(md["initial_sup_error"], tol["initial"]),
        },
        metrics=md,
        extra={"admissibility": {"p": adm.p, "q": adm.q, "C_s": adm.C_s, "two_T_over_L": str(adm.two_T_over_L)}},
        evaluate=sol.field,
        domain=(0.0, float(L)),
        T=float(T),
        names=("t", "theta", "y"),
    )


def _solve_bounded(kind):
    def run(cfg: RunConfig, tol) -> Outcome:
        from .bounded_control import BoundedTBVP, solve_bounded

        T, L = _length(cfg.get("T")), _length(cfg.get("L"))
        left, right = cfg.get("left"), cfg.get("right")
        spec = BoundedTBVP(cfg.get("f"), cfg.get("g"), T, L, kind, left, right)
        kw = {"K_max": _int(cfg, "kmax", 256)}
        sol = solve_bounded(spec, **kw)
        md = sol.field.metadata
        homog = spec.homogeneous
        trace_key = "trace_error_fd" if kind == "neumann" else "trace_error"
        checks = {
            "terminal_sup_error": _check(md["terminal_sup_error"], tol["terminal"]),
            "trace_error": _check(md[trace_key], tol["trace"] if homog else tol["trace_inhomogeneous"]),
        }
        if not homog:
            checks["extension_identity"] = _check(md["extension_identity"], tol["extension"])
        return Outcome(
            checks=checks,
            metrics=md,
            extra={"compatibility": sol.compatibility.residuals},
            evaluate=sol.field,
            domain=(0.0, float(L)),
            T=float(T),
        )

    return run


def _wavemap(cfg: RunConfig, tol) -> Outcome:
    from .applications import solve_wavemap

    T = float(_length(cfg.get("T")))
    w = _window(cfg.get("window"))
    sol = solve_wavemap(cfg.get("f"), cfg.get("g"), T, window=w)
    md = sol.field.metadata
    return Outcome(
        checks={
            "min_z": _check(md["min_z"], 0.0, below=False),
            "wavemap_residual": _check(md["wavemap_residual"], tol["residual"]),
            "initial_sup_error": _check(md["initial_sup_error"], tol["initial"]),
            "terminal_sup_error": _check(md["terminal_sup_error"], tol["terminal"]),
            "transform_identity": _check(md["transform_identity"], tol["identity"]),
        },
        metrics=md,
        evaluate=sol.field,
        domain=w,
        T=T,
    )


def _curvature(cfg: RunConfig, tol) -> Outcome:
    from .applications import curvature_flow_control

    T, L = _length(cfg.get("T")), _length(cfg.get("L"))
    try:
        k = float(cfg.get("k_target"))
    except ValueError:
        raise UsageError("--k-target needs a number") from None
    res = curvature_flow_control(cfg.get("f"), L, T, k, K_max=_int(cfg, "kmax", DEFAULTS.k_max))
    md = dict(res.metadata, M=res.M, shift=res.shift, k_final=res.k_final, argmin=res.argmin)
    return Outcome(
        checks={
            "min_k": _check(md["min_k"], tol["nonnegative"], below=False),
            "terminal_spread": _check(md["terminal_spread"], tol["terminal_constant"]),
            "min_shifted_velocity": _check(md["min_shifted_velocity"], tol["nonnegative"], below=False),
        },
        metrics=md,
        evaluate=res.field,
        domain=(0.0, float(L)),
        T=float(T),
        names=("t", "s", "k"),
    )


def _points(text) -> np.ndarray:
    if text.strip() == "cube":
        import itertools

        return np.array(list(itertools.product([-1.0, 0.0, 1.0], repeat=3)))
    try:
        pts = np.array([[float(c) for c in p.split(",")] for p in text.split(";") if p.strip()])
    except ValueError:
        raise UsageError(f"bad points {text!r}") from None
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise UsageError("points need three coordinates each")
    return pts


def _radial(cfg: RunConfig, tol) -> Outcome:
    from .radial3d import solve_radial3d

    T = float(_length(cfg.get("T")))
    pts = _points(cfg.get("points"))
    nt = _int(cfg, "nt", 11)
    res = solve_radial3d(cfg.get("f"), cfg.get("g"), T, pts, times=np.linspace(0.0, T, nt), jobs=cfg.jobs)
    md = dict(res.metadata)
    md["points"] = pts.tolist()
    md["values"] = [p.values.tolist() for p in res.results]
    out = Outcome(
        checks={
            "terminal_sup_error": _check(md["terminal_sup_error"], tol["terminal"]),
            "initial_sup_error": _check(md["initial_sup_error"], tol["initial"]),
        },
        metrics=md,
        T=T,
    )
    out.extra["_radial"] = res
    return out


def _check_only(cfg: RunConfig, tol) -> Outcome:
    kind = cfg.get("kind")
    if kind in ("dirichlet", "neumann"):
        from .bounded_control import BoundedTBVP, check_compatibility

        if cfg.get("L") is None:
            raise UsageError("check needs --L for bounded problems")
        spec = BoundedTBVP(
            cfg.get("f"), cfg.get("g") or cfg.get("f"), cfg.get("T") or "0", _length(cfg.get("L")), kind, cfg.get("left"), cfg.get("right")
        )
        rep = check_compatibility(spec, tol["compatibility"])
        checks = {k: _check(abs(v), rep.tol) for k, v in rep.residuals.items()}
        if not rep.passed:
            bad = ", ".join(f"{k} = {v:.6g}" for k, v in rep.failures.items())
            raise Rejected(f"endpoint compatibility fails: {bad}", "CompatibilityError", {"compatibility": rep.residuals})
        return Outcome(checks=checks, extra={"compatibility": rep.residuals})
    if kind == "periodic":
        from .periodic_control import admissibility

        for key in ("T", "L"):
            if cfg.get(key) is None:
                raise UsageError(f"check --kind periodic needs --{key}")
        adm = admissibility(_length(cfg.get("T")), _length(cfg.get("L")))
        rec = {"p": adm.p, "q": adm.q, "C_s": adm.C_s, "two_T_over_L": str(adm.two_T_over_L)}
        if not adm.admissible:
            raise Rejected(
                f"2T/L = {adm.two_T_over_L} is an integer: every mode is resonant, so the terminal "
                "profile is forced by the initial one",
                "InadmissibleError",
                {"admissibility": rec},
            )
        return Outcome(checks={"sine_bound_margin": _check(adm.min_ratio - 1.0, 1e-12, below=False)}, extra={"admissibility": rec})
    if kind == "line":
        from .line_control import build_bridge_poly, check_bridge, reduced_terminal

        if cfg.get("g") is None or cfg.get("T") is None:
            raise UsageError("check --kind line needs --g and --T")
        rt = reduced_terminal(cfg.get("f"), cfg.get("g"), float(_length(cfg.get("T"))))
        res = check_bridge(build_bridge_poly(rt), rt)
        return Outcome(checks={k: _check(abs(v), 1e-8) for k, v in res.items()}, metrics={"jet": list(rt.jet)})
    if kind == "wavemap":
        from .applications import check_wavemap_conditions

        if cfg.get("g") is None or cfg.get("T") is None:
            raise UsageError("check --kind wavemap needs --g and --T")
        cert = check_wavemap_conditions(cfg.get("f"), cfg.get("g"), float(_length(cfg.get("T"))), _window(cfg.get("window")))
        md = {k: getattr(cert, k) for k in ("margin", "inf_f", "sup_g", "sum_right", "sum_left", "n_max", "pattern")}
        if not cert.passed:
            raise Rejected(
                "wave-map conditions fail: " + ("inf f <= sup g" if not cert.gate else "partial-sum signs"),
                "WaveMapError",
                {"metrics": md},
            )
        return Outcome(metrics=md, checks={"margin": _check(cert.margin, 0.0, below=False)})
    raise UsageError("--kind must be dirichlet, neumann, periodic, line or wavemap")


RUNNERS = {
    "solve-line": _solve_line,
    "solve-periodic": _solve_periodic,
    "solve-dirichlet": _solve_bounded("dirichlet"),
    "solve-neumann": _solve_bounded("neumann"),
    "wavemap": _wavemap,
    "curvature-flow": _curvature,
    "radial3d": _radial,
    "check": _check_only,
}


def _rejection(exc: Exception) -> Rejected | None:
    from .applications import WaveMapError
    from .bounded_control import CompatibilityError
    from .periodic_control import InadmissibleError, ResonanceError

    if isinstance(exc, Rejected):
        return exc
    if isinstance(exc, ResonanceError):
        return Rejected(
            f"{exc}. On resonant modes the terminal coefficients are fixed by the initial ones "
            "(g_k = cos(2 k pi T / L) f_k); these data violate that relation",
            "ResonanceError",
        )
    if isinstance(exc, InadmissibleError):
        return Rejected(
            f"{exc}. Resonance: with 2T/L an integer, g is determined by f and cannot be prescribed",
            "InadmissibleError",
        )
    if isinstance(exc, CompatibilityError):
        return Rejected(str(exc), "CompatibilityError", {"compatibility": exc.report.residuals})
    if isinstance(exc, WaveMapError):
        return Rejected(str(exc), type(exc).__name__)
    if isinstance(exc, ValueError) and "negative" in str(exc):
        return Rejected(str(exc), "ValueError")
    return None


def _write_csv(cfg: RunConfig, out: Outcome) -> None:
    path = cfg.get("csv")
    if path is None:
        return
    if "_radial" in out.extra:
        res = out.extra["_radial"]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "x1", "x2", "x3", "y"])
        for i, t in enumerate(res.results[0].times):
            for p in res.results:
                w.writerow([format(float(c), ".17g") for c in (t, *p.point, p.values[i])])
        Path(path).write_text(buf.getvalue())
        return
    if out.evaluate is None:
        raise UsageError(f"{cfg.command} has no field to write")
    nt, nx = _int(cfg, "nt", 11), _int(cfg, "nx", 101)
    if nt < 2 or nx < 2:
        raise UsageError("--nt and --nx must be at least 2")
    emit_field_csv(out.evaluate, np.linspace(0.0, out.T, nt), np.linspace(*out.domain, nx), path, out.names)


def run(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg = make_config(argv)
    except UsageError as e:
        print(f"wavectl: usage error: {e}", file=stderr)
        return EXIT_USAGE
    except SystemExit as e:  # --version and --help
        return int(e.code or 0)

    report: dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "tool": "wavectl",
        "version": __version__,
        "command": cfg.command,
        "problem": cfg.problem(),
        "tolerances": cfg.tolerances,
        "checks": {},
        "metrics": {},
    }
    started = time.perf_counter()
    code = EXIT_OK
    out = None
    try:
        out = RUNNERS[cfg.command](cfg, cfg.tolerances)
        report["checks"] = out.checks
        report["metrics"] = {k: v for k, v in out.metrics.items()}
        report.update({k: v for k, v in out.extra.items() if not k.startswith("_")})
        failed = sorted(k for k, c in out.checks.items() if not c["passed"])
        if failed:
            code = EXIT_TOLERANCE
            report["status"] = "tolerance_failure"
            report["failure"] = {"reason": "checks above tolerance: " + ", ".join(failed), "type": "ToleranceFailure"}
        else:
            report["status"] = "ok"
        _write_csv(cfg, out)
    except UsageError as e:
        print(f"wavectl: usage error: {e}", file=stderr)
        return EXIT_USAGE
    except ExprError as e:
        print(f"wavectl: usage error: {e}", file=stderr)
        return EXIT_USAGE
    except Exception as e:  # noqa: BLE001
        rej = _rejection(e)
        if rej is None:
            raise
        code = EXIT_REJECTED
        report["status"] = "rejected"
        report["failure"] = {"reason": str(rej), "type": rej.kind}
        report.update(rej.extra)
    report["wall_clock_s"] = round(time.perf_counter() - started, 6)

    text = report_json(report)
    if cfg.get("report"):
        Path(cfg.get("report")).write_text(text)
    if cfg.flags.get("json"):
        stdout.write(text)
    status = {EXIT_OK: "ok", EXIT_TOLERANCE: "TOLERANCE FAILURE", EXIT_REJECTED: "REJECTED"}[code]
    print(f"wavectl {cfg.command}: {status}", file=stderr)
    if "failure" in report:
        print(f"  {report['failure']['reason']}", file=stderr)
    for name, c in sorted(report["checks"].items()):
        mark = "pass" if c["passed"] else "FAIL"
        print(f"  {mark} {name} = {c['value']!r} (tol {c['tol']:g})", file=stderr)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
