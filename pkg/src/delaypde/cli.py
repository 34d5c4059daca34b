"""Command-line entry point.

    delaypde solve <config> [--out DIR] [--scheme lf|leapfrog] [--set sec.key=value ...]
    delaypde converge <config> [--dx-list 1/100 1/200 ...] [--dt-div 2 4 8 16]
                               [--norm max|l2] [--out DIR] [--scheme ...] [--workers N]

Exit codes: 0 success, 2 configuration or problem error, 3 numerical abort.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import logging
import re
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

from . import __version__
from .analysis import convergence_table
from .errors import (ConfigError, DelayPdeError, IllPosedProblem, IncommensurateDelay,
                     InvalidArgument, NumericalAbort, ParseError, StrictCflViolation)
from .expr import parse_expr
from .mesh import DEFAULT_SNAP_TOLERANCE, build_grid_1d, build_grid_2d
from .problem import VARS_1D, VARS_2D, DelayProblem1D, DelayProblem2D, OutflowPolicy
from .solver import cfl_max_dt_1d, scheme_name, snapshot_steps, solve_1d, step_count
from .solver2d import cfl_max_dt_2d, solve_2d

logger = logging.getLogger("delaypde")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3
SHIPPED_CONFIGS = ("example1.cfg", "example2.cfg", "example3.cfg")


@dataclass
class RunConfig:
    dimension: int
    problem: object
    grid: object
    scheme: str
    dt: float | None
    cfl_safety: float | None
    snapshot_times: list
    output_dir: Path
    norm: str = "max"
    dx_list: list = field(default_factory=lambda: [0.01, 0.005, 0.0025, 0.00125])
    dt_divisors: list = field(default_factory=lambda: [2, 4, 8, 16])
    source: str = ""


class _Reader:
    """configparser wrapper that knows the line of every key."""

    def __init__(self, text: str, source: str):
        self.source = source
        self.cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
        try:
            self.cp.read_string(text, source=source)
        except configparser.Error as exc:
            line = getattr(exc, "lineno", None)
            raise ConfigError(str(exc).splitlines()[0], line=line) from None
        self.lines = {}
        section = None
        for lineno, raw in enumerate(text.splitlines(), 1):
            m = re.match(r"\s*\[([^\]]+)\]", raw)
            if m:
                section = m.group(1).strip()
                continue
            m = re.match(r"\s*([^#;=:\s][^=:]*?)\s*[=:]", raw)
            if m and section is not None:
                self.lines[(section, m.group(1).strip().lower())] = lineno

    def error(self, section, key, message):
        return ConfigError(message, section, key, self.lines.get((section, key)))

    def has(self, section, key):
        return self.cp.has_option(section, key)

    def get(self, section, key, default=None, required=True):
        if self.cp.has_option(section, key):
            value = self.cp.get(section, key).strip()
            if value:
                return value
        if required and default is None:
            raise ConfigError("missing required key", section, key)
        return default

    def number(self, section, key, default=None, required=True):
        raw = self.get(section, key, default, required)
        if raw is None or not isinstance(raw, str):
            return raw
        try:
            return _parse_number(raw)
        except ValueError:
            raise self.error(section, key, f"not a number: {raw!r}") from None

    def expr(self, section, key, allowed, default=None, required=True):
        raw = self.get(section, key, default, required)
        if raw is None:
            return None
        try:
            return parse_expr(raw, allowed)
        except ParseError as exc:
            raise self.error(section, key,
                             f"cannot parse {raw!r}: {exc}") from None

    def number_list(self, section, key, default=None):
        raw = self.get(section, key, "", required=False)
        if not raw:
            return default
        try:
            return [_parse_number(p) for p in re.split(r"[,\s]+", raw.strip()) if p]
        except ValueError:
            raise self.error(section, key, f"not a list of numbers: {raw!r}") from None


def _parse_number(text: str) -> float:
    text = text.strip()
    if "/" in text:
        return float(Fraction(text))
    return float(text)


def _resolve(path) -> Path:
    p = Path(path)
    if p.exists():
        return p
    if p.name in SHIPPED_CONFIGS and p.parent == Path("."):
        return Path(str(resources.files("delaypde") / "configs" / p.name))
    raise ConfigError(f"config file not found: {path}")


def load_config(path, overrides=()) -> RunConfig:
    """Read and fully validate a run configuration.

    ``overrides`` are ``"section.key=value"`` strings applied on top of the
    file.  Every expression is parsed and the grid is built, so delay
    commensurability problems surface here.
    """
    path = _resolve(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    r = _Reader(text, str(path))
    for item in overrides:
        m = re.match(r"\s*([^.=\s]+)\.([^=\s]+)\s*=(.*)$", item)
        if not m:
            raise ConfigError(f"bad override {item!r}; expected section.key=value")
        sec, key, value = m.group(1), m.group(2).lower(), m.group(3).strip()
        if not r.cp.has_section(sec):
            r.cp.add_section(sec)
        r.cp.set(sec, key, value)

    dim = int(r.number("problem", "dimension", 1, required=False))
    if dim not in (1, 2):
        raise r.error("problem", "dimension", f"must be 1 or 2, got {dim}")
    name = r.get("problem", "name", path.stem, required=False)

    t_final = r.number("domain", "t_final")
    snap_tol = r.number("discretization", "snap_tolerance", DEFAULT_SNAP_TOLERANCE, required=False)
    has_dt = r.has("discretization", "dt")
    has_cfl = r.has("discretization", "cfl_safety")
    if has_dt == has_cfl:
        raise r.error("discretization", "dt" if has_dt else None,
                      "give exactly one of dt and cfl_safety")
    dt = r.number("discretization", "dt") if has_dt else None
    safety = r.number("discretization", "cfl_safety") if has_cfl else None
    try:
        scheme = scheme_name(r.get("discretization", "scheme", "lax_friedrichs", required=False))
    except InvalidArgument as exc:
        raise r.error("discretization", "scheme", str(exc)) from None

    mode = r.get("outflow", "mode", "", required=False) or None
    if mode not in (None, "dirichlet", "extrapolate"):
        raise r.error("outflow", "mode", f"must be dirichlet or extrapolate, got {mode!r}")

    try:
        if dim == 1:
            psi = r.expr("outflow", "psi", {"t"}, required=False)
            if mode == "dirichlet" and psi is None:
                raise r.error("outflow", "psi", "dirichlet outflow needs psi")
            policy = OutflowPolicy.default(psi) if mode is None else \
                OutflowPolicy(mode, psi if mode == "dirichlet" else None)
            problem = DelayProblem1D(
                r.expr("equation", "a", VARS_1D), r.expr("equation", "b", VARS_1D),
                r.number("equation", "alpha"), r.expr("initial", "u0", {"x"}),
                r.expr("history", "phi", {"s", "t"}, "0", required=False), policy,
                t_final, r.number("domain", "length", 1.0, required=False), name)
            cells = int(r.number("discretization", "requested_cells"))
            try:
                grid = build_grid_1d(problem.domain_length, problem.delay, cells, snap_tol)
            except (IncommensurateDelay, InvalidArgument) as exc:
                raise r.error("discretization", "requested_cells", str(exc)) from None
        else:
            psi = r.expr("outflow", "psi", VARS_2D, required=False)
            if mode == "dirichlet" and psi is None:
                raise r.error("outflow", "psi", "dirichlet outflow needs psi")
            policy = OutflowPolicy.default(psi) if mode is None else \
                OutflowPolicy(mode, psi if mode == "dirichlet" else None)
            problem = DelayProblem2D(
                r.expr("equation", "a", VARS_2D), r.expr("equation", "b", VARS_2D),
                r.expr("equation", "c", VARS_2D), r.number("equation", "alpha"),
                r.number("equation", "beta"), r.expr("initial", "u0", {"x", "y"}),
                r.expr("history", "phi", {"s1", "s2", "t"}, "0", required=False),
                policy, policy, t_final,
                r.number("domain", "length_x", 1.0, required=False),
                r.number("domain", "length_y", 1.0, required=False), name)
            default_cells = r.number("discretization", "requested_cells", 0, required=False)
            cx = int(r.number("discretization", "requested_cells_x", default_cells or None))
            cy = int(r.number("discretization", "requested_cells_y", default_cells or None))
            try:
                grid = build_grid_2d(problem.domain_length_x, problem.domain_length_y,
                                     problem.delay_x, problem.delay_y, cx, cy, snap_tol)
            except (IncommensurateDelay, InvalidArgument) as exc:
                raise r.error("discretization", "requested_cells", str(exc)) from None
    except InvalidArgument as exc:
        raise ConfigError(str(exc)) from None

    snaps = r.number_list("output", "snapshot_times", [t_final])
    out = Path(r.get("output", "directory", f"out/{name}", required=False))
    norm = r.get("output", "norm", "max", required=False)
    if norm not in ("max", "l2"):
        raise r.error("output", "norm", f"must be max or l2, got {norm!r}")
    dx_list = r.number_list("output", "dx_list", [0.01, 0.005, 0.0025, 0.00125])
    divisors = [int(d) for d in r.number_list("output", "dt_divisors", [2, 4, 8, 16])]
    return RunConfig(dim, problem, grid, scheme, dt, safety, snaps, out, norm, dx_list,
                     divisors, str(path))


# --- output ---------------------------------------------------------------

def _write_rows(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_snapshot_csv(path: Path, snapshot, grid, dimension: int):
    values = snapshot.values
    if dimension == 1:
        rows = ((repr(float(x)), repr(float(u))) for x, u in zip(grid.nodes, values))
        _write_rows(path, ["x", "u"], rows)
    else:
        xs, ys = grid.x.nodes, grid.y.nodes
        rows = ((repr(float(xs[i])), repr(float(ys[j])), repr(float(values[i, j])))
                for i in range(len(xs)) for j in range(len(ys)))
        _write_rows(path, ["x", "y", "u"], rows)


def _grid_info(grid, dimension):
    if dimension == 1:
        return {"J": grid.num_cells, "dx": grid.cell_width, "m0": grid.delay_offset}
    return {"Jx": grid.num_cells_x, "Jy": grid.num_cells_y, "dx": grid.cell_width_x,
            "dy": grid.cell_width_y, "m0": grid.delay_offset_x, "q0": grid.delay_offset_y}


def _write_manifest(out: Path, manifest: dict):
    out.mkdir(parents=True, exist_ok=True)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _choose_dt(config: RunConfig, scheme: str) -> float:
    if config.dt is not None:
        return config.dt
    if config.dimension == 1:
        return cfl_max_dt_1d(config.problem, config.grid, config.cfl_safety, scheme)
    return cfl_max_dt_2d(config.problem, config.grid, config.cfl_safety, scheme)


def cmd_solve(config: RunConfig, out_dir=None, scheme=None) -> int:
    """Run one solve; writes one CSV per snapshot time and ``manifest.json``."""
    out = Path(out_dir) if out_dir is not None else config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    scheme = scheme_name(scheme or config.scheme)
    manifest = {"command": "solve", "config": config.source, "scheme": scheme,
                "dimension": config.dimension, "grid": _grid_info(config.grid, config.dimension),
                "final_time": config.problem.final_time, "version": __version__}
    start = time.perf_counter()
    history = None
    code = EXIT_OK
    try:
        dt = _choose_dt(config, scheme)
        manifest["dt_requested"] = dt
        solve = solve_1d if config.dimension == 1 else solve_2d
        history = solve(config.problem, config.grid, dt, scheme, config.snapshot_times)
        manifest["status"] = "ok"
    except NumericalAbort as exc:
        history = exc.history
        manifest.update(status=type(exc).__name__, abort_step=exc.step, error=str(exc))
        code = EXIT_NUMERICAL
    except StrictCflViolation as exc:
        manifest.update(status=type(exc).__name__, abort_step=0, error=str(exc))
        code = EXIT_NUMERICAL
    except (IllPosedProblem, InvalidArgument, IncommensurateDelay) as exc:
        manifest.update(status=type(exc).__name__, error=str(exc))
        code = EXIT_CONFIG
    except DelayPdeError as exc:
        manifest.update(status=type(exc).__name__, error=str(exc))
        code = EXIT_NUMERICAL
    manifest["wall_time_s"] = round(time.perf_counter() - start, 6)

    files = []
    if history is not None:
        manifest["dt_used"] = history.dt_used
        manifest["steps_taken"] = history.steps_taken
        if history.cfl is not None:
            manifest["courant_number"] = history.cfl.courant_number
        n_total, _ = step_count(config.problem.final_time, history.dt_used)
        wanted = set(snapshot_steps(config.snapshot_times, config.problem.final_time,
                                    history.dt_used, n_total))
        k = 0
        for snap in history.snapshots:
            if snap.step not in wanted:
                continue
            name = f"snapshot_{k:03d}_t{snap.time:.6g}.csv"
            write_snapshot_csv(out / name, snap, config.grid, config.dimension)
            files.append({"file": name, "time": snap.time, "step": snap.step})
            k += 1
    manifest["snapshots"] = files
    _write_manifest(out, manifest)
    if code:
        print(f"{manifest['status']}: {manifest.get('error', '')}", file=sys.stderr)
    return code


def cmd_converge(config: RunConfig, dx_list=None, dt_divisors=None, norm=None, out_dir=None,
                 scheme=None, workers: int = 1) -> int:
    """Write the double-mesh error table and its observed-order companion as CSV."""
    out = Path(out_dir) if out_dir is not None else config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    scheme = scheme_name(scheme or config.scheme)
    norm = norm or config.norm
    if config.dimension != 1:
        print("ConfigError: converge supports one-dimensional problems only", file=sys.stderr)
        return EXIT_CONFIG
    dx_list = dx_list or config.dx_list
    dt_divisors = dt_divisors or config.dt_divisors
    manifest = {"command": "converge", "config": config.source, "scheme": scheme, "norm": norm,
                "dx_list": list(dx_list), "dt_divisors": list(dt_divisors),
                "final_time": config.problem.final_time, "delay": config.problem.delay,
                "version": __version__}
    start = time.perf_counter()
    code = EXIT_OK
    try:
        table = convergence_table(config.problem, scheme, dx_list, dt_divisors, norm,
                                  workers=workers)
    except NumericalAbort as exc:
        manifest.update(status=type(exc).__name__, abort_step=exc.step, error=str(exc))
        code = EXIT_NUMERICAL
    except StrictCflViolation as exc:
        manifest.update(status=type(exc).__name__, error=str(exc))
        code = EXIT_NUMERICAL
    except (IllPosedProblem, InvalidArgument, IncommensurateDelay) as exc:
        manifest.update(status=type(exc).__name__, error=str(exc))
        code = EXIT_CONFIG
    else:
        (out / f"error_table_{norm}.csv").write_text(table.to_csv())
        manifest["files"] = [f"error_table_{norm}.csv"]
        if len(table.dx_values) > 1 and (table.entries > 0).all():
            (out / f"observed_order_{norm}.csv").write_text(table.orders_to_csv())
            manifest["files"].append(f"observed_order_{norm}.csv")
        manifest["status"] = "ok"
        print(table.format())
    manifest["wall_time_s"] = round(time.perf_counter() - start, 6)
    _write_manifest(out, manifest)
    if code:
        print(f"{manifest['status']}: {manifest.get('error', '')}", file=sys.stderr)
    return code


def _numbers(values, kind=float):
    out = []
    for v in values or []:
        for part in v.split(","):
            if part.strip():
                out.append(kind(_parse_number(part)))
    return out or None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="delaypde",
        description="Finite-difference solver for hyperbolic PDEs with a point-wise spatial delay.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", help="config file (or example1.cfg .. example3.cfg)")
    common.add_argument("--out", help="output directory (overrides [output] directory)")
    common.add_argument("--scheme", choices=["lf", "leapfrog", "lax_friedrichs", "leap_frog"])
    common.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override a config value; may be repeated")

    sub.add_parser("solve", parents=[common], help="run one simulation and write snapshots")
    conv = sub.add_parser("converge", parents=[common], help="double-mesh error table")
    conv.add_argument("--dx-list", nargs="+", help="cell widths, e.g. 1/100 1/200")
    conv.add_argument("--dt-div", nargs="+", help="dt = dx / divisor, e.g. 2 4 8 16")
    conv.add_argument("--norm", choices=["max", "l2"])
    conv.add_argument("--workers", type=int, default=1)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(args.config, args.set)
        if args.command == "solve":
            return cmd_solve(config, args.out, args.scheme)
        return cmd_converge(config, _numbers(args.dx_list), _numbers(args.dt_div, int),
                            args.norm, args.out, args.scheme, args.workers)
    except ConfigError as exc:
        print(f"ConfigError: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"ConfigError: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
