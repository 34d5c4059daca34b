"""Double-mesh error estimates and convergence tables.

No exact solution is available for variable-coefficient delay problems, so
the error of a run at ``(dx, dt)`` is estimated against a run at
``(dx/2, dt/2)``, comparing coarse node ``(j, n)`` with fine node
``(2j, 2n)``; no interpolation is ever needed.

Two norms are supported:

* ``max``: largest absolute difference over all nodes and all common time
  levels;
* ``l2``: discrete ``sqrt(dx * sum(diff**2))`` at the final time only.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import IncommensurateDelay, InvalidArgument, MeshMismatch
from .mesh import build_grid_1d
from .problem import DEFAULT_SAMPLES, validate
from .solver import (Stepper1D, cfl_report_1d, check_cfl, march, scheme_name,
                     step_count)

NORMS = ("max", "l2")


def _norm_name(norm: str) -> str:
    norm = {"max_abs": "max", "max": "max", "l2": "l2"}.get(norm)
    if norm is None:
        raise InvalidArgument("norm must be 'max' or 'l2'")
    return norm


def _coarse_view(values: np.ndarray) -> np.ndarray:
    return values[(slice(None, None, 2),) * values.ndim]


def _check_refinement(coarse, fine):
    gc, gf = coarse.grid, fine.grid
    if gc is not None and gf is not None:
        pairs = [(gc, gf)] if not hasattr(gc, "x") else [(gc.x, gf.x), (gc.y, gf.y)]
        for c, f in pairs:
            if (f.num_cells != 2 * c.num_cells or f.delay_offset != 2 * c.delay_offset
                    or not math.isclose(2 * f.cell_width, c.cell_width, rel_tol=1e-12)):
                raise MeshMismatch(
                    f"fine grid (J={f.num_cells}, m0={f.delay_offset}) is not the 2x "
                    f"refinement of (J={c.num_cells}, m0={c.delay_offset})")
    if fine.steps_taken != 2 * coarse.steps_taken:
        raise MeshMismatch(f"fine run took {fine.steps_taken} steps, "
                           f"expected {2 * coarse.steps_taken}")
    if not math.isclose(2 * fine.dt_used, coarse.dt_used, rel_tol=1e-12):
        raise MeshMismatch(f"fine dt {fine.dt_used!r} is not half of {coarse.dt_used!r}")
    if coarse.scheme != fine.scheme:
        raise MeshMismatch("coarse and fine runs used different schemes")


def _pair(coarse_values, fine_values):
    c = np.asarray(coarse_values)
    f = _coarse_view(np.asarray(fine_values))
    if c.shape != f.shape:
        raise MeshMismatch(f"coincident nodes do not line up: {c.shape} vs {f.shape}")
    return c - f


def double_mesh_max_error(coarse, fine) -> float:
    """``max |U_coarse(j, n) - U_fine(2j, 2n)|`` over every coarse snapshot.

    For the full space-time maximum both runs must record every step
    (``record_every_step=True``); otherwise only the recorded coarse levels
    are compared, and each needs its fine partner.
    """
    _check_refinement(coarse, fine)
    fine_by_step = {s.step: s for s in fine.snapshots}
    err = 0.0
    for snap in coarse.snapshots:
        partner = fine_by_step.get(2 * snap.step)
        if partner is None:
            raise MeshMismatch(f"fine run has no level {2 * snap.step} to match coarse "
                               f"level {snap.step}")
        err = max(err, float(np.max(np.abs(_pair(snap.values, partner.values)))))
    return err


def _l2(diff, cell_volume):
    return math.sqrt(cell_volume * float(np.sum(diff * diff)))


def _cell_volume(grid):
    if hasattr(grid, "x"):
        return grid.cell_width_x * grid.cell_width_y
    return grid.cell_width


def double_mesh_l2_error(coarse, fine) -> float:
    """``sqrt(dx * sum_j (U_coarse(j, N) - U_fine(2j, 2N))**2)`` at the final time."""
    _check_refinement(coarse, fine)
    diff = _pair(coarse.final.values, fine.final.values)
    return _l2(diff, _cell_volume(coarse.grid))


def observed_order(e_coarse: float, e_fine: float) -> float:
    """``log2(e_coarse / e_fine)``, the convergence rate under mesh halving."""
    if not (e_coarse > 0 and e_fine > 0):
        raise InvalidArgument("observed_order needs two positive errors")
    return math.log2(e_coarse / e_fine)


@dataclass
class ErrorTable:
    """Double-mesh errors, one row per ``dt = dx / divisor``, one column per ``dx``."""

    dx_values: list
    dt_divisors: list
    entries: np.ndarray
    norm: str
    scheme: str
    problem: str
    delay: float

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=np.float64)
        if self.entries.shape != (len(self.dt_divisors), len(self.dx_values)):
            raise InvalidArgument("table shape does not match dx_values x dt_divisors")
        if np.any(self.entries < 0):
            raise InvalidArgument("errors must be non-negative")

    dt_rule = "dt = dx / divisor"

    @property
    def row_labels(self) -> list:
        return [f"dx/{d}" for d in self.dt_divisors]

    @property
    def column_labels(self) -> list:
        return [dx_label(dx) for dx in self.dx_values]

    def orders(self) -> np.ndarray:
        """Observed orders between adjacent columns (rows x columns-1)."""
        e = self.entries
        return np.array([[observed_order(e[r, k], e[r, k + 1]) for k in range(e.shape[1] - 1)]
                         for r in range(e.shape[0])]).reshape(e.shape[0], -1)

    def ratios(self) -> np.ndarray:
        return self.entries[:, :-1] / self.entries[:, 1:]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["dt_rule"] + self.column_labels)
        for label, row in zip(self.row_labels, self.entries):
            w.writerow([label] + [f"{v:.6g}" for v in row])
        return buf.getvalue()

    def orders_to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        labels = self.column_labels
        w.writerow(["dt_rule"] + [f"{a}->{b}" for a, b in zip(labels, labels[1:])])
        orders = self.orders()
        for label, row in zip(self.row_labels, orders):
            w.writerow([label] + [f"{v:.6g}" for v in row])
        return buf.getvalue()

    def format(self) -> str:
        head = f"{'dt | dx':>10}" + "".join(f"{c:>12}" for c in self.column_labels)
        lines = [head]
        for label, row in zip(self.row_labels, self.entries):
            lines.append(f"{label:>10}" + "".join(f"{v:12.6f}" for v in row))
        return "\n".join(lines)


def dx_label(dx: float) -> str:
    frac = Fraction(dx).limit_denominator(10**6)
    if frac.numerator == 1 and math.isclose(float(frac), dx, rel_tol=1e-12):
        return f"1/{frac.denominator}"
    return repr(dx)


def double_mesh_cell(problem, grid, dt, scheme) -> tuple[float, float]:
    """Both double-mesh norms for one ``(dx, dt)`` pair, streaming the two runs.

    Memory stays at a few levels regardless of the number of steps.
    """
    fine_grid = grid.refined()
    n_steps, dt = step_count(problem.final_time, dt)
    coarse_st, fine_st = Stepper1D(problem, grid), Stepper1D(problem, fine_grid)
    coarse = march(coarse_st, coarse_st.initial(), dt, n_steps, scheme)
    fine = march(fine_st, fine_st.initial(), dt / 2, 2 * n_steps, scheme)
    worst = 0.0
    diff = None
    for n, uc in enumerate(coarse):
        if n:
            next(fine)
        diff = _pair(uc, next(fine))
        worst = max(worst, float(np.max(np.abs(diff))))
    return worst, _l2(diff, grid.cell_width)


def grid_for_dx(problem, dx):
    cells = int(round(problem.domain_length / dx))
    grid = build_grid_1d(problem.domain_length, problem.delay, cells)
    if not math.isclose(grid.cell_width, dx, rel_tol=1e-9):
        raise IncommensurateDelay(
            f"dx={dx!r} cannot carry delay {problem.delay!r} on [0, {problem.domain_length!r}] "
            f"(closest aligned grid has dx={grid.cell_width!r})")
    return grid


def _cell_job(args):
    problem, dx, divisor, scheme = args
    grid = grid_for_dx(problem, dx)
    return double_mesh_cell(problem, grid, grid.cell_width / divisor, scheme)


def convergence_table(problem, scheme, dx_list, dt_divisors=(2, 4, 8, 16), norm="max", *,
                      samples: int = DEFAULT_SAMPLES, workers: int = 1) -> ErrorTable:
    """Run the double-mesh estimate for every ``(dx, dx/divisor)`` pair.

    Cells are independent; with ``workers > 1`` they run in separate
    processes.  Each cell is computed identically either way, so the table
    does not depend on the worker count.
    """
    scheme = scheme_name(scheme)
    norm = _norm_name(norm)
    dx_list = [float(dx) for dx in dx_list]
    dt_divisors = [int(d) for d in dt_divisors]
    if not dx_list or not dt_divisors:
        raise InvalidArgument("need at least one dx and one divisor")
    validate(problem, samples=samples).raise_if_fatal()
    jobs = []
    for d in dt_divisors:
        for dx in dx_list:
            grid = grid_for_dx(problem, dx)
            n_steps, dt = step_count(problem.final_time, grid.cell_width / d)
            check_cfl(cfl_report_1d(problem, grid, dt, scheme, samples), scheme)
            jobs.append((problem, dx, d, scheme))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_cell_job, jobs))
    else:
        results = [_cell_job(job) for job in jobs]
    pick = 0 if norm == "max" else 1
    entries = np.array([r[pick] for r in results]).reshape(len(dt_divisors), len(dx_list))
    return ErrorTable(dx_list, dt_divisors, entries, norm, scheme, problem.name, problem.delay)
