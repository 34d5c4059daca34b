"""Two-dimensional Lax-Friedrichs and Leap-Frog schemes.

Fields have shape ``(Jx + 1, Jy + 1)`` with the first index along x.  The
delayed source reads ``U[i - m0, j - q0]``; whenever either shifted index
falls left of (or below) the domain the history ``phi(s1, s2, t)`` is used,
evaluated at the physical shifted position on both axes.

Edges: ``x = 0`` and ``y = 0`` take the history trace ``phi(0, y, t)`` and
``phi(x, 0, t)``; ``x = X`` and ``y = Y`` follow the outflow policies.  With
extrapolation on both outflow edges the far corner copies its diagonal
neighbour so that the update is symmetric under swapping x and y.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidArgument, StrictCflViolation
from .expr import eval_expr
from .mesh import Grid2D
from .problem import DEFAULT_SAMPLES, DelayProblem2D, validate
from .solver import (LAX_FRIEDRICHS, LEAP_FROG, CflReport, _check_safety, _checked,
                     _frozen, check_cfl, run, scheme_name, snapshot_steps, step_count)


@dataclass(frozen=True)
class Field2D:
    values: np.ndarray
    time: float
    step: int = 0

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values))
        if self.values.ndim != 2:
            raise InvalidArgument("Field2D values must be two-dimensional")


class Stepper2D:
    def __init__(self, problem: DelayProblem2D, grid: Grid2D):
        self.problem = problem
        self.grid = grid
        self.x = grid.x.nodes
        self.y = grid.y.nodes
        self.X, self.Y = np.meshgrid(self.x, self.y, indexing="ij")
        self.shape = self.X.shape
        m0, q0 = grid.delay_offset_x, grid.delay_offset_y
        self.m0, self.q0 = m0, q0
        i = np.arange(self.shape[0])[:, None] - m0
        j = np.arange(self.shape[1])[None, :] - q0
        self.hist_mask = np.broadcast_to((i < 0) | (j < 0), self.shape)
        self.hist_s1 = np.broadcast_to(i * grid.cell_width_x, self.shape)[self.hist_mask]
        self.hist_s2 = np.broadcast_to(j * grid.cell_width_y, self.shape)[self.hist_mask]
        self._cache = {}

    def _field(self, key, expr, bindings, shape):
        if expr.depends_on("t"):
            return np.broadcast_to(eval_expr(expr, bindings), shape)
        if key not in self._cache:
            self._cache[key] = np.broadcast_to(eval_expr(expr, bindings), shape)
        return self._cache[key]

    def coeff(self, name, t):
        expr = getattr(self.problem, f"coeff_{name}")
        return self._field(name, expr, {"x": self.X, "y": self.Y, "t": t}, self.shape)

    def delayed(self, u, t):
        out = np.empty_like(u)
        m0, q0 = self.m0, self.q0
        nx, ny = u.shape
        if m0 < nx and q0 < ny:
            out[m0:, q0:] = u[:nx - m0, :ny - q0]
        phi = self._field("phi", self.problem.history,
                          {"s1": self.hist_s1, "s2": self.hist_s2, "t": t}, self.hist_s1.shape)
        out[self.hist_mask] = phi
        return out

    def apply_boundaries(self, new, t):
        px, py = self.problem.outflow_x, self.problem.outflow_y
        if px.mode == "dirichlet":
            new[-1, :] = np.broadcast_to(
                eval_expr(px.psi, {"x": self.x[-1], "y": self.y, "t": t}), self.y.shape)
        else:
            new[-1, 1:-1] = new[-2, 1:-1]
        if py.mode == "dirichlet":
            new[:, -1] = np.broadcast_to(
                eval_expr(py.psi, {"x": self.x, "y": self.y[-1], "t": t}), self.x.shape)
        else:
            new[1:-1, -1] = new[1:-1, -2]
        if px.mode == "extrapolate" and py.mode == "extrapolate":
            new[-1, -1] = new[-2, -2]
        hist = self.problem.history
        new[0, :] = np.broadcast_to(eval_expr(hist, {"s1": 0.0, "s2": self.y, "t": t}),
                                    self.y.shape)
        new[:, 0] = np.broadcast_to(eval_expr(hist, {"s1": self.x, "s2": 0.0, "t": t}),
                                    self.x.shape)
        return new

    def initial(self):
        return np.array(np.broadcast_to(eval_expr(self.problem.initial,
                                                  {"x": self.X, "y": self.Y}), self.shape),
                        dtype=np.float64)

    def lax_friedrichs(self, u, t, dt):
        dx, dy = self.grid.cell_width_x, self.grid.cell_width_y
        a, b, c = (self.coeff(k, t)[1:-1, 1:-1] for k in "abc")
        d = self.delayed(u, t)[1:-1, 1:-1]
        e, w = u[2:, 1:-1], u[:-2, 1:-1]
        n, s = u[1:-1, 2:], u[1:-1, :-2]
        new = np.empty_like(u)
        with np.errstate(over="ignore", invalid="ignore"):
            new[1:-1, 1:-1] = (0.25 * (e + w + n + s)
                               - (dt / (2 * dx)) * a * (e - w)
                               - (dt / (2 * dy)) * b * (n - s)
                               + dt * c * d)
        return self.apply_boundaries(new, t + dt)

    def leap_frog(self, prev, u, t, dt):
        dx, dy = self.grid.cell_width_x, self.grid.cell_width_y
        a, b, c = (self.coeff(k, t)[1:-1, 1:-1] for k in "abc")
        d = self.delayed(u, t)[1:-1, 1:-1]
        new = np.empty_like(u)
        with np.errstate(over="ignore", invalid="ignore"):
            new[1:-1, 1:-1] = (prev[1:-1, 1:-1]
                               - (a * dt / dx) * (u[2:, 1:-1] - u[:-2, 1:-1])
                               - (b * dt / dy) * (u[1:-1, 2:] - u[1:-1, :-2])
                               + 2 * dt * c * d)
        return self.apply_boundaries(new, t + dt)


def lax_friedrichs_step_2d(level: Field2D, problem: DelayProblem2D, grid: Grid2D,
                           dt: float) -> Field2D:
    new = Stepper2D(problem, grid).lax_friedrichs(np.asarray(level.values), level.time, dt)
    return Field2D(_checked(new, level.step + 1), level.time + dt, level.step + 1)


def leap_frog_step_2d(level_prev: Field2D, level_curr: Field2D, problem: DelayProblem2D,
                      grid: Grid2D, dt: float) -> Field2D:
    if not math.isclose(level_curr.time - level_prev.time, dt, rel_tol=1e-9, abs_tol=1e-15):
        raise InvalidArgument("leap-frog levels must be exactly dt apart")
    new = Stepper2D(problem, grid).leap_frog(np.asarray(level_prev.values),
                                             np.asarray(level_curr.values), level_curr.time, dt)
    return Field2D(_checked(new, level_curr.step + 1), level_curr.time + dt, level_curr.step + 1)


def bootstrap_leap_frog_2d(initial: Field2D, problem: DelayProblem2D, grid: Grid2D, dt: float):
    report = cfl_report_2d(problem, grid, dt, LEAP_FROG)
    if not report.admissible:
        raise StrictCflViolation(
            f"Leap-Frog needs Courant number < 1, got {report.courant_number:.6g}")
    return initial, lax_friedrichs_step_2d(initial, problem, grid, dt)


def cfl_report_2d(problem, grid, dt, scheme, samples=DEFAULT_SAMPLES) -> CflReport:
    A, B = problem.bound_a(samples), problem.bound_b(samples)
    courant = A * abs(dt) / grid.cell_width_x + B * abs(dt) / grid.cell_width_y
    return CflReport(courant, 1.0, scheme_name(scheme) == LEAP_FROG)


def cfl_max_dt_2d(problem: DelayProblem2D, grid: Grid2D, safety: float = 0.9,
                  scheme: str = LAX_FRIEDRICHS, samples: int = DEFAULT_SAMPLES) -> float:
    """``safety / (A/dx + B/dy)`` from the sampled bounds of ``|a|`` and ``|b|``."""
    _check_safety(safety, scheme)
    rate = problem.bound_a(samples) / grid.cell_width_x + problem.bound_b(samples) / grid.cell_width_y
    if rate == 0:
        return problem.final_time
    return safety / rate


def solve_2d(problem: DelayProblem2D, grid: Grid2D, dt: float, scheme: str = LAX_FRIEDRICHS,
             snapshot_times: Sequence[float] | None = None, *,
             samples: int = DEFAULT_SAMPLES, record_every_step: bool = False):
    scheme = scheme_name(scheme)
    validate(problem, grid, samples=samples).raise_if_fatal()
    n_steps, dt = step_count(problem.final_time, dt)
    cfl = cfl_report_2d(problem, grid, dt, scheme, samples)
    check_cfl(cfl, scheme)
    steps = snapshot_steps(snapshot_times, problem.final_time, dt, n_steps)
    return run(Stepper2D(problem, grid), Field2D, dt, n_steps, scheme, steps, cfl, grid,
               record_every_step)
