"""Explicit Lax-Friedrichs and Leap-Frog time stepping for the delay equation.

The delayed source ``b(x_j, t_n) u(x_j - alpha, t_n)`` is the index shift
``U[j - m0]`` on a delay-aligned grid; indices left of the domain are read
from the history function.  Coefficients are evaluated at ``(x_j, t_n)``,
the old time level, in every scheme.

Boundary values are imposed at the new time level after the interior update:
``U[0] = phi(0, t)`` and ``U[J]`` from the outflow policy.  Leap-Frog uses the
same single-level boundary rules as Lax-Friedrichs.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import BlowUp, InvalidArgument, StrictCflViolation, Unstable
from .expr import eval_expr
from .mesh import Grid1D
from .problem import DEFAULT_SAMPLES, DelayProblem1D, validate

logger = logging.getLogger(__name__)

LAX_FRIEDRICHS = "lax_friedrichs"
LEAP_FROG = "leap_frog"
_ALIASES = {
    "lax_friedrichs": LAX_FRIEDRICHS, "lf": LAX_FRIEDRICHS, "lax-friedrichs": LAX_FRIEDRICHS,
    "leap_frog": LEAP_FROG, "leapfrog": LEAP_FROG, "leap-frog": LEAP_FROG,
}

# norm-growth guard: abort once max|U^n| exceeds this factor times (1 + max|U^0|)
GROWTH_LIMIT = 1e6
DIVISIBILITY_RTOL = 1e-12
# Lax-Friedrichs accepts Courant numbers this far above 1 as rounding noise
_CFL_ROUNDING = 1e-12


def scheme_name(scheme: str) -> str:
    try:
        return _ALIASES[scheme.lower()]
    except (KeyError, AttributeError):
        raise InvalidArgument(f"unknown scheme {scheme!r}; use lax_friedrichs or leap_frog") from None


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Field1D:
    values: np.ndarray
    time: float
    step: int = 0

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values))
        if self.values.ndim != 1:
            raise InvalidArgument("Field1D values must be one-dimensional")


@dataclass(frozen=True)
class CflReport:
    courant_number: float
    limit: float = 1.0
    strict_required: bool = False

    @property
    def admissible(self) -> bool:
        if self.strict_required:
            return self.courant_number < self.limit
        return self.courant_number <= self.limit * (1 + _CFL_ROUNDING)


@dataclass
class SolutionHistory:
    """Snapshots of a run, always starting with the initial level."""

    snapshots: list
    steps_taken: int
    dt_used: float
    grid: object = None
    scheme: str = LAX_FRIEDRICHS
    cfl: CflReport | None = None
    snapshot_steps: list = field(default_factory=list)

    @property
    def times(self) -> list:
        return [s.time for s in self.snapshots]

    @property
    def final(self):
        return self.snapshots[-1]

    def at_step(self, step: int):
        for s in self.snapshots:
            if s.step == step:
                return s
        raise KeyError(f"no snapshot at step {step}")

    def nearest(self, t: float):
        return min(self.snapshots, key=lambda s: abs(s.time - t))


# --- coefficient sampling -------------------------------------------------

class Stepper1D:
    """Grid-bound evaluation of coefficients, delayed values and boundaries.

    Time-independent expressions are evaluated once and reused.
    """

    def __init__(self, problem: DelayProblem1D, grid: Grid1D):
        self.problem = problem
        self.grid = grid
        self.x = grid.nodes
        self.J = grid.num_cells
        self.m0 = grid.delay_offset
        n_hist = min(self.m0, self.J + 1)
        self.hist_s = (np.arange(n_hist) - self.m0) * grid.cell_width
        self._cache = {}

    def _field(self, key, expr, bindings, shape):
        if expr.depends_on("t"):
            return np.broadcast_to(eval_expr(expr, bindings), shape)
        if key not in self._cache:
            self._cache[key] = np.broadcast_to(eval_expr(expr, bindings), shape)
        return self._cache[key]

    def a(self, t):
        return self._field("a", self.problem.coeff_a, {"x": self.x, "t": t}, self.x.shape)

    def b(self, t):
        return self._field("b", self.problem.coeff_b, {"x": self.x, "t": t}, self.x.shape)

    def history(self, t):
        return self._field("phi", self.problem.history, {"s": self.hist_s, "t": t},
                           self.hist_s.shape)

    def delayed(self, u, t):
        out = np.empty_like(u)
        n_hist = self.hist_s.size
        out[:n_hist] = self.history(t)
        out[n_hist:] = u[:u.size - n_hist]
        return out

    def inflow(self, t):
        return eval_expr(self.problem.history, {"s": 0.0, "t": t})

    def apply_boundaries(self, new, t_next):
        outflow = self.problem.outflow
        if outflow.mode == "dirichlet":
            new[-1] = eval_expr(outflow.psi, {"t": t_next})
        else:
            new[-1] = new[-2]
        new[0] = self.inflow(t_next)
        return new

    def initial(self):
        return np.array(np.broadcast_to(eval_expr(self.problem.initial, {"x": self.x}),
                                        self.x.shape), dtype=np.float64)

    def lax_friedrichs(self, u, t, dt):
        dx = self.grid.cell_width
        a, b, d = self.a(t), self.b(t), self.delayed(u, t)
        up, um = u[2:], u[:-2]
        new = np.empty_like(u)
        with np.errstate(over="ignore", invalid="ignore"):
            new[1:-1] = (0.5 * (up + um) - (a[1:-1] * dt / (2 * dx)) * (up - um)
                         + dt * b[1:-1] * d[1:-1])
        return self.apply_boundaries(new, t + dt)

    def leap_frog(self, prev, u, t, dt):
        dx = self.grid.cell_width
        a, b, d = self.a(t), self.b(t), self.delayed(u, t)
        new = np.empty_like(u)
        with np.errstate(over="ignore", invalid="ignore"):
            new[1:-1] = (prev[1:-1] - (a[1:-1] * dt / dx) * (u[2:] - u[:-2])
                         + 2 * dt * b[1:-1] * d[1:-1])
        return self.apply_boundaries(new, t + dt)


# --- public single-step operations ----------------------------------------

def delayed_value_1d(level: Field1D, j: int, grid: Grid1D, history) -> float:
    """``u(x_j - alpha, t)``: a node of ``level`` or the history function."""
    if not 0 <= j <= grid.num_cells:
        raise InvalidArgument(f"node index {j} outside [0, {grid.num_cells}]")
    k = j - grid.delay_offset
    if k >= 0:
        return float(level.values[k])
    return eval_expr(history, {"s": k * grid.cell_width, "t": level.time})


def _checked(values, step):
    if not np.all(np.isfinite(values)):
        raise BlowUp(f"non-finite value produced at step {step}", step)
    return values


def lax_friedrichs_step_1d(level: Field1D, problem: DelayProblem1D, grid: Grid1D,
                           dt: float) -> Field1D:
    new = Stepper1D(problem, grid).lax_friedrichs(np.asarray(level.values), level.time, dt)
    return Field1D(_checked(new, level.step + 1), level.time + dt, level.step + 1)


def leap_frog_step_1d(level_prev: Field1D, level_curr: Field1D, problem: DelayProblem1D,
                      grid: Grid1D, dt: float) -> Field1D:
    if not math.isclose(level_curr.time - level_prev.time, dt, rel_tol=1e-9, abs_tol=1e-15):
        raise InvalidArgument("leap-frog levels must be exactly dt apart")
    new = Stepper1D(problem, grid).leap_frog(np.asarray(level_prev.values),
                                             np.asarray(level_curr.values), level_curr.time, dt)
    return Field1D(_checked(new, level_curr.step + 1), level_curr.time + dt, level_curr.step + 1)


def bootstrap_leap_frog(initial: Field1D, problem: DelayProblem1D, grid: Grid1D, dt: float):
    """First two Leap-Frog levels; the second comes from one Lax-Friedrichs step."""
    courant = cfl_report_1d(problem, grid, dt, LEAP_FROG)
    if not courant.admissible:
        raise StrictCflViolation(
            f"Leap-Frog needs Courant number < 1, got {courant.courant_number:.6g}")
    return initial, lax_friedrichs_step_1d(initial, problem, grid, dt)


# --- CFL ------------------------------------------------------------------

def cfl_report_1d(problem, grid, dt, scheme, samples=DEFAULT_SAMPLES) -> CflReport:
    A = problem.bound_a(samples)
    return CflReport(A * abs(dt) / grid.cell_width, 1.0, scheme_name(scheme) == LEAP_FROG)


def _check_safety(safety, scheme):
    if not 0 < safety <= 1:
        raise InvalidArgument(f"safety must lie in (0, 1], got {safety!r}")
    if scheme_name(scheme) == LEAP_FROG and safety >= 1:
        raise StrictCflViolation("Leap-Frog requires a Courant number strictly below 1")


def cfl_max_dt_1d(problem: DelayProblem1D, grid: Grid1D, safety: float = 0.9,
                  scheme: str = LAX_FRIEDRICHS, samples: int = DEFAULT_SAMPLES) -> float:
    """Largest stable step ``safety * dx / A`` with ``A`` the sampled bound of ``|a|``.

    With ``a`` identically zero there is no transport restriction and the
    final time is returned.
    """
    _check_safety(safety, scheme)
    A = problem.bound_a(samples)
    if A == 0:
        return problem.final_time
    return safety * grid.cell_width / A


# --- time loop ------------------------------------------------------------

def step_count(final_time: float, dt: float) -> tuple[int, float]:
    """Number of steps to ``final_time`` and the step actually used.

    ``dt`` is shrunk to ``final_time / ceil(final_time / dt)`` unless it
    already divides the final time to a relative ``1e-12``.
    """
    if not dt > 0:
        raise InvalidArgument(f"dt must be positive, got {dt!r}")
    if final_time == 0:
        return 0, dt
    ratio = final_time / dt
    n = round(ratio)
    if n >= 1 and abs(ratio - n) <= DIVISIBILITY_RTOL * ratio:
        return int(n), dt
    n = math.ceil(ratio)
    return n, final_time / n


def march(stepper, u0: np.ndarray, dt: float, n_steps: int, scheme: str) -> Iterator[np.ndarray]:
    """Yield levels ``U^0 .. U^n_steps`` (level ``n`` lives at time ``n * dt``).

    Yielded arrays are fresh per level; the generator keeps no reference to
    them beyond the two the scheme needs.  Raises BlowUp on non-finite values
    and Unstable when the norm-growth guard trips; both carry the step index.
    """
    scheme = scheme_name(scheme)
    threshold = GROWTH_LIMIT * (1.0 + float(np.max(np.abs(u0))))
    prev, curr = None, u0
    yield curr
    for n in range(n_steps):
        t = n * dt
        if scheme == LEAP_FROG and prev is not None:
            new = stepper.leap_frog(prev, curr, t, dt)
        else:
            new = stepper.lax_friedrichs(curr, t, dt)
        peak = float(np.max(np.abs(new)))
        if not math.isfinite(peak):
            raise BlowUp(f"non-finite value at step {n + 1} (t={(n + 1) * dt:.6g})", n + 1)
        if peak > threshold:
            raise Unstable(f"max|U| = {peak:.3g} exceeds growth guard {threshold:.3g} "
                           f"at step {n + 1} (t={(n + 1) * dt:.6g})", n + 1)
        prev, curr = curr, new
        yield curr


def snapshot_steps(times: Sequence[float] | None, final_time: float, dt: float,
                   n_steps: int) -> list[int]:
    if times is None:
        return [n_steps]
    steps = []
    for t in times:
        if t < -1e-12 or t > final_time * (1 + 1e-12) + 1e-15:
            raise InvalidArgument(f"snapshot time {t!r} outside [0, {final_time!r}]")
        steps.append(min(n_steps, max(0, int(round(t / dt))) if dt > 0 else 0))
    if any(b <= a for a, b in zip(steps, steps[1:])):
        raise InvalidArgument("snapshot times must map to strictly increasing steps")
    return steps


def check_cfl(report: CflReport, scheme: str):
    """Leap-Frog refuses to start outside the strict CFL bound; Lax-Friedrichs
    only warns and relies on the growth guard."""
    if report.admissible:
        return
    if report.strict_required:
        raise StrictCflViolation(
            f"Leap-Frog needs Courant number < 1, got {report.courant_number:.6g}")
    logger.warning("Courant number %.6g exceeds 1; the run is likely unstable",
                   report.courant_number)


def run(stepper, field_cls, dt, n_steps, scheme, steps, cfl, grid, record_every_step=False):
    """Drive ``march`` and collect snapshots, attaching them to any abort."""
    wanted = set(steps)
    wanted.add(0)
    snaps = []
    u0 = stepper.initial()
    history = SolutionHistory(snaps, 0, dt, grid, scheme, cfl, [])
    try:
        for n, u in enumerate(march(stepper, u0, dt, n_steps, scheme)):
            if record_every_step or n in wanted:
                snaps.append(field_cls(u, n * dt, n))
                history.snapshot_steps.append(n)
            history.steps_taken = n
    except (BlowUp, Unstable) as exc:
        exc.history = history
        raise
    return history


def solve_1d(problem: DelayProblem1D, grid: Grid1D, dt: float, scheme: str = LAX_FRIEDRICHS,
             snapshot_times: Sequence[float] | None = None, *,
             samples: int = DEFAULT_SAMPLES, record_every_step: bool = False) -> SolutionHistory:
    """Integrate from ``t = 0`` to ``problem.final_time``.

    The returned history holds the initial level followed by the level
    nearest each requested snapshot time (default: the final time only).

    Raises:
        IllPosedProblem: the transport speed changes sign.
        StrictCflViolation: Leap-Frog with Courant number >= 1.
        BlowUp, Unstable: the run diverged; ``exc.history`` has what was kept.
    """
    scheme = scheme_name(scheme)
    validate(problem, grid, samples=samples).raise_if_fatal()
    n_steps, dt = step_count(problem.final_time, dt)
    cfl = cfl_report_1d(problem, grid, dt, scheme, samples)
    check_cfl(cfl, scheme)
    steps = snapshot_steps(snapshot_times, problem.final_time, dt, n_steps)
    return run(Stepper1D(problem, grid), Field1D, dt, n_steps, scheme, steps, cfl, grid,
               record_every_step)
