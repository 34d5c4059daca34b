"""Delay-PDE problem instances and their well-posedness checks.

A 1D problem is ``u_t + a u_x = b u(x - alpha, t)`` on ``(0, X)`` with initial
data ``u0(x)``, history ``phi(s, t)`` on ``s in [-alpha, 0]`` and an outflow
policy at ``x = X``.  The 2D problem adds ``+ b u_y`` on the left and uses
``c u(x - alpha, y - beta, t)`` as the delayed source.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .expr import CoefficientExpr, eval_expr, parse_expr, sampled_signs, sup_abs_sampled
from .errors import IllPosedProblem, InvalidArgument

logger = logging.getLogger(__name__)

DEFAULT_SAMPLES = 64
COMPAT_TOLERANCE = 1e-3

VARS_1D = frozenset({"x", "t"})
VARS_2D = frozenset({"x", "y", "t"})


@dataclass(frozen=True)
class OutflowPolicy:
    """Value at an outflow edge: ``dirichlet`` uses ``psi``, ``extrapolate`` copies
    the nearest interior node of the new level."""

    mode: str = "extrapolate"
    psi: CoefficientExpr | None = None

    def __post_init__(self):
        if self.mode not in ("dirichlet", "extrapolate"):
            raise InvalidArgument(f"unknown outflow mode {self.mode!r}")
        if (self.mode == "dirichlet") != (self.psi is not None):
            raise InvalidArgument("dirichlet outflow needs psi; extrapolate takes none")

    @classmethod
    def dirichlet(cls, psi: CoefficientExpr) -> "OutflowPolicy":
        return cls("dirichlet", psi)

    @classmethod
    def extrapolate(cls) -> "OutflowPolicy":
        return cls("extrapolate", None)

    @classmethod
    def default(cls, psi: CoefficientExpr | None) -> "OutflowPolicy":
        return cls.extrapolate() if psi is None else cls.dirichlet(psi)


@dataclass(frozen=True)
class DelayProblem1D:
    coeff_a: CoefficientExpr
    coeff_b: CoefficientExpr
    delay: float
    initial: CoefficientExpr
    history: CoefficientExpr
    outflow: OutflowPolicy = field(default_factory=OutflowPolicy.extrapolate)
    final_time: float = 0.5
    domain_length: float = 1.0
    name: str = ""

    def __post_init__(self):
        if not self.delay > 0:
            raise InvalidArgument(f"delay must be positive, got {self.delay!r}")
        if not self.final_time >= 0:
            raise InvalidArgument(f"final_time must be non-negative, got {self.final_time!r}")
        if not self.domain_length > 0:
            raise InvalidArgument("domain_length must be positive")

    @classmethod
    def from_strings(cls, a: str, b: str, delay: float, u0: str, phi: str = "0",
                     psi: str | None = None, *, final_time: float = 0.5,
                     domain_length: float = 1.0, outflow: str | None = None,
                     name: str = "") -> "DelayProblem1D":
        psi_e = parse_expr(psi, {"t"}) if psi is not None else None
        if outflow is None:
            policy = OutflowPolicy.default(psi_e)
        else:
            policy = OutflowPolicy(outflow, psi_e if outflow == "dirichlet" else None)
        return cls(parse_expr(a, VARS_1D), parse_expr(b, VARS_1D), float(delay),
                   parse_expr(u0, {"x"}), parse_expr(phi, {"s", "t"}), policy,
                   float(final_time), float(domain_length), name)

    def sample_box(self):
        return {"x": (0.0, self.domain_length), "t": (0.0, self.final_time)}

    def bound_a(self, samples: int = DEFAULT_SAMPLES) -> float:
        return sup_abs_sampled(self.coeff_a, self.sample_box(), samples)

    def bound_b(self, samples: int = DEFAULT_SAMPLES) -> float:
        return sup_abs_sampled(self.coeff_b, self.sample_box(), samples)


@dataclass(frozen=True)
class DelayProblem2D:
    coeff_a: CoefficientExpr
    coeff_b: CoefficientExpr
    coeff_c: CoefficientExpr
    delay_x: float
    delay_y: float
    initial: CoefficientExpr
    history: CoefficientExpr
    outflow_x: OutflowPolicy = field(default_factory=OutflowPolicy.extrapolate)
    outflow_y: OutflowPolicy = field(default_factory=OutflowPolicy.extrapolate)
    final_time: float = 0.5
    domain_length_x: float = 1.0
    domain_length_y: float = 1.0
    name: str = ""

    def __post_init__(self):
        if not (self.delay_x > 0 and self.delay_y > 0):
            raise InvalidArgument("delays must be positive")
        if not self.final_time >= 0:
            raise InvalidArgument("final_time must be non-negative")

    @classmethod
    def from_strings(cls, a: str, b: str, c: str, delay_x: float, delay_y: float, u0: str,
                     phi: str = "0", psi: str | None = None, *, final_time: float = 0.5,
                     domain_length_x: float = 1.0, domain_length_y: float = 1.0,
                     outflow: str | None = None, name: str = "") -> "DelayProblem2D":
        psi_e = parse_expr(psi, VARS_2D) if psi is not None else None
        if outflow is None:
            policy = OutflowPolicy.default(psi_e)
        else:
            policy = OutflowPolicy(outflow, psi_e if outflow == "dirichlet" else None)
        return cls(parse_expr(a, VARS_2D), parse_expr(b, VARS_2D), parse_expr(c, VARS_2D),
                   float(delay_x), float(delay_y), parse_expr(u0, {"x", "y"}),
                   parse_expr(phi, {"s1", "s2", "t"}), policy, policy, float(final_time),
                   float(domain_length_x), float(domain_length_y), name)

    def sample_box(self):
        return {"x": (0.0, self.domain_length_x), "y": (0.0, self.domain_length_y),
                "t": (0.0, self.final_time)}

    def bound_a(self, samples: int = DEFAULT_SAMPLES) -> float:
        return sup_abs_sampled(self.coeff_a, self.sample_box(), samples)

    def bound_b(self, samples: int = DEFAULT_SAMPLES) -> float:
        return sup_abs_sampled(self.coeff_b, self.sample_box(), samples)

    def bound_c(self, samples: int = DEFAULT_SAMPLES) -> float:
        return sup_abs_sampled(self.coeff_c, self.sample_box(), samples)


@dataclass
class ValidationReport:
    bound_a: float
    bound_b: float
    sign_a: int
    corner_residual: float
    verdict: str  # "ok" | "warnings" | "fatal"
    messages: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.verdict != "fatal"

    def raise_if_fatal(self):
        if self.verdict == "fatal":
            raise IllPosedProblem("; ".join(self.messages))


def _sign_of(expr, box, samples, label):
    pos, neg, where = sampled_signs(expr, box, samples)
    if pos and neg:
        near = ", ".join(f"{k}={v:.3g}" for k, v in sorted(where.items()))
        return 0, f"{label} changes sign on the sample lattice (near {near})"
    return (1 if pos else -1 if neg else 0), None


def validate(problem, grid=None, t_final: float | None = None,
             samples: int = DEFAULT_SAMPLES,
             compat_tolerance: float = COMPAT_TOLERANCE) -> ValidationReport:
    """Sample the coefficients and report bounds, sign and corner compatibility.

    The verdict is ``fatal`` only when the transport speed changes sign; a
    mismatch between history and initial data at the inflow corner is a
    warning.  Sampling can prove a sign change but never its absence.
    """
    if t_final is None:
        t_final = problem.final_time
    if isinstance(problem, DelayProblem2D):
        return _validate_2d(problem, grid, t_final, samples, compat_tolerance)
    if grid is not None and abs(grid.delay - problem.delay) > 1e-12 * problem.delay:
        raise InvalidArgument(f"grid built for delay {grid.delay}, problem has {problem.delay}")
    length = grid.domain_length if grid is not None else problem.domain_length
    box = {"x": (0.0, length), "t": (0.0, t_final)}
    A = sup_abs_sampled(problem.coeff_a, box, samples)
    B = sup_abs_sampled(problem.coeff_b, box, samples)
    messages = []
    sign, msg = _sign_of(problem.coeff_a, box, samples, "a")
    verdict = "ok"
    if msg:
        messages.append(msg)
        verdict = "fatal"
    residual = abs(eval_expr(problem.history, {"s": 0.0, "t": 0.0})
                   - eval_expr(problem.initial, {"x": 0.0}))
    if residual > compat_tolerance:
        messages.append(f"history and initial data differ by {residual:.3g} at the inflow corner")
        if verdict == "ok":
            verdict = "warnings"
    for m in messages:
        logger.warning(m)
    return ValidationReport(A, B, sign, residual, verdict, messages)


def _validate_2d(problem, grid, t_final, samples, compat_tolerance):
    box = {"x": (0.0, problem.domain_length_x), "y": (0.0, problem.domain_length_y),
           "t": (0.0, t_final)}
    A = sup_abs_sampled(problem.coeff_a, box, samples)
    B = sup_abs_sampled(problem.coeff_b, box, samples)
    messages = []
    verdict = "ok"
    sign, msg = _sign_of(problem.coeff_a, box, samples, "a")
    sign_b, msg_b = _sign_of(problem.coeff_b, box, samples, "b")
    for m in (msg, msg_b):
        if m:
            messages.append(m)
            verdict = "fatal"
    residual = abs(eval_expr(problem.history, {"s1": 0.0, "s2": 0.0, "t": 0.0})
                   - eval_expr(problem.initial, {"x": 0.0, "y": 0.0}))
    if residual > compat_tolerance:
        messages.append(f"history and initial data differ by {residual:.3g} at the inflow corner")
        if verdict == "ok":
            verdict = "warnings"
    for m in messages:
        logger.warning(m)
    return ValidationReport(A, B, sign, residual, verdict, messages)


def boundary_inflow_value(problem: DelayProblem1D, t: float) -> float:
    """Value imposed at ``x = 0``: the history function at ``s = 0``."""
    if t < 0:
        raise InvalidArgument(f"t must be non-negative, got {t!r}")
    return eval_expr(problem.history, {"s": 0.0, "t": t})
