import pytest

from delaypde import (DelayProblem1D, DelayProblem2D, EvalDomainError, IllPosedProblem,
                      OutflowPolicy, boundary_inflow_value, build_grid_1d, validate)
from delaypde.errors import InvalidArgument


def test_validate_example(example1):
    report = validate(example1(), build_grid_1d(1.0, 0.02, 100), 0.5)
    assert report.verdict == "ok"
    assert report.bound_a == 1.0
    assert report.bound_b == 0.5
    assert report.sign_a == 1
    assert report.corner_residual < 1e-3


def test_validate_constant_transport():
    p = DelayProblem1D.from_strings("1", "0", 0.1, "sin(x)")
    report = validate(p)
    assert (report.bound_a, report.bound_b, report.verdict) == (1.0, 0.0, "ok")


def test_validate_negative_speed_is_consistent():
    p = DelayProblem1D.from_strings("-1-x", "0", 0.1, "0")
    assert validate(p).sign_a == -1


def test_sign_change_is_fatal():
    p = DelayProblem1D.from_strings("x-0.5", "1", 0.1, "0")
    report = validate(p)
    assert report.verdict == "fatal"
    assert "changes sign" in report.messages[0]
    with pytest.raises(IllPosedProblem):
        report.raise_if_fatal()


def test_corner_mismatch_is_warning():
    p = DelayProblem1D.from_strings("1", "0", 0.1, "1", "0")
    report = validate(p)
    assert report.verdict == "warnings"
    assert report.corner_residual == 1.0


def test_validate_rejects_foreign_grid(example1):
    with pytest.raises(InvalidArgument):
        validate(example1(), build_grid_1d(1.0, 0.05, 100))


def test_validate_2d_sign_of_b():
    p = DelayProblem2D.from_strings("1", "y-0.5", "0", 0.1, 0.1, "0")
    assert validate(p).verdict == "fatal"


def test_boundary_inflow_value(example1):
    assert boundary_inflow_value(example1(), 0.3) == 0.0
    p = DelayProblem1D.from_strings("1", "0", 0.1, "0", "s+t")
    assert boundary_inflow_value(p, 1.0) == 1.0
    with pytest.raises(EvalDomainError):
        boundary_inflow_value(DelayProblem1D.from_strings("1", "0", 0.1, "0", "1/s"), 0.0)
    with pytest.raises(InvalidArgument):
        boundary_inflow_value(p, -1.0)


@pytest.mark.parametrize("kwargs", [
    {"delay": 0.0}, {"delay": -0.1}, {"delay": 0.1, "final_time": -1.0},
    {"delay": 0.1, "domain_length": 0.0},
])
def test_problem_rejects_bad_parameters(kwargs):
    delay = kwargs.pop("delay")
    with pytest.raises(InvalidArgument):
        DelayProblem1D.from_strings("1", "0", delay, "0", **kwargs)


def test_outflow_policy():
    p = DelayProblem1D.from_strings("1", "0", 0.1, "0", psi="0")
    assert p.outflow.mode == "dirichlet"
    assert DelayProblem1D.from_strings("1", "0", 0.1, "0").outflow.mode == "extrapolate"
    with pytest.raises(InvalidArgument):
        OutflowPolicy("dirichlet", None)
    with pytest.raises(InvalidArgument):
        OutflowPolicy("periodic")
