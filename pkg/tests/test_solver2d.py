import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from delaypde import (DelayProblem2D, Field2D, StrictCflViolation, bootstrap_leap_frog_2d,
                      build_grid_2d, cfl_max_dt_2d, lax_friedrichs_step_2d, leap_frog_step_2d,
                      solve_2d)
from delaypde.errors import InvalidArgument

from oracles import lax_friedrichs_2d_by_hand, leap_frog_2d_by_hand

SYM_A = "(1+x^2+y^2)/(1+2*(x+y)*t+2*(x^2+y^2)+x^4+y^4)"


def _const(a, b, c, dx=0.25, dy=0.25, psi=None):
    return DelayProblem2D.from_strings(repr(a), repr(b), repr(c), dx, dy, "0", "0", psi)


def _spike(n=5):
    u = np.zeros((n, n))
    u[n // 2, n // 2] = 1.0
    return u


def test_lax_friedrichs_hand_case():
    grid = build_grid_2d(1.0, 1.0, 0.25, 0.25, 4, 4)
    new = lax_friedrichs_step_2d(Field2D(_spike(), 0.0), _const(1.0, 1.0, 1.0), grid, 0.0625)
    v = new.values
    assert v[2, 2] == 0.0
    assert v[3, 3] == 0.0625
    assert v[3, 2] == v[2, 3] == 0.375
    assert v[1, 2] == v[2, 1] == 0.125
    assert v[1, 1] == 0.0


def test_averaging_spreads_spike_in_quarters():
    grid = build_grid_2d(1.0, 1.0, 0.25, 0.25, 4, 4)
    v = lax_friedrichs_step_2d(Field2D(_spike(), 0.0), _const(0.0, 0.0, 0.0), grid, 0.01).values
    for i, j in [(1, 2), (3, 2), (2, 1), (2, 3)]:
        assert v[i, j] == 0.25
    assert v[1:-1, 1:-1].sum() == 1.0


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31), m=st.integers(1, 3), q=st.integers(1, 3),
       coeffs=st.tuples(st.floats(-1, 1), st.floats(-1, 1), st.floats(-2, 2)))
def test_stencils_match_loop_oracle(seed, m, q, coeffs):
    a, b, c = coeffs
    grid = build_grid_2d(1.0, 1.0, m / 8, q / 8, 8, 8)
    rng = np.random.default_rng(seed)
    prev, u = rng.standard_normal((9, 9)), rng.standard_normal((9, 9))
    dt = 0.02
    p = _const(a, b, c, m / 8, q / 8)
    lf = lax_friedrichs_step_2d(Field2D(u, 0.0), p, grid, dt).values
    ref = np.array([[v if v is not None else 0.0 for v in row]
                    for row in lax_friedrichs_2d_by_hand(u.tolist(), a, b, c, dt, 1 / 8, 1 / 8, m, q)])
    np.testing.assert_allclose(lf[1:-1, 1:-1], ref[1:-1, 1:-1], rtol=0, atol=1e-14)
    lf2 = leap_frog_step_2d(Field2D(prev, 0.0), Field2D(u, dt, 1), p, grid, dt).values
    ref2 = np.array([[v if v is not None else 0.0 for v in row]
                     for row in leap_frog_2d_by_hand(prev.tolist(), u.tolist(), a, b, c, dt,
                                                     1 / 8, 1 / 8, m, q)])
    np.testing.assert_allclose(lf2[1:-1, 1:-1], ref2[1:-1, 1:-1], rtol=0, atol=1e-14)


def test_constants_preserved_without_source():
    grid = build_grid_2d(1.0, 1.0, 0.1, 0.1, 20, 20)
    p = DelayProblem2D.from_strings("1+x", "1+y", "0", 0.1, 0.1, "2", "2", "2")
    v = lax_friedrichs_step_2d(Field2D(np.full((21, 21), 2.0), 0.0), p, grid, 0.01).values
    assert np.all(v == 2.0)


def test_leap_frog_without_transport_returns_previous_level():
    grid = build_grid_2d(1.0, 1.0, 0.25, 0.25, 4, 4)
    prev = np.zeros((5, 5))
    prev[1:4, 1:4] = np.arange(9.0).reshape(3, 3)
    new = leap_frog_step_2d(Field2D(prev, 0.0), Field2D(np.ones((5, 5)), 0.1, 1),
                            _const(0.0, 0.0, 0.0, psi="0"), grid, 0.1)
    assert np.array_equal(new.values, prev)
    with pytest.raises(InvalidArgument):
        leap_frog_step_2d(Field2D(prev, 0.0), Field2D(prev, 0.3), _const(0.0, 0.0, 0.0),
                          grid, 0.1)


def test_bootstrap_2d():
    grid = build_grid_2d(1.0, 1.0, 0.25, 0.25, 4, 4)
    p = _const(1.0, 1.0, 1.0)
    u0 = Field2D(_spike(), 0.0)
    first, second = bootstrap_leap_frog_2d(u0, p, grid, 0.0625)
    assert first is u0
    assert np.array_equal(second.values, lax_friedrichs_step_2d(u0, p, grid, 0.0625).values)
    with pytest.raises(StrictCflViolation):
        bootstrap_leap_frog_2d(u0, p, grid, 0.125)


def test_cfl_max_dt_2d():
    grid = build_grid_2d(1.0, 1.0, 0.5, 0.5, 100, 100)
    assert cfl_max_dt_2d(_const(1.0, 1.0, 0.1), grid, 1.0) == pytest.approx(0.005)
    with pytest.raises(StrictCflViolation):
        cfl_max_dt_2d(_const(1.0, 1.0, 0.1), grid, 1.0, "leap_frog")
    assert cfl_max_dt_2d(_const(0.0, 0.0, 1.0), grid) == 0.5


def test_cfl_uses_each_axis_width():
    grid = build_grid_2d(1.0, 1.0, 0.5, 0.5, 100, 50)
    # A/dx + B/dy = 100 + 50
    assert cfl_max_dt_2d(_const(1.0, 1.0, 0.1), grid, 1.0) == pytest.approx(1 / 150)


def test_example3_solves_and_stays_bounded():
    p = DelayProblem2D.from_strings(
        "(1+x^2+y^2)/(1+2*(x+y)*t+2*(x^2+y^2)+x^4)", "1/(1+(x^2+y^2)*t^2)", "0.1", 0.5, 0.5,
        "exp(-10*(4*x+4*y-1)^2)", final_time=0.1)
    grid = build_grid_2d(1.0, 1.0, 0.5, 0.5, 100, 100)
    hist = solve_2d(p, grid, 0.001, "lax_friedrichs", [0.05, 0.1])
    assert hist.cfl.admissible
    assert [s.step for s in hist.snapshots] == [0, 50, 100]
    assert np.max(np.abs(hist.final.values)) <= 1.0 + 1e-12


@pytest.mark.parametrize("scheme", ["lax_friedrichs", "leap_frog"])
def test_symmetry_under_axis_swap(scheme):
    p = DelayProblem2D.from_strings(SYM_A, SYM_A, "0.1", 0.25, 0.25,
                                    "exp(-10*(4*x+4*y-1)^2)", final_time=0.05)
    grid = build_grid_2d(1.0, 1.0, 0.25, 0.25, 40, 40)
    u = solve_2d(p, grid, 0.005, scheme).final.values
    assert np.max(np.abs(u - u.T)) <= 1e-12
