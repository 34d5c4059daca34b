import math

import numpy as np
import pytest

from delaypde import (DelayProblem1D, ErrorTable, Field1D, MeshMismatch, SolutionHistory,
                      build_grid_1d, convergence_table, double_mesh_l2_error,
                      double_mesh_max_error, observed_order, solve_1d)
from delaypde.analysis import dx_label, grid_for_dx
from delaypde.errors import IncommensurateDelay, InvalidArgument


def _history(levels, dt, grid):
    snaps = [Field1D(v, n * dt, n) for n, v in enumerate(levels)]
    return SolutionHistory(snaps, len(levels) - 1, dt, grid)


def test_exact_transport_has_zero_double_mesh_error():
    p = DelayProblem1D.from_strings("1", "0", 0.1, "exp(-100*(x-0.3)^2)", "0",
                                    psi="exp(-100*(0.7-t)^2)", final_time=0.2)
    grid = build_grid_1d(1.0, 0.1, 50)
    coarse = solve_1d(p, grid, grid.cell_width, record_every_step=True)
    fine = solve_1d(p, grid.refined(), grid.cell_width / 2, record_every_step=True)
    assert double_mesh_max_error(coarse, fine) <= 1e-14
    assert double_mesh_l2_error(coarse, fine) <= 1e-14


def test_single_point_l2():
    grid = build_grid_1d(1.0, 0.5, 2)
    coarse = _history([np.zeros(3), np.array([0.0, 0.3, 0.0])], 0.1, grid)
    fine = _history([np.zeros(5)] * 3, 0.05, grid.refined())
    assert double_mesh_l2_error(coarse, fine) == math.sqrt(0.5 * 0.3 ** 2)
    assert double_mesh_max_error(coarse, fine) == 0.3


def test_mesh_mismatch():
    grid = build_grid_1d(1.0, 0.5, 2)
    coarse = _history([np.zeros(3), np.zeros(3)], 0.1, grid)
    with pytest.raises(MeshMismatch):
        double_mesh_max_error(coarse, _history([np.zeros(5)] * 2, 0.05, grid.refined()))
    with pytest.raises(MeshMismatch):
        double_mesh_l2_error(coarse, _history([np.zeros(3)] * 3, 0.05, grid))
    with pytest.raises(MeshMismatch):
        double_mesh_l2_error(coarse, _history([np.zeros(5)] * 3, 0.04, grid.refined()))


def test_observed_order():
    assert observed_order(4.0, 1.0) == 2.0
    assert observed_order(2.2, 1.0) == pytest.approx(1.1375035237499351, abs=1e-15)
    assert observed_order(1.0, 1.0) == 0.0
    with pytest.raises(InvalidArgument):
        observed_order(0.0, 1.0)


def test_dx_label():
    assert dx_label(0.01) == "1/100"
    assert dx_label(1 / 800) == "1/800"
    assert dx_label(0.3) == "0.3"


def test_grid_for_dx_rejects_misaligned(example1):
    assert grid_for_dx(example1(alpha=0.05), 0.01).delay_offset == 5
    with pytest.raises(IncommensurateDelay):
        grid_for_dx(example1(alpha=0.05), 0.03)


def test_table_shape_and_csv():
    t = ErrorTable([0.01, 0.005], [2, 4], [[0.4, 0.1], [0.2, 0.1]], "max", "lax_friedrichs",
                   "demo", 0.05)
    assert t.row_labels == ["dx/2", "dx/4"]
    np.testing.assert_array_equal(t.orders(), [[2.0], [1.0]])
    assert t.to_csv() == "dt_rule,1/100,1/200\ndx/2,0.4,0.1\ndx/4,0.2,0.1\n"
    assert t.orders_to_csv() == "dt_rule,1/100->1/200\ndx/2,2\ndx/4,1\n"
    assert "1/200" in t.format()
    with pytest.raises(InvalidArgument):
        ErrorTable([0.01], [2, 4], [[0.1]], "max", "lf", "demo", 0.05)


def test_one_by_one_table(example2):
    t = convergence_table(example2(), "lax_friedrichs", [0.01], [2], "l2")
    assert t.entries.shape == (1, 1) and t.entries[0, 0] > 0
    assert t.orders().shape == (1, 0)


def test_worker_count_does_not_change_table(example2):
    args = (example2(), "leap_frog", [1 / 40, 1 / 80], [2, 4], "max")
    serial = convergence_table(*args)
    parallel = convergence_table(*args, workers=2)
    assert np.array_equal(serial.entries, parallel.entries)


def test_streamed_cell_matches_recorded_runs(example1):
    p, grid = example1(alpha=0.05, final_time=0.1), build_grid_1d(1.0, 0.05, 40)
    t = convergence_table(p, "lax_friedrichs", [1 / 40], [2], "max")
    coarse = solve_1d(p, grid, grid.cell_width / 2, record_every_step=True)
    fine = solve_1d(p, grid.refined(), grid.cell_width / 4, record_every_step=True)
    assert t.entries[0, 0] == double_mesh_max_error(coarse, fine)
    t2 = convergence_table(p, "lax_friedrichs", [1 / 40], [2], "l2")
    assert t2.entries[0, 0] == double_mesh_l2_error(coarse, fine)


def test_leap_frog_l2_errors_decrease(example2):
    t = convergence_table(example2(alpha=0.1), "leap_frog", [1 / 50, 1 / 100, 1 / 200], [2],
                          "l2")
    assert np.all(np.diff(t.entries, axis=1) < 0)
