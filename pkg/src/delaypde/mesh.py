"""Uniform grids on which the spatial delay lands exactly on a node.

The delay term ``u(x - alpha, t)`` becomes the index shift ``U[j - m0]`` only
when ``alpha = m0 * dx`` for an integer ``m0``.  The builders here pick ``m0``
from the requested resolution, derive ``dx = alpha / m0`` and then check that
the domain length is (to a snap tolerance) an integer multiple of ``dx``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IncommensurateDelay, IndexOutOfRange, InvalidArgument

DEFAULT_SNAP_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Grid1D:
    """Delay-aligned uniform grid ``x_j = j * dx`` for ``j = 0..J``."""

    domain_length: float
    cell_width: float
    num_cells: int
    delay: float
    delay_offset: int
    snap_tolerance: float = DEFAULT_SNAP_TOLERANCE

    @property
    def num_nodes(self) -> int:
        return self.num_cells + 1

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.num_nodes) * self.cell_width

    def node_position(self, index: int) -> float:
        return node_position(self, index)

    def refined(self) -> "Grid1D":
        """Same domain and delay with the cell width halved."""
        return build_grid_1d(self.domain_length, self.delay, 2 * self.num_cells,
                             self.snap_tolerance)


@dataclass(frozen=True)
class Grid2D:
    """Tensor product of two independent delay-aligned axes.

    Field arrays on this grid have shape ``(Jx + 1, Jy + 1)`` with the first
    index running along x.
    """

    x: Grid1D
    y: Grid1D

    domain_length_x = property(lambda self: self.x.domain_length)
    domain_length_y = property(lambda self: self.y.domain_length)
    cell_width_x = property(lambda self: self.x.cell_width)
    cell_width_y = property(lambda self: self.y.cell_width)
    num_cells_x = property(lambda self: self.x.num_cells)
    num_cells_y = property(lambda self: self.y.num_cells)
    delay_x = property(lambda self: self.x.delay)
    delay_y = property(lambda self: self.y.delay)
    delay_offset_x = property(lambda self: self.x.delay_offset)
    delay_offset_y = property(lambda self: self.y.delay_offset)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.x.num_nodes, self.y.num_nodes)

    def refined(self) -> "Grid2D":
        return Grid2D(self.x.refined(), self.y.refined())


def _snap_residual(domain_length: float, delay: float, m0: int) -> tuple[float, int, float]:
    dx = delay / m0
    J = int(round(domain_length / dx))
    return dx, J, abs(J * dx - domain_length) / dx


def _nearest_candidates(domain_length, delay, m0, requested_cells, tol):
    """Closest delay offsets below and above ``m0`` that do meet the tolerance."""
    m = np.arange(1, 10 * requested_cells + 1, dtype=np.int64)
    dx = delay / m
    J = np.rint(domain_length / dx)
    ok = (np.abs(J * dx - domain_length) <= tol * dx) & (J >= 2)
    found = []
    below = m[ok & (m < m0)]
    above = m[ok & (m > m0)]
    if below.size:
        k = int(below[-1])
        found.append((delay / k, int(round(domain_length * k / delay))))
    if above.size:
        k = int(above[0])
        found.append((delay / k, int(round(domain_length * k / delay))))
    return found


def build_grid_1d(domain_length: float, delay: float, requested_cells: int,
                  snap_tolerance: float = DEFAULT_SNAP_TOLERANCE, *, axis: str = "x") -> Grid1D:
    """Build a grid on ``[0, domain_length]`` with ``delay`` an exact node multiple.

    The delay offset is ``m0 = round(delay * requested_cells / domain_length)``
    (at least 1), so the result has roughly ``requested_cells`` cells.  The
    delay may exceed the domain; every delayed lookup then falls into the
    history region.

    Raises:
        InvalidArgument: non-positive lengths, fewer than two cells, or a snap
            tolerance outside ``(0, 0.5)``.
        IncommensurateDelay: ``domain_length`` is not within
            ``snap_tolerance * dx`` of an integer number of cells.
    """
    if not (domain_length > 0 and np.isfinite(domain_length)):
        raise InvalidArgument(f"domain length must be positive, got {domain_length!r}")
    if not (delay > 0 and np.isfinite(delay)):
        raise InvalidArgument(f"delay must be positive, got {delay!r}")
    if int(requested_cells) != requested_cells or requested_cells < 2:
        raise InvalidArgument(f"requested_cells must be an integer >= 2, got {requested_cells!r}")
    if not 0 < snap_tolerance < 0.5:
        raise InvalidArgument(f"snap_tolerance must lie in (0, 0.5), got {snap_tolerance!r}")
    requested_cells = int(requested_cells)

    m0 = max(1, int(round(delay * requested_cells / domain_length)))
    dx, J, residual = _snap_residual(domain_length, delay, m0)
    if residual > snap_tolerance or J < 2:
        candidates = _nearest_candidates(domain_length, delay, m0, requested_cells, snap_tolerance)
        if candidates:
            hint = "; nearest commensurate choices: " + ", ".join(
                f"dx={c[0]!r} (J={c[1]})" for c in candidates)
        else:
            hint = f"; no commensurate choice with m0 <= {10 * requested_cells}"
        raise IncommensurateDelay(
            f"{axis}-axis: delay {delay!r} with m0={m0} gives dx={dx!r}, but "
            f"{domain_length!r}/dx is {residual:.3g} cells off an integer{hint}",
            axis=axis, candidates=candidates)
    return Grid1D(float(domain_length), dx, J, float(delay), m0, snap_tolerance)


def build_grid_2d(domain_length_x: float, domain_length_y: float, delay_x: float, delay_y: float,
                  requested_cells_x: int, requested_cells_y: int,
                  snap_tolerance: float = DEFAULT_SNAP_TOLERANCE) -> Grid2D:
    gx = build_grid_1d(domain_length_x, delay_x, requested_cells_x, snap_tolerance, axis="x")
    gy = build_grid_1d(domain_length_y, delay_y, requested_cells_y, snap_tolerance, axis="y")
    return Grid2D(gx, gy)


def node_position(grid: Grid1D, index: int) -> float:
    """Physical position of node ``index``; negative indices reach into ``[-delay, 0]``."""
    if not -grid.delay_offset <= index <= grid.num_cells:
        raise IndexOutOfRange(
            f"node index {index} outside [{-grid.delay_offset}, {grid.num_cells}]")
    return index * grid.cell_width
