"""Robot motion bookkeeping and the two non-adaptive trajectories."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .grid import GridSpec

# up, down, left, right as (dx, dy) in cells
DIRECTIONS = ((0, 1), (0, -1), (-1, 0), (1, 0))


@dataclass(frozen=True)
class RobotState:
    """One robot's position and resource usage.

    Motion is a straight line at ``speed`` followed by one measurement taking
    ``sample_time``; both count against the ``budget`` in simulated seconds.
    """

    id: int
    position: tuple[float, float]
    cumulative_distance: float = 0.0
    samples_taken: int = 0
    time_used: float = 0.0
    speed: float = 1.0
    sample_time: float = 1.0
    budget: float = 500.0
    exhausted: bool = False

    def __post_init__(self):
        object.__setattr__(self, "position", (float(self.position[0]), float(self.position[1])))
        if self.speed <= 0:
            raise ValueError("speed must be > 0")

    def cost_to(self, target) -> tuple[float, float]:
        """(distance, seconds) to move to ``target`` and sample there."""
        d = math.hypot(float(target[0]) - self.position[0], float(target[1]) - self.position[1])
        return d, d / self.speed + self.sample_time


def advance(state: RobotState, target) -> RobotState:
    """Move to ``target`` and take one sample, or mark the robot exhausted.

    A move whose time cost would overrun the budget is not made at all.
    """
    d, dt = state.cost_to(target)
    if state.exhausted or state.time_used + dt > state.budget + 1e-9:
        return replace(state, exhausted=True)
    return replace(
        state,
        position=(float(target[0]), float(target[1])),
        cumulative_distance=state.cumulative_distance + d,
        samples_taken=state.samples_taken + 1,
        time_used=state.time_used + dt,
    )


def sweep_waypoints(grid: GridSpec, start, row_spacing: float) -> list[np.ndarray]:
    """Serpentine (boustrophedon) sweep of horizontal strips.

    Starts on the row containing ``start`` at the row end nearest to it,
    covers every cell center of the row, moves ``row_spacing`` up, runs the
    next row in the opposite direction, and so on while rows remain on the
    grid. With ``row_spacing`` equal to the pitch every cell is visited once.
    """
    if row_spacing <= 0:
        raise ValueError("row_spacing must be > 0")
    step = row_spacing / grid.cell_pitch
    if abs(step - round(step)) > 1e-9:
        raise ValueError(f"row_spacing {row_spacing} is not a multiple of the cell pitch")
    step = int(round(step))
    ix0, iy0 = grid.cell_of(start)
    left_first = float(start[0]) <= 0.5 * (grid.nx - 1) * grid.cell_pitch
    cols = list(range(grid.nx)) if left_first else list(range(grid.nx - 1, -1, -1))
    out = []
    for iy in range(iy0, grid.ny, step):
        out.extend(np.array([ix * grid.cell_pitch, iy * grid.cell_pitch]) for ix in cols)
        cols.reverse()
    return out


def random_walk_step(pos, grid: GridSpec, step_cells: int = 3, rng=None, allowed=None) -> np.ndarray:
    """One random-walk move of ``step_cells`` pitches up, down, left or right.

    The first direction is drawn uniformly; infeasible directions are
    redrawn without replacement, so at most four draws are made. ``allowed``
    optionally restricts landing cells (boolean mask in grid index order);
    if no direction lands in it, any in-grid direction is accepted. If no
    direction fits on the grid at all the robot stays put.
    """
    if step_cells < 1:
        raise ValueError("step_cells must be >= 1")
    rng = np.random.default_rng() if rng is None else rng
    ix, iy = grid.cell_of(pos)
    order = rng.permutation(4)
    in_grid = []
    for k in order:
        dx, dy = DIRECTIONS[k]
        jx, jy = ix + dx * step_cells, iy + dy * step_cells
        if 0 <= jx < grid.nx and 0 <= jy < grid.ny:
            in_grid.append((jx, jy))
            if allowed is None or allowed[jx * grid.ny + jy]:
                return np.array([jx, jy], float) * grid.cell_pitch
    if in_grid:
        return np.array(in_grid[0], float) * grid.cell_pitch
    return np.array([ix, iy], float) * grid.cell_pitch
