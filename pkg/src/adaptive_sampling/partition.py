"""Voronoi division of the grid cells among robots."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .grid import GridSpec

FIXED = "FVP"
DYNAMIC = "DVP"


@dataclass(frozen=True, eq=False)
class Partition:
    assignment: np.ndarray  # robot id per cell, grid index order
    sites: np.ndarray  # (n_robots, 2)

    def __eq__(self, other):
        return (isinstance(other, Partition) and np.array_equal(self.assignment, other.assignment)
                and np.array_equal(self.sites, other.sites))


def voronoi_assign(grid: GridSpec, sites) -> Partition:
    """Assign every cell to its nearest site; equidistant cells go to the lowest id."""
    sites = np.asarray(sites, float).reshape(-1, 2)
    if len(sites) == 0:
        raise ValueError("at least one site is required")
    for s in sites:
        if not grid.contains(s):
            raise ValueError(f"site {tuple(s)} lies outside the grid")
    d2 = cdist(grid.centers, sites, "sqeuclidean")
    return Partition(np.argmin(d2, axis=1), sites.copy())


def region_mask(p: Partition, robot_id: int) -> np.ndarray:
    if not 0 <= robot_id < len(p.sites):
        raise KeyError(f"robot {robot_id} is not part of this partition")
    return p.assignment == robot_id


class PartitionSchedule:
    """Partition source for a multi-robot trial.

    ``FVP`` computes the partition once from the initial positions. ``DVP``
    recomputes it from the robots' current positions whenever a target is
    requested.
    """

    def __init__(self, mode: str, grid: GridSpec, initial_positions):
        if mode not in (FIXED, DYNAMIC):
            raise ValueError(f"partition mode must be {FIXED} or {DYNAMIC}, got {mode!r}")
        self.mode = mode
        self.grid = grid
        self._fixed = voronoi_assign(grid, initial_positions)

    def current(self, positions) -> Partition:
        if self.mode == FIXED:
            return self._fixed
        return voronoi_assign(self.grid, positions)


def update_mode(mode: str, grid: GridSpec, initial_positions, positions) -> Partition:
    return PartitionSchedule(mode, grid, initial_positions).current(positions)
