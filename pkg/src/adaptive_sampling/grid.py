"""Regular 2-D sampling grid with cell centers on integer multiples of the pitch."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class GridSpec:
    """Rectangular grid of square cells.

    Cell centers sit at ``(i * cell_pitch, j * cell_pitch)`` for
    ``i < nx`` and ``j < ny``, so the default 10 m x 15 m grid has centers
    at integer coordinates ``(0..9, 0..14)``. Each cell extends half a pitch
    around its center; the grid bounds are the union of the cells.

    Cells are ordered x-major: ``index = ix * ny + iy``. Sorting by index is
    therefore the same as sorting lexicographically by ``(x, y)``.
    """

    width: float = 10.0
    height: float = 15.0
    cell_pitch: float = 1.0

    def __post_init__(self):
        if self.cell_pitch <= 0 or self.width <= 0 or self.height <= 0:
            raise ValueError("grid width, height and cell_pitch must be positive")
        for name, size in (("width", self.width), ("height", self.height)):
            ratio = size / self.cell_pitch
            if abs(ratio - round(ratio)) > 1e-9:
                raise ValueError(f"grid {name} {size} is not a multiple of cell_pitch {self.cell_pitch}")

    @property
    def nx(self) -> int:
        return int(round(self.width / self.cell_pitch))

    @property
    def ny(self) -> int:
        return int(round(self.height / self.cell_pitch))

    @property
    def n_cells(self) -> int:
        return self.nx * self.ny

    @cached_property
    def centers(self) -> np.ndarray:
        ix, iy = np.meshgrid(np.arange(self.nx), np.arange(self.ny), indexing="ij")
        pts = np.column_stack([ix.ravel(), iy.ravel()]).astype(float) * self.cell_pitch
        pts.setflags(write=False)
        return pts

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        """(xmin, xmax, ymin, ymax) of the cell union."""
        h = 0.5 * self.cell_pitch
        return (-h, (self.nx - 1) * self.cell_pitch + h, -h, (self.ny - 1) * self.cell_pitch + h)

    @property
    def diagonal(self) -> float:
        return math.hypot(self.width, self.height)

    def contains(self, point, tol: float = 1e-9) -> bool:
        x, y = float(point[0]), float(point[1])
        xmin, xmax, ymin, ymax = self.bounds
        return xmin - tol <= x <= xmax + tol and ymin - tol <= y <= ymax + tol

    def cell_of(self, point) -> tuple[int, int]:
        """Integer (ix, iy) of the cell containing ``point``; half-way points round up."""
        if not self.contains(point):
            raise ValueError(f"point {tuple(point)} lies outside the grid bounds {self.bounds}")
        ix = int(math.floor(float(point[0]) / self.cell_pitch + 0.5))
        iy = int(math.floor(float(point[1]) / self.cell_pitch + 0.5))
        return min(max(ix, 0), self.nx - 1), min(max(iy, 0), self.ny - 1)

    def index_of(self, point) -> int:
        ix, iy = self.cell_of(point)
        return ix * self.ny + iy

    def snap(self, point) -> np.ndarray:
        return self.centers[self.index_of(point)].copy()
