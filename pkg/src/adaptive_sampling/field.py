"""Wi-Fi received-signal-strength ground truth over the grid.

Log-distance path loss from a single source plus Gaussian shadowing. The
shadowing draw is made once per cell and frozen for the trial, so repeated
measurements in one cell read the same value.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .grid import GridSpec

SPEED_OF_LIGHT = 3e8
MIN_DISTANCE = 0.1


@dataclass(frozen=True)
class FieldParams:
    tx_power: float = 27.0
    frequency: float = 2.4e9
    path_loss_exponent: float = 3.0
    shadowing_variance: float = 0.65
    source: tuple[float, float] = (4.0, 7.0)
    log_base: str = "natural"

    def __post_init__(self):
        if self.frequency <= 0:
            raise ValueError("frequency must be > 0")
        if self.path_loss_exponent <= 0:
            raise ValueError("path_loss_exponent must be > 0")
        if self.shadowing_variance < 0:
            raise ValueError("shadowing_variance must be >= 0")
        if self.log_base not in ("natural", "base-10"):
            raise ValueError(f"log_base must be 'natural' or 'base-10', got {self.log_base!r}")
        object.__setattr__(self, "source", (float(self.source[0]), float(self.source[1])))

    def log(self, x):
        return np.log(x) if self.log_base == "natural" else np.log10(x)


def reference_power(p: FieldParams) -> float:
    """Received power at 1 m: free-space loss at the carrier wavelength."""
    wavelength = SPEED_OF_LIGHT / p.frequency
    return float(p.tx_power + 20.0 * p.log(wavelength / (4.0 * math.pi)))


def rss_mean(d, p: FieldParams):
    """Noiseless RSS (dBm) at distance ``d`` meters; distances below 0.1 m are clamped."""
    d = np.maximum(np.asarray(d, dtype=float), MIN_DISTANCE)
    out = reference_power(p) - 10.0 * p.path_loss_exponent * p.log(d)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class GroundTruthField:
    grid: GridSpec
    params: FieldParams
    values: np.ndarray  # one per cell, grid index order
    noiseless: np.ndarray
    seed: int | None

    def source_distance(self) -> np.ndarray:
        return np.hypot(*(self.grid.centers - np.asarray(self.params.source)).T)


def generate(grid: GridSpec, p: FieldParams, seed) -> GroundTruthField:
    if not grid.contains(p.source):
        raise ValueError(f"source {p.source} lies outside the grid")
    d = np.hypot(*(grid.centers - np.asarray(p.source)).T)
    noiseless = rss_mean(d, p)
    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, math.sqrt(p.shadowing_variance), size=grid.n_cells)
    values = noiseless + noise
    values.setflags(write=False)
    noiseless.setflags(write=False)
    return GroundTruthField(grid, p, values, noiseless, seed)


def measure(field: GroundTruthField, location) -> float:
    """Frozen field value of the cell nearest ``location``.

    Raises ``ValueError`` for a location outside the grid: the planner
    should never send a robot there.
    """
    return float(field.values[field.grid.index_of(location)])


def write_field_csv(field: GroundTruthField, dest):
    """Write ``x,y,value`` rows to a path or an open text stream."""
    if hasattr(dest, "write"):
        _field_rows(field, dest)
        return dest
    path = Path(dest)
    with path.open("w", newline="") as fh:
        _field_rows(field, fh)
    return path


def _field_rows(field: GroundTruthField, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["x", "y", "value"])
    for (x, y), v in zip(field.grid.centers, field.values):
        w.writerow([repr(float(x)), repr(float(y)), repr(float(v))])
