"""Bounded rectangular sampling of the plane on which world variables live."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Tuple

import numpy as np


@dataclass(frozen=True)
class SpatialGrid:
    x0: float = 0.0
    x1: float = 10.0
    y0: float = 0.0
    y1: float = 10.0
    nx: int = 32
    ny: int = 32

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValueError("grid needs at least one cell per axis")
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise ValueError("grid bounds must satisfy x0 < x1 and y0 < y1")

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.ny, self.nx)

    @property
    def cell_size(self) -> Tuple[float, float]:
        return ((self.x1 - self.x0) / self.nx, (self.y1 - self.y0) / self.ny)

    @cached_property
    def centers(self) -> Tuple[np.ndarray, np.ndarray]:
        """(X, Y) arrays of cell-center coordinates, each of shape (ny, nx)."""
        dx, dy = self.cell_size
        xs = self.x0 + dx * (np.arange(self.nx) + 0.5)
        ys = self.y0 + dy * (np.arange(self.ny) + 0.5)
        return np.meshgrid(xs, ys)

    def cell_of(self, point) -> Optional[Tuple[int, int]]:
        """(row, col) of the cell containing point, or None outside the grid."""
        x, y = float(point[0]), float(point[1])
        if not (self.x0 <= x <= self.x1 and self.y0 <= y <= self.y1):
            return None
        dx, dy = self.cell_size
        col = min(int((x - self.x0) / dx), self.nx - 1)
        row = min(int((y - self.y0) / dy), self.ny - 1)
        return row, col

    def center_of(self, row: int, col: int) -> np.ndarray:
        dx, dy = self.cell_size
        return np.array([self.x0 + dx * (col + 0.5), self.y0 + dy * (row + 0.5)])

    def to_dict(self) -> dict:
        return {"x0": self.x0, "x1": self.x1, "y0": self.y0, "y1": self.y1, "nx": self.nx, "ny": self.ny}


@dataclass(frozen=True)
class Region:
    """Square of side `size` centred at `center`, rotated by `angle` radians."""

    center: Tuple[float, float]
    angle: float
    size: float = 1.0

    def contains(self, xs, ys):
        c, s = math.cos(self.angle), math.sin(self.angle)
        dx = np.asarray(xs, dtype=float) - self.center[0]
        dy = np.asarray(ys, dtype=float) - self.center[1]
        u = c * dx + s * dy
        v = -s * dx + c * dy
        half = self.size / 2.0
        return (np.abs(u) <= half + 1e-12) & (np.abs(v) <= half + 1e-12)

    def mask(self, grid: SpatialGrid) -> np.ndarray:
        xs, ys = grid.centers
        return self.contains(xs, ys)
