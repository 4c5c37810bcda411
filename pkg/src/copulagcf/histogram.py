"""Dense D-dimensional histogram over the copula cube, the control method.

Grid methods starve in high dimensions: with B bins per dimension the
average cell receives n / B^D samples, which is the mechanism the series
estimator sidesteps by spending the whole sample on every moment.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .copula import CopulaMatrix
from .gcf import CLAMP_FLOOR

MAX_CELLS = 2**26


@dataclass
class HistogramGrid:
    counts: np.ndarray  # shape (B,) * D
    n: int

    @property
    def dim(self) -> int:
        return self.counts.ndim

    @property
    def bins(self) -> int:
        return self.counts.shape[0]

    @property
    def cell_volume(self) -> float:
        return (2.0 / self.bins) ** self.dim

    def densities(self) -> np.ndarray:
        return self.counts / (self.n * self.cell_volume)


def _cell_indices(values: np.ndarray, bins: int) -> np.ndarray:
    # boundary values -1 + 2k/B land exactly on k and therefore in the upper cell
    idx = np.floor((values + 1.0) * (bins / 2.0)).astype(np.int64)
    return np.clip(idx, 0, bins - 1)


def fit_hist(copula: CopulaMatrix, bins: int) -> HistogramGrid:
    """Count rows into a uniform B^D grid over (-1, 1)^D."""
    if bins < 2:
        raise ValueError(f"need at least 2 bins per dimension, got {bins}")
    cells = bins**copula.dim
    if cells > MAX_CELLS:
        raise ValueError(
            f"{bins}^{copula.dim} = {cells} cells exceeds the cap of {MAX_CELLS}"
        )
    counts = np.zeros((bins,) * copula.dim, dtype=np.int64)
    idx = tuple(_cell_indices(copula.values[:, d], bins) for d in range(copula.dim))
    np.add.at(counts, idx, 1)
    return HistogramGrid(counts=counts, n=copula.n)


def merge_hist(a: HistogramGrid, b: HistogramGrid) -> HistogramGrid:
    if a.counts.shape != b.counts.shape:
        raise ValueError("histogram grids have mismatched shapes")
    return HistogramGrid(counts=a.counts + b.counts, n=a.n + b.n)


class HistogramDensity:
    """Histogram-backed density conforming to the series evaluation contract."""

    kind = "histogram"

    def __init__(self, grid: HistogramGrid, clamp_floor: float = CLAMP_FLOOR):
        self.grid = grid
        self.clamp_floor = float(clamp_floor)

    @property
    def dim(self) -> int:
        return self.grid.dim

    def evaluate(self, points: np.ndarray, clamp: bool = True) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts.reshape(1, -1)
        if pts.shape[1] != self.dim:
            raise ValueError(f"points have dimension {pts.shape[1]}, grid has {self.dim}")
        if pts.size and (np.abs(pts) >= 1.0).any():
            raise ValueError("evaluation points must lie strictly inside the open cube")
        dens = self.grid.densities()
        idx = tuple(_cell_indices(pts[:, d], self.grid.bins) for d in range(self.dim))
        out = dens[idx]
        if clamp:
            out = np.maximum(out, self.clamp_floor)
        return out
