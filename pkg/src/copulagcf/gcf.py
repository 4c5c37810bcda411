"""Density reconstruction from orthogonal moments, and moment-space metrics.

The reconstructed density is the truncated orthonormal series

    c_hat(y) = sum_T mu_hat_T * prod_d phi_{T_d}(y_d)

whose integral over the cube is exactly 1: every non-constant basis
product integrates to zero, and the constant term contributes
(sqrt(2)/2)^D * (sqrt(2)/2)^D * 2^D = 1. Truncated series can dip below
zero, so evaluation clamps at a small positive floor before logs.

Two scalar metrics operate directly in moment space:

* characteristic distance: L1 distance between two moment tensors over
  the non-constant indices;
* characteristic interdependence: the same distance against the uniform
  (independence) copula, whose non-constant moments all vanish - hence
  simply the L1 norm of the non-constant entries.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import basis_table
from .copula import CopulaMatrix
from .moments import MomentTensor, MultiIndex, empty_moments

CLAMP_FLOOR = 1e-8


class GcfDensity:
    """Evaluatable series density backed by a moment tensor."""

    kind = "gcf"

    def __init__(self, moments: MomentTensor, clamp_floor: float = CLAMP_FLOOR):
        moments.basis.require_estimation()
        self.moments = moments
        self.clamp_floor = float(clamp_floor)

    @property
    def dim(self) -> int:
        return self.moments.dim

    def evaluate(self, points: np.ndarray, clamp: bool = True) -> np.ndarray:
        """Series value at each row of ``points`` (shape (m, D))."""
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts.reshape(1, -1)
        if pts.shape[1] != self.dim:
            raise ValueError(f"points have dimension {pts.shape[1]}, density has {self.dim}")
        if pts.size and (np.abs(pts) >= 1.0).any():
            raise ValueError("evaluation points must lie strictly inside the open cube")
        tables = [basis_table(self.moments.basis, pts[:, d]) for d in range(self.dim)]
        acc = np.zeros(pts.shape[0], dtype=np.float64)
        scratch = np.empty(pts.shape[0], dtype=np.float64)
        for T, mu in self.moments.entries.items():
            np.copyto(scratch, tables[0][:, T[0]])
            for d in range(1, self.dim):
                scratch *= tables[d][:, T[d]]
            acc += mu * scratch
        if clamp:
            np.maximum(acc, self.clamp_floor, out=acc)
        return acc


def eval_density(est, y) -> float:
    """Clamped density at a single point, for either estimate kind."""
    point = np.asarray(y, dtype=np.float64).ravel()
    return float(est.evaluate(point.reshape(1, -1))[0])


@dataclass
class GcdReport:
    """Characteristic distance with its per-index breakdown."""

    value: float
    contributions: dict[MultiIndex, float]

    def top_contributors(self, count: int = 10) -> list[tuple[MultiIndex, float]]:
        ranked = sorted(self.contributions.items(), key=lambda kv: -kv[1])
        return ranked[:count]


def gcd(mu: MomentTensor, nu: MomentTensor) -> GcdReport:
    """L1 distance between moment tensors, constant index excluded.

    The constant moment is identical for every density ((sqrt(2)/2)^D), so
    it carries no shape information and is left out of the sum.
    """
    mu.require_compatible(nu)
    const = mu.constant_index()
    contributions = {
        T: abs(mu.entries[T] - nu.entries[T]) for T in mu.entries if T != const
    }
    return GcdReport(value=float(sum(contributions.values())), contributions=contributions)


def gci(mu: MomentTensor) -> float:
    """Interdependence metric: L1 norm of the non-constant moments.

    Zero exactly when the underlying variables are independent (all
    non-constant population moments vanish); requires a zero-integral
    family, so plot-only bases are rejected.
    """
    mu.basis.require_estimation()
    const = mu.constant_index()
    return float(sum(abs(v) for T, v in mu.entries.items() if T != const))


def gci_report(mu: MomentTensor) -> GcdReport:
    """GCI with per-index contributions (equals gcd against the zero tensor)."""
    reference = empty_moments(mu.basis, mu.dim, mu.truncation, indices=list(mu.entries))
    return gcd(mu, reference)


def grid_centers(resolution: int) -> np.ndarray:
    return -1.0 + (np.arange(resolution) + 0.5) * (2.0 / resolution)


def density_grid(est, resolution: int) -> np.ndarray:
    """Density at the cell centers of a uniform grid over (-1, 1)^2.

    Entry (i, j) is the density at (centers[i], centers[j]). Only
    two-dimensional estimates can be rendered this way.
    """
    if est.dim != 2:
        raise ValueError(f"grid rendering needs D=2, estimate has D={est.dim}")
    if resolution < 2:
        raise ValueError(f"resolution must be at least 2, got {resolution}")
    centers = grid_centers(resolution)
    g1, g2 = np.meshgrid(centers, centers, indexing="ij")
    points = np.column_stack([g1.ravel(), g2.ravel()])
    return est.evaluate(points).reshape(resolution, resolution)


def cross_entropy(est, test: CopulaMatrix) -> float:
    """Mean negative log density of the test rows under the estimate."""
    if test.n == 0:
        raise ValueError("cross entropy needs a nonempty test set")
    if test.dim != est.dim:
        raise ValueError(f"test matrix has D={test.dim}, estimate has D={est.dim}")
    dens = est.evaluate(test.values)
    return float(-np.mean(np.log(dens)))
