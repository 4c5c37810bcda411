"""Orthogonal basis families over the open interval (-1, 1).

Two families are valid for density estimation, both orthonormal under the
Lebesgue measure on (-1, 1) and with zero integral for every non-constant
member:

* normalized Legendre polynomials  phi_t(y) = P_t(y) / sqrt(2 / (2t + 1))
* real cosine series               phi_0(y) = sqrt(2)/2,
                                   phi_t(y) = cos(t * (pi/2) * (y - 1))

Raw Legendre and Chebyshev polynomials are exposed for comparison plots
only; Chebyshev in particular lacks the zero-integral property the
interdependence metric relies on.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

MAX_DEGREE = 64


class BasisFamily(enum.Enum):
    LEGENDRE = "legendre"
    FOURIER = "fourier"
    LEGENDRE_RAW = "legendre-raw"
    CHEBYSHEV = "chebyshev"

    @classmethod
    def parse(cls, name: str) -> "BasisFamily":
        for fam in cls:
            if fam.value == name.lower():
                return fam
        raise ValueError(f"unknown basis family {name!r}")


ESTIMATION_FAMILIES = (BasisFamily.LEGENDRE, BasisFamily.FOURIER)

# stable ids for binary serialization
FAMILY_IDS = {
    BasisFamily.LEGENDRE: 0,
    BasisFamily.FOURIER: 1,
    BasisFamily.LEGENDRE_RAW: 2,
    BasisFamily.CHEBYSHEV: 3,
}
FAMILY_FROM_ID = {v: k for k, v in FAMILY_IDS.items()}


@dataclass(frozen=True)
class BasisSpec:
    family: BasisFamily
    max_degree: int

    def __post_init__(self) -> None:
        if not 0 <= self.max_degree <= MAX_DEGREE:
            raise ValueError(
                f"max degree must lie in [0, {MAX_DEGREE}], got {self.max_degree}"
            )

    def require_estimation(self) -> None:
        if self.family not in ESTIMATION_FAMILIES:
            raise ValueError(
                f"{self.family.value} is a plot-only family; density estimation "
                f"requires legendre or fourier"
            )


def legendre_raw(t: int, y):
    """P_t(y) by the three-term recurrence.

    P_0 = 1, P_1 = y, (n+1) P_{n+1}(y) = (2n+1) y P_n(y) - n P_{n-1}(y).
    """
    if t < 0:
        raise ValueError(f"degree must be non-negative, got {t}")
    y = np.asarray(y, dtype=np.float64)
    prev = np.ones_like(y)
    if t == 0:
        return prev if prev.ndim else float(prev)
    cur = y.copy()
    for n in range(1, t):
        prev, cur = cur, ((2 * n + 1) * y * cur - n * prev) / (n + 1)
    return cur if cur.ndim else float(cur)


def legendre_l2_norm(t: int) -> float:
    """Exact L2 norm of P_t over (-1, 1): sqrt(2 / (2t + 1))."""
    if t < 0:
        raise ValueError(f"degree must be non-negative, got {t}")
    return math.sqrt(2.0 / (2 * t + 1))


def _check_domain(y: np.ndarray) -> None:
    if y.size and (np.abs(y) > 1.0).any():
        bad = float(y[np.abs(y) > 1.0].flat[0])
        raise ValueError(f"basis input {bad} outside [-1, 1]")


def eval_basis(spec: BasisSpec, t: int, y):
    """Evaluate the degree-t member of the family at y (scalar or array)."""
    if not 0 <= t <= spec.max_degree:
        raise ValueError(f"degree {t} outside [0, {spec.max_degree}]")
    arr = np.asarray(y, dtype=np.float64)
    _check_domain(arr)
    fam = spec.family
    if fam is BasisFamily.LEGENDRE:
        out = np.asarray(legendre_raw(t, arr)) / legendre_l2_norm(t)
    elif fam is BasisFamily.FOURIER:
        if t == 0:
            out = np.full_like(arr, math.sqrt(2.0) / 2.0)
        else:
            out = np.cos(t * (math.pi / 2.0) * (arr - 1.0))
    elif fam is BasisFamily.LEGENDRE_RAW:
        out = np.asarray(legendre_raw(t, arr))
    else:  # Chebyshev
        out = np.cos(t * np.arccos(arr))
    return out if out.ndim else float(out)


def basis_table(spec: BasisSpec, ys) -> np.ndarray:
    """Matrix of shape (len(ys), K+1) with entry (i, t) = phi_t(ys[i]).

    The Legendre columns are produced by a single recurrence sweep; the
    trigonometric families are evaluated column by column.
    """
    ys = np.asarray(ys, dtype=np.float64).ravel()
    _check_domain(ys)
    K = spec.max_degree
    table = np.empty((ys.size, K + 1), dtype=np.float64)
    fam = spec.family
    if fam in (BasisFamily.LEGENDRE, BasisFamily.LEGENDRE_RAW):
        table[:, 0] = 1.0
        if K >= 1:
            table[:, 1] = ys
        for n in range(1, K):
            table[:, n + 1] = ((2 * n + 1) * ys * table[:, n] - n * table[:, n - 1]) / (n + 1)
        if fam is BasisFamily.LEGENDRE:
            norms = np.sqrt(2.0 / (2.0 * np.arange(K + 1) + 1.0))
            table /= norms
    elif fam is BasisFamily.FOURIER:
        table[:, 0] = math.sqrt(2.0) / 2.0
        for t in range(1, K + 1):
            table[:, t] = np.cos(t * (math.pi / 2.0) * (ys - 1.0))
    else:
        theta = np.arccos(ys)
        for t in range(K + 1):
            table[:, t] = np.cos(t * theta)
    return table
