"""Multivariate orthogonal sample moments over a copula matrix.

The moment for multi-index T is the sample mean of the product
prod_d phi_{T_d}(y_d) over the rows of the matrix. Because the basis is
orthonormal, these moments are exactly the L2 expansion coefficients of
the copula density, which is what makes the series reconstruction work.
"""

from __future__ import annotations

import enum
import itertools
import math
import struct
from dataclasses import dataclass

import numpy as np

from .basis import FAMILY_FROM_ID, FAMILY_IDS, BasisSpec, basis_table
from .copula import CopulaMatrix

INDEX_CAP = 10**6

MultiIndex = tuple[int, ...]


class Truncation(enum.Enum):
    TENSOR_PRODUCT = "tensor-product"
    TOTAL_DEGREE = "total-degree"

    @classmethod
    def parse(cls, name: str) -> "Truncation":
        for tr in cls:
            if tr.value == name.lower():
                return tr
        raise ValueError(f"unknown truncation {name!r}")


TRUNCATION_IDS = {Truncation.TENSOR_PRODUCT: 0, Truncation.TOTAL_DEGREE: 1}
TRUNCATION_FROM_ID = {v: k for k, v in TRUNCATION_IDS.items()}


def count_indices(dim: int, max_degree: int, truncation: Truncation) -> int:
    if truncation is Truncation.TENSOR_PRODUCT:
        return (max_degree + 1) ** dim
    return math.comb(dim + max_degree, max_degree)


def enumerate_indices(
    dim: int, max_degree: int, truncation: Truncation = Truncation.TENSOR_PRODUCT
) -> list[MultiIndex]:
    """All multi-indices of the truncation set, in lexicographic order."""
    if dim < 1:
        raise ValueError(f"dimension must be at least 1, got {dim}")
    if max_degree < 0:
        raise ValueError(f"max degree must be non-negative, got {max_degree}")
    total = count_indices(dim, max_degree, truncation)
    if total > INDEX_CAP:
        raise ValueError(
            f"truncation set holds {total} indices, exceeding the cap of {INDEX_CAP}"
        )
    product = itertools.product(range(max_degree + 1), repeat=dim)
    if truncation is Truncation.TENSOR_PRODUCT:
        return list(product)
    return [T for T in product if sum(T) <= max_degree]


@dataclass
class MomentTensor:
    """Sample moments keyed by multi-index, with their provenance."""

    basis: BasisSpec
    dim: int
    truncation: Truncation
    entries: dict[MultiIndex, float]
    n: int

    @property
    def max_degree(self) -> int:
        return self.basis.max_degree

    def compatible_with(self, other: "MomentTensor") -> bool:
        return (
            self.basis == other.basis
            and self.dim == other.dim
            and self.truncation == other.truncation
            and self.entries.keys() == other.entries.keys()
        )

    def require_compatible(self, other: "MomentTensor") -> None:
        if not self.compatible_with(other):
            raise ValueError("moment tensors have mismatched basis, dim, or index set")

    def constant_index(self) -> MultiIndex:
        return (0,) * self.dim


def empty_moments(
    basis: BasisSpec,
    dim: int,
    truncation: Truncation = Truncation.TENSOR_PRODUCT,
    indices=None,
) -> MomentTensor:
    """A zero tensor with n = 0; the merge identity and the uniform reference."""
    if indices is None:
        indices = enumerate_indices(dim, basis.max_degree, truncation)
    return MomentTensor(
        basis=basis,
        dim=dim,
        truncation=truncation,
        entries={tuple(T): 0.0 for T in indices},
        n=0,
    )


def accumulate(
    copula: CopulaMatrix,
    basis: BasisSpec,
    indices=None,
    truncation: Truncation = Truncation.TENSOR_PRODUCT,
) -> MomentTensor:
    """Mean of the per-row basis products for every index in the set.

    Per-row products are formed in double precision and summed in
    extended precision so that near-zero moments survive cancellation at
    sample sizes in the millions.
    """
    basis.require_estimation()
    if copula.n == 0:
        raise ValueError("cannot accumulate moments of an empty copula matrix")
    if indices is None:
        indices = enumerate_indices(copula.dim, basis.max_degree, truncation)
    tables = [basis_table(basis, copula.values[:, d]) for d in range(copula.dim)]
    n = copula.n
    entries: dict[MultiIndex, float] = {}
    scratch = np.empty(n, dtype=np.float64)
    for T in indices:
        T = tuple(int(t) for t in T)
        if len(T) != copula.dim:
            raise ValueError(f"index {T} has wrong dimension for D={copula.dim}")
        if max(T) > basis.max_degree:
            raise ValueError(f"index {T} exceeds basis degree cap {basis.max_degree}")
        np.copyto(scratch, tables[0][:, T[0]])
        for d in range(1, copula.dim):
            scratch *= tables[d][:, T[d]]
        entries[T] = float(scratch.sum(dtype=np.longdouble) / n)
    return MomentTensor(
        basis=basis, dim=copula.dim, truncation=truncation, entries=entries, n=n
    )


def merge(a: MomentTensor, b: MomentTensor) -> MomentTensor:
    """Combine block accumulations by n-weighted means; n adds."""
    a.require_compatible(b)
    n = a.n + b.n
    if b.n == 0:
        entries = dict(a.entries)
    elif a.n == 0:
        entries = dict(b.entries)
    else:
        entries = {
            T: (a.n * a.entries[T] + b.n * b.entries[T]) / n for T in a.entries
        }
    return MomentTensor(
        basis=a.basis, dim=a.dim, truncation=a.truncation, entries=entries, n=n
    )


# ---------------------------------------------------------------------------
# Serialization: versioned binary record, byte-stable for fixed inputs
# ---------------------------------------------------------------------------

_MT_MAGIC = b"FCMT"
_MT_VERSION = 1
_MT_HEADER = struct.Struct("<4sIBBIIQQ")


def save_moments(tensor: MomentTensor, path) -> None:
    indices = enumerate_indices(tensor.dim, tensor.max_degree, tensor.truncation)
    if set(indices) != tensor.entries.keys():
        raise ValueError("only full truncation sets can be serialized")
    with open(path, "wb") as fh:
        fh.write(
            _MT_HEADER.pack(
                _MT_MAGIC,
                _MT_VERSION,
                FAMILY_IDS[tensor.basis.family],
                TRUNCATION_IDS[tensor.truncation],
                tensor.dim,
                tensor.max_degree,
                tensor.n,
                len(indices),
            )
        )
        values = np.array([tensor.entries[T] for T in indices], dtype="<f8")
        fh.write(values.tobytes())


def load_moments(path) -> MomentTensor:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _MT_HEADER.size or raw[:4] != _MT_MAGIC:
        raise ValueError(f"{path}: not a moment tensor file")
    magic, version, fam_id, trunc_id, dim, max_degree, n, count = _MT_HEADER.unpack_from(
        raw, 0
    )
    if version != _MT_VERSION:
        raise ValueError(f"{path}: unsupported moment file version {version}")
    basis = BasisSpec(FAMILY_FROM_ID[fam_id], max_degree)
    truncation = TRUNCATION_FROM_ID[trunc_id]
    indices = enumerate_indices(dim, max_degree, truncation)
    if count != len(indices):
        raise ValueError(f"{path}: index count {count} != expected {len(indices)}")
    values = np.frombuffer(raw, dtype="<f8", count=count, offset=_MT_HEADER.size)
    if values.size != count:
        raise ValueError(f"{path}: truncated moment payload")
    entries = {T: float(v) for T, v in zip(indices, values)}
    return MomentTensor(basis=basis, dim=dim, truncation=truncation, entries=entries, n=n)
