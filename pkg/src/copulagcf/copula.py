"""Rank-based transform of raw samples onto the open interval (-1, 1).

A fitted reference sample defines an empirical CDF; new values are mapped
through 2 * r / (n_ref + 1) - 1 where r is the (mid-)rank of the value
among the reference. Exact zeros receive a tiny negative uniform jitter
before ranking so that tied rectified activations acquire a random but
reproducible total order, while staying below every genuine positive
value.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensorio import FeatureSample

JITTER_EPS = 1e-9


def derive_seed(seed: int, index: int) -> np.random.SeedSequence:
    """Stable per-column seed derivation for multi-feature pipelines."""
    return np.random.SeedSequence(entropy=seed, spawn_key=(index,))


def _as_array(x) -> np.ndarray:
    if isinstance(x, FeatureSample):
        return np.asarray(x.values, dtype=np.float64)
    return np.asarray(x, dtype=np.float64).ravel()


def _jitter_zeros(values: np.ndarray, seed) -> np.ndarray:
    out = values.copy()
    zeros = out == 0.0
    count = int(zeros.sum())
    if count:
        rng = np.random.default_rng(seed)
        out[zeros] = rng.uniform(-JITTER_EPS, 0.0, count)
    return out


@dataclass
class EmpiricalCdf:
    """Sorted reference values fitted from training data only."""

    reference: np.ndarray

    def __post_init__(self) -> None:
        self.reference = np.asarray(self.reference, dtype=np.float64).ravel()
        if self.reference.size == 0:
            raise ValueError("empirical CDF requires a nonempty reference")
        if np.any(np.diff(self.reference) < 0):
            raise ValueError("reference values must be sorted")

    @property
    def n_ref(self) -> int:
        return self.reference.size


@dataclass
class CopulaMatrix:
    """n x D matrix of transformed values, all strictly inside (-1, 1)."""

    values: np.ndarray
    column_ids: tuple[int, ...]

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.shape[1] < 1:
            raise ValueError("copula matrix must be 2-d with at least one column")
        self.column_ids = tuple(int(c) for c in self.column_ids)
        if len(self.column_ids) != self.values.shape[1]:
            raise ValueError("one column id per column required")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]


def fit_cdf(train, jitter_seed) -> EmpiricalCdf:
    """Fit the reference CDF; zero values are jittered into (-eps, 0)."""
    values = _as_array(train)
    if values.size == 0:
        raise ValueError("cannot fit a CDF on an empty sample")
    return EmpiricalCdf(reference=np.sort(_jitter_zeros(values, jitter_seed)))


def transform(cdf: EmpiricalCdf, x, jitter_seed) -> np.ndarray:
    """Map values through the fitted CDF onto (-1, 1).

    Ranks use the mid-rank convention for values tied with reference
    entries; values below every reference are held at rank 0.5 so no
    output ever reaches the interval endpoints.
    """
    values = _as_array(x)
    if values.size == 0:
        raise ValueError("cannot transform an empty sample")
    values = _jitter_zeros(values, jitter_seed)
    ref = cdf.reference
    below = np.searchsorted(ref, values, side="left").astype(np.float64)
    upto = np.searchsorted(ref, values, side="right").astype(np.float64)
    ties = upto - below
    rank = np.where(ties == 0.0, upto, below + (ties + 1.0) / 2.0)
    rank = np.maximum(rank, 0.5)
    return 2.0 * rank / (cdf.n_ref + 1.0) - 1.0


def build_copula(cdfs, samples, jitter_seed: int = 0) -> CopulaMatrix:
    """Column d is transform(cdfs[d], samples[d]); rows stay aligned.

    Samples must be position-aligned and of equal length; zero-jitter for
    column d uses a seed derived from ``jitter_seed`` and d.
    """
    if len(cdfs) != len(samples):
        raise ValueError(f"{len(cdfs)} CDFs for {len(samples)} samples")
    if not samples:
        raise ValueError("at least one sample required")
    lengths = {_as_array(s).size for s in samples}
    if len(lengths) != 1:
        raise ValueError(f"samples have mismatched lengths {sorted(lengths)}")
    columns = [
        transform(cdf, sample, derive_seed(jitter_seed, d))
        for d, (cdf, sample) in enumerate(zip(cdfs, samples))
    ]
    ids = tuple(
        s.filter_id if isinstance(s, FeatureSample) else d
        for d, s in enumerate(samples)
    )
    return CopulaMatrix(values=np.column_stack(columns), column_ids=ids)
