import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from copulagcf.basis import BasisFamily, BasisSpec
from copulagcf.copula import CopulaMatrix, build_copula, fit_cdf
from copulagcf.moments import (
    INDEX_CAP,
    Truncation,
    accumulate,
    count_indices,
    empty_moments,
    enumerate_indices,
    load_moments,
    merge,
    save_moments,
)

LEG = BasisSpec(BasisFamily.LEGENDRE, 8)


def _matrix(values: np.ndarray) -> CopulaMatrix:
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    return CopulaMatrix(values=values, column_ids=tuple(range(values.shape[1])))


def _uniform_matrix(n: int, dim: int, seed: int) -> CopulaMatrix:
    rng = np.random.default_rng(seed)
    raw = [rng.random(n) for _ in range(dim)]
    cdfs = [fit_cdf(col, seed + d) for d, col in enumerate(raw)]
    return build_copula(cdfs, raw, jitter_seed=seed)


def test_enumerate_tensor_product_d2_k1():
    assert enumerate_indices(2, 1) == [(0, 0), (0, 1), (1, 0), (1, 1)]


def test_enumerate_total_degree_d2_k2():
    idx = enumerate_indices(2, 2, Truncation.TOTAL_DEGREE)
    assert len(idx) == 6
    assert all(sum(T) <= 2 for T in idx)


def test_enumerate_tensor_product_d4_k8():
    assert count_indices(4, 8, Truncation.TENSOR_PRODUCT) == 6561
    assert len(enumerate_indices(4, 8)) == 6561


def test_enumerate_cap_refused_with_count():
    with pytest.raises(ValueError, match=str((8 + 1) ** 7)):
        enumerate_indices(7, 8)
    assert (8 + 1) ** 7 > INDEX_CAP


def test_constant_moment_is_half_for_d2():
    rng = np.random.default_rng(0)
    mat = _matrix(rng.uniform(-0.99, 0.99, (500, 2)))
    mom = accumulate(mat, LEG)
    assert mom.entries[(0, 0)] == pytest.approx(0.5, abs=1e-12)


def test_single_point_degree_one_moment_zero():
    mat = _matrix(np.array([0.0]))
    mom = accumulate(mat, BasisSpec(BasisFamily.LEGENDRE, 1))
    assert mom.entries[(1,)] == pytest.approx(0.0, abs=1e-15)


def test_independent_uniform_nonconstant_moments_small():
    n = 100_000
    mat = _uniform_matrix(n, 2, seed=2024)
    mom = accumulate(mat, LEG)
    bound = 4.0 / math.sqrt(n)
    for T, v in mom.entries.items():
        if T != (0, 0):
            assert abs(v) <= bound


def test_degree_one_legendre_moment_is_scaled_mean():
    rng = np.random.default_rng(3)
    raw = rng.exponential(1.0, 2000)
    cdf = fit_cdf(raw, 1)
    mat = build_copula([cdf], [raw], jitter_seed=1)
    mom = accumulate(mat, BasisSpec(BasisFamily.LEGENDRE, 2))
    expected = math.sqrt(1.5) * float(mat.values[:, 0].mean())
    assert mom.entries[(1,)] == pytest.approx(expected, abs=1e-12)


def test_merge_with_empty_is_identity():
    mat = _uniform_matrix(300, 2, seed=5)
    mom = accumulate(mat, LEG)
    empty = empty_moments(LEG, 2, Truncation.TENSOR_PRODUCT)
    merged = merge(mom, empty)
    assert merged.n == mom.n
    for T in mom.entries:
        assert merged.entries[T] == pytest.approx(mom.entries[T], abs=0)


@settings(max_examples=20, deadline=None)
@given(
    n=st.integers(10, 300),
    split=st.floats(0.1, 0.9),
    dim=st.integers(1, 3),
    degree=st.integers(1, 4),
    fam=st.sampled_from([BasisFamily.LEGENDRE, BasisFamily.FOURIER]),
    seed=st.integers(0, 10_000),
)
def test_split_accumulate_merge_equals_whole(n, split, dim, degree, fam, seed):
    rng = np.random.default_rng(seed)
    values = rng.uniform(-0.999, 0.999, (n, dim))
    spec = BasisSpec(fam, degree)
    whole = accumulate(_matrix(values), spec)
    cut = max(1, min(n - 1, int(n * split)))
    left = accumulate(_matrix(values[:cut]), spec)
    right = accumulate(_matrix(values[cut:]), spec)
    merged = merge(left, right)
    assert merged.n == whole.n
    for T in whole.entries:
        assert abs(merged.entries[T] - whole.entries[T]) <= 1e-12


def test_merge_commutative():
    a = accumulate(_uniform_matrix(200, 2, seed=1), LEG)
    b = accumulate(_uniform_matrix(300, 2, seed=2), LEG)
    ab, ba = merge(a, b), merge(b, a)
    for T in ab.entries:
        assert abs(ab.entries[T] - ba.entries[T]) <= 1e-12


def test_row_permutation_invariance():
    rng = np.random.default_rng(7)
    values = rng.uniform(-0.999, 0.999, (500, 2))
    perm = rng.permutation(500)
    a = accumulate(_matrix(values), LEG)
    b = accumulate(_matrix(values[perm]), LEG)
    for T in a.entries:
        assert abs(a.entries[T] - b.entries[T]) <= 1e-12


def test_merge_spec_mismatch_rejected():
    a = accumulate(_uniform_matrix(100, 2, seed=1), LEG)
    b = accumulate(_uniform_matrix(100, 2, seed=1), BasisSpec(BasisFamily.FOURIER, 8))
    with pytest.raises(ValueError):
        merge(a, b)


def test_accumulate_rejects_plot_only_basis():
    with pytest.raises(ValueError):
        accumulate(_uniform_matrix(50, 1, seed=0), BasisSpec(BasisFamily.CHEBYSHEV, 4))


def test_accumulate_rejects_overdegree_index():
    mat = _uniform_matrix(50, 2, seed=0)
    with pytest.raises(ValueError):
        accumulate(mat, BasisSpec(BasisFamily.LEGENDRE, 2), indices=[(0, 3)])


def test_serialization_round_trip(tmp_path):
    mom = accumulate(_uniform_matrix(400, 2, seed=9), LEG)
    path = tmp_path / "m.fcmt"
    save_moments(mom, path)
    back = load_moments(path)
    assert back.basis == mom.basis
    assert back.dim == mom.dim
    assert back.truncation == mom.truncation
    assert back.n == mom.n
    assert back.entries == mom.entries


def test_serialization_byte_stable(tmp_path):
    mom = accumulate(_uniform_matrix(400, 3, seed=9, ), BasisSpec(BasisFamily.FOURIER, 3))
    p1, p2 = tmp_path / "a.fcmt", tmp_path / "b.fcmt"
    save_moments(mom, p1)
    save_moments(mom, p2)
    assert p1.read_bytes() == p2.read_bytes()
