import math
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from copulagcf import tensorio
from copulagcf.tensorio import (
    BadMagicError,
    FeatureSample,
    TensorFormatError,
    TruncatedPayloadError,
    UnsupportedDtypeError,
    VersionMismatchError,
    flatten_filter,
    parse_synth,
    read_tensor,
    synth_sample,
    write_tensor,
    zero_inflated,
)


def _write_raw(path, magic=tensorio.MAGIC, version=1, dtype=0, dims=(2, 3, 4, 4), values=None):
    if values is None:
        values = np.arange(math.prod(dims), dtype=np.float32)
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sIBB", magic, version, dtype, len(dims)))
        fh.write(struct.pack(f"<{len(dims)}Q", *dims))
        fh.write(np.asarray(values, dtype="<f4").tobytes())


def test_read_matches_dims(tmp_path):
    path = tmp_path / "t.fcpg"
    _write_raw(path)
    tensor = read_tensor(path)
    assert tensor.dims == (2, 3, 4, 4)
    assert tensor.size == 96
    assert tensor.payload.shape == (2, 3, 4, 4)


def test_truncated_payload(tmp_path):
    path = tmp_path / "t.fcpg"
    _write_raw(path, values=np.arange(95, dtype=np.float32))
    with pytest.raises(TruncatedPayloadError):
        read_tensor(path)


def test_trailing_bytes_rejected(tmp_path):
    path = tmp_path / "t.fcpg"
    _write_raw(path, values=np.arange(97, dtype=np.float32))
    with pytest.raises(TensorFormatError):
        read_tensor(path)


def test_bad_magic(tmp_path):
    path = tmp_path / "t.fcpg"
    _write_raw(path, magic=b"NOPE")
    with pytest.raises(BadMagicError):
        read_tensor(path)


def test_version_mismatch(tmp_path):
    path = tmp_path / "t.fcpg"
    _write_raw(path, version=2)
    with pytest.raises(VersionMismatchError):
        read_tensor(path)


def test_unsupported_dtype(tmp_path):
    path = tmp_path / "t.fcpg"
    _write_raw(path, dtype=1)
    with pytest.raises(UnsupportedDtypeError):
        read_tensor(path)


@settings(max_examples=30, deadline=None)
@given(
    dims=st.tuples(
        st.integers(1, 4), st.integers(1, 4), st.integers(1, 4), st.integers(1, 4)
    ),
    seed=st.integers(0, 2**31),
)
def test_round_trip_bit_identical(tmp_path_factory, dims, seed):
    rng = np.random.default_rng(seed)
    values = rng.standard_normal(dims).astype(np.float32)
    path = tmp_path_factory.mktemp("rt") / "t.fcpg"
    write_tensor(path, values)
    back = read_tensor(path)
    assert back.dims == dims
    assert back.payload.tobytes() == values.tobytes()


def test_flatten_length_and_indexing(tmp_path):
    path = tmp_path / "t.fcpg"
    _write_raw(path, dims=(2, 1, 2, 2), values=np.arange(8, dtype=np.float32))
    sample = flatten_filter(read_tensor(path), 0)
    assert sample.n == 8

    _write_raw(path, dims=(1, 2, 1, 1), values=np.array([5.0, 7.0], dtype=np.float32))
    sample = flatten_filter(read_tensor(path), 1)
    assert sample.values.tolist() == [7.0]


def test_flatten_ordering_is_image_row_col(tmp_path):
    rng = np.random.default_rng(5)
    data = rng.random((3, 2, 4, 5)).astype(np.float32)
    path = tmp_path / "t.fcpg"
    write_tensor(path, data)
    sample = flatten_filter(read_tensor(path), 1)
    expected = [data[i, 1, r, c] for i in range(3) for r in range(4) for c in range(5)]
    assert sample.values.tolist() == pytest.approx(expected)


@settings(max_examples=30, deadline=None)
@given(
    n_img=st.integers(1, 3),
    n_filt=st.integers(1, 3),
    rows=st.integers(1, 4),
    cols=st.integers(1, 4),
)
def test_flatten_length_property(tmp_path_factory, n_img, n_filt, rows, cols):
    data = np.ones((n_img, n_filt, rows, cols), dtype=np.float32)
    path = tmp_path_factory.mktemp("fl") / "t.fcpg"
    write_tensor(path, data)
    tensor = read_tensor(path)
    for f in range(n_filt):
        assert flatten_filter(tensor, f).n == n_img * rows * cols


def test_flatten_filter_out_of_range(tmp_path):
    path = tmp_path / "t.fcpg"
    _write_raw(path, dims=(1, 2, 1, 1), values=np.array([1.0, 2.0], dtype=np.float32))
    with pytest.raises(IndexError):
        flatten_filter(read_tensor(path), 2)


def test_zero_dimensional_file_rejected(tmp_path):
    path = tmp_path / "z.fcpg"
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sIBB", tensorio.MAGIC, 1, 0, 0))
    with pytest.raises(TensorFormatError):
        read_tensor(path)


def test_feature_sample_rejects_negative():
    with pytest.raises(ValueError):
        FeatureSample(values=np.array([1.0, -0.5]))


# ---------------------------------------------------------------------------
# synthetic sample generation
# ---------------------------------------------------------------------------


def test_synth_exponential_mean_lln():
    n = 1_000_000
    sample = synth_sample(parse_synth("exp(1)"), n, seed=42302)
    assert abs(float(sample.values.mean()) - 1.0) <= 3.0 / math.sqrt(n)


def test_synth_zero_inflated_fraction():
    n = 1_000_000
    spec = zero_inflated(0.4, parse_synth("exp(1)"))
    sample = synth_sample(spec, n, seed=7)
    frac = float((sample.values == 0.0).mean())
    assert abs(frac - 0.4) <= 0.002


def test_synth_uniform_single_value():
    sample = synth_sample(parse_synth("uni(0,1)"), 1, seed=3)
    assert 0.0 <= sample.values[0] <= 1.0


def test_synth_deterministic():
    spec = parse_synth("zi(0.3,gamma(2,0.5))")
    a = synth_sample(spec, 1000, seed=11)
    b = synth_sample(spec, 1000, seed=11)
    assert a.values.tobytes() == b.values.tobytes()


def test_synth_truncated_gaussian_support():
    sample = synth_sample(parse_synth("gauss(0.1,2)"), 5000, seed=1)
    assert float(sample.values.min()) >= 0.0


@pytest.mark.parametrize(
    "text",
    ["exp(-1)", "exp(0)", "gauss(1,0)", "gamma(0,1)", "weibull(1,-2)", "uni(2,1)", "zi(1.5,exp(1))"],
)
def test_synth_invalid_params(text):
    with pytest.raises(ValueError):
        parse_synth(text)


def test_parse_synth_unknown():
    with pytest.raises(ValueError):
        parse_synth("cauchy(1)")
