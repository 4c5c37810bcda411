import json
import math
import struct
import subprocess

import numpy as np
import pytest
import torch

from extractor import ExtractionSpec, extract, get_architecture, write_tensor
from extractor.report import report_to_json, verify_against_reference

EXPECTED_RESNET18_FILTERS = (64, 64, 128, 256, 512)


def _decode_header(path):
    raw = path.read_bytes()
    magic, version, dtype, ndim = struct.unpack_from("<4sIBB", raw, 0)
    dims = struct.unpack_from(f"<{ndim}Q", raw, 10)
    count = math.prod(dims)
    payload = np.frombuffer(raw, dtype="<f4", count=count, offset=10 + 8 * ndim)
    return magic, version, dtype, dims, payload, raw


@pytest.fixture(scope="module")
def smoke_files(tmp_path_factory):
    out = tmp_path_factory.mktemp("smoke")
    spec = ExtractionSpec(
        arch="resnet18",
        dataset="synthetic",
        weights="random",  # pretrained weights are not downloadable here
        num_images=10,
        batch_size=4,
        out_dir=str(out),
        seed=3,
    )
    return [out / p.split("/")[-1] for p in extract(spec)]


def test_smoke_files_have_expected_shape(smoke_files):
    assert len(smoke_files) == 5
    for layer, path in enumerate(smoke_files):
        magic, version, dtype, dims, payload, _ = _decode_header(path)
        assert magic == b"FCPG" and version == 1 and dtype == 0
        assert len(dims) == 4
        assert dims[0] == 10
        assert dims[1] == EXPECTED_RESNET18_FILTERS[layer]
        assert payload.size == math.prod(dims)
        assert float(payload.min()) >= 0.0


def test_primary_reader_parses_smoke_files(smoke_files):
    for path in smoke_files:
        proc = subprocess.run(
            ["copulagcf", "inspect", str(path)], capture_output=True, text=True
        )
        assert proc.returncode == 0, proc.stderr
        assert f"elements={math.prod(_decode_header(path)[3])}" in proc.stdout


def test_extraction_deterministic(tmp_path):
    outs = []
    for name in ("a", "b"):
        spec = ExtractionSpec(
            arch="resnet18",
            dataset="synthetic",
            weights="random",
            num_images=4,
            batch_size=2,
            out_dir=str(tmp_path / name),
            seed=9,
        )
        outs.append([open(p, "rb").read() for p in extract(spec)])
    assert all(a == b for a, b in zip(*outs))


def test_spatial_stride_subsampling(tmp_path):
    spec = ExtractionSpec(
        arch="resnet18", dataset="synthetic", weights="random",
        num_images=2, out_dir=str(tmp_path), seed=1, stride=2,
    )
    paths = extract(spec)
    dims = _decode_header(tmp_path / paths[0].split("/")[-1])[3]
    assert dims[2] == 28 and dims[3] == 28  # 56/2 after the stem pool


def test_writer_round_trips_through_primary_reader(tmp_path):
    from copulagcf import read_tensor  # format boundary check against the analysis side

    rng = np.random.default_rng(0)
    values = rng.standard_normal((2, 3, 4, 5)).astype(np.float32)
    path = tmp_path / "t.fcpg"
    write_tensor(path, values)
    back = read_tensor(path)
    assert back.dims == (2, 3, 4, 5)
    assert back.payload.tobytes() == values.tobytes()


def test_verify_report_structure(smoke_files):
    report = verify_against_reference(smoke_files)
    rows = report["layers"]
    assert len(rows) == 5
    refs = [r["reference_pct"] for r in rows]
    assert refs == [87.7, 77.0, 50.3, 46.1, 52.2]
    for row in rows:
        assert 0.0 <= row["nonzero_pct"] <= 100.0
        assert row["delta"] == pytest.approx(row["nonzero_pct"] - row["reference_pct"], abs=1e-3)
    assert "informational" in report["note"]
    parsed = json.loads(report_to_json(report))
    assert parsed["layers"][0]["layer"] == 0


def test_verify_report_all_positive_file(tmp_path):
    path = tmp_path / "pos.fcpg"
    write_tensor(path, np.full((1, 2, 3, 3), 0.5, dtype=np.float32))
    report = verify_against_reference([path])
    assert report["layers"][0]["nonzero_pct"] == 100.0


def test_architecture_tables():
    assert get_architecture("resnet18").filters == EXPECTED_RESNET18_FILTERS
    assert get_architecture("resnet50").filters == (64, 256, 512, 1024, 2048)
    assert get_architecture("vgg19").filters == (64, 128, 256, 512, 512)
    with pytest.raises(ValueError):
        get_architecture("alexnet")


def test_resnet50_tap_channels(tmp_path):
    spec = ExtractionSpec(
        arch="resnet50", dataset="synthetic", weights="random",
        num_images=1, out_dir=str(tmp_path), seed=1, image_size=64,
    )
    paths = extract(spec)
    for layer, p in enumerate(paths):
        dims = _decode_header(tmp_path / p.split("/")[-1])[3]
        assert dims[1] == get_architecture("resnet50").filters[layer]


def test_spec_validation():
    with pytest.raises(ValueError):
        ExtractionSpec(arch="resnet18", dataset="synthetic", num_images=None)
    with pytest.raises(ValueError):
        ExtractionSpec(arch="resnet18", weights="finetuned", num_images=2)
    with pytest.raises(ValueError):
        ExtractionSpec(arch="lenet", num_images=2)


def test_pretrained_unavailable_raises_cleanly():
    torch_home = torch.hub.get_dir()
    spec = ExtractionSpec(arch="resnet18", weights="pretrained", num_images=1)
    try:
        from extractor.extract import build_model

        build_model(spec)
    except RuntimeError as exc:
        assert "pretrained weights" in str(exc)
    else:
        # weights were cached locally; that is fine too
        assert torch_home
