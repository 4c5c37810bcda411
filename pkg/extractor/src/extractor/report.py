"""Informational nonzero-percentage report against published reference values.

The reference column is the layer-wise percentage of nonzero activations
for resnet18 on Imagenette2 with stock pretrained weights. Reproduction
depends on the exact weights and preprocessing, so the report carries
deltas, never a hard gate.
"""

from __future__ import annotations

import json
import math
import struct

import numpy as np

RESNET18_IMAGENETTE_NONZERO = (87.7, 77.0, 50.3, 46.1, 52.2)


def _read_fcpg(path) -> np.ndarray:
    with open(path, "rb") as fh:
        raw = fh.read()
    magic, version, dtype, ndim = struct.unpack_from("<4sIBB", raw, 0)
    if magic != b"FCPG" or version != 1 or dtype != 0:
        raise ValueError(f"{path}: not a readable feature tensor file")
    dims = struct.unpack_from(f"<{ndim}Q", raw, 10)
    count = math.prod(dims)
    payload = np.frombuffer(raw, dtype="<f4", count=count, offset=10 + 8 * ndim)
    return payload.reshape(dims)


def verify_against_reference(paths, reference=RESNET18_IMAGENETTE_NONZERO) -> dict:
    rows = []
    for layer, path in enumerate(paths):
        payload = _read_fcpg(path)
        nonzero = 100.0 * float((payload != 0.0).mean())
        ref = reference[layer] if layer < len(reference) else None
        rows.append(
            {
                "layer": layer,
                "file": str(path),
                "nonzero_pct": round(nonzero, 4),
                "reference_pct": ref,
                "delta": round(nonzero - ref, 4) if ref is not None else None,
            }
        )
    return {
        "note": "informational only; depends on weights and preprocessing",
        "layers": rows,
    }


def report_to_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"
