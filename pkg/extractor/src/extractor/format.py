"""Writer for the FCPG feature tensor format.

Layout (little-endian): magic ``FCPG``, uint32 version (1), uint8 dtype
code (0 = float32 LE), uint8 ndim, ndim x uint64 dims in the order
(images, filters, rows, cols), then the row-major float32 payload. This
must stay bit-compatible with the analysis side's reader.
"""

from __future__ import annotations

import struct

import numpy as np

MAGIC = b"FCPG"
VERSION = 1
DTYPE_FLOAT32 = 0


def write_tensor(path, values: np.ndarray) -> None:
    arr = np.ascontiguousarray(values, dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sIBB", MAGIC, VERSION, DTYPE_FLOAT32, arr.ndim))
        fh.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        fh.write(arr.tobytes())
