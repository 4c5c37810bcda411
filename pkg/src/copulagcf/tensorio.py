"""Binary storage of feature tensors and per-filter sample extraction.

File format (magic ``FCPG``, version 1, little-endian throughout):

====== ======== ===========================================
offset size     field
====== ======== ===========================================
0      4        magic bytes ``b"FCPG"``
4      4        version, uint32 (must be 1)
8      1        dtype code, uint8 (0 = float32 little-endian)
9      1        ndim, uint8
10     8*ndim   dims, uint64 each (order: images, filters, rows, cols)
...    4*prod   payload, float32 row-major
====== ======== ===========================================

The format is deliberately minimal so that an external producer can emit
it bit-exactly; round-tripping a file through :func:`read_tensor` /
:func:`write_tensor` preserves every payload bit.
"""

from __future__ import annotations

import math
import re
import struct
from dataclasses import dataclass, field

import numpy as np

MAGIC = b"FCPG"
VERSION = 1
DTYPE_FLOAT32 = 0

_HEADER_FIXED = struct.Struct("<4sIBB")


class TensorFormatError(Exception):
    """Base class for malformed tensor files."""


class BadMagicError(TensorFormatError):
    """File does not start with the expected magic bytes."""


class VersionMismatchError(TensorFormatError):
    """File declares an unsupported format version."""


class UnsupportedDtypeError(TensorFormatError):
    """File declares a dtype code this reader cannot decode."""


class TruncatedPayloadError(TensorFormatError):
    """Payload holds fewer values than the header dims promise."""


@dataclass
class FeatureTensorFile:
    """A parsed tensor file: header dims plus the float32 payload."""

    dims: tuple[int, ...]
    payload: np.ndarray  # float32, shape == dims

    def __post_init__(self) -> None:
        self.dims = tuple(int(d) for d in self.dims)
        self.payload = np.ascontiguousarray(self.payload, dtype=np.float32)
        if self.payload.shape != self.dims:
            if self.payload.size != math.prod(self.dims):
                raise ValueError(
                    f"payload has {self.payload.size} elements, dims {self.dims} "
                    f"require {math.prod(self.dims)}"
                )
            self.payload = self.payload.reshape(self.dims)

    @property
    def ndim(self) -> int:
        return len(self.dims)

    @property
    def size(self) -> int:
        return math.prod(self.dims)


@dataclass
class FeatureSample:
    """Flattened activation sample of a single filter.

    Values are non-negative by contract (they come from rectified
    activations); the constructor enforces this.
    """

    values: np.ndarray
    filter_id: int = 0
    layer_id: int = 0

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64).ravel()
        if self.values.size and float(self.values.min()) < 0.0:
            raise ValueError("feature sample contains negative values")

    @property
    def n(self) -> int:
        return self.values.size


def write_tensor(path, values: np.ndarray) -> None:
    """Write an array as a version-1 tensor file (cast to float32)."""
    arr = np.ascontiguousarray(values, dtype="<f4")  # promotes scalars to 1-d
    dims = arr.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER_FIXED.pack(MAGIC, VERSION, DTYPE_FLOAT32, len(dims)))
        fh.write(struct.pack(f"<{len(dims)}Q", *dims))
        fh.write(arr.tobytes())


def read_tensor(path) -> FeatureTensorFile:
    """Parse a tensor file, reporting each malformation distinctly.

    Raises
    ------
    BadMagicError, VersionMismatchError, UnsupportedDtypeError,
    TruncatedPayloadError, TensorFormatError
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER_FIXED.size:
        raise BadMagicError(f"{path}: file shorter than fixed header")
    magic, version, dtype_code, ndim = _HEADER_FIXED.unpack_from(raw, 0)
    if magic != MAGIC:
        raise BadMagicError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise VersionMismatchError(f"{path}: version {version}, expected {VERSION}")
    if dtype_code != DTYPE_FLOAT32:
        raise UnsupportedDtypeError(f"{path}: dtype code {dtype_code} not supported")
    if ndim == 0:
        raise TensorFormatError(f"{path}: zero-dimensional tensors are not valid")
    offset = _HEADER_FIXED.size
    if len(raw) < offset + 8 * ndim:
        raise TruncatedPayloadError(f"{path}: header dims truncated")
    dims = struct.unpack_from(f"<{ndim}Q", raw, offset)
    offset += 8 * ndim
    expected = math.prod(dims)
    payload_bytes = len(raw) - offset
    if payload_bytes < 4 * expected:
        raise TruncatedPayloadError(
            f"{path}: payload holds {payload_bytes // 4} values, dims {dims} "
            f"require {expected}"
        )
    if payload_bytes > 4 * expected:
        raise TensorFormatError(
            f"{path}: {payload_bytes - 4 * expected} trailing bytes after payload"
        )
    payload = np.frombuffer(raw, dtype="<f4", count=expected, offset=offset)
    return FeatureTensorFile(dims=dims, payload=payload.reshape(dims))


def flatten_filter(tensor: FeatureTensorFile, filt: int, layer_id: int = 0) -> FeatureSample:
    """Extract every spatial position of one filter across all images.

    Ordering is (image, row, col) lexicographic. Requires a 4-dimensional
    tensor laid out as (images, filters, rows, cols).
    """
    if tensor.ndim != 4:
        raise ValueError(f"expected 4-d tensor, got {tensor.ndim}-d")
    n_filters = tensor.dims[1]
    if not 0 <= filt < n_filters:
        raise IndexError(f"filter {filt} out of range [0, {n_filters})")
    values = tensor.payload[:, filt, :, :].ravel()
    return FeatureSample(values=values, filter_id=filt, layer_id=layer_id)


def describe(tensor: FeatureTensorFile) -> str:
    """One-line human-readable header summary (CLI ``inspect``)."""
    return (
        f"dims={list(tensor.dims)} dtype=float32 elements={tensor.size} "
        f"min={float(tensor.payload.min()):.6g} max={float(tensor.payload.max()):.6g}"
        if tensor.size
        else f"dims={list(tensor.dims)} dtype=float32 elements=0"
    )


# ---------------------------------------------------------------------------
# Synthetic sample generation (test oracle support)
# ---------------------------------------------------------------------------

_FAMILIES = ("uniform", "gaussian", "exponential", "gamma", "weibull")


@dataclass(frozen=True)
class SynthSpec:
    """Descriptor of a synthetic non-negative distribution.

    ``zero_mass`` wraps the base distribution with an exact point mass at
    zero, mimicking rectified activations.
    """

    family: str
    params: tuple[float, ...] = field(default=())
    zero_mass: float = 0.0

    def __post_init__(self) -> None:
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        p = self.params
        if self.family == "uniform":
            if len(p) != 2 or not 0.0 <= p[0] < p[1]:
                raise ValueError(f"uniform needs 0 <= a < b, got {p}")
        elif self.family == "gaussian":
            if len(p) != 2 or p[1] <= 0.0:
                raise ValueError(f"gaussian needs sigma > 0, got {p}")
        elif self.family == "exponential":
            if len(p) != 1 or p[0] <= 0.0:
                raise ValueError(f"exponential needs rate > 0, got {p}")
        else:  # gamma, weibull: (shape, scale)
            if len(p) != 2 or p[0] <= 0.0 or p[1] <= 0.0:
                raise ValueError(f"{self.family} needs shape > 0 and scale > 0, got {p}")
        if not 0.0 <= self.zero_mass <= 1.0:
            raise ValueError(f"zero mass must lie in [0, 1], got {self.zero_mass}")


def zero_inflated(p_zero: float, base: SynthSpec) -> SynthSpec:
    if base.zero_mass != 0.0:
        raise ValueError("base spec is already zero-inflated")
    return SynthSpec(base.family, base.params, zero_mass=p_zero)


def _positive_draw(spec: SynthSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    f, p = spec.family, spec.params
    if f == "uniform":
        return rng.uniform(p[0], p[1], n)
    if f == "gaussian":
        # truncated at 0 via inverse-cdf on the admissible quantile range
        from scipy.stats import truncnorm

        a = (0.0 - p[0]) / p[1]
        return truncnorm.rvs(a, np.inf, loc=p[0], scale=p[1], size=n, random_state=rng)
    if f == "exponential":
        return rng.exponential(1.0 / p[0], n)
    if f == "gamma":
        return rng.gamma(p[0], p[1], n)
    return p[1] * rng.weibull(p[0], n)


def synth_sample(
    spec: SynthSpec, n: int, seed: int, filter_id: int = 0, layer_id: int = 0
) -> FeatureSample:
    """Draw a deterministic sample; equal seeds give bit-identical output."""
    if n <= 0:
        raise ValueError(f"sample size must be positive, got {n}")
    rng = np.random.default_rng(seed)
    if spec.zero_mass > 0.0:
        zero_mask = rng.random(n) < spec.zero_mass
        values = _positive_draw(spec, n, rng)
        values[zero_mask] = 0.0
    else:
        values = _positive_draw(spec, n, rng)
    return FeatureSample(values=values, filter_id=filter_id, layer_id=layer_id)


_SPEC_RE = re.compile(r"^\s*([a-z-]+)\s*\((.*)\)\s*$", re.IGNORECASE)

_ALIASES = {
    "uni": "uniform",
    "uniform": "uniform",
    "gauss": "gaussian",
    "gaussian": "gaussian",
    "exp": "exponential",
    "exponential": "exponential",
    "gamma": "gamma",
    "weibull": "weibull",
}


def parse_synth(text: str) -> SynthSpec:
    """Parse descriptors like ``exp(1.5)``, ``gamma(2,0.5)``, ``zi(0.4,exp(1))``."""
    m = _SPEC_RE.match(text)
    if not m:
        raise ValueError(f"cannot parse distribution descriptor {text!r}")
    name, body = m.group(1).lower(), m.group(2).strip()
    if name == "zi":
        head, sep, rest = body.partition(",")
        if not sep:
            raise ValueError(f"zi(...) needs a mass and a base distribution: {text!r}")
        return zero_inflated(float(head), parse_synth(rest))
    if name not in _ALIASES:
        raise ValueError(f"unknown distribution {name!r}")
    params = tuple(float(tok) for tok in body.split(",")) if body else ()
    return SynthSpec(_ALIASES[name], params)
