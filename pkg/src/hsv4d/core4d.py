"""Core 4D data model, sampling-theory helpers, and the VOL4D binary volume format.

A 4D dataset is a T x X x Y x Z scalar intensity grid with uniform voxel
spacing ``spacing_dx`` and frame interval ``frame_dt``. Every other module
exchanges volumes through :class:`Volume4D` or through the VOL4D file format
defined here.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError, FormatError

VOL4D_MAGIC = b"VOL4D\x00\x00\x00"
VOL4D_HEADER_SIZE = 64

# Header layout: 8-byte magic, four uint32 LE dims (T, X, Y, Z),
# two float64 LE (spacing_dx, frame_dt), zero padding to 64 bytes.
_HEADER_STRUCT = struct.Struct("<8s4I2d")


@dataclass(frozen=True, eq=False)
class Volume4D:
    """Immutable T x X x Y x Z intensity grid.

    ``data`` is held as a read-only C-contiguous float32 array; all metric
    arithmetic elsewhere promotes to float64. Instances are safe to share
    across concurrent workers.
    """

    data: np.ndarray
    spacing_dx: float = 1.0
    frame_dt: float = 1.0

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.float32, order="C", copy=True)
        if arr.ndim != 4:
            raise DomainError(f"volume data must be 4D (T,X,Y,Z), got ndim={arr.ndim}")
        if any(n < 1 for n in arr.shape):
            raise DomainError(f"volume dims must be positive, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise DomainError("volume data contains non-finite values")
        if not self.spacing_dx > 0:
            raise DomainError(f"spacing_dx must be > 0, got {self.spacing_dx}")
        if not self.frame_dt > 0:
            raise DomainError(f"frame_dt must be > 0, got {self.frame_dt}")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def dims(self) -> tuple[int, int, int, int]:
        return self.data.shape  # type: ignore[return-value]

    @property
    def n_frames(self) -> int:
        return self.data.shape[0]

    def frame(self, t: int) -> np.ndarray:
        """Read-only (X, Y, Z) view of frame ``t``."""
        return self.data[t]

    def as_float64(self) -> np.ndarray:
        """Copy of the data promoted to float64 for numeric work."""
        return self.data.astype(np.float64)

    def with_frames(self, frame_indices, frame_dt: float | None = None) -> "Volume4D":
        """New volume restricted to the given frame indices (in order)."""
        idx = np.asarray(frame_indices, dtype=np.intp)
        return Volume4D(
            self.data[idx],
            spacing_dx=self.spacing_dx,
            frame_dt=self.frame_dt if frame_dt is None else frame_dt,
        )

    def allclose(self, other: "Volume4D", rtol=1e-7, atol=0.0) -> bool:
        return self.dims == other.dims and np.allclose(
            self.data, other.data, rtol=rtol, atol=atol
        )


@dataclass(frozen=True)
class GeometrySpec:
    """Acquisition geometry: object extent D, target resolution d, half-turn scan.

    Rotation is always about the z axis over an angular range of 180 degrees.
    """

    object_extent: float
    target_resolution: float
    rotation_axis: str = field(default="z", init=False)
    angular_range_deg: float = field(default=180.0, init=False)

    def __post_init__(self):
        if not self.target_resolution > 0:
            raise DomainError("target_resolution must be > 0")
        if self.object_extent < self.target_resolution:
            raise DomainError("object_extent must be >= target_resolution")

    @property
    def required_projections(self) -> int:
        return crowther_count(self.object_extent, self.target_resolution)


def nyquist_velocity(dx: float, dt: float) -> float:
    """Maximum object speed resolvable without temporal aliasing: dx / dt."""
    if not dx > 0:
        raise DomainError(f"dx must be > 0, got {dx}")
    if not dt > 0:
        raise DomainError(f"dt must be > 0, got {dt}")
    return dx / dt


def crowther_count(object_extent: float, resolution: float) -> int:
    """Minimum number of equally spaced projections, ceil(pi * D / d).

    Rounds up: the criterion is a minimum, rounding down would under-sample.
    """
    if not resolution > 0:
        raise DomainError(f"resolution must be > 0, got {resolution}")
    if object_extent < resolution:
        raise DomainError(
            f"object_extent ({object_extent}) must be >= resolution ({resolution})"
        )
    return int(math.ceil(math.pi * object_extent / resolution))


def acquired_fraction(n_acquired: int, object_extent: float, resolution: float) -> float:
    """Ratio of acquired projections to the minimum required count.

    Exposes how (under-)sampled an acquisition is; e.g. 16 acquired views of
    an object with D/d = 128 gives 16/403.
    """
    if n_acquired < 0:
        raise DomainError(f"n_acquired must be >= 0, got {n_acquired}")
    return n_acquired / crowther_count(object_extent, resolution)


def check_temporal_nyquist(v_max: float, dx: float, dt: float) -> bool:
    """True iff the displacement per frame, v_max * dt, is at most one voxel."""
    if not v_max > 0:
        raise DomainError(f"v_max must be > 0, got {v_max}")
    if not dx > 0:
        raise DomainError(f"dx must be > 0, got {dx}")
    if not dt > 0:
        raise DomainError(f"dt must be > 0, got {dt}")
    return v_max * dt <= dx


def write_volume(volume: Volume4D, path) -> None:
    """Write a volume in the VOL4D format (fixed little-endian layout)."""
    t, x, y, z = volume.dims
    header = _HEADER_STRUCT.pack(
        VOL4D_MAGIC, t, x, y, z, volume.spacing_dx, volume.frame_dt
    )
    header = header.ljust(VOL4D_HEADER_SIZE, b"\x00")
    payload = volume.data.astype("<f4", copy=False).tobytes(order="C")
    Path(path).write_bytes(header + payload)


def read_volume(path) -> Volume4D:
    """Read a VOL4D file; write -> read is bit-exact on data and metadata."""
    raw = Path(path).read_bytes()
    if len(raw) < VOL4D_HEADER_SIZE:
        raise FormatError(
            f"file too short for VOL4D header: {len(raw)} < {VOL4D_HEADER_SIZE} bytes",
            offset=len(raw),
        )
    if raw[:8] != VOL4D_MAGIC:
        raise FormatError(f"bad magic {raw[:8]!r}, expected {VOL4D_MAGIC!r}", offset=0)
    _, t, x, y, z, dx, dt = _HEADER_STRUCT.unpack(raw[: _HEADER_STRUCT.size])
    if min(t, x, y, z) == 0:
        raise FormatError(f"zero dimension in header: {(t, x, y, z)}", offset=8)
    n_values = t * x * y * z
    n_bytes = n_values * 4
    if n_bytes > (1 << 62):
        raise FormatError(f"dimension overflow: {(t, x, y, z)}", offset=8)
    payload = raw[VOL4D_HEADER_SIZE:]
    if len(payload) != n_bytes:
        kind = "truncated" if len(payload) < n_bytes else "oversized"
        raise FormatError(
            f"{kind} payload: expected {n_bytes} bytes ({n_values} values), "
            f"got {len(payload)}",
            offset=VOL4D_HEADER_SIZE + min(len(payload), n_bytes),
        )
    data = np.frombuffer(payload, dtype="<f4").reshape(t, x, y, z)
    if not np.all(np.isfinite(data)):
        raise FormatError("payload contains non-finite values", offset=VOL4D_HEADER_SIZE)
    return Volume4D(data, spacing_dx=dx, frame_dt=dt)
