"""Parallel-beam forward projection and the sparse-view angle schemes.

The projector rotates each frame by -angle about the z axis (bilinear
in-plane interpolation, zero outside the grid) and sums along the x axis
with unit sampling step, giving detector images indexed (u, v) = (Y, Z).
Rotation + summation is materialized once per (angle, X, Y) as a sparse
matrix so the backprojector can use the exact transpose.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import sparse

from .core4d import Volume4D
from .errors import DomainError, FormatError

PRJ4D_MAGIC = b"PRJ4D\x00\x00\x00"
PRJ4D_HEADER_SIZE = 64
_HEADER_STRUCT = struct.Struct("<8s5IB")

ANGLE_GRID_SIZE = 16  # full half-turn acquisition: 16 angles, 11.25 deg apart
ANGLE_GRID_STEP_DEG = 180.0 / ANGLE_GRID_SIZE

_matrix_cache: dict[tuple[float, int, int], sparse.csr_matrix] = {}


def projection_matrix(angle_deg: float, nx: int, ny: int) -> sparse.csr_matrix:
    """Sparse (Y, X*Y) operator: rotate an (X, Y) slice by -angle, sum along x.

    The transpose of this matrix is the exact adjoint used for backprojection.
    """
    key = (float(angle_deg), nx, ny)
    cached = _matrix_cache.get(key)
    if cached is not None:
        return cached

    theta = np.deg2rad(angle_deg)
    cx, cy = (nx - 1) / 2.0, (ny - 1) / 2.0
    xs, ys = np.meshgrid(
        np.arange(nx, dtype=np.float64), np.arange(ny, dtype=np.float64), indexing="ij"
    )
    # Inverse mapping for a rotation of the image content by -theta.
    dx, dy = xs - cx, ys - cy
    src_x = cx + np.cos(theta) * dx - np.sin(theta) * dy
    src_y = cy + np.sin(theta) * dx + np.cos(theta) * dy

    x0 = np.floor(src_x).astype(np.int64)
    y0 = np.floor(src_y).astype(np.int64)
    wx = src_x - x0
    wy = src_y - y0

    rows_u = ys.astype(np.int64).ravel()  # detector coordinate u = rotated y index
    row_list, col_list, val_list = [], [], []
    for ox, oy, weight in (
        (0, 0, (1 - wx) * (1 - wy)),
        (0, 1, (1 - wx) * wy),
        (1, 0, wx * (1 - wy)),
        (1, 1, wx * wy),
    ):
        gx = (x0 + ox).ravel()
        gy = (y0 + oy).ravel()
        w = weight.ravel()
        valid = (gx >= 0) & (gx < nx) & (gy >= 0) & (gy < ny) & (w != 0.0)
        row_list.append(rows_u[valid])
        col_list.append(gx[valid] * ny + gy[valid])
        val_list.append(w[valid])

    mat = sparse.coo_matrix(
        (np.concatenate(val_list), (np.concatenate(row_list), np.concatenate(col_list))),
        shape=(ny, nx * ny),
    ).tocsr()
    _matrix_cache[key] = mat
    return mat


def _check_angle(angle_deg: float) -> None:
    if not (0.0 <= angle_deg < 180.0):
        raise DomainError(f"angle must be in [0, 180) degrees, got {angle_deg}")


def project_frame(frame: np.ndarray, angle_deg: float) -> np.ndarray:
    """Line integrals of a 3D (X, Y, Z) frame; returns a (Y, Z) image."""
    _check_angle(angle_deg)
    frame = np.asarray(frame, dtype=np.float64)
    if frame.ndim != 3:
        raise DomainError(f"frame must be 3D (X,Y,Z), got ndim={frame.ndim}")
    nx, ny, nz = frame.shape
    mat = projection_matrix(angle_deg, nx, ny)
    return np.asarray(mat @ frame.reshape(nx * ny, nz))


def project_frames(frames: np.ndarray, angle_deg: float) -> np.ndarray:
    """Project a (T, X, Y, Z) stack at one angle; returns (T, Y, Z)."""
    _check_angle(angle_deg)
    frames = np.asarray(frames, dtype=np.float64)
    t, nx, ny, nz = frames.shape
    mat = projection_matrix(angle_deg, nx, ny)
    flat = frames.transpose(1, 2, 0, 3).reshape(nx * ny, t * nz)
    return np.asarray(mat @ flat).reshape(ny, t, nz).transpose(1, 0, 2)


def evenly_spaced_angles(i: int, offset_index: int = 0) -> tuple[float, ...]:
    """``i`` evenly spaced angles in [0, 180) on the 16-angle grid.

    The coset base is offset_index * 11.25 degrees; offsets cover the
    16/i distinct cosets of the full grid.
    """
    if i == 1:
        raise DomainError(
            "single-view acquisition is excluded: one projection carries no "
            "shared 3D information"
        )
    if i < 2:
        raise DomainError(f"projection count must be >= 2, got {i}")
    if ANGLE_GRID_SIZE % i != 0:
        raise DomainError(
            f"projection count {i} must divide the {ANGLE_GRID_SIZE}-angle grid"
        )
    n_cosets = ANGLE_GRID_SIZE // i
    if not (0 <= offset_index < n_cosets):
        raise DomainError(
            f"offset_index must be in [0, {n_cosets}) for i={i}, got {offset_index}"
        )
    base = offset_index * ANGLE_GRID_STEP_DEG
    return tuple((base + m * (180.0 / i)) % 180.0 for m in range(i))


def ultra_sparse_angles(experiment_index: int) -> tuple[float, float, float, float]:
    """Four views 45 degrees apart with a per-experiment offset.

    Experiments 1..16 cycle through eight offsets of 11.25 degrees; angles
    wrap modulo 180 and are emitted in acquisition order (unsorted when
    wrapped).
    """
    if not (1 <= experiment_index <= 16):
        raise DomainError(
            f"experiment_index must be in 1..16, got {experiment_index}"
        )
    offset = ((experiment_index - 1) % 8) * ANGLE_GRID_STEP_DEG
    return tuple((offset + d) % 180.0 for d in (0.0, 45.0, 90.0, 135.0))


@dataclass(frozen=True, eq=False)
class ProjectionSet:
    """All projections of one experiment: (T, n_angles, U, V) images.

    Angles are stored sorted and are constant across frames. The
    ``geometry_known`` flag records whether absolute orientations were
    available at acquisition time (false for scanning-free ultra-sparse
    setups); it is provenance metadata and does not change the stored angles.
    """

    experiment_id: int
    angles_deg: tuple[float, ...]
    images: np.ndarray
    geometry_known: bool = True

    def __post_init__(self):
        angles = tuple(float(a) for a in self.angles_deg)
        if len(angles) == 0:
            raise DomainError("a projection set needs at least one angle")
        for a in angles:
            _check_angle(a)
        if any(b <= a for a, b in zip(angles, angles[1:])):
            raise DomainError(f"angles must be strictly increasing, got {angles}")
        arr = np.array(self.images, dtype=np.float32, order="C", copy=True)
        if arr.ndim != 4:
            raise DomainError(f"images must be (T, n_angles, U, V), got {arr.shape}")
        if arr.shape[1] != len(angles):
            raise DomainError(
                f"image count per frame ({arr.shape[1]}) != angle count ({len(angles)})"
            )
        if not np.all(np.isfinite(arr)):
            raise DomainError("projection images contain non-finite values")
        arr.setflags(write=False)
        object.__setattr__(self, "images", arr)
        object.__setattr__(self, "angles_deg", angles)

    @property
    def n_frames(self) -> int:
        return self.images.shape[0]

    @property
    def detector_dims(self) -> tuple[int, int]:
        return self.images.shape[2], self.images.shape[3]

    def subset(self, angle_indices) -> "ProjectionSet":
        """Restriction to a subset of the acquired angles."""
        idx = sorted(int(k) for k in angle_indices)
        if len(set(idx)) != len(idx):
            raise DomainError("duplicate angle indices in subset")
        if idx and (idx[0] < 0 or idx[-1] >= len(self.angles_deg)):
            raise DomainError(f"angle index out of range: {idx}")
        return ProjectionSet(
            experiment_id=self.experiment_id,
            angles_deg=tuple(self.angles_deg[k] for k in idx),
            images=self.images[:, idx],
            geometry_known=self.geometry_known,
        )


def acquire(
    volume: Volume4D,
    angles_deg,
    geometry_known: bool = True,
    experiment_id: int = 0,
) -> ProjectionSet:
    """Project every frame of a volume at every angle (angles sorted first)."""
    angles = sorted(float(a) for a in angles_deg)
    data = volume.as_float64()
    t, nx, ny, nz = data.shape
    images = np.empty((t, len(angles), ny, nz), dtype=np.float32)
    for j, angle in enumerate(angles):
        images[:, j] = project_frames(data, angle)
    return ProjectionSet(
        experiment_id=experiment_id,
        angles_deg=tuple(angles),
        images=images,
        geometry_known=geometry_known,
    )


def write_projections(pset: ProjectionSet, path) -> None:
    """Write a projection set in the PRJ4D format."""
    t, a, u, v = pset.images.shape
    header = _HEADER_STRUCT.pack(
        PRJ4D_MAGIC, pset.experiment_id, t, a, u, v, int(pset.geometry_known)
    )
    header = header.ljust(PRJ4D_HEADER_SIZE, b"\x00")
    angle_table = np.asarray(pset.angles_deg, dtype="<f8").tobytes()
    payload = pset.images.astype("<f4", copy=False).tobytes(order="C")
    Path(path).write_bytes(header + angle_table + payload)


def read_projections(path) -> ProjectionSet:
    """Read a PRJ4D file written by :func:`write_projections`."""
    raw = Path(path).read_bytes()
    if len(raw) < PRJ4D_HEADER_SIZE:
        raise FormatError(
            f"file too short for PRJ4D header: {len(raw)} bytes", offset=len(raw)
        )
    if raw[:8] != PRJ4D_MAGIC:
        raise FormatError(f"bad magic {raw[:8]!r}, expected {PRJ4D_MAGIC!r}", offset=0)
    _, exp_id, t, a, u, v, geom = _HEADER_STRUCT.unpack(raw[: _HEADER_STRUCT.size])
    if min(t, a, u, v) == 0:
        raise FormatError(f"zero dimension in header: {(t, a, u, v)}", offset=8)
    angle_bytes = a * 8
    image_bytes = t * a * u * v * 4
    expected = PRJ4D_HEADER_SIZE + angle_bytes + image_bytes
    if len(raw) != expected:
        raise FormatError(
            f"payload size mismatch: expected {expected} bytes total, got {len(raw)}",
            offset=min(len(raw), expected),
        )
    angles = np.frombuffer(
        raw, dtype="<f8", count=a, offset=PRJ4D_HEADER_SIZE
    ).tolist()
    images = np.frombuffer(
        raw, dtype="<f4", count=t * a * u * v, offset=PRJ4D_HEADER_SIZE + angle_bytes
    ).reshape(t, a, u, v)
    return ProjectionSet(
        experiment_id=exp_id,
        angles_deg=tuple(angles),
        images=images,
        geometry_known=bool(geom),
    )
