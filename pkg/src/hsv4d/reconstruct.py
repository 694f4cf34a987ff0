"""Pluggable reconstruction with a SIRT baseline.

The solver iterates, per frame and with all supplied projection sets pooled,

    x <- clamp(x + relaxation * C A^T R (b - A x))

where R and C are inverse row/column-sum normalizers of the projection
operator (rows or columns that sum to zero get weight zero). Frames are
reconstructed independently: a frame stops updating once its residual change
falls below ``stop_tol`` or after ``n_iterations``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

from .core4d import Volume4D
from .errors import DomainError, SolverError
from .projector import ProjectionSet, projection_matrix


@dataclass(frozen=True)
class SolverConfig:
    """Iteration controls for the SIRT baseline."""

    n_iterations: int = 50
    relaxation: float = 1.0
    nonneg_clamp: bool = True
    stop_tol: float = 1e-4

    def __post_init__(self):
        if self.n_iterations < 1:
            raise DomainError("n_iterations must be >= 1")
        if not (0.0 < self.relaxation <= 2.0):
            raise DomainError("relaxation must be in (0, 2]")
        if self.stop_tol < 0:
            raise DomainError("stop_tol must be >= 0")


class Reconstructor(Protocol):
    """Anything that maps projection sets to a 4D volume."""

    def reconstruct(
        self,
        sets: Sequence[ProjectionSet],
        dims: tuple[int, int, int, int],
        spacing_dx: float = 1.0,
        frame_dt: float = 1.0,
    ) -> Volume4D: ...


def backproject_frame(image: np.ndarray, angle_deg: float, dims) -> np.ndarray:
    """Exact adjoint of :func:`hsv4d.projector.project_frame`."""
    nx, ny, nz = (int(n) for n in dims)
    image = np.asarray(image, dtype=np.float64)
    if image.shape != (ny, nz):
        raise SolverError(
            f"image dims {image.shape} do not match detector dims {(ny, nz)}"
        )
    mat = projection_matrix(angle_deg, nx, ny)
    return np.asarray(mat.T @ image).reshape(nx, ny, nz)


def _pooled_system(sets: Sequence[ProjectionSet], dims):
    """Validate the pooled inputs and lay out per-angle data for iteration."""
    if not sets:
        raise SolverError("no projection sets supplied")
    t, nx, ny, nz = dims
    det = (ny, nz)
    entries = []
    for s in sets:
        if s.n_frames != t:
            raise SolverError(
                f"set {s.experiment_id}: frame count {s.n_frames} != requested {t}"
            )
        if s.detector_dims != det:
            raise SolverError(
                f"set {s.experiment_id}: detector dims {s.detector_dims} != {det} "
                "expected for the requested volume dims"
            )
        if len(s.angles_deg) == 0:
            raise SolverError(f"set {s.experiment_id}: empty angle list")
        data = s.images.astype(np.float64)
        for j, angle in enumerate(s.angles_deg):
            mat = projection_matrix(angle, nx, ny)
            b = data[:, j].transpose(1, 0, 2).reshape(ny, t * nz)
            row_sum = np.asarray(mat @ np.ones(nx * ny))
            r_weight = np.where(row_sum > 0, 1.0 / np.where(row_sum > 0, row_sum, 1.0), 0.0)
            entries.append((mat, b, r_weight[:, None]))
    col_sum = np.zeros(nx * ny)
    for mat, _, _ in entries:
        col_sum += np.asarray(mat.T @ np.ones(ny))
    c_weight = np.where(col_sum > 0, 1.0 / np.where(col_sum > 0, col_sum, 1.0), 0.0)
    return entries, c_weight[:, None]


def sirt_reconstruct(
    sets: Sequence[ProjectionSet] | ProjectionSet,
    config: SolverConfig,
    dims,
    spacing_dx: float = 1.0,
    frame_dt: float = 1.0,
    *,
    return_residuals: bool = False,
):
    """Reconstruct a (T, X, Y, Z) volume from one or more projection sets.

    All sets are pooled per frame; frames iterate independently from a zero
    start. With ``return_residuals`` the per-iteration, per-frame data
    residual norms are returned alongside the volume (rows = iterations).
    """
    if isinstance(sets, ProjectionSet):
        sets = [sets]
    dims = tuple(int(n) for n in dims)
    if len(dims) != 4 or any(n < 1 for n in dims):
        raise SolverError(f"dims must be four positive integers, got {dims}")
    t, nx, ny, nz = dims
    entries, c_weight = _pooled_system(sets, dims)

    x = np.zeros((nx * ny, t * nz))
    active = np.ones(t, dtype=bool)
    prev_residual = np.full(t, np.nan)
    history = []

    for _ in range(config.n_iterations):
        grad = np.zeros_like(x)
        res_sq = np.zeros(t)
        for mat, b, r_weight in entries:
            resid = b - np.asarray(mat @ x)
            res_sq += (resid * resid).reshape(ny, t, nz).sum(axis=(0, 2))
            grad += np.asarray(mat.T @ (r_weight * resid))
        residual = np.sqrt(res_sq)
        history.append(residual)

        newly_done = np.zeros(t, dtype=bool)
        known = ~np.isnan(prev_residual)
        with np.errstate(invalid="ignore", divide="ignore"):
            rel_change = np.abs(prev_residual - residual) / np.where(
                prev_residual > 0, prev_residual, 1.0
            )
        newly_done[known & (prev_residual == 0)] = True
        newly_done[known & (prev_residual > 0) & (rel_change < config.stop_tol)] = True
        active &= ~newly_done
        prev_residual = residual.copy()
        if not active.any():
            break

        x_new = x + config.relaxation * (c_weight * grad)
        if config.nonneg_clamp:
            np.maximum(x_new, 0.0, out=x_new)
        col_active = np.repeat(active, nz)
        x = np.where(col_active[None, :], x_new, x)

    volume = Volume4D(
        x.reshape(nx, ny, t, nz).transpose(2, 0, 1, 3),
        spacing_dx=spacing_dx,
        frame_dt=frame_dt,
    )
    if return_residuals:
        return volume, np.array(history)
    return volume


def reconstruct_pseudo_reference(
    sets: Sequence[ProjectionSet] | ProjectionSet,
    config: SolverConfig,
    dims,
    spacing_dx: float = 1.0,
    frame_dt: float = 1.0,
) -> Volume4D:
    """Reconstruction from the complete available data (the pseudo-reference)."""
    return sirt_reconstruct(sets, config, dims, spacing_dx, frame_dt)


@dataclass(frozen=True)
class SirtReconstructor:
    """Reconstructor interface wrapper around :func:`sirt_reconstruct`."""

    config: SolverConfig = SolverConfig()

    def reconstruct(
        self,
        sets: Sequence[ProjectionSet],
        dims: tuple[int, int, int, int],
        spacing_dx: float = 1.0,
        frame_dt: float = 1.0,
    ) -> Volume4D:
        return sirt_reconstruct(sets, self.config, dims, spacing_dx, frame_dt)
