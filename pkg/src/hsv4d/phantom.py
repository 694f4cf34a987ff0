"""Analytic two-droplet collision phantom.

Two smooth spheres approach each other along one axis, touch, and coalesce
into a single volume-conserving blob. The density of a frame is

    rho(p, t) = peak * sigmoid(phi(p, t) / blend_width)

where phi is a smooth union (log-sum-exp soft maximum with scale
``blend_width``) of two signed sphere fields, minus a coincidence correction
that removes the soft-max inflation as the centers merge. Motion is at most
``speed`` voxels per frame per droplet, which keeps every experiment inside
the temporal Nyquist limit when ``speed <= 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import expit

from .core4d import Volume4D
from .errors import DomainError, GeometryError
from .seeding import rng_for

_AXES = ("x", "y", "z")


@dataclass(frozen=True)
class PhantomParams:
    """Geometry and kinematics of one collision experiment (voxel units)."""

    radius_a: float = 6.0
    radius_b: float = 5.0
    speed: float = 0.85
    approach_axis: str = "x"
    blend_width: float = 0.5
    intensity_peak: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.approach_axis not in _AXES:
            raise DomainError(f"approach_axis must be one of {_AXES}")
        if not (0.0 <= self.speed <= 1.0):
            raise DomainError(
                f"speed must be in [0, 1] voxel/frame (temporal Nyquist), got {self.speed}"
            )
        if not self.blend_width > 0:
            raise DomainError("blend_width must be > 0")
        if self.radius_a < 2 * self.blend_width or self.radius_b < 2 * self.blend_width:
            raise DomainError("radii must be >= 2 * blend_width")
        if not self.intensity_peak > 0:
            raise DomainError("intensity_peak must be > 0")

    @property
    def merged_radius(self) -> float:
        """Radius of the volume-conserving coalesced sphere."""
        return (self.radius_a**3 + self.radius_b**3) ** (1.0 / 3.0)


@dataclass(frozen=True)
class EnsembleSpec:
    """A family of quasi-reproducible experiments with parameter perturbations."""

    n_experiments: int
    variation_fraction: float
    base_params: PhantomParams
    dims: tuple[int, int, int, int]
    master_seed: int = 0

    def __post_init__(self):
        if self.n_experiments < 1:
            raise DomainError("n_experiments must be >= 1")
        if not (0.0 <= self.variation_fraction < 1.0):
            raise DomainError("variation_fraction must be in [0, 1)")
        if len(self.dims) != 4 or any(n < 1 for n in self.dims):
            raise DomainError(f"dims must be four positive integers, got {self.dims}")


def _centers_margin(params: PhantomParams) -> float:
    # Room left between any sphere surface and the grid edge.
    return 2.0 * params.blend_width + 0.5


def _trajectory(params: PhantomParams, dims) -> tuple[np.ndarray, int]:
    """Per-frame half-separation s(t) along the approach axis, and the axis index.

    The starting half-separation uses all headroom the grid allows; centers
    move toward the grid midpoint at ``speed`` voxels per frame and stop when
    they coincide.
    """
    t_frames, *spatial = dims
    axis = _AXES.index(params.approach_axis)
    half_extent = (spatial[axis] - 1) / 2.0
    margin = _centers_margin(params)
    s0 = half_extent - max(params.radius_a, params.radius_b) - margin
    if s0 < 0:
        raise GeometryError(
            f"frame 0: droplets of radii ({params.radius_a}, {params.radius_b}) "
            f"do not fit along axis {params.approach_axis} of length {spatial[axis]}"
        )
    t = np.arange(t_frames, dtype=np.float64)
    separation = np.maximum(s0 - params.speed * t, 0.0)
    return separation, axis


def _check_merged_fit(params: PhantomParams, dims) -> None:
    margin = _centers_margin(params)
    r_needed = max(params.radius_a, params.radius_b, params.merged_radius)
    for axis, n in enumerate(dims[1:]):
        if r_needed + margin > (n - 1) / 2.0:
            sep, _ = _trajectory(params, dims)
            first_merged = int(np.argmax(sep == 0.0)) if np.any(sep == 0.0) else 0
            raise GeometryError(
                f"frame {first_merged}: blob radius {r_needed:.3f} exceeds grid "
                f"axis {_AXES[axis]} of length {n}"
            )


def generate_experiment(params: PhantomParams, dims) -> Volume4D:
    """Render one collision experiment as a Volume4D.

    Frame densities lie in [0, intensity_peak]; per-frame center displacement
    never exceeds one voxel.
    """
    dims = tuple(int(n) for n in dims)
    if len(dims) != 4 or any(n < 1 for n in dims):
        raise DomainError(f"dims must be four positive integers, got {dims}")
    separation, axis = _trajectory(params, dims)
    _check_merged_fit(params, dims)

    t_frames, nx, ny, nz = dims
    center = np.array([(nx - 1) / 2.0, (ny - 1) / 2.0, (nz - 1) / 2.0])
    grid = np.meshgrid(
        np.arange(nx, dtype=np.float64),
        np.arange(ny, dtype=np.float64),
        np.arange(nz, dtype=np.float64),
        indexing="ij",
    )

    k = params.blend_width
    r_a, r_b = params.radius_a, params.radius_b
    r_m = params.merged_radius
    contact = r_a + r_b  # center distance at first touch

    out = np.empty(dims, dtype=np.float32)
    for t in range(t_frames):
        s = separation[t]
        # Coalescence progress: 0 before contact, 1 when centers coincide.
        progress = float(np.clip(1.0 - 2.0 * s / contact, 0.0, 1.0))
        smooth = progress * progress * (3.0 - 2.0 * progress)
        ra_t = r_a + smooth * (r_m - r_a)
        rb_t = r_b + smooth * (r_m - r_b)

        ca = center.copy()
        cb = center.copy()
        ca[axis] -= s
        cb[axis] += s
        da = np.sqrt(sum((g - c) ** 2 for g, c in zip(grid, ca)))
        db = np.sqrt(sum((g - c) ** 2 for g, c in zip(grid, cb)))
        phi = k * np.logaddexp((ra_t - da) / k, (rb_t - db) / k)
        # Remove the soft-max inflation (k*ln 2 at coincidence) so the fully
        # merged blob is exactly the volume-conserving sphere.
        phi -= k * math.log(2.0) * math.exp(-2.0 * s / k)
        out[t] = (params.intensity_peak * expit(phi / k)).astype(np.float32)

    return Volume4D(out)


def perturbed_params(spec: EnsembleSpec) -> list[PhantomParams]:
    """Per-experiment parameter draws, deterministic in the master seed.

    Radii and speed are scaled by independent factors uniform in
    [1 - variation, 1 + variation]; each experiment uses a seed derived by
    hashing (master_seed, index) so members can be generated in parallel.
    """
    members = []
    base = spec.base_params
    for index in range(spec.n_experiments):
        rng = rng_for(spec.master_seed, "phantom-experiment", index)
        lo, hi = 1.0 - spec.variation_fraction, 1.0 + spec.variation_fraction
        f_ra, f_rb, f_speed = rng.uniform(lo, hi, size=3)
        try:
            params = replace(
                base,
                radius_a=base.radius_a * f_ra,
                radius_b=base.radius_b * f_rb,
                speed=base.speed * f_speed,
                seed=int(rng.integers(0, 2**63 - 1)),
            )
        except DomainError as exc:
            raise GeometryError(f"experiment {index}: perturbed params invalid: {exc}")
        members.append(params)
    return members


def generate_ensemble(spec: EnsembleSpec) -> list[Volume4D]:
    """Render every experiment of the ensemble (bitwise deterministic)."""
    volumes = []
    for index, params in enumerate(perturbed_params(spec)):
        try:
            volumes.append(generate_experiment(params, spec.dims))
        except GeometryError as exc:
            raise GeometryError(f"experiment {index}: {exc}")
    return volumes
