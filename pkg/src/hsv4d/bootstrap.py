"""Bootstrap resampling: subset draws, interlaced pairing, cross-validation,
and statistics aggregation with convergence detection.

Subsets come in two regimes: by projection count (evenly spaced cosets of the
16-angle grid with a random offset) and by experiment count (drawn without
replacement from the experiment pool). Cross-validation draws unordered pairs
of reconstructions with replacement and evaluates all metrics per pair,
optionally on interlaced (even vs odd) time frames so the compared inputs are
independent in time as well as space.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core4d import Volume4D
from .errors import DomainError, SamplingError
from .metrics4d import MetricConfig, MetricKind, MetricReport, evaluate_all
from .projector import ANGLE_GRID_SIZE
from .seeding import derive_seed, rng_for

PROJECTION_REGIME = "projections"
EXPERIMENT_REGIME = "experiments"

DEFAULT_PROJECTION_LEVELS = (2, 4, 8)
DEFAULT_EXPERIMENT_LEVELS = (1, 2, 4, 8)
DEFAULT_CONVERGENCE_THRESHOLD = 0.01


class ComparisonKind(enum.Enum):
    SUBSET_VS_GROUND_TRUTH = "subset_vs_ground_truth"
    SUBSET_VS_FULLSET = "subset_vs_fullset"
    CROSS_VALIDATION_INTERLACED = "cross_validation_interlaced"
    CROSS_VALIDATION_PLAIN = "cross_validation_plain"

    @staticmethod
    def cross_validation(interlaced: bool) -> "ComparisonKind":
        if interlaced:
            return ComparisonKind.CROSS_VALIDATION_INTERLACED
        return ComparisonKind.CROSS_VALIDATION_PLAIN


@dataclass(frozen=True)
class SubsetSpec:
    """One bootstrap draw: regime, selected member indices, derived seed."""

    regime: str
    members: tuple[int, ...]
    subset_id: int
    seed: int

    def __post_init__(self):
        if self.regime not in (PROJECTION_REGIME, EXPERIMENT_REGIME):
            raise SamplingError(f"unknown regime {self.regime!r}")
        if tuple(sorted(set(self.members))) != self.members:
            raise SamplingError(f"members must be sorted and unique, got {self.members}")

    @property
    def level(self) -> int:
        return len(self.members)


def sample_projection_subsets(
    i: int, n_subsets: int, master_seed: int, grid_size: int = ANGLE_GRID_SIZE
) -> list[SubsetSpec]:
    """Draw evenly spaced angle-index cosets with uniformly random offsets.

    For i on the 16-angle grid there are only 16/i distinct cosets, so
    repeated draws are inherent when n_subsets exceeds that.
    """
    if i == 1:
        raise SamplingError(
            "single-view subsets are excluded: one projection carries no "
            "shared 3D information"
        )
    if i < 2 or grid_size % i != 0:
        raise SamplingError(f"projection count {i} must divide the {grid_size}-angle grid")
    if n_subsets < 1:
        raise SamplingError("n_subsets must be >= 1")
    n_cosets = grid_size // i
    rng = rng_for(master_seed, "projection-subsets", i)
    offsets = rng.integers(0, n_cosets, size=n_subsets)
    subsets = []
    for subset_id, offset in enumerate(offsets):
        members = tuple(range(int(offset), grid_size, n_cosets))
        subsets.append(
            SubsetSpec(
                regime=PROJECTION_REGIME,
                members=members,
                subset_id=subset_id,
                seed=derive_seed(master_seed, "projection-subset", i, subset_id),
            )
        )
    return subsets


def sample_experiment_subsets(
    k: int, n_subsets: int, pool_size: int, master_seed: int
) -> list[SubsetSpec]:
    """Draw k experiments uniformly without replacement, n_subsets times."""
    if not (1 <= k <= pool_size):
        raise SamplingError(f"k must be in 1..{pool_size}, got {k}")
    if n_subsets < 1:
        raise SamplingError("n_subsets must be >= 1")
    rng = rng_for(master_seed, "experiment-subsets", k)
    subsets = []
    for subset_id in range(n_subsets):
        members = tuple(sorted(int(m) for m in rng.choice(pool_size, size=k, replace=False)))
        subsets.append(
            SubsetSpec(
                regime=EXPERIMENT_REGIME,
                members=members,
                subset_id=subset_id,
                seed=derive_seed(master_seed, "experiment-subset", k, subset_id),
            )
        )
    return subsets


def interlace(a: Volume4D, b: Volume4D) -> tuple[Volume4D, Volume4D]:
    """Restrict ``a`` to even frames and ``b`` to odd frames of equal count.

    Trailing even frames without an odd partner are dropped (for 75 frames
    that leaves 37 pairs, with the last frame skipped).
    """
    if a.dims != b.dims:
        raise DomainError(f"volume dims differ: {a.dims} vs {b.dims}")
    t = a.n_frames
    if t < 2:
        raise DomainError(f"interlacing needs at least 2 frames, got {t}")
    n_pairs = t // 2
    even = range(0, 2 * n_pairs, 2)
    odd = range(1, 2 * n_pairs, 2)
    dt = a.frame_dt * 2.0
    return a.with_frames(even, frame_dt=dt), b.with_frames(odd, frame_dt=dt)


def draw_pairs(n_items: int, n_pairs: int, master_seed: int) -> list[tuple[int, int]]:
    """Unordered index pairs (a != b), uniform with replacement across draws."""
    if n_items < 2:
        raise SamplingError(f"need at least 2 items to pair, got {n_items}")
    if n_pairs < 1:
        raise SamplingError("n_pairs must be >= 1")
    rng = rng_for(master_seed, "cross-validation-pairs")
    first = rng.integers(0, n_items, size=n_pairs)
    second = rng.integers(0, n_items - 1, size=n_pairs)
    second = second + (second >= first)
    return [(int(min(i, j)), int(max(i, j))) for i, j in zip(first, second)]


def cross_validate(
    reconstructions: Sequence[Volume4D],
    n_pairs: int,
    interlaced: bool,
    master_seed: int,
    metric_config: MetricConfig = MetricConfig(),
    *,
    level: int = 0,
    subset_specs: Sequence[SubsetSpec] | None = None,
    experiment_id: int = 0,
) -> list[MetricReport]:
    """Evaluate all metrics on randomly drawn reconstruction pairs.

    Pairs are normalized to (low index, high index); with interlacing the
    low-index member supplies even frames and the high-index member odd
    frames. Results are deterministic in the master seed.
    """
    if len(reconstructions) < 2:
        raise SamplingError(
            f"cross-validation needs >= 2 reconstructions, got {len(reconstructions)}"
        )
    pairs = draw_pairs(len(reconstructions), n_pairs, master_seed)
    kind = ComparisonKind.cross_validation(interlaced)
    cache: dict[tuple[int, int], MetricReport] = {}
    reports = []
    for pair_id, (ia, ib) in enumerate(pairs):
        base = cache.get((ia, ib))
        if base is None:
            va, vb = reconstructions[ia], reconstructions[ib]
            if interlaced:
                va, vb = interlace(va, vb)
            base = evaluate_all(va, vb, metric_config)
            cache[(ia, ib)] = base
        subset_id = subset_specs[ia].subset_id if subset_specs else ia
        reports.append(
            base.labeled(
                experiment_id=experiment_id,
                comparison_kind=kind.value,
                level=level,
                subset_id=subset_id,
                pair_id=pair_id,
            )
        )
    return reports


def pair_overlap(a: SubsetSpec, b: SubsetSpec) -> int:
    """Number of shared members between two subsets (for the pair ledger)."""
    return len(set(a.members) & set(b.members))


@dataclass(frozen=True)
class MetricStats:
    """Aggregate of one (comparison kind, level, metric) cell."""

    comparison_kind: str
    level: int
    metric: str
    mean: float
    std: float
    n_samples: int
    n_nonfinite: int
    converged: bool


@dataclass(frozen=True)
class StatsSummary:
    """All aggregate cells of a study plus the convergence threshold used."""

    cells: tuple[MetricStats, ...]
    convergence_threshold: float

    def get(self, comparison_kind: str, level: int, metric: str) -> MetricStats:
        for cell in self.cells:
            if (
                cell.comparison_kind == comparison_kind
                and cell.level == level
                and cell.metric == metric
            ):
                return cell
        raise KeyError((comparison_kind, level, metric))


def aggregate(
    reports: Sequence[MetricReport],
    convergence_threshold: float = DEFAULT_CONVERGENCE_THRESHOLD,
) -> StatsSummary:
    """Sample mean/std per (comparison kind, level, metric) with convergence flags.

    Non-finite values (the +inf PSNR sentinel, nan from degenerate metrics)
    are excluded from the moments and counted separately. The convergence
    flag fires when std / |mean| < threshold.
    """
    if not reports:
        raise DomainError("no reports to aggregate")
    groups: dict[tuple[str, int], list[MetricReport]] = {}
    for r in reports:
        groups.setdefault((r.comparison_kind, r.level), []).append(r)

    cells = []
    for (kind, level), rows in sorted(groups.items()):
        if len(rows) < 2:
            raise DomainError(
                f"cell ({kind}, level {level}) has {len(rows)} report(s); need >= 2"
            )
        for metric in MetricKind:
            values = np.array([r.value(metric) for r in rows])
            finite = values[np.isfinite(values)]
            n_nonfinite = int(values.size - finite.size)
            if finite.size == 0:
                mean, std, converged = math.nan, math.nan, False
            elif finite.size == 1:
                mean, std, converged = float(finite[0]), math.nan, False
            else:
                mean = float(finite.mean())
                std = float(finite.std(ddof=1))
                if mean == 0.0:
                    converged = std == 0.0
                else:
                    converged = std / abs(mean) < convergence_threshold
            cells.append(
                MetricStats(
                    comparison_kind=kind,
                    level=level,
                    metric=metric.value,
                    mean=mean,
                    std=std,
                    n_samples=int(finite.size),
                    n_nonfinite=n_nonfinite,
                    converged=converged,
                )
            )
    return StatsSummary(cells=tuple(cells), convergence_threshold=convergence_threshold)
