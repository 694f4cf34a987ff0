"""The six 4D evaluation metrics, computed directly on full 4D volumes.

Global error metrics: MSE and PSNR. Structural metrics: DSSIM (structural
dissimilarity with a separable 4D box window), NMI (normalized mutual
information from a joint histogram), NCC (global Pearson correlation), and
FHC (4D Fourier hypershell correlation with half-bit resolution estimation).

FHC conventions: per-axis frequencies are normalized by their own Nyquist
limit so the temporal axis is commensurable with the spatial ones; hypershell
radii use the Euclidean norm of the normalized coordinates; shells cover
(0, 1] with corner frequencies (r > 1) discarded and the DC voxel excluded;
the per-shell statistic is the real part of the complex cross term divided by
the geometric mean of the power sums; effective sample counts are halved for
the conjugate symmetry of real-valued inputs.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy.ndimage import uniform_filter

from .core4d import Volume4D
from .errors import DegenerateInputError, DomainError

DEFAULT_NMI_BINS = 64
DEFAULT_SSIM_WINDOW = (3, 7, 7, 7)  # (t, x, y, z)

REPORT_CSV_HEADER = (
    "experiment_id",
    "comparison_kind",
    "level",
    "subset_id",
    "pair_id",
    "mse",
    "psnr_db",
    "dssim",
    "nmi",
    "ncc",
    "fhc_resolution",
)

FHC_CSV_HEADER = ("shell_center", "correlation", "n_effective", "threshold")


class MetricKind(enum.Enum):
    MSE = "mse"
    PSNR = "psnr_db"
    DSSIM = "dssim"
    NMI = "nmi"
    NCC = "ncc"
    FHC_RESOLUTION = "fhc_resolution"


@dataclass(frozen=True)
class MetricConfig:
    """Tunable conventions left open by the metric definitions."""

    nmi_bins: int = DEFAULT_NMI_BINS
    ssim_window: tuple[int, int, int, int] = DEFAULT_SSIM_WINDOW
    fhc_shells: int | None = None  # None: max(4, min(dims) // 2)
    psnr_peak: float | None = None  # None: dynamic range of the reference

    def __post_init__(self):
        if self.nmi_bins < 2:
            raise DomainError("nmi_bins must be >= 2")
        if len(self.ssim_window) != 4 or any(w < 1 for w in self.ssim_window):
            raise DomainError("ssim_window must be four positive integers")
        if self.fhc_shells is not None and self.fhc_shells < 4:
            raise DomainError("fhc_shells must be >= 4")


@dataclass(frozen=True)
class FhcCurve:
    """Per-shell correlation curve with half-bit thresholds.

    ``resolution`` is the Nyquist-normalized frequency of the first crossing
    below the threshold (1.0 when the curve never crosses). Shells that
    contained no frequency voxels are dropped from the arrays and listed in
    ``empty_shells``.
    """

    shell_centers: np.ndarray
    correlations: np.ndarray
    n_effective: np.ndarray
    thresholds: np.ndarray
    resolution: float
    empty_shells: tuple[int, ...] = ()

    def __post_init__(self):
        centers = np.asarray(self.shell_centers, dtype=np.float64)
        lengths = {
            len(centers),
            len(self.correlations),
            len(self.n_effective),
            len(self.thresholds),
        }
        if lengths != {len(centers)}:
            raise DomainError("FhcCurve arrays must have equal length")
        if np.any(np.diff(centers) <= 0):
            raise DomainError("shell_centers must be strictly increasing")
        if np.any(np.asarray(self.n_effective) < 1):
            raise DomainError("n_effective must be >= 1 for every reported shell")


def _as_f64(volume: Volume4D | np.ndarray) -> np.ndarray:
    if isinstance(volume, Volume4D):
        return volume.as_float64()
    arr = np.asarray(volume, dtype=np.float64)
    if arr.ndim != 4:
        raise DomainError(f"expected a 4D array, got ndim={arr.ndim}")
    return arr


def _paired(a, b) -> tuple[np.ndarray, np.ndarray]:
    av, bv = _as_f64(a), _as_f64(b)
    if av.shape != bv.shape:
        raise DomainError(f"volume dims differ: {av.shape} vs {bv.shape}")
    return av, bv


def mse(a, b) -> float:
    """Mean squared voxel-wise deviation."""
    av, bv = _paired(a, b)
    d = av - bv
    return float(np.mean(d * d))


def psnr(a, b, peak: float | None = None) -> float:
    """Peak signal-to-noise ratio in dB; +inf when the volumes are identical.

    ``peak`` defaults to the dynamic range (max - min) of the first argument,
    which acts as the reference.
    """
    av, bv = _paired(a, b)
    if peak is None:
        peak = float(av.max() - av.min())
    if not peak > 0:
        raise DegenerateInputError(f"PSNR peak must be > 0, got {peak}")
    err = float(np.mean((av - bv) ** 2))
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / err)


_box_count_cache: dict[tuple, np.ndarray] = {}


def _box_count(shape, window) -> np.ndarray:
    # Fraction of the window that overlaps the volume at each position.
    key = (tuple(shape), tuple(window))
    count = _box_count_cache.get(key)
    if count is None:
        count = uniform_filter(np.ones(shape), size=window, mode="constant", cval=0.0)
        _box_count_cache[key] = count
    return count


def _clipped_box_mean(arr: np.ndarray, window) -> np.ndarray:
    # Mean over the window intersected with the volume (uniform weights).
    total = uniform_filter(arr, size=window, mode="constant", cval=0.0)
    return total / _box_count(arr.shape, window)


def dssim(a, b, window: tuple[int, int, int, int] = DEFAULT_SSIM_WINDOW) -> float:
    """Structural dissimilarity (1 - mean SSIM) / 2 in [0, 1].

    SSIM uses a separable 4D box window (t, x, y, z), clipped at volume
    boundaries, with C1 = (0.01 L)^2 and C2 = (0.03 L)^2 where L is the
    dynamic range of the reference (first argument).
    """
    av, bv = _paired(a, b)
    if len(window) != 4 or any(w < 1 for w in window):
        raise DomainError("ssim window must be four positive integers")
    if any(n < w for n, w in zip(av.shape, window)):
        raise DomainError(
            f"volume dims {av.shape} smaller than ssim window {tuple(window)}"
        )
    dyn_range = float(av.max() - av.min())
    if dyn_range == 0.0:
        raise DegenerateInputError("constant reference volume: SSIM range L = 0")
    c1 = (0.01 * dyn_range) ** 2
    c2 = (0.03 * dyn_range) ** 2

    mu_a = _clipped_box_mean(av, window)
    mu_b = _clipped_box_mean(bv, window)
    var_a = _clipped_box_mean(av * av, window) - mu_a * mu_a
    var_b = _clipped_box_mean(bv * bv, window) - mu_b * mu_b
    cov = _clipped_box_mean(av * bv, window) - mu_a * mu_b

    ssim_map = ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) / (
        (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    )
    return float((1.0 - ssim_map.mean()) / 2.0)


def nmi(a, b, n_bins: int = DEFAULT_NMI_BINS) -> float:
    """Normalized mutual information (H(A) + H(B)) / H(A,B), in [1, 2].

    The joint histogram uses ``n_bins`` equal-width bins per volume spanning
    each volume's own [min, max]; entropies are in nats and empty bins
    contribute zero.
    """
    av, bv = _paired(a, b)
    if n_bins < 2:
        raise DomainError(f"n_bins must be >= 2, got {n_bins}")
    af, bf = av.ravel(), bv.ravel()
    if af.min() == af.max() or bf.min() == bf.max():
        raise DegenerateInputError("constant volume: single occupied bin, zero entropy")
    joint, _, _ = np.histogram2d(
        af,
        bf,
        bins=n_bins,
        range=[[float(af.min()), float(af.max())], [float(bf.min()), float(bf.max())]],
    )
    p = joint / joint.sum()

    def entropy(q: np.ndarray) -> float:
        q = q[q > 0]
        return float(-np.sum(q * np.log(q)))

    h_joint = entropy(p.ravel())
    return (entropy(p.sum(axis=1)) + entropy(p.sum(axis=0))) / h_joint


def ncc(a, b) -> float:
    """Global Pearson correlation over all voxels, in [-1, 1]."""
    av, bv = _paired(a, b)
    da = av.ravel() - av.mean()
    db = bv.ravel() - bv.mean()
    denom = math.sqrt(float(np.dot(da, da)) * float(np.dot(db, db)))
    if denom == 0.0:
        raise DegenerateInputError("zero variance volume in NCC")
    return float(np.dot(da, db)) / denom


def half_bit(n_effective) -> np.ndarray | float:
    """Half-bit significance threshold for a shell with ``n_effective`` samples.

    T(n) = (0.2071 + 1.9102 / sqrt(n)) / (1.2071 + 0.9102 / sqrt(n)).
    """
    n = np.asarray(n_effective, dtype=np.float64)
    if np.any(n < 1):
        raise DomainError("n_effective must be >= 1")
    root = np.sqrt(n)
    value = (0.2071 + 1.9102 / root) / (1.2071 + 0.9102 / root)
    return float(value) if np.isscalar(n_effective) else value


def _normalized_radius_grid(dims) -> np.ndarray:
    axes = [np.fft.fftfreq(n) * 2.0 for n in dims]  # per-axis f / f_Nyquist
    r_sq = np.zeros(dims)
    for k, f in enumerate(axes):
        shape = [1, 1, 1, 1]
        shape[k] = dims[k]
        r_sq = r_sq + (f.reshape(shape)) ** 2
    return np.sqrt(r_sq)


_shell_cache: dict[tuple, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}


def _shell_binning(dims, n_shells: int):
    """Cached (flat in-band indices, shell index per voxel, shell counts)."""
    key = (tuple(dims), n_shells)
    cached = _shell_cache.get(key)
    if cached is None:
        radius = _normalized_radius_grid(dims).ravel()
        mask = (radius > 0.0) & (radius <= 1.0)
        flat = np.nonzero(mask)[0]
        shell_idx = np.ceil(radius[flat] * n_shells).astype(np.int64) - 1
        counts = np.bincount(shell_idx, minlength=n_shells)
        cached = (flat, shell_idx, counts)
        _shell_cache[key] = cached
    return cached


def fhc(a, b, n_shells: int | None = None) -> FhcCurve:
    """4D Fourier hypershell correlation with half-bit resolution estimate."""
    av, bv = _paired(a, b)
    if n_shells is None:
        n_shells = max(4, min(av.shape) // 2)
    if n_shells < 4:
        raise DomainError(f"n_shells must be >= 4, got {n_shells}")

    flat, shell_idx, counts = _shell_binning(av.shape, n_shells)
    fa = np.fft.fftn(av).ravel()[flat]
    fb = np.fft.fftn(bv).ravel()[flat]

    cross = fa.real * fb.real + fa.imag * fb.imag
    power_a = fa.real**2 + fa.imag**2
    power_b = fb.real**2 + fb.imag**2

    sum_cross = np.bincount(shell_idx, weights=cross, minlength=n_shells)
    sum_pa = np.bincount(shell_idx, weights=power_a, minlength=n_shells)
    sum_pb = np.bincount(shell_idx, weights=power_b, minlength=n_shells)

    occupied = counts > 0
    empty_shells = tuple(int(s) for s in np.nonzero(~occupied)[0])
    denom = np.sqrt(sum_pa[occupied] * sum_pb[occupied])
    with np.errstate(invalid="ignore", divide="ignore"):
        correlations = np.where(denom > 0, sum_cross[occupied] / np.where(denom > 0, denom, 1.0), 0.0)
    centers_all = (np.arange(n_shells) + 0.5) / n_shells
    centers = centers_all[occupied]
    n_eff = np.ceil(counts[occupied] / 2.0).astype(np.int64)
    thresholds = half_bit(n_eff)

    below = correlations < thresholds
    if not below.any():
        resolution = 1.0
    else:
        s = int(np.argmax(below))
        if s == 0:
            resolution = float(centers[0])
        else:
            d_prev = correlations[s - 1] - thresholds[s - 1]
            d_here = correlations[s] - thresholds[s]
            frac = d_prev / (d_prev - d_here)
            resolution = float(centers[s - 1] + frac * (centers[s] - centers[s - 1]))

    return FhcCurve(
        shell_centers=centers,
        correlations=correlations,
        n_effective=n_eff,
        thresholds=np.asarray(thresholds, dtype=np.float64),
        resolution=resolution,
        empty_shells=empty_shells,
    )


@dataclass(frozen=True)
class MetricReport:
    """All six metric values for one volume pair, plus report identification.

    Metrics that raised a degenerate-input error hold ``nan`` and the error
    message is recorded; this keeps single-metric failures non-fatal.
    """

    mse: float
    psnr_db: float
    dssim: float
    nmi: float
    ncc: float
    fhc_resolution: float
    errors: tuple[tuple[str, str], ...] = ()
    fhc_curve: FhcCurve | None = None
    experiment_id: int = 0
    comparison_kind: str = ""
    level: int = 0
    subset_id: int = -1
    pair_id: int = -1

    def value(self, kind: MetricKind) -> float:
        return getattr(self, kind.value)

    def labeled(self, **ids) -> "MetricReport":
        return replace(self, **ids)


def evaluate_all(a, b, config: MetricConfig = MetricConfig()) -> MetricReport:
    """Compute every metric on one pair; per-metric degenerate errors are recorded."""
    values: dict[str, float] = {}
    errors: list[tuple[str, str]] = []
    curve: FhcCurve | None = None

    def run(name: str, fn):
        try:
            values[name] = fn()
        except DegenerateInputError as exc:
            values[name] = math.nan
            errors.append((name, str(exc)))

    run("mse", lambda: mse(a, b))
    run("psnr_db", lambda: psnr(a, b, peak=config.psnr_peak))
    run("dssim", lambda: dssim(a, b, window=config.ssim_window))
    run("nmi", lambda: nmi(a, b, n_bins=config.nmi_bins))
    run("ncc", lambda: ncc(a, b))
    try:
        curve = fhc(a, b, n_shells=config.fhc_shells)
        values["fhc_resolution"] = curve.resolution
    except DegenerateInputError as exc:
        values["fhc_resolution"] = math.nan
        errors.append(("fhc_resolution", str(exc)))

    return MetricReport(
        mse=values["mse"],
        psnr_db=values["psnr_db"],
        dssim=values["dssim"],
        nmi=values["nmi"],
        ncc=values["ncc"],
        fhc_resolution=values["fhc_resolution"],
        errors=tuple(errors),
        fhc_curve=curve,
    )


def _format_value(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return repr(float(x))


def write_report_csv(path, reports) -> None:
    """Write metric reports under the declared CSV schema."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(REPORT_CSV_HEADER)
        for r in reports:
            writer.writerow(
                [
                    r.experiment_id,
                    r.comparison_kind,
                    r.level,
                    r.subset_id,
                    r.pair_id,
                    _format_value(r.mse),
                    _format_value(r.psnr_db),
                    _format_value(r.dssim),
                    _format_value(r.nmi),
                    _format_value(r.ncc),
                    _format_value(r.fhc_resolution),
                ]
            )


def read_report_csv(path) -> list[MetricReport]:
    """Parse a report CSV back into MetricReport rows (curves are not stored)."""
    reports = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != REPORT_CSV_HEADER:
            raise DomainError(f"unexpected report CSV header: {header}")
        for row in reader:
            reports.append(
                MetricReport(
                    experiment_id=int(row[0]),
                    comparison_kind=row[1],
                    level=int(row[2]),
                    subset_id=int(row[3]),
                    pair_id=int(row[4]),
                    mse=float(row[5]),
                    psnr_db=float(row[6]),
                    dssim=float(row[7]),
                    nmi=float(row[8]),
                    ncc=float(row[9]),
                    fhc_resolution=float(row[10]),
                )
            )
    return reports


def write_fhc_csv(path, curve: FhcCurve) -> None:
    """Write one FHC curve under the declared CSV schema."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(FHC_CSV_HEADER)
        for c, corr, n, thr in zip(
            curve.shell_centers, curve.correlations, curve.n_effective, curve.thresholds
        ):
            writer.writerow(
                [_format_value(c), _format_value(corr), int(n), _format_value(thr)]
            )


def read_fhc_csv(path) -> FhcCurve:
    """Parse an FHC curve CSV (resolution is recomputed from the curve)."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != FHC_CSV_HEADER:
            raise DomainError(f"unexpected FHC CSV header: {header}")
        for row in reader:
            rows.append((float(row[0]), float(row[1]), int(row[2]), float(row[3])))
    centers = np.array([r[0] for r in rows])
    corrs = np.array([r[1] for r in rows])
    n_eff = np.array([r[2] for r in rows])
    thrs = np.array([r[3] for r in rows])
    below = corrs < thrs
    if not below.any():
        resolution = 1.0
    else:
        s = int(np.argmax(below))
        if s == 0:
            resolution = float(centers[0])
        else:
            d_prev = corrs[s - 1] - thrs[s - 1]
            d_here = corrs[s] - thrs[s]
            resolution = float(
                centers[s - 1] + d_prev / (d_prev - d_here) * (centers[s] - centers[s - 1])
            )
    return FhcCurve(centers, corrs, n_eff, thrs, resolution)
