"""Study orchestration: phantom -> project -> reconstruct -> bootstrap -> report.

A study is a pure function of (StudyConfig, master_seed): the ensemble and a
held-out validation experiment are generated, projections are acquired (16
evenly spaced angles in the sparse regime; per-experiment offset quadruples
in the ultra-sparse regime), a pseudo-reference is reconstructed from all
available data, and every bootstrap subset is reconstructed and scored
against the ground truth, the pseudo-reference, and cross-validation
partners. Jobs run on a fixed-size worker pool; results are keyed and sorted
so output is bitwise independent of scheduling.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .bootstrap import (
    ComparisonKind,
    StatsSummary,
    aggregate,
    draw_pairs,
    pair_overlap,
    sample_experiment_subsets,
    sample_projection_subsets,
)
from .core4d import Volume4D, read_volume, write_volume
from .errors import ConfigError, PipelineError, SamplingError
from .metrics4d import (
    MetricConfig,
    MetricKind,
    MetricReport,
    evaluate_all,
    fhc,
    write_fhc_csv,
    write_report_csv,
)
from .phantom import EnsembleSpec, PhantomParams, generate_experiment, perturbed_params
from .projector import (
    ANGLE_GRID_SIZE,
    acquire,
    evenly_spaced_angles,
    read_projections,
    ultra_sparse_angles,
    write_projections,
)
from .reconstruct import SolverConfig, sirt_reconstruct
from .seeding import derive_seed
from .bootstrap import interlace

SPARSE = "sparse"
ULTRA_SPARSE = "ultra_sparse"

VALIDATION_ID = 0
VALIDATION_VARIATION = 0.05  # held-out experiment: smaller parameter spread

SUMMARY_CSV_HEADER = (
    "comparison_kind",
    "level",
    "metric",
    "mean",
    "std",
    "n_samples",
    "n_nonfinite",
    "converged",
)

BASELINE_KIND = "fullset_vs_ground_truth"


@dataclass(frozen=True)
class StudyConfig:
    """Everything a study run depends on."""

    regime: str = SPARSE
    levels: tuple[int, ...] = (2, 4, 8)
    n_subsets: int = 20
    n_pairs: int = 100
    interlaced: bool = True
    master_seed: int = 7
    workers: int = 2
    out_dir: str = "study_out"
    n_experiments: int = 8
    variation_fraction: float = 0.10
    dims: tuple[int, int, int, int] = (24, 32, 32, 32)
    base_params: PhantomParams = PhantomParams(
        radius_a=4.5, radius_b=3.0, speed=0.5, approach_axis="x", blend_width=0.25
    )
    solver: SolverConfig = SolverConfig(n_iterations=40, stop_tol=1e-5)
    metrics: MetricConfig = MetricConfig(fhc_shells=16)
    convergence_threshold: float = 0.01

    def __post_init__(self):
        if self.regime not in (SPARSE, ULTRA_SPARSE):
            raise ConfigError(f"regime must be '{SPARSE}' or '{ULTRA_SPARSE}'")
        if not self.levels:
            raise ConfigError("levels must be non-empty")
        if self.n_subsets < 2:
            raise ConfigError("n_subsets must be >= 2")
        if self.n_pairs < 1:
            raise ConfigError("n_pairs must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.n_experiments < 1:
            raise ConfigError("phantom.n_experiments must be >= 1")
        if self.regime == ULTRA_SPARSE and self.n_experiments > 16:
            raise ConfigError("ultra_sparse regime supports at most 16 experiments")

    @property
    def full_level(self) -> int:
        """Level value represented by the full available data."""
        return ANGLE_GRID_SIZE if self.regime == SPARSE else self.n_experiments


@dataclass(frozen=True)
class StudyResult:
    out_dir: str
    summary: StatsSummary
    baseline: MetricReport
    subset_csv: str
    cv_csv: str
    summary_csv: str
    fhc_csvs: tuple[str, ...]
    manifest_path: str
    plot_paths: tuple[str, ...] = ()


# --------------------------------------------------------------------------
# Plain-text configuration: flat "key = value" lines with '#' comments and
# dotted section prefixes.

_CONFIG_KEYS = {
    "regime": str,
    "levels": "int_list",
    "n_subsets": int,
    "n_pairs": int,
    "interlaced": "bool",
    "master_seed": int,
    "workers": int,
    "out": str,
    "convergence_threshold": float,
    "phantom.n_experiments": int,
    "phantom.variation": float,
    "phantom.dims": "int_list",
    "phantom.radius_a": float,
    "phantom.radius_b": float,
    "phantom.speed": float,
    "phantom.axis": str,
    "phantom.blend_width": float,
    "phantom.intensity_peak": float,
    "solver.n_iterations": int,
    "solver.relaxation": float,
    "solver.nonneg_clamp": "bool",
    "solver.stop_tol": float,
    "metrics.nmi_bins": int,
    "metrics.ssim_window": "int_list",
    "metrics.fhc_shells": int,
    "convergence.threshold": float,
}


def _parse_value(key: str, raw: str, line: int):
    kind = _CONFIG_KEYS[key]
    try:
        if kind is str:
            return raw
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        if kind == "bool":
            low = raw.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(raw)
        if kind == "int_list":
            return tuple(int(part) for part in raw.split(","))
    except ValueError:
        raise ConfigError(f"cannot parse value {raw!r} for key {key!r}", line=line)
    raise ConfigError(f"unhandled key kind for {key!r}", line=line)


def parse_config_text(text: str) -> dict:
    """Parse 'key = value' lines; unknown keys are errors with line numbers."""
    values = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw_line!r}", line=lineno)
        key, _, raw = line.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"unknown config key {key!r}", line=lineno)
        values[key] = _parse_value(key, raw, lineno)
    return values


def load_config(path, overrides: dict | None = None) -> StudyConfig:
    """Read a config file and apply 'key=value' overrides (flags win)."""
    values = parse_config_text(Path(path).read_text())
    for key, raw in (overrides or {}).items():
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        values[key] = _parse_value(key, str(raw), line=0)
    return config_from_values(values)


def config_from_values(values: dict) -> StudyConfig:
    base_defaults = StudyConfig()
    phantom_defaults = base_defaults.base_params
    base_params = PhantomParams(
        radius_a=values.get("phantom.radius_a", phantom_defaults.radius_a),
        radius_b=values.get("phantom.radius_b", phantom_defaults.radius_b),
        speed=values.get("phantom.speed", phantom_defaults.speed),
        approach_axis=values.get("phantom.axis", phantom_defaults.approach_axis),
        blend_width=values.get("phantom.blend_width", phantom_defaults.blend_width),
        intensity_peak=values.get(
            "phantom.intensity_peak", phantom_defaults.intensity_peak
        ),
    )
    solver = SolverConfig(
        n_iterations=values.get("solver.n_iterations", base_defaults.solver.n_iterations),
        relaxation=values.get("solver.relaxation", base_defaults.solver.relaxation),
        nonneg_clamp=values.get("solver.nonneg_clamp", base_defaults.solver.nonneg_clamp),
        stop_tol=values.get("solver.stop_tol", base_defaults.solver.stop_tol),
    )
    fhc_shells = values.get("metrics.fhc_shells", base_defaults.metrics.fhc_shells)
    if fhc_shells == 0:
        fhc_shells = None
    metrics = MetricConfig(
        nmi_bins=values.get("metrics.nmi_bins", base_defaults.metrics.nmi_bins),
        ssim_window=tuple(
            values.get("metrics.ssim_window", base_defaults.metrics.ssim_window)
        ),
        fhc_shells=fhc_shells,
    )
    dims = tuple(values.get("phantom.dims", base_defaults.dims))
    if len(dims) != 4:
        raise ConfigError(f"phantom.dims must have four entries, got {dims}")
    return StudyConfig(
        regime=values.get("regime", base_defaults.regime),
        levels=tuple(values.get("levels", base_defaults.levels)),
        n_subsets=values.get("n_subsets", base_defaults.n_subsets),
        n_pairs=values.get("n_pairs", base_defaults.n_pairs),
        interlaced=values.get("interlaced", base_defaults.interlaced),
        master_seed=values.get("master_seed", base_defaults.master_seed),
        workers=values.get("workers", base_defaults.workers),
        out_dir=values.get("out", base_defaults.out_dir),
        n_experiments=values.get("phantom.n_experiments", base_defaults.n_experiments),
        variation_fraction=values.get("phantom.variation", base_defaults.variation_fraction),
        dims=dims,
        base_params=base_params,
        solver=solver,
        metrics=metrics,
        convergence_threshold=values.get(
            "convergence_threshold",
            values.get("convergence.threshold", base_defaults.convergence_threshold),
        ),
    )


def config_to_values(config: StudyConfig) -> dict:
    """Flatten a StudyConfig back to config-file keys (for the manifest)."""
    return {
        "regime": config.regime,
        "levels": list(config.levels),
        "n_subsets": config.n_subsets,
        "n_pairs": config.n_pairs,
        "interlaced": config.interlaced,
        "master_seed": config.master_seed,
        "workers": config.workers,
        "out": config.out_dir,
        "convergence_threshold": config.convergence_threshold,
        "phantom.n_experiments": config.n_experiments,
        "phantom.variation": config.variation_fraction,
        "phantom.dims": list(config.dims),
        "phantom.radius_a": config.base_params.radius_a,
        "phantom.radius_b": config.base_params.radius_b,
        "phantom.speed": config.base_params.speed,
        "phantom.axis": config.base_params.approach_axis,
        "phantom.blend_width": config.base_params.blend_width,
        "phantom.intensity_peak": config.base_params.intensity_peak,
        "solver.n_iterations": config.solver.n_iterations,
        "solver.relaxation": config.solver.relaxation,
        "solver.nonneg_clamp": config.solver.nonneg_clamp,
        "solver.stop_tol": config.solver.stop_tol,
        "metrics.nmi_bins": config.metrics.nmi_bins,
        "metrics.ssim_window": list(config.metrics.ssim_window),
        "metrics.fhc_shells": config.metrics.fhc_shells,
    }


# --------------------------------------------------------------------------
# Worker jobs. Volumes are passed by file path so the process pool never
# ships multi-megabyte arrays; each worker caches reads per path.

_volume_cache: dict[str, Volume4D] = {}
_projection_cache: dict[str, object] = {}


def _cached_volume(path: str) -> Volume4D:
    vol = _volume_cache.get(path)
    if vol is None:
        vol = read_volume(path)
        _volume_cache[path] = vol
    return vol


def _cached_projections(path: str):
    pset = _projection_cache.get(path)
    if pset is None:
        pset = read_projections(path)
        _projection_cache[path] = pset
    return pset


def _reconstruct_job(args):
    key, set_paths, angle_indices, solver, dims, out_path = args
    sets = [_cached_projections(p) for p in set_paths]
    if angle_indices is not None:
        sets = [s.subset(angle_indices) for s in sets]
    volume = sirt_reconstruct(sets, solver, dims)
    write_volume(volume, out_path)
    return key, out_path


def _evaluate_job(args):
    key, path_a, path_b, interlaced, metric_config = args
    a = _cached_volume(path_a)
    b = _cached_volume(path_b)
    if interlaced:
        a, b = interlace(a, b)
    report = evaluate_all(a, b, metric_config)
    return key, report


def _run_jobs(jobs, worker, n_workers: int) -> dict:
    """Run (key, ...) jobs, inline or pooled; results keyed, order-independent."""
    results = {}
    if n_workers <= 1 or len(jobs) <= 1:
        for job in jobs:
            key, value = worker(job)
            results[key] = value
        return results
    with ProcessPoolExecutor(max_workers=n_workers) as pool:
        for key, value in pool.map(worker, jobs, chunksize=1):
            results[key] = value
    return results


# --------------------------------------------------------------------------
# Study stages.


def _stage(name: str):
    class _StageContext:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc is not None and not isinstance(exc, PipelineError):
                raise PipelineError(name, str(exc)) from exc
            return False

    return _StageContext()


def _subset_key(members: tuple[int, ...]) -> str:
    return "-".join(f"{m:02d}" for m in members)


def run_study(config: StudyConfig) -> StudyResult:
    """Execute the full pipeline; deterministic given (config, master_seed)."""
    out = Path(config.out_dir)
    for sub in ("volumes", "projections", "reconstructions", "reports", "plots"):
        (out / sub).mkdir(parents=True, exist_ok=True)

    manifest: dict = {
        "package": "hsv4d",
        "config": config_to_values(config),
    }

    # 1. Phantoms: ensemble (training-like variation) + held-out validation.
    with _stage("phantom"):
        ens_spec = EnsembleSpec(
            n_experiments=config.n_experiments,
            variation_fraction=config.variation_fraction,
            base_params=config.base_params,
            dims=config.dims,
            master_seed=config.master_seed,
        )
        ens_params = perturbed_params(ens_spec)
        val_spec = EnsembleSpec(
            n_experiments=1,
            variation_fraction=VALIDATION_VARIATION,
            base_params=config.base_params,
            dims=config.dims,
            master_seed=derive_seed(config.master_seed, "validation-experiment"),
        )
        val_params = perturbed_params(val_spec)[0]

        volume_paths = {}
        for exp_id, params in [(VALIDATION_ID, val_params)] + [
            (i + 1, p) for i, p in enumerate(ens_params)
        ]:
            vol = generate_experiment(params, config.dims)
            path = out / "volumes" / f"experiment_{exp_id:02d}.vol"
            write_volume(vol, path)
            volume_paths[exp_id] = str(path)
        manifest["experiments"] = {
            str(exp_id): asdict(params)
            for exp_id, params in [(VALIDATION_ID, val_params)]
            + [(i + 1, p) for i, p in enumerate(ens_params)]
        }

    # 2. Projections. Sparse: the full 16-angle half turn for everyone.
    # Ultra-sparse: the published per-experiment offset quadruples with
    # geometry flagged unknown (the solver still receives the true angles;
    # the flag is provenance).
    with _stage("project"):
        projection_paths = {}
        angle_table = {}
        geometry_known = config.regime == SPARSE
        for exp_id, vol_path in sorted(volume_paths.items()):
            vol = read_volume(vol_path)
            if config.regime == SPARSE:
                angles = evenly_spaced_angles(ANGLE_GRID_SIZE, 0)
            else:
                table_index = 1 if exp_id == VALIDATION_ID else ((exp_id - 1) % 16) + 1
                angles = ultra_sparse_angles(table_index)
            pset = acquire(
                vol, angles, geometry_known=geometry_known, experiment_id=exp_id
            )
            path = out / "projections" / f"experiment_{exp_id:02d}.prj"
            write_projections(pset, path)
            projection_paths[exp_id] = str(path)
            angle_table[str(exp_id)] = sorted(angles)
        manifest["angles_deg"] = angle_table
        manifest["geometry_known"] = geometry_known

    all_set_paths = [projection_paths[VALIDATION_ID]] + [
        projection_paths[i + 1] for i in range(config.n_experiments)
    ]

    # 3+4. Reconstructions: pseudo-reference from all data, then one volume
    # per distinct subset (repeated coset draws share a reconstruction).
    with _stage("subsets"):
        subsets = {}
        for level in config.levels:
            if config.regime == SPARSE:
                subsets[level] = sample_projection_subsets(
                    level, config.n_subsets, config.master_seed
                )
            else:
                subsets[level] = sample_experiment_subsets(
                    level, config.n_subsets, config.n_experiments, config.master_seed
                )
        manifest["subsets"] = {
            str(level): [
                {"subset_id": s.subset_id, "members": list(s.members), "seed": s.seed}
                for s in specs
            ]
            for level, specs in subsets.items()
        }

    with _stage("reconstruct"):
        jobs = [
            (
                "fullset",
                tuple(all_set_paths),
                None,
                config.solver,
                config.dims,
                str(out / "reconstructions" / "fullset.vol"),
            )
        ]
        seen = {"fullset"}
        for level in config.levels:
            for spec in subsets[level]:
                if config.regime == SPARSE:
                    key = f"i{level}_a{_subset_key(spec.members)}"
                    set_paths = tuple(all_set_paths)
                    angle_indices = spec.members
                else:
                    key = f"k{level}_e{_subset_key(spec.members)}"
                    set_paths = tuple(
                        [projection_paths[VALIDATION_ID]]
                        + [projection_paths[m + 1] for m in spec.members]
                    )
                    angle_indices = None
                if key in seen:
                    continue
                seen.add(key)
                jobs.append(
                    (
                        key,
                        set_paths,
                        angle_indices,
                        config.solver,
                        config.dims,
                        str(out / "reconstructions" / f"{key}.vol"),
                    )
                )
        recon_paths = _run_jobs(jobs, _reconstruct_job, config.workers)

    def subset_recon_key(level: int, spec) -> str:
        prefix = "i" if config.regime == SPARSE else "k"
        tag = "a" if config.regime == SPARSE else "e"
        return f"{prefix}{level}_{tag}{_subset_key(spec.members)}"

    manifest["reconstructions"] = {k: str(Path(v).name) for k, v in sorted(recon_paths.items())}

    # 5. Metric evaluations: subset vs ground truth, subset vs fullset,
    # and both cross-validation variants (interlaced and plain).
    gt_path = volume_paths[VALIDATION_ID]
    full_path = recon_paths["fullset"]

    with _stage("evaluate"):
        eval_jobs = {}
        for level in config.levels:
            for spec in subsets[level]:
                key = subset_recon_key(level, spec)
                eval_jobs[("gt", key)] = (
                    ("gt", key),
                    recon_paths[key],
                    gt_path,
                    False,
                    config.metrics,
                )
                eval_jobs[("full", key)] = (
                    ("full", key),
                    recon_paths[key],
                    full_path,
                    False,
                    config.metrics,
                )

        pair_table = {}
        for level in config.levels:
            specs = subsets[level]
            pairs = draw_pairs(
                len(specs),
                config.n_pairs,
                derive_seed(config.master_seed, "cv-pairs", level),
            )
            pair_table[level] = pairs
            for ia, ib in pairs:
                ka = subset_recon_key(level, specs[ia])
                kb = subset_recon_key(level, specs[ib])
                for interlaced in (True, False):
                    jkey = ("cv", ka, kb, interlaced)
                    eval_jobs[jkey] = (jkey, recon_paths[ka], recon_paths[kb], interlaced, config.metrics)

        eval_jobs[("baseline",)] = (
            ("baseline",),
            full_path,
            gt_path,
            False,
            config.metrics,
        )
        results = _run_jobs(list(eval_jobs.values()), _evaluate_job, config.workers)

    # 6. Assemble labeled reports, aggregate, and write everything out.
    with _stage("report"):
        subset_reports = []
        for level in config.levels:
            for spec in subsets[level]:
                key = subset_recon_key(level, spec)
                subset_reports.append(
                    results[("gt", key)].labeled(
                        experiment_id=VALIDATION_ID,
                        comparison_kind=ComparisonKind.SUBSET_VS_GROUND_TRUTH.value,
                        level=level,
                        subset_id=spec.subset_id,
                    )
                )
                subset_reports.append(
                    results[("full", key)].labeled(
                        experiment_id=VALIDATION_ID,
                        comparison_kind=ComparisonKind.SUBSET_VS_FULLSET.value,
                        level=level,
                        subset_id=spec.subset_id,
                    )
                )

        cv_reports = []
        pair_ledger = {}
        for level in config.levels:
            specs = subsets[level]
            rows = []
            for pair_id, (ia, ib) in enumerate(pair_table[level]):
                sa, sb = specs[ia], specs[ib]
                ka = subset_recon_key(level, sa)
                kb = subset_recon_key(level, sb)
                rows.append(
                    {
                        "pair_id": pair_id,
                        "subset_a": sa.subset_id,
                        "subset_b": sb.subset_id,
                        "member_overlap": pair_overlap(sa, sb),
                        "identical_members": sa.members == sb.members,
                    }
                )
                for interlaced in (True, False):
                    kind = ComparisonKind.cross_validation(interlaced)
                    cv_reports.append(
                        results[("cv", ka, kb, interlaced)].labeled(
                            experiment_id=VALIDATION_ID,
                            comparison_kind=kind.value,
                            level=level,
                            subset_id=sa.subset_id,
                            pair_id=pair_id,
                        )
                    )
            pair_ledger[str(level)] = rows
        manifest["pairs"] = pair_ledger

        baseline = results[("baseline",)].labeled(
            experiment_id=VALIDATION_ID,
            comparison_kind=BASELINE_KIND,
            level=config.full_level,
        )

        summary = aggregate(
            subset_reports + cv_reports, config.convergence_threshold
        )

        subset_csv = out / "reports" / "subset_metrics.csv"
        cv_csv = out / "reports" / "cv_metrics.csv"
        write_report_csv(subset_csv, subset_reports)
        write_report_csv(cv_csv, cv_reports)

        summary_csv = out / "reports" / "summary.csv"
        _write_summary_csv(summary_csv, summary, baseline)

        fhc_csvs = []
        curve_path = out / "reports" / "fhc_baseline.csv"
        write_fhc_csv(curve_path, baseline.fhc_curve)
        fhc_csvs.append(str(curve_path))
        for level in config.levels:
            spec0 = subsets[level][0]
            key = subset_recon_key(level, spec0)
            curve = results[("gt", key)].fhc_curve
            curve_path = out / "reports" / f"fhc_level_{level}.csv"
            write_fhc_csv(curve_path, curve)
            fhc_csvs.append(str(curve_path))

        manifest["baseline"] = {
            "comparison_kind": BASELINE_KIND,
            "level": config.full_level,
            "mse": baseline.mse,
            "psnr_db": baseline.psnr_db,
            "dssim": baseline.dssim,
            "nmi": baseline.nmi,
            "ncc": baseline.ncc,
            "fhc_resolution": baseline.fhc_resolution,
        }
        manifest_path = out / "manifest.json"
        manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")

    result = StudyResult(
        out_dir=str(out),
        summary=summary,
        baseline=baseline,
        subset_csv=str(subset_csv),
        cv_csv=str(cv_csv),
        summary_csv=str(summary_csv),
        fhc_csvs=tuple(fhc_csvs),
        manifest_path=str(manifest_path),
    )

    with _stage("plot"):
        from .plots import plot_summary

        plot_paths = plot_summary(result, config)
        result = replace(result, plot_paths=tuple(plot_paths))
    return result


def _format_float(x: float) -> str:
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return repr(x)
    return repr(float(x))


def _write_summary_csv(path, summary: StatsSummary, baseline: MetricReport) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_CSV_HEADER)
        for cell in summary.cells:
            writer.writerow(
                [
                    cell.comparison_kind,
                    cell.level,
                    cell.metric,
                    _format_float(cell.mean),
                    _format_float(cell.std),
                    cell.n_samples,
                    cell.n_nonfinite,
                    int(cell.converged),
                ]
            )
        for metric in MetricKind:
            value = baseline.value(metric)
            writer.writerow(
                [
                    baseline.comparison_kind,
                    baseline.level,
                    metric.value,
                    _format_float(value),
                    "nan",
                    1,
                    0,
                    0,
                ]
            )


def read_summary_csv(path) -> list[dict]:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != SUMMARY_CSV_HEADER:
            raise ConfigError(f"unexpected summary CSV header in {path}")
        for row in reader:
            rows.append(
                {
                    "comparison_kind": row["comparison_kind"],
                    "level": int(row["level"]),
                    "metric": row["metric"],
                    "mean": float(row["mean"]),
                    "std": float(row["std"]),
                    "n_samples": int(row["n_samples"]),
                    "n_nonfinite": int(row["n_nonfinite"]),
                    "converged": bool(int(row["converged"])),
                }
            )
    return rows
