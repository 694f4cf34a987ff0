"""Command-line driver.

Subcommands: phantom, project, reconstruct, metrics, study, plot. A plain
'key = value' config file feeds the pipeline; individual keys can be
overridden with repeated --set flags. --seed, --workers, and --out override
their config keys; HSV_SEED and HSV_WORKERS are environment fallbacks used
when the flag is absent. Exit codes: 0 success, 2 config error, 3 pipeline
error.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

from .core4d import read_volume, write_volume
from .errors import ConfigError, Hsv4dError
from .harness import (
    StudyConfig,
    config_from_values,
    load_config,
    parse_config_text,
    run_study,
)
from .metrics4d import MetricConfig, MetricKind, evaluate_all, write_report_csv
from .phantom import EnsembleSpec, generate_ensemble, perturbed_params
from .projector import (
    acquire,
    evenly_spaced_angles,
    read_projections,
    ultra_sparse_angles,
    write_projections,
)
from .reconstruct import SolverConfig, sirt_reconstruct

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PIPELINE = 3


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="path to a key = value config file")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override one config key (repeatable)",
    )
    parser.add_argument("--seed", type=int, help="master seed (overrides config)")
    parser.add_argument("--workers", type=int, help="worker count (overrides config)")
    parser.add_argument("--out", help="output directory (overrides config)")


def _env_int(name: str) -> int | None:
    raw = os.environ.get(name)
    if raw is None or raw == "":
        return None
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"environment variable {name} must be an integer, got {raw!r}")


def _build_config(args) -> StudyConfig:
    overrides = {}
    for item in args.overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, _, value = item.partition("=")
        overrides[key.strip()] = value.strip()

    seed = args.seed if args.seed is not None else _env_int("HSV_SEED")
    if seed is not None:
        overrides["master_seed"] = str(seed)
    workers = args.workers if args.workers is not None else _env_int("HSV_WORKERS")
    if workers is not None:
        overrides["workers"] = str(workers)
    if args.out is not None:
        overrides["out"] = args.out

    if args.config is not None:
        return load_config(args.config, overrides)
    values = {}
    for key, raw in overrides.items():
        values.update(parse_config_text(f"{key} = {raw}"))
    return config_from_values(values)


def _cmd_phantom(args) -> int:
    config = _build_config(args)
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    spec = EnsembleSpec(
        n_experiments=config.n_experiments,
        variation_fraction=config.variation_fraction,
        base_params=config.base_params,
        dims=config.dims,
        master_seed=config.master_seed,
    )
    volumes = generate_ensemble(spec)
    for index, volume in enumerate(volumes):
        path = out / f"experiment_{index + 1:02d}.vol"
        write_volume(volume, path)
        print(path)
    return EXIT_OK


def _cmd_project(args) -> int:
    volume = read_volume(args.volume)
    if args.angles is not None:
        angles = tuple(float(a) for a in args.angles.split(","))
    elif args.evenly is not None:
        angles = evenly_spaced_angles(args.evenly, args.offset)
    elif args.ultra_sparse is not None:
        angles = ultra_sparse_angles(args.ultra_sparse)
    else:
        raise ConfigError("one of --angles, --evenly, --ultra-sparse is required")
    pset = acquire(
        volume,
        angles,
        geometry_known=not args.geometry_unknown,
        experiment_id=args.experiment_id,
    )
    write_projections(pset, args.out)
    print(args.out)
    return EXIT_OK


def _cmd_reconstruct(args) -> int:
    sets = [read_projections(p) for p in args.projections]
    dims = tuple(int(n) for n in args.dims.split(","))
    solver = SolverConfig(
        n_iterations=args.iterations,
        relaxation=args.relaxation,
        nonneg_clamp=not args.no_clamp,
        stop_tol=args.stop_tol,
    )
    volume = sirt_reconstruct(sets, solver, dims)
    write_volume(volume, args.out)
    print(args.out)
    return EXIT_OK


def _cmd_metrics(args) -> int:
    a = read_volume(args.volume_a)
    b = read_volume(args.volume_b)
    config = MetricConfig(
        nmi_bins=args.bins,
        ssim_window=tuple(int(w) for w in args.window.split(",")),
        fhc_shells=args.shells,
    )
    report = evaluate_all(a, b, config)
    for kind in MetricKind:
        print(f"{kind.value} {report.value(kind)}")
    for name, message in report.errors:
        print(f"# {name}: {message}", file=sys.stderr)
    if args.csv:
        write_report_csv(args.csv, [report])
    return EXIT_OK


def _cmd_study(args) -> int:
    config = _build_config(args)
    result = run_study(config)
    print(result.summary_csv)
    print(result.manifest_path)
    for path in result.plot_paths:
        print(path)
    return EXIT_OK


def _cmd_plot(args) -> int:
    import json

    from .harness import StudyResult, read_summary_csv
    from .metrics4d import MetricReport
    from .plots import plot_summary

    out = Path(args.study)
    if not (out / "manifest.json").exists():
        raise ConfigError(f"{out} is not a finished study directory (no manifest.json)")
    manifest = json.loads((out / "manifest.json").read_text())
    config = config_from_values(
        {
            k: tuple(v) if isinstance(v, list) else v
            for k, v in manifest["config"].items()
            if k in ("regime", "interlaced")
        }
    )
    rows = read_summary_csv(out / "reports" / "summary.csv")
    from .bootstrap import MetricStats, StatsSummary

    base = manifest["baseline"]
    baseline = MetricReport(
        mse=base["mse"],
        psnr_db=base["psnr_db"],
        dssim=base["dssim"],
        nmi=base["nmi"],
        ncc=base["ncc"],
        fhc_resolution=base["fhc_resolution"],
        comparison_kind=base["comparison_kind"],
        level=base["level"],
    )
    cells = tuple(
        MetricStats(
            comparison_kind=r["comparison_kind"],
            level=r["level"],
            metric=r["metric"],
            mean=r["mean"],
            std=r["std"],
            n_samples=r["n_samples"],
            n_nonfinite=r["n_nonfinite"],
            converged=r["converged"],
        )
        for r in rows
        if r["comparison_kind"] != base["comparison_kind"]
    )
    summary = StatsSummary(cells=cells, convergence_threshold=0.0)
    fhc_csvs = tuple(sorted(str(p) for p in (out / "reports").glob("fhc_*.csv")))
    result = StudyResult(
        out_dir=str(out),
        summary=summary,
        baseline=baseline,
        subset_csv=str(out / "reports" / "subset_metrics.csv"),
        cv_csv=str(out / "reports" / "cv_metrics.csv"),
        summary_csv=str(out / "reports" / "summary.csv"),
        fhc_csvs=fhc_csvs,
        manifest_path=str(out / "manifest.json"),
    )
    for path in plot_summary(result, config):
        print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hsv4d",
        description="Reference-free validation of sparse 4D tomographic reconstructions",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phantom", help="generate a phantom ensemble as VOL4D files")
    _add_common(p)
    p.set_defaults(func=_cmd_phantom)

    p = sub.add_parser("project", help="acquire projections from a VOL4D volume")
    p.add_argument("volume")
    p.add_argument("--angles", help="comma-separated angles in degrees")
    p.add_argument("--evenly", type=int, help="use N evenly spaced angles")
    p.add_argument("--offset", type=int, default=0, help="coset offset index")
    p.add_argument(
        "--ultra-sparse", type=int, help="use the four-view quadruple of experiment N"
    )
    p.add_argument("--geometry-unknown", action="store_true")
    p.add_argument("--experiment-id", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_project)

    p = sub.add_parser("reconstruct", help="SIRT reconstruction from PRJ4D files")
    p.add_argument("projections", nargs="+")
    p.add_argument("--dims", required=True, help="T,X,Y,Z")
    p.add_argument("--iterations", type=int, default=50)
    p.add_argument("--relaxation", type=float, default=1.0)
    p.add_argument("--no-clamp", action="store_true")
    p.add_argument("--stop-tol", type=float, default=1e-4)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_reconstruct)

    p = sub.add_parser("metrics", help="evaluate all metrics on two volumes")
    p.add_argument("volume_a")
    p.add_argument("volume_b")
    p.add_argument("--bins", type=int, default=64)
    p.add_argument("--window", default="3,7,7,7")
    p.add_argument("--shells", type=int, default=None)
    p.add_argument("--csv", help="also write a one-row report CSV")
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("study", help="run the full bootstrapped study")
    _add_common(p)
    p.set_defaults(func=_cmd_study)

    p = sub.add_parser("plot", help="re-render SVG plots from a finished study")
    p.add_argument("--study", required=True, help="study output directory")
    p.set_defaults(func=_cmd_plot)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Hsv4dError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PIPELINE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PIPELINE


if __name__ == "__main__":
    sys.exit(main())
