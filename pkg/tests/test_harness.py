import csv
import hashlib
import json
import math
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np
import pytest

from hsv4d import ConfigError, PhantomParams, SolverConfig, Volume4D, write_volume
from hsv4d.cli import main as cli_main
from hsv4d.harness import (
    SUMMARY_CSV_HEADER,
    StudyConfig,
    config_from_values,
    load_config,
    parse_config_text,
    read_summary_csv,
    run_study,
)
from hsv4d.metrics4d import MetricConfig, read_report_csv, REPORT_CSV_HEADER


def tiny_config(out_dir, **overrides) -> StudyConfig:
    values = dict(
        regime="sparse",
        levels=(2, 8),
        n_subsets=4,
        n_pairs=6,
        interlaced=True,
        master_seed=3,
        workers=1,
        out_dir=str(out_dir),
        n_experiments=2,
        variation_fraction=0.10,
        dims=(6, 16, 16, 16),
        base_params=PhantomParams(radius_a=3.0, radius_b=2.5, speed=0.8, blend_width=0.4),
        solver=SolverConfig(n_iterations=8),
        metrics=MetricConfig(ssim_window=(3, 5, 5, 5), fhc_shells=4),
    )
    values.update(overrides)
    return StudyConfig(**values)


@pytest.fixture(scope="module")
def tiny_study(tmp_path_factory):
    out = tmp_path_factory.mktemp("tiny_study")
    config = tiny_config(out)
    result = run_study(config)
    return config, result


class TestConfigParsing:
    def test_happy_path(self):
        text = """
        # a comment
        regime = sparse
        levels = 2,4,8
        n_subsets = 20          # trailing comment
        interlaced = true
        phantom.dims = 24,32,32,32
        solver.relaxation = 1.5
        """
        values = parse_config_text(text)
        assert values["regime"] == "sparse"
        assert values["levels"] == (2, 4, 8)
        assert values["n_subsets"] == 20
        assert values["interlaced"] is True
        assert values["phantom.dims"] == (24, 32, 32, 32)
        assert values["solver.relaxation"] == 1.5

    def test_unknown_key_reports_line(self):
        with pytest.raises(ConfigError) as err:
            parse_config_text("regime = sparse\nbogus_key = 3\n")
        assert "line 2" in str(err.value)
        assert err.value.line == 2

    def test_bad_value_reports_line(self):
        with pytest.raises(ConfigError) as err:
            parse_config_text("n_subsets = many")
        assert err.value.line == 1

    def test_missing_equals(self):
        with pytest.raises(ConfigError) as err:
            parse_config_text("regime sparse")
        assert err.value.line == 1

    def test_load_with_overrides(self, tmp_path):
        path = tmp_path / "c.cfg"
        path.write_text("regime = sparse\nmaster_seed = 1\nlevels = 2,4\n")
        config = load_config(path, overrides={"master_seed": "9"})
        assert config.master_seed == 9
        assert config.levels == (2, 4)

    def test_config_validation(self):
        with pytest.raises(ConfigError):
            config_from_values({"regime": "bogus"})
        with pytest.raises(ConfigError):
            config_from_values({"levels": ()})

    def test_fhc_shells_zero_means_auto(self):
        config = config_from_values({"metrics.fhc_shells": 0})
        assert config.metrics.fhc_shells is None


class TestRunStudy:
    def test_layout(self, tiny_study):
        config, result = tiny_study
        out = Path(result.out_dir)
        for sub in ("volumes", "projections", "reconstructions", "reports", "plots"):
            assert (out / sub).is_dir()
        assert Path(result.manifest_path).is_file()
        assert Path(result.subset_csv).is_file()
        assert Path(result.cv_csv).is_file()
        assert Path(result.summary_csv).is_file()
        for p in result.fhc_csvs:
            assert Path(p).is_file()
        for p in result.plot_paths:
            assert Path(p).is_file()

    def test_csv_schemas_parse(self, tiny_study):
        _, result = tiny_study
        subset_rows = read_report_csv(result.subset_csv)
        cv_rows = read_report_csv(result.cv_csv)
        assert len(subset_rows) == 2 * 4 * 2  # kinds x subsets x levels
        assert len(cv_rows) == 2 * 6 * 2  # variants x pairs x levels
        with open(result.subset_csv) as fh:
            assert tuple(next(csv.reader(fh))) == REPORT_CSV_HEADER
        rows = read_summary_csv(result.summary_csv)
        kinds = {r["comparison_kind"] for r in rows}
        assert kinds == {
            "subset_vs_ground_truth",
            "subset_vs_fullset",
            "cross_validation_interlaced",
            "cross_validation_plain",
            "fullset_vs_ground_truth",
        }

    def test_degenerate_full_level(self, tiny_study):
        # level 16 subsets equal the full angle set: distance to the
        # pseudo-reference is exactly zero
        config, result = tiny_study
        out = Path(result.out_dir).parent / "degenerate"
        degenerate = run_study(tiny_config(out, levels=(16,), n_subsets=2, n_pairs=2))
        rows = read_report_csv(degenerate.subset_csv)
        fullset_rows = [r for r in rows if r.comparison_kind == "subset_vs_fullset"]
        assert fullset_rows
        for r in fullset_rows:
            assert r.mse == 0.0
            assert r.psnr_db == math.inf

    def test_baseline_row_present(self, tiny_study):
        _, result = tiny_study
        rows = read_summary_csv(result.summary_csv)
        base = [r for r in rows if r["comparison_kind"] == "fullset_vs_ground_truth"]
        assert len(base) == 6
        assert all(r["n_samples"] == 1 for r in base)
        assert all(r["level"] == 16 for r in base)

    def test_manifest_contents(self, tiny_study):
        config, result = tiny_study
        manifest = json.loads(Path(result.manifest_path).read_text())
        assert manifest["config"]["regime"] == "sparse"
        assert manifest["geometry_known"] is True
        assert set(manifest["subsets"]) == {"2", "8"}
        assert len(manifest["pairs"]["2"]) == config.n_pairs
        ledger_row = manifest["pairs"]["2"][0]
        assert {"pair_id", "subset_a", "subset_b", "member_overlap"} <= set(ledger_row)
        assert str(0) in manifest["experiments"]  # validation params recorded

    def test_interlaced_at_most_plain(self, tiny_study):
        _, result = tiny_study
        for level in (2, 8):
            inter = result.summary.get("cross_validation_interlaced", level, "ncc")
            plain = result.summary.get("cross_validation_plain", level, "ncc")
            assert inter.mean <= plain.mean + 1e-12

    def test_determinism_rerun(self, tiny_study, tmp_path_factory):
        config, result = tiny_study
        out2 = tmp_path_factory.mktemp("tiny_rerun")
        rerun = run_study(tiny_config(out2, workers=2))
        for name in ("subset_metrics.csv", "cv_metrics.csv", "summary.csv"):
            a = (Path(result.out_dir) / "reports" / name).read_bytes()
            b = (Path(rerun.out_dir) / "reports" / name).read_bytes()
            assert hashlib.sha256(a).hexdigest() == hashlib.sha256(b).hexdigest()

    def test_ultra_sparse_regime(self, tmp_path):
        config = tiny_config(
            tmp_path / "ultra",
            regime="ultra_sparse",
            levels=(1, 2),
            n_experiments=4,
        )
        result = run_study(config)
        manifest = json.loads(Path(result.manifest_path).read_text())
        assert manifest["geometry_known"] is False
        assert manifest["angles_deg"]["1"] == [0.0, 45.0, 90.0, 135.0]
        assert manifest["angles_deg"]["2"] == [11.25, 56.25, 101.25, 146.25]
        rows = read_summary_csv(result.summary_csv)
        levels = {r["level"] for r in rows}
        assert {1, 2, 4} <= levels  # 4 = full-set baseline level

    def test_svg_well_formed(self, tiny_study):
        _, result = tiny_study
        for path in result.plot_paths:
            root = ET.parse(path).getroot()
            assert root.tag.endswith("svg")


class TestCli:
    def test_metrics_identity_bundle(self, tmp_path, capsys):
        vol = Volume4D(np.random.default_rng(0).random((4, 12, 12, 12)).astype(np.float32))
        path = tmp_path / "v.vol"
        write_volume(vol, path)
        code = cli_main(
            ["metrics", str(path), str(path), "--window", "3,5,5,5", "--shells", "4"]
        )
        assert code == 0
        out = capsys.readouterr().out
        values = dict(line.split() for line in out.strip().splitlines())
        assert float(values["mse"]) == 0.0
        assert values["psnr_db"] == "inf"
        assert float(values["ncc"]) == 1.0
        assert float(values["nmi"]) == 2.0
        assert float(values["fhc_resolution"]) == 1.0

    def test_unknown_config_key_exit_2(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("regime = sparse\nnot_a_key = 1\n")
        code = cli_main(["study", "--config", str(cfg)])
        assert code == 2
        assert "line 2" in capsys.readouterr().err

    def test_missing_volume_exit_3(self, tmp_path, capsys):
        code = cli_main(["metrics", str(tmp_path / "a.vol"), str(tmp_path / "b.vol")])
        assert code == 3

    def test_project_reconstruct_round_trip(self, tmp_path, capsys):
        from tests.conftest import ball_frame

        truth = Volume4D(np.stack([ball_frame(12, 4.0)] * 2).astype(np.float32))
        vol_path = tmp_path / "t.vol"
        write_volume(truth, vol_path)
        prj_path = tmp_path / "t.prj"
        assert (
            cli_main(
                [
                    "project",
                    str(vol_path),
                    "--evenly",
                    "8",
                    "--out",
                    str(prj_path),
                ]
            )
            == 0
        )
        rec_path = tmp_path / "r.vol"
        assert (
            cli_main(
                [
                    "reconstruct",
                    str(prj_path),
                    "--dims",
                    "2,12,12,12",
                    "--iterations",
                    "30",
                    "--out",
                    str(rec_path),
                ]
            )
            == 0
        )
        from hsv4d import ncc, read_volume

        assert ncc(read_volume(rec_path), truth) > 0.8

    def test_study_and_plot_commands(self, tmp_path, capsys, monkeypatch):
        cfg = tmp_path / "study.cfg"
        cfg.write_text(
            "\n".join(
                [
                    "regime = sparse",
                    "levels = 2,8",
                    "n_subsets = 3",
                    "n_pairs = 4",
                    "workers = 1",
                    f"out = {tmp_path / 'run'}",
                    "phantom.n_experiments = 2",
                    "phantom.dims = 6,16,16,16",
                    "phantom.radius_a = 3.0",
                    "phantom.radius_b = 2.5",
                    "phantom.speed = 0.8",
                    "phantom.blend_width = 0.4",
                    "solver.n_iterations = 8",
                    "metrics.ssim_window = 3,5,5,5",
                    "metrics.fhc_shells = 4",
                ]
            )
        )
        assert cli_main(["study", "--config", str(cfg), "--seed", "5"]) == 0
        manifest = json.loads((tmp_path / "run" / "manifest.json").read_text())
        assert manifest["config"]["master_seed"] == 5
        capsys.readouterr()
        assert cli_main(["plot", "--study", str(tmp_path / "run")]) == 0
        out = capsys.readouterr().out
        assert "summary.svg" in out

    def test_env_seed_fallback(self, tmp_path, monkeypatch, capsys):
        cfg = tmp_path / "env.cfg"
        cfg.write_text("regime = sparse\n")
        monkeypatch.setenv("HSV_SEED", "77")
        monkeypatch.setenv("HSV_WORKERS", "1")
        # phantom command builds the config without running a study
        code = cli_main(
            [
                "phantom",
                "--config",
                str(cfg),
                "--out",
                str(tmp_path / "ph"),
                "--set",
                "phantom.n_experiments=1",
                "--set",
                "phantom.dims=4,16,16,16",
                "--set",
                "phantom.radius_a=3.0",
                "--set",
                "phantom.radius_b=2.5",
                "--set",
                "phantom.speed=0.8",
                "--set",
                "phantom.blend_width=0.4",
            ]
        )
        assert code == 0
        produced = list((tmp_path / "ph").glob("*.vol"))
        assert len(produced) == 1

    def test_flag_beats_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("HSV_SEED", "77")
        cfg = tmp_path / "s.cfg"
        cfg.write_text(
            "\n".join(
                [
                    "regime = sparse",
                    "levels = 2",
                    "n_subsets = 2",
                    "n_pairs = 2",
                    "workers = 1",
                    f"out = {tmp_path / 'flagrun'}",
                    "phantom.n_experiments = 1",
                    "phantom.dims = 4,16,16,16",
                    "phantom.radius_a = 3.0",
                    "phantom.radius_b = 2.5",
                    "phantom.speed = 0.8",
                    "phantom.blend_width = 0.4",
                    "solver.n_iterations = 4",
                    "metrics.ssim_window = 1,3,3,3",
                    "metrics.fhc_shells = 4",
                ]
            )
        )
        assert cli_main(["study", "--config", str(cfg), "--seed", "11"]) == 0
        manifest = json.loads((tmp_path / "flagrun" / "manifest.json").read_text())
        assert manifest["config"]["master_seed"] == 11
