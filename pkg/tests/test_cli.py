"""Tests for the command line interface."""

import csv
import json
from collections import defaultdict

import pytest
from click.testing import CliRunner

from qsi_decoy_lab import __version__
from qsi_decoy_lab.cli import cli

PINNED_ENV = {"SOURCE_DATE_EPOCH": "0"}

SMALL_SIMULATION = {
    "imaging": {"width": 3, "height": 2, "pulses_per_pixel": 500},
    "output_formats": ["csv", "json"],
}

SMALL_FIG3 = {
    "fig3": {
        "loss_points": [0.0, 10.0, 20.0],
        "panels": [{"name": "a", "mu_points": [0.05, 0.1], "decoy_intensities": [0.001, 0.0]}],
    }
}


@pytest.fixture
def runner():
    return CliRunner()


def _config(tmp_path, document, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(document))
    return str(path)


def _read_csv(path):
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


def _manifest(out_dir, command):
    return json.loads((out_dir / command / "manifest.json").read_text())


class TestGlobalOptions:
    """Tests for options shared by every command."""

    def test_version(self, runner):
        result = runner.invoke(cli, ["--version"])
        assert result.exit_code == 0
        assert __version__ in result.output

    def test_help_explains_manifest_timestamp(self, runner):
        result = runner.invoke(cli, ["--help"])
        assert result.exit_code == 0
        assert "SOURCE_DATE_EPOCH" in result.output

    def test_config_show_applies_seed(self, runner):
        result = runner.invoke(cli, ["--seed", "7", "config", "show"])
        assert result.exit_code == 0
        assert '"seed": 7' in result.output
        assert '"correlation_model": "signal_retention"' in result.output
        assert '"correlation_model": "herald_scaling"' in result.output

    def test_missing_config_file(self, runner, tmp_path):
        result = runner.invoke(cli, ["--config", str(tmp_path / "absent.json"), "fig1"])
        assert result.exit_code == 3

    def test_invalid_config(self, runner, tmp_path):
        config = _config(tmp_path, {"fig1": {"fano_range": [1.0, 0.5]}})
        result = runner.invoke(cli, ["--config", config, "--out", str(tmp_path), "fig1"])
        assert result.exit_code == 2
        assert "fig1.fano_range" in result.output
        assert not (tmp_path / "fig1").exists()

    def test_unknown_key(self, runner, tmp_path):
        config = _config(tmp_path, {"imagin": {}})
        result = runner.invoke(cli, ["--config", config, "config", "show"])
        assert result.exit_code == 2

    def test_seed_out_of_range(self, runner):
        result = runner.invoke(cli, ["--seed", "-1", "config", "show"])
        assert result.exit_code == 2

    def test_options_after_subcommand(self, runner, tmp_path):
        config = _config(tmp_path, {"seed": 11})
        out = tmp_path / "results"
        result = runner.invoke(cli, ["fig1", "--config", config, "--out", str(out), "--seed", "3"])
        assert result.exit_code == 0, result.output
        assert _manifest(out, "fig1")["seed"] == 3

    def test_subcommand_options_win(self, runner, tmp_path):
        result = runner.invoke(
            cli, ["--seed", "7", "--out", str(tmp_path / "ignored"), "config", "show", "--seed", "9"]
        )
        assert result.exit_code == 0, result.output
        assert '"seed": 9' in result.output

    def test_group_options_still_apply(self, runner, tmp_path):
        config = _config(tmp_path, {"seed": 11, "fig2": {"points": 5}})
        result = runner.invoke(cli, ["--config", config, "config", "show", "--seed", "4"])
        assert result.exit_code == 0, result.output
        assert '"points": 5' in result.output
        assert '"seed": 4' in result.output

    def test_invalid_config_after_subcommand(self, runner, tmp_path):
        config = _config(tmp_path, {"fig1": {"fano_range": [1.0, 0.5]}})
        result = runner.invoke(cli, ["fig1", "--config", config, "--out", str(tmp_path)])
        assert result.exit_code == 2
        assert "fig1.fano_range" in result.output


class TestFig1Command:
    """Tests for the absorption uncertainty report."""

    def test_writes_tables_and_manifest(self, runner, tmp_path):
        result = runner.invoke(cli, ["--out", str(tmp_path), "fig1"], env=PINNED_ENV)
        assert result.exit_code == 0, result.output

        manifest = _manifest(tmp_path, "fig1")
        assert manifest["command"] == "fig1"
        assert manifest["seed"] == 12345
        assert [entry["path"] for entry in manifest["files"]] == ["fig1.csv", "fig1_fano.csv"]

    def test_sub_poissonian_light_lowers_uncertainty(self, runner, tmp_path):
        runner.invoke(cli, ["--out", str(tmp_path), "fig1"])
        rows = _read_csv(tmp_path / "fig1" / "fig1.csv")
        assert len(rows) == 121

        by_mean = defaultdict(dict)
        for row in rows:
            by_mean[float(row["mean_n"])][float(row["F"])] = float(row["delta_alpha"])
        for values in by_mean.values():
            assert values[1.0] > values[0.5]

    def test_fano_table(self, runner, tmp_path):
        runner.invoke(cli, ["--out", str(tmp_path), "fig1"])
        rows = _read_csv(tmp_path / "fig1" / "fig1_fano.csv")
        assert len(rows) == 6
        assert float(rows[0]["fano"]) == pytest.approx(0.7015)

    def test_byte_identical_reruns(self, runner, tmp_path):
        for name in ("first", "second"):
            result = runner.invoke(cli, ["--out", str(tmp_path / name), "fig1"], env=PINNED_ENV)
            assert result.exit_code == 0
        for file_name in ("fig1.csv", "fig1_fano.csv", "manifest.json"):
            first = (tmp_path / "first" / "fig1" / file_name).read_bytes()
            second = (tmp_path / "second" / "fig1" / file_name).read_bytes()
            assert first == second


class TestFig2Command:
    """Tests for the single-photon probability report."""

    def test_crossover(self, runner, tmp_path):
        result = runner.invoke(cli, ["--out", str(tmp_path), "fig2"])
        assert result.exit_code == 0, result.output

        crossover = json.loads((tmp_path / "fig2" / "fig2_crossover.json").read_text())
        assert 0.45 <= crossover["crossover_x"] <= 0.75
        assert crossover["correlation_model"] == "signal_retention"

        rows = _read_csv(tmp_path / "fig2" / "fig2.csv")
        assert len(rows) == 101
        assert float(rows[0]["x"]) == 0.0
        assert float(rows[0]["p1_wcs"]) == 0.0

    def test_herald_scaling_has_no_crossover(self, runner, tmp_path):
        config = _config(tmp_path, {"fig2": {"correlation_model": "herald_scaling"}})
        result = runner.invoke(cli, ["--config", config, "--out", str(tmp_path), "fig2"])
        assert result.exit_code == 0, result.output

        crossover = json.loads((tmp_path / "fig2" / "fig2_crossover.json").read_text())
        assert crossover["crossover_x"] is None
        assert crossover["note"]
        assert crossover["correlation_model"] == "herald_scaling"


class TestFig3Command:
    """Tests for the rate-versus-loss report."""

    def test_small_panel(self, runner, tmp_path):
        config = _config(tmp_path, SMALL_FIG3)
        result = runner.invoke(cli, ["--config", config, "--out", str(tmp_path), "fig3"])
        assert result.exit_code == 0, result.output

        rows = _read_csv(tmp_path / "fig3" / "fig3a.csv")
        assert len(rows) == 12
        assert {row["source"] for row in rows} == {"wcs", "hsps"}

        spread = _read_csv(tmp_path / "fig3" / "fig3_spread.csv")
        assert [float(row["loss_db"]) for row in spread] == [0.0, 10.0, 20.0]

        ratios = _manifest(tmp_path, "fig3")["summary"]["ratio_hsps_wcs"]["a"]
        assert ratios["10"] > 1.0

    def test_empty_loss_grid(self, runner, tmp_path):
        config = _config(tmp_path, {"fig3": {"loss_points": []}})
        result = runner.invoke(cli, ["--config", config, "--out", str(tmp_path), "fig3"])
        assert result.exit_code == 2


class TestSimulateCommand:
    """Tests for the raster scan report."""

    def test_summary_and_pixels(self, runner, tmp_path):
        config = _config(tmp_path, SMALL_SIMULATION)
        result = runner.invoke(cli, ["--config", config, "--out", str(tmp_path), "simulate"])
        assert result.exit_code == 0, result.output

        summary = json.loads((tmp_path / "simulate" / "simulate_summary.json").read_text())
        assert summary["pixels"] == 6
        assert summary["sifted_bits"] >= 0
        assert len(_read_csv(tmp_path / "simulate" / "simulate_pixels.csv")) == 6
        assert (tmp_path / "simulate" / "simulate_pixels.json").is_file()

    def test_same_seed_same_bytes(self, runner, tmp_path):
        config = _config(tmp_path, SMALL_SIMULATION)
        for name in ("first", "second"):
            result = runner.invoke(
                cli, ["--config", config, "--out", str(tmp_path / name), "simulate"], env=PINNED_ENV
            )
            assert result.exit_code == 0
        first_dir = tmp_path / "first" / "simulate"
        second_dir = tmp_path / "second" / "simulate"
        for path in first_dir.iterdir():
            assert path.read_bytes() == (second_dir / path.name).read_bytes()

    def test_scene_file(self, runner, tmp_path):
        (tmp_path / "scene.txt").write_text("0.0 0.5\n0.5 1.0\n")
        config = _config(
            tmp_path, {"imaging": {"scene_path": "scene.txt", "pulses_per_pixel": 500}}
        )
        result = runner.invoke(cli, ["--config", config, "--out", str(tmp_path), "simulate"])
        assert result.exit_code == 0, result.output
        summary = json.loads((tmp_path / "simulate" / "simulate_summary.json").read_text())
        assert summary["pixels"] == 4

    def test_missing_scene(self, runner, tmp_path):
        config = _config(tmp_path, {"imaging": {"scene_path": "absent.txt"}})
        result = runner.invoke(cli, ["--config", config, "--out", str(tmp_path), "simulate"])
        assert result.exit_code == 3


class TestOptimizeCommand:
    """Tests for the intensity optimization report."""

    def test_unreachable_floor(self, runner, tmp_path):
        config = _config(tmp_path, {"optimize": {"rate_floor": 1.0, "sources": ["wcs"]}})
        result = runner.invoke(cli, ["--config", config, "--out", str(tmp_path), "optimize"])
        assert result.exit_code == 4

        optimum = json.loads((tmp_path / "optimize" / "optimum.json").read_text())
        assert optimum["sources"]["wcs"]["feasible"] is False
        assert not (tmp_path / "optimize" / "key_rate_wcs.csv").exists()
        assert (tmp_path / "optimize" / "manifest.json").is_file()

    def test_wcs_optimum(self, runner, tmp_path):
        config = _config(tmp_path, {"optimize": {"sources": ["wcs"], "loss_cap_db": 40.0}})
        result = runner.invoke(cli, ["--config", config, "--out", str(tmp_path), "optimize"])
        assert result.exit_code == 0, result.output

        wcs = json.loads((tmp_path / "optimize" / "optimum.json").read_text())["sources"]["wcs"]
        assert wcs["feasible"] is True
        assert 0.1 < wcs["mu_star"] < 1.0
        assert wcs["throughput_bps"] == pytest.approx(wcs["rate_star"] * 1e9)
        assert 10.0 < wcs["max_loss_db"] <= 40.0

        row = _read_csv(tmp_path / "optimize" / "key_rate_wcs.csv")[0]
        assert float(row["mu"]) == pytest.approx(wcs["mu_star"])
        assert float(row["rate"]) == pytest.approx(wcs["rate_star"], rel=1e-9)
        assert float(row["loss_db"]) == 10.0
