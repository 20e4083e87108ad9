import json

import numpy as np
import pytest
from click.testing import CliRunner

from hsisr import load_tensor, save_tensor, upsample_bicubic
from hsisr.cli import main
from tests.conftest import make_scene


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def setup(tmp_path):
    _, _, cube = make_scene(10, 3, 16, 16, seed=21)
    save_tensor(cube, tmp_path / "input.npy")
    cfg = {
        "input_cube": str(tmp_path / "input.npy"),
        "workdir": str(tmp_path / "work"),
        "unmix": {"n_materials": 3},
        "deadleaves": {"out_rows": 16, "out_cols": 16,
                       "size_min": 2.0, "size_max": 8.0},
        "psf": {"sigma": 1.0, "scale": 2},
        "evaluation": {"patch_size": 8, "grid": 2},
        "corpus_count": 2,
        "base_seed": 5,
    }
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    return tmp_path, cfg, cfg_path


def rewrite(cfg_path, cfg):
    cfg_path.write_text(json.dumps(cfg))


class TestBasics:
    def test_help_lists_subcommands(self, runner):
        result = runner.invoke(main, ["--help"])
        assert result.exit_code == 0
        for name in ("degrade", "unmix", "synth", "baseline",
                     "reconstruct", "eval"):
            assert name in result.output

    def test_missing_config_file(self, runner, tmp_path):
        result = runner.invoke(main, ["degrade", "--config",
                                      str(tmp_path / "none.json")])
        assert result.exit_code == 2

    def test_config_not_json(self, runner, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{oops")
        result = runner.invoke(main, ["degrade", "--config", str(bad)])
        assert result.exit_code == 2
        assert "error:" in result.output

    def test_reconstruct_requires_a_sr(self, runner, setup):
        _, _, cfg_path = setup
        result = runner.invoke(main, ["reconstruct", "--config", str(cfg_path)])
        assert result.exit_code == 2


class TestExitCodes:
    def test_missing_input_cube_is_validation(self, runner, setup):
        tmp_path, cfg, cfg_path = setup
        cfg["input_cube"] = str(tmp_path / "missing.npy")
        rewrite(cfg_path, cfg)
        result = runner.invoke(main, ["degrade", "--config", str(cfg_path)])
        assert result.exit_code == 2

    def test_rank_deficient_is_numerical(self, runner, setup):
        tmp_path, cfg, cfg_path = setup
        save_tensor(np.full((10, 8, 8), 0.7), tmp_path / "flat.npy")
        cfg["input_cube"] = str(tmp_path / "flat.npy")
        rewrite(cfg_path, cfg)
        result = runner.invoke(main, ["unmix", "--config", str(cfg_path)])
        assert result.exit_code == 3
        assert "error:" in result.output

    def test_coverage_failure_is_numerical(self, runner, setup):
        tmp_path, cfg, cfg_path = setup
        assert runner.invoke(main, ["unmix", "--config", str(cfg_path)]).exit_code == 0
        cfg["deadleaves"]["size_min"] = 1.0
        cfg["deadleaves"]["size_max"] = 1.5
        cfg["deadleaves"]["max_leaves"] = 2
        rewrite(cfg_path, cfg)
        result = runner.invoke(main, ["synth", "--config", str(cfg_path),
                                      "--count", "1"])
        assert result.exit_code == 3

    def test_synth_before_unmix_is_validation(self, runner, setup):
        _, _, cfg_path = setup
        result = runner.invoke(main, ["synth", "--config", str(cfg_path)])
        assert result.exit_code == 2


class TestOverrides:
    def test_count_override(self, runner, setup):
        tmp_path, _, cfg_path = setup
        runner.invoke(main, ["unmix", "--config", str(cfg_path)])
        result = runner.invoke(main, ["synth", "--config", str(cfg_path),
                                      "--count", "3"])
        assert result.exit_code == 0
        corpus = tmp_path / "work" / "corpus"
        assert len(list(corpus.glob("adl_hr_*.npy"))) == 3

    def test_seed_override_lands_in_manifest(self, runner, setup):
        tmp_path, _, cfg_path = setup
        runner.invoke(main, ["unmix", "--config", str(cfg_path)])
        result = runner.invoke(main, ["synth", "--config", str(cfg_path),
                                      "--count", "1", "--seed", "99"])
        assert result.exit_code == 0
        manifest = json.loads(
            (tmp_path / "work" / "corpus" / "manifest.json").read_text()
        )
        assert manifest["base_seed"] == 99

    def test_out_overrides_workdir(self, runner, setup):
        tmp_path, _, cfg_path = setup
        other = tmp_path / "elsewhere"
        result = runner.invoke(main, ["degrade", "--config", str(cfg_path),
                                      "--out", str(other)])
        assert result.exit_code == 0
        assert (other / "hsi_lr.npy").exists()
        assert not (tmp_path / "work" / "hsi_lr.npy").exists()


class TestFullChain:
    def test_all_stages_exit_zero(self, runner, setup):
        tmp_path, _, cfg_path = setup
        for args in (["degrade"], ["unmix"], ["synth", "--count", "1"],
                     ["baseline"]):
            result = runner.invoke(main, args + ["--config", str(cfg_path)])
            assert result.exit_code == 0, (args, result.output)

        a_lr = load_tensor(tmp_path / "work" / "a_lr.npy", kind="abundance")
        a_sr = upsample_bicubic(a_lr, 2, target_dims=(16, 16))
        save_tensor(a_sr, tmp_path / "a_sr.npy")
        result = runner.invoke(main, ["reconstruct", "--config", str(cfg_path),
                                      "--a-sr", str(tmp_path / "a_sr.npy")])
        assert result.exit_code == 0
        assert "mPSNR" in result.output
        result = runner.invoke(main, ["eval", "--config", str(cfg_path)])
        assert result.exit_code == 0
        assert (tmp_path / "work" / "eval_report.json").exists()
