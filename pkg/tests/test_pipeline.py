import json

import numpy as np
import pytest

from hsisr import (
    ConfigError,
    IoError,
    PipelineConfig,
    ShapeError,
    WorkdirLockedError,
    load_tensor,
    normalize_global,
    save_tensor,
    upsample_bicubic,
)
from hsisr.degrade import degrade
from hsisr.pipeline import (
    A_LR_FILE,
    CORPUS_DIR,
    HSI_HR_FILE,
    HSI_LR_FILE,
    HSI_SR_FILE,
    MANIFEST_FILE,
    S_FILE,
    cmd_baseline,
    cmd_degrade,
    cmd_eval,
    cmd_reconstruct,
    cmd_synth,
    cmd_unmix,
    workdir_lock,
)
from tests.conftest import make_scene


def config_dict(tmp_path, **overrides):
    d = {
        "input_cube": str(tmp_path / "input.npy"),
        "workdir": str(tmp_path / "work"),
        "unmix": {"n_materials": 3},
        "deadleaves": {"out_rows": 16, "out_cols": 16,
                       "size_min": 2.0, "size_max": 8.0},
        "psf": {"sigma": 1.0, "scale": 2},
        "evaluation": {"patch_size": 8, "grid": 2},
        "corpus_count": 3,
        "base_seed": 5,
    }
    d.update(overrides)
    return d


@pytest.fixture
def env(tmp_path):
    _, _, cube = make_scene(10, 3, 16, 16, seed=21)
    save_tensor(cube, tmp_path / "input.npy")
    return tmp_path, PipelineConfig.from_dict(config_dict(tmp_path))


class TestConfig:
    def test_from_dict_defaults(self, tmp_path):
        cfg = PipelineConfig.from_dict(config_dict(tmp_path))
        assert cfg.deadleaves.n_materials == 3  # inherited from unmix
        assert cfg.psf.scale == 2
        assert cfg.normalize_input is True
        assert cfg.hr_reference is None

    def test_missing_key(self, tmp_path):
        d = config_dict(tmp_path)
        del d["unmix"]
        with pytest.raises(ConfigError):
            PipelineConfig.from_dict(d)

    def test_unknown_field(self, tmp_path):
        d = config_dict(tmp_path)
        d["psf"]["blur_mode"] = "box"
        with pytest.raises(ConfigError):
            PipelineConfig.from_dict(d)

    def test_json_file_roundtrip(self, tmp_path):
        d = config_dict(tmp_path)
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(d))
        cfg = PipelineConfig.from_json_file(path)
        assert cfg.to_dict()["deadleaves"]["out_rows"] == 16
        back = PipelineConfig.from_dict(cfg.to_dict())
        assert back == cfg

    def test_bad_json_file(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError):
            PipelineConfig.from_json_file(path)
        with pytest.raises(IoError):
            PipelineConfig.from_json_file(tmp_path / "absent.json")


class TestDegrade:
    def test_writes_normalized_pair(self, env):
        tmp_path, cfg = env
        summary = cmd_degrade(cfg)
        workdir = tmp_path / "work"
        hr = load_tensor(workdir / HSI_HR_FILE)
        lr = load_tensor(workdir / HSI_LR_FILE)
        assert hr.data.shape == (10, 16, 16)
        assert lr.data.shape == (10, 8, 8)
        assert summary["lr_shape"] == [10, 8, 8]
        assert abs(hr.data.max() - 1.0) < 1e-7

    def test_lr_matches_direct_computation(self, env):
        tmp_path, cfg = env
        cmd_degrade(cfg)
        raw = load_tensor(tmp_path / "input.npy")
        expected = degrade(normalize_global(raw), cfg.psf)
        lr = load_tensor(tmp_path / "work" / HSI_LR_FILE)
        np.testing.assert_allclose(lr.data, expected.data, rtol=0, atol=1e-6)

    def test_rerun_is_byte_identical(self, env):
        tmp_path, cfg = env
        cmd_degrade(cfg)
        first = (tmp_path / "work" / HSI_LR_FILE).read_bytes()
        cmd_degrade(cfg)
        assert (tmp_path / "work" / HSI_LR_FILE).read_bytes() == first

    def test_normalize_can_be_disabled(self, tmp_path):
        _, _, cube = make_scene(6, 2, 16, 16, seed=4)
        save_tensor(cube / cube.max(), tmp_path / "input.npy")
        d = config_dict(tmp_path, normalize_input=False)
        d["unmix"]["n_materials"] = 2
        cfg = PipelineConfig.from_dict(d)
        cmd_degrade(cfg)
        hr = load_tensor(tmp_path / "work" / HSI_HR_FILE)
        src = load_tensor(tmp_path / "input.npy")
        np.testing.assert_array_equal(hr.data, src.data)


class TestUnmix:
    def test_after_degrade_uses_lr(self, env):
        tmp_path, cfg = env
        cmd_degrade(cfg)
        summary = cmd_unmix(cfg)
        workdir = tmp_path / "work"
        s = load_tensor(workdir / S_FILE)
        a = load_tensor(workdir / A_LR_FILE, kind="abundance")
        assert s.data.shape == (10, 3)
        assert a.data.shape == (3, 8, 8)
        # the scene is exactly rank 3, so the LS residual vanishes
        assert summary["residual_rmse"] < 1e-6
        assert len(summary["selected_pixel_indices"]) == 3
        report = json.loads((workdir / "unmix_report.json").read_text())
        assert report["residual_rmse"] == summary["residual_rmse"]

    def test_without_degrade_uses_input(self, env):
        tmp_path, cfg = env
        cmd_unmix(cfg)
        a = load_tensor(tmp_path / "work" / A_LR_FILE, kind="abundance")
        assert a.data.shape == (3, 16, 16)


class TestSynth:
    def test_requires_abundances(self, env):
        _, cfg = env
        with pytest.raises(IoError, match="unmix"):
            cmd_synth(cfg)

    def test_corpus_layout_and_manifest(self, env):
        tmp_path, cfg = env
        cmd_degrade(cfg)
        cmd_unmix(cfg)
        manifest = cmd_synth(cfg)
        corpus = tmp_path / "work" / CORPUS_DIR
        assert (corpus / MANIFEST_FILE).exists()
        for k in range(3):
            hr = load_tensor(corpus / f"adl_hr_{k:05}.npy", kind="abundance")
            lr = load_tensor(corpus / f"adl_lr_{k:05}.npy", kind="abundance")
            assert hr.data.shape == (3, 16, 16)
            assert lr.data.shape == (3, 8, 8)
        assert manifest["count"] == 3
        assert manifest["base_seed"] == 5
        assert manifest["hr_shape"] == [3, 16, 16]
        assert manifest["lr_shape"] == [3, 8, 8]
        assert manifest["files"][1]["hr"] == "adl_hr_00001.npy"
        assert "sha256" in manifest["inputs"][A_LR_FILE]
        on_disk = json.loads((corpus / MANIFEST_FILE).read_text())
        assert on_disk["files"] == manifest["files"]

    def test_pairs_are_consistent(self, env):
        tmp_path, cfg = env
        cmd_degrade(cfg)
        cmd_unmix(cfg)
        cmd_synth(cfg, count=2)
        corpus = tmp_path / "work" / CORPUS_DIR
        hr = load_tensor(corpus / "adl_hr_00001.npy", kind="abundance")
        lr = load_tensor(corpus / "adl_lr_00001.npy", kind="abundance")
        expected = degrade(hr, cfg.psf)
        np.testing.assert_allclose(lr.data, expected.data, rtol=0, atol=1e-6)

    def test_deterministic_except_timestamp(self, env):
        tmp_path, cfg = env
        cmd_degrade(cfg)
        cmd_unmix(cfg)
        cmd_synth(cfg, count=2)
        corpus = tmp_path / "work" / CORPUS_DIR
        first_files = {p.name: p.read_bytes() for p in corpus.glob("*.npy")}
        first_manifest = json.loads((corpus / MANIFEST_FILE).read_text())
        cmd_synth(cfg, count=2)
        for p in corpus.glob("*.npy"):
            assert p.read_bytes() == first_files[p.name]
        second_manifest = json.loads((corpus / MANIFEST_FILE).read_text())
        first_manifest.pop("created_at")
        second_manifest.pop("created_at")
        assert first_manifest == second_manifest

    def test_parallel_matches_serial(self, env):
        tmp_path, cfg = env
        cmd_degrade(cfg)
        cmd_unmix(cfg)
        cmd_synth(cfg, count=4, workers=1)
        corpus = tmp_path / "work" / CORPUS_DIR
        serial = {p.name: p.read_bytes() for p in corpus.glob("*.npy")}
        cmd_synth(cfg, count=4, workers=2)
        for p in corpus.glob("*.npy"):
            assert p.read_bytes() == serial[p.name]

    def test_material_mismatch(self, env):
        tmp_path, cfg = env
        cmd_degrade(cfg)
        cmd_unmix(cfg)
        from dataclasses import replace

        bad = replace(cfg, deadleaves=replace(cfg.deadleaves, n_materials=4))
        with pytest.raises(ShapeError):
            cmd_synth(bad, count=1)


class TestBaselineReconstructEval:
    def test_baseline_artifacts(self, env):
        tmp_path, cfg = env
        cmd_degrade(cfg)
        report = cmd_baseline(cfg)
        workdir = tmp_path / "work"
        assert (workdir / "hsi_bicubic.npy").exists()
        assert (workdir / "baseline_report.json").exists()
        assert (workdir / "baseline_patches.csv").exists()
        assert len(report["patches"]) == 4
        assert np.isfinite(report["mean_mpsnr"])
        est = load_tensor(workdir / "hsi_bicubic.npy")
        assert est.data.shape == (10, 16, 16)

    def test_reconstruct_closes_the_loop(self, env):
        # on an exact-rank scene, mixing upsampled abundances equals
        # upsampling the low-resolution cube, so the reconstruction must
        # score the same as the bicubic baseline
        tmp_path, cfg = env
        cmd_degrade(cfg)
        cmd_unmix(cfg)
        baseline = cmd_baseline(cfg)
        workdir = tmp_path / "work"
        a_lr = load_tensor(workdir / A_LR_FILE, kind="abundance")
        a_sr = upsample_bicubic(a_lr, cfg.psf.scale, target_dims=(16, 16))
        save_tensor(a_sr, tmp_path / "a_sr.npy")
        summary = cmd_reconstruct(cfg, tmp_path / "a_sr.npy")
        sr = load_tensor(workdir / HSI_SR_FILE)
        bicubic = load_tensor(workdir / "hsi_bicubic.npy")
        np.testing.assert_allclose(sr.data, bicubic.data, rtol=0, atol=1e-5)
        got = summary["evaluation"]["mean_mpsnr"]
        assert abs(got - baseline["mean_mpsnr"]) < 0.01

    def test_reconstruct_crops_overshoot(self, env):
        tmp_path, cfg = env
        cmd_degrade(cfg)
        cmd_unmix(cfg)
        rng = np.random.default_rng(0)
        a_sr = rng.random((3, 17, 17))
        save_tensor(a_sr, tmp_path / "a_sr.npy")
        summary = cmd_reconstruct(cfg, tmp_path / "a_sr.npy")
        assert summary["hsi_sr_shape"] == [10, 16, 16]
        too_big = rng.random((3, 19, 16))
        save_tensor(too_big, tmp_path / "a_big.npy")
        with pytest.raises(ShapeError):
            cmd_reconstruct(cfg, tmp_path / "a_big.npy")

    def test_reconstruct_material_mismatch(self, env):
        tmp_path, cfg = env
        cmd_degrade(cfg)
        cmd_unmix(cfg)
        save_tensor(np.random.default_rng(0).random((5, 16, 16)),
                    tmp_path / "a_sr.npy")
        with pytest.raises(ShapeError):
            cmd_reconstruct(cfg, tmp_path / "a_sr.npy")

    def test_eval_explicit_paths(self, env, rng):
        tmp_path, cfg = env
        ref = rng.random((4, 16, 16)) + 0.1
        est = ref + rng.normal(0, 0.01, size=ref.shape)
        save_tensor(ref, tmp_path / "ref.npy")
        save_tensor(est, tmp_path / "est.npy")
        report = cmd_eval(cfg, ref_path=tmp_path / "ref.npy",
                          est_path=tmp_path / "est.npy")
        assert len(report["patches"]) == 4
        assert (tmp_path / "work" / "eval_report.json").exists()

    def test_eval_requires_sr_by_default(self, env):
        tmp_path, cfg = env
        cmd_degrade(cfg)
        with pytest.raises(IoError, match="reconstruct"):
            cmd_eval(cfg)


class TestLock:
    def test_concurrent_invocation_rejected(self, env):
        tmp_path, cfg = env
        with workdir_lock(tmp_path / "work"):
            with pytest.raises(WorkdirLockedError):
                cmd_degrade(cfg)

    def test_lock_released_after_use(self, env):
        tmp_path, cfg = env
        with workdir_lock(tmp_path / "work"):
            pass
        cmd_degrade(cfg)  # must not raise


class TestFullRun:
    def test_stage_order(self, env, tmp_path):
        _, cfg = env
        cmd_degrade(cfg)
        cmd_unmix(cfg)
        cmd_synth(cfg, count=1)
        cmd_baseline(cfg)
        a_lr = load_tensor(tmp_path / "work" / A_LR_FILE, kind="abundance")
        a_sr = upsample_bicubic(a_lr, cfg.psf.scale, target_dims=(16, 16))
        save_tensor(a_sr, tmp_path / "a_sr.npy")
        cmd_reconstruct(cfg, tmp_path / "a_sr.npy")
        report = cmd_eval(cfg)
        assert np.isfinite(report["mean_mpsnr"])
