"""Corpus loading, manifest checking, and aligned crop sampling."""

import numpy as np
import pytest

from corpusutil import block_mean, write_corpus
from hsisr_trainer.data import CropSampler, load_corpus
from hsisr_trainer.exceptions import ValidationError
from hsisr_trainer.io import write_tensor


class TestLoadCorpus:
    def test_happy_path(self, tiny_corpus):
        corpus = load_corpus(tiny_corpus)
        assert len(corpus) == 3
        assert corpus.hr_shape == (3, 16, 16)
        assert corpus.lr_shape == (3, 4, 4)
        assert corpus.scale == 4
        assert corpus.channels == 3

    def test_load_pair_shapes_and_dtype(self, tiny_corpus):
        corpus = load_corpus(tiny_corpus)
        hr, lr = corpus.load_pair(1)
        assert hr.shape == (3, 16, 16)
        assert lr.shape == (3, 4, 4)
        assert hr.dtype == np.float32
        assert lr.dtype == np.float32

    def test_pairs_are_consistent_decimations(self, tiny_corpus):
        corpus = load_corpus(tiny_corpus)
        hr, lr = corpus.load_pair(0)
        assert np.allclose(block_mean(hr, 4), lr, atol=1e-6)

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(ValidationError, match="cannot read"):
            load_corpus(tmp_path / "absent.json")

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "manifest.json"
        path.write_text("{oops")
        with pytest.raises(ValidationError, match="not valid JSON"):
            load_corpus(path)

    @pytest.mark.parametrize("missing", ["files", "hr_shape", "lr_shape", "scale"])
    def test_missing_field(self, tmp_path, missing):
        def tweak(manifest):
            del manifest[missing]
        path = write_corpus(tmp_path / "c", count=1, manifest_tweak=tweak)
        with pytest.raises(ValidationError, match="lacks field"):
            load_corpus(path)

    def test_empty_file_list(self, tmp_path):
        def tweak(manifest):
            manifest["files"] = []
        path = write_corpus(tmp_path / "c", count=1, manifest_tweak=tweak)
        with pytest.raises(ValidationError, match="no pairs"):
            load_corpus(path)

    def test_channel_mismatch_rejected(self, tmp_path):
        def tweak(manifest):
            manifest["lr_shape"][0] = 5
        path = write_corpus(tmp_path / "c", count=1, manifest_tweak=tweak)
        with pytest.raises(ValidationError, match="channel-matched"):
            load_corpus(path)

    def test_rank_2_shapes_rejected(self, tmp_path):
        def tweak(manifest):
            manifest["hr_shape"] = manifest["hr_shape"][:2]
        path = write_corpus(tmp_path / "c", count=1, manifest_tweak=tweak)
        with pytest.raises(ValidationError, match="rank-3"):
            load_corpus(path)

    def test_ceil_ratio_on_ragged_grid(self, tmp_path):
        path = write_corpus(tmp_path / "c", count=1, rows=19, cols=19)
        corpus = load_corpus(path)
        assert corpus.hr_shape == (3, 19, 19)
        assert corpus.lr_shape == (3, 5, 5)

    def test_wrong_ratio_rejected(self, tmp_path):
        def tweak(manifest):
            manifest["lr_shape"] = [3, 4, 4]
        path = write_corpus(tmp_path / "c", count=1, rows=19, cols=19,
                            manifest_tweak=tweak)
        with pytest.raises(ValidationError, match="scale"):
            load_corpus(path)

    def test_listed_file_missing_on_disk(self, tmp_path):
        path = write_corpus(tmp_path / "c", count=2)
        (tmp_path / "c" / "pair_lr_00001.npy").unlink()
        with pytest.raises(ValidationError, match="does not exist"):
            load_corpus(path)

    def test_file_contradicting_manifest_rejected(self, tmp_path):
        path = write_corpus(tmp_path / "c", count=2)
        write_tensor(np.zeros((3, 8, 8), dtype=np.float32),
                     tmp_path / "c" / "pair_hr_00001.npy")
        with pytest.raises(ValidationError, match="manifest says"):
            load_corpus(path)


class TestCropSampler:
    def test_crops_stay_aligned(self, tmp_path):
        path = write_corpus(tmp_path / "c", count=2, rows=32, seed=5)
        corpus = load_corpus(path)
        sampler = CropSampler(corpus, crop_size=16, seed=0)
        for _ in range(50):
            hr_crop, lr_crop = sampler.sample()
            assert hr_crop.shape == (3, 16, 16)
            assert lr_crop.shape == (3, 4, 4)
            # rotations and flips of whole 4x4 blocks commute with the
            # block mean, so alignment survives augmentation
            assert np.allclose(block_mean(hr_crop, 4), lr_crop, atol=1e-5)

    def test_whole_image_crop_without_augment(self, tiny_corpus):
        corpus = load_corpus(tiny_corpus)
        sampler = CropSampler(corpus, crop_size=16, seed=0, indices=[0],
                              augment=False)
        hr, lr = corpus.load_pair(0)
        hr_crop, lr_crop = sampler.sample()
        assert np.array_equal(hr_crop, hr)
        assert np.array_equal(lr_crop, lr)

    def test_oversized_crop_clamps_to_image(self, tiny_corpus):
        corpus = load_corpus(tiny_corpus)
        sampler = CropSampler(corpus, crop_size=64, seed=0)
        assert sampler.crop_hr == 16
        assert sampler.crop_lr == 4

    def test_same_seed_same_stream(self, tiny_corpus):
        corpus = load_corpus(tiny_corpus)
        a = CropSampler(corpus, crop_size=8, seed=7)
        b = CropSampler(corpus, crop_size=8, seed=7)
        for _ in range(10):
            hr_a, lr_a = a.sample()
            hr_b, lr_b = b.sample()
            assert np.array_equal(hr_a, hr_b)
            assert np.array_equal(lr_a, lr_b)

    def test_augmentation_produces_variants(self, tiny_corpus):
        corpus = load_corpus(tiny_corpus)
        sampler = CropSampler(corpus, crop_size=16, seed=3, indices=[0])
        seen = {sampler.sample()[0].tobytes() for _ in range(24)}
        assert len(seen) >= 3

    def test_ragged_grid_stays_in_bounds(self, tmp_path):
        path = write_corpus(tmp_path / "c", count=1, rows=19, cols=19)
        corpus = load_corpus(path)
        sampler = CropSampler(corpus, crop_size=16, seed=0, augment=False)
        for _ in range(20):
            hr_crop, lr_crop = sampler.sample()
            assert hr_crop.shape == (3, 16, 16)
            assert lr_crop.shape == (3, 4, 4)

    def test_crop_not_multiple_of_scale(self, tiny_corpus):
        corpus = load_corpus(tiny_corpus)
        with pytest.raises(ValidationError, match="multiple of scale"):
            CropSampler(corpus, crop_size=10, seed=0)

    def test_image_smaller_than_scale(self, tmp_path):
        path = write_corpus(tmp_path / "c", count=1, rows=2, cols=2)
        corpus = load_corpus(path)
        with pytest.raises(ValidationError, match="too small"):
            CropSampler(corpus, crop_size=4, seed=0)

    def test_empty_index_list(self, tiny_corpus):
        corpus = load_corpus(tiny_corpus)
        with pytest.raises(ValidationError, match="at least one pair"):
            CropSampler(corpus, crop_size=8, seed=0, indices=[])

    def test_batch_stacks(self, tiny_corpus):
        corpus = load_corpus(tiny_corpus)
        sampler = CropSampler(corpus, crop_size=8, seed=0)
        hr, lr = sampler.batch(5)
        assert hr.shape == (5, 3, 8, 8)
        assert lr.shape == (5, 3, 2, 2)
        assert hr.dtype == np.float32
