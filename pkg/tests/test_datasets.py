"""Synthetic data generation and manifest round trips."""

import numpy as np
import pytest

from jcmlab.datasets import Dataset, generate_synthetic, load_dataset, save_dataset
from jcmlab.errors import DatasetError


class TestGenerateSynthetic:
    def test_zero_noise_collapses_each_class_to_its_template(self):
        ds = generate_synthetic(3, 5, 4, noise_std=0.0, seed=0)
        for c in range(3):
            rows = ds.features[ds.labels == c]
            assert np.all(rows == rows[0])

    def test_same_seed_reproduces_dataset(self):
        a = generate_synthetic(4, 16, 10, noise_std=0.1, seed=7)
        b = generate_synthetic(4, 16, 10, noise_std=0.1, seed=7)
        assert np.array_equal(a.features, b.features)
        assert np.array_equal(a.labels, b.labels)

    def test_splits_share_templates_but_not_noise(self):
        train = generate_synthetic(3, 8, 6, noise_std=0.05, seed=1, split="train")
        test = generate_synthetic(3, 8, 6, noise_std=0.05, seed=1, split="test")
        assert not np.array_equal(train.features, test.features)
        clean_a = generate_synthetic(3, 8, 1, noise_std=0.0, seed=1, split="train")
        clean_b = generate_synthetic(3, 8, 1, noise_std=0.0, seed=1, split="test")
        assert np.array_equal(clean_a.features, clean_b.features)

    def test_features_are_clipped_to_unit_interval(self):
        ds = generate_synthetic(2, 6, 200, noise_std=2.0, seed=2)
        assert ds.features.min() >= 0.0 and ds.features.max() <= 1.0

    def test_linear_separability_sanity(self):
        """Logistic regression on the raw features reaches 99% on easy settings."""
        from sklearn.linear_model import LogisticRegression

        ds = generate_synthetic(2, 64, 200, noise_std=0.1, seed=3)
        clf = LogisticRegression(max_iter=2000).fit(ds.features, ds.labels)
        assert clf.score(ds.features, ds.labels) >= 0.99

    def test_too_few_classes_rejected(self):
        with pytest.raises(DatasetError):
            generate_synthetic(1, 8, 4, 0.1, seed=0)
        with pytest.raises(DatasetError):
            generate_synthetic(2, 1, 4, 0.1, seed=0)


class TestDatasetValidation:
    def test_count_mismatch_rejected(self):
        with pytest.raises(DatasetError):
            Dataset(
                features=np.zeros((3, 2)), labels=np.zeros(4, dtype=int),
                num_classes=2, split="train",
            )

    def test_out_of_range_features_rejected(self):
        with pytest.raises(DatasetError):
            Dataset(
                features=np.full((2, 2), 1.5), labels=np.zeros(2, dtype=int),
                num_classes=2, split="train",
            )

    def test_label_overflow_rejected(self):
        with pytest.raises(DatasetError):
            Dataset(
                features=np.zeros((2, 2)), labels=np.array([0, 2]),
                num_classes=2, split="train",
            )


class TestManifestIO:
    def test_round_trip(self, tmp_path):
        ds = generate_synthetic(3, 6, 5, noise_std=0.1, seed=4)
        manifest = save_dataset(ds, tmp_path)
        loaded = load_dataset(manifest)
        assert loaded.count == 15 and loaded.dim == 6 and loaded.num_classes == 3
        assert np.array_equal(loaded.labels, ds.labels)
        np.testing.assert_allclose(loaded.features, ds.features, atol=1e-7)  # f32 storage

    def test_four_sample_fixture(self, tmp_path):
        (tmp_path / "tiny.manifest").write_text(
            "count=4\ndim=2\nclasses=2\nfeature_file=f.bin\nlabel_file=l.bin\n"
            "feature_dtype=u8\n"
        )
        np.array([0, 255, 128, 64, 32, 16, 8, 4], dtype=np.uint8).tofile(tmp_path / "f.bin")
        np.array([0, 1, 1, 0], dtype=np.uint8).tofile(tmp_path / "l.bin")
        ds = load_dataset(tmp_path / "tiny.manifest")
        assert ds.count == 4
        assert ds.features[0, 1] == pytest.approx(1.0)
        assert ds.features[1, 0] == pytest.approx(128 / 255)

    def test_size_mismatch_names_the_field(self, tmp_path):
        (tmp_path / "bad.manifest").write_text(
            "count=4\ndim=64\nclasses=2\nfeature_file=f.bin\nlabel_file=l.bin\n"
            "feature_dtype=u8\n"
        )
        np.zeros(63 * 4, dtype=np.uint8).tofile(tmp_path / "f.bin")
        np.zeros(4, dtype=np.uint8).tofile(tmp_path / "l.bin")
        with pytest.raises(DatasetError, match="feature_file"):
            load_dataset(tmp_path / "bad.manifest")

    def test_label_equal_to_class_count_rejected(self, tmp_path):
        (tmp_path / "bad.manifest").write_text(
            "count=2\ndim=2\nclasses=2\nfeature_file=f.bin\nlabel_file=l.bin\n"
            "feature_dtype=u8\n"
        )
        np.zeros(4, dtype=np.uint8).tofile(tmp_path / "f.bin")
        np.array([0, 2], dtype=np.uint8).tofile(tmp_path / "l.bin")
        with pytest.raises(DatasetError, match="label_file"):
            load_dataset(tmp_path / "bad.manifest")

    def test_missing_binary_named(self, tmp_path):
        (tmp_path / "bad.manifest").write_text(
            "count=2\ndim=2\nclasses=2\nfeature_file=f.bin\nlabel_file=l.bin\n"
            "feature_dtype=u8\n"
        )
        with pytest.raises(DatasetError, match="feature_file"):
            load_dataset(tmp_path / "bad.manifest")

    def test_missing_field_named(self, tmp_path):
        (tmp_path / "bad.manifest").write_text("count=2\ndim=2\nclasses=2\n")
        with pytest.raises(DatasetError, match="feature_file"):
            load_dataset(tmp_path / "bad.manifest")
