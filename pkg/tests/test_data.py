"""
Tests for the IDX and CSV readers, synthetic blobs and the split loader.
"""

import numpy as np
import pytest

from local_learning.components.data.blobs import draw_centers, gen_blobs
from local_learning.components.data.csv_data import read_csv_dataset, write_csv_dataset
from local_learning.components.data.dataset import DataSplit, Dataset, standardize
from local_learning.components.data.idx import decode_idx, encode_idx, parse_idx
from local_learning.components.data.loader import load_split
from local_learning.components.data.tools import inspect_idx, load_dataset
from local_learning.config import DatasetSpec
from local_learning.errors import FormatError, InputError

IMAGES_2x2x2 = bytes([0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 2]) + bytes(range(8))


# =============================================================================
# IDX
# =============================================================================

class TestIdx:
    def test_three_dimensional_images(self):
        images = decode_idx(IMAGES_2x2x2)
        assert images.shape == (2, 1, 2, 2)
        assert images.dtype == np.float64
        assert images[1, 0, 1, 1] == pytest.approx(7 / 255)

    def test_four_dimensional_images(self):
        payload = bytes([0, 0, 8, 4]) + np.array([2, 1, 2, 2], dtype=">u4").tobytes() + bytes(8)
        assert decode_idx(payload).shape == (2, 1, 2, 2)

    def test_full_intensity(self):
        payload = bytes([0, 0, 8, 3, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1, 255])
        assert decode_idx(payload).reshape(-1).tolist() == [1.0]

    def test_labels(self):
        payload = bytes([0, 0, 8, 1, 0, 0, 0, 3, 4, 0, 9])
        labels = decode_idx(payload)
        assert labels.dtype == np.int64
        assert labels.tolist() == [4, 0, 9]

    def test_truncated_payload(self):
        with pytest.raises(FormatError, match="truncated") as info:
            decode_idx(IMAGES_2x2x2[:-3])
        assert info.value.offset == len(IMAGES_2x2x2) - 3
        assert "byte offset" in str(info.value)

    def test_trailing_bytes(self):
        with pytest.raises(FormatError, match="trailing") as info:
            decode_idx(IMAGES_2x2x2 + b"\x00")
        assert info.value.offset == len(IMAGES_2x2x2)

    def test_bad_magic(self):
        with pytest.raises(FormatError, match="magic") as info:
            decode_idx(bytes([0, 0, 9, 3]) + IMAGES_2x2x2[4:])
        assert info.value.offset == 0

    def test_short_header(self):
        with pytest.raises(FormatError):
            decode_idx(bytes([0, 0, 8, 3, 0, 0]))

    def test_unsupported_dimension_count(self):
        with pytest.raises(FormatError, match="dimension"):
            decode_idx(bytes([0, 0, 8, 2, 0, 0, 0, 1, 0, 0, 0, 1, 0]))

    def test_encoded_file_reads_back(self, tmp_path, rng):
        images = rng.integers(0, 256, size=(3, 4, 5), dtype=np.uint8)
        path = tmp_path / "images.idx"
        path.write_bytes(encode_idx(images))
        np.testing.assert_array_equal(parse_idx(str(path)), images[:, None, :, :] / 255.0)

    def test_inspect_tool(self, tmp_path):
        path = tmp_path / "images.idx"
        path.write_bytes(IMAGES_2x2x2)
        result = inspect_idx(str(path))
        assert result["status"] == "success"
        assert result["kind"] == "images"
        assert result["shape"] == [2, 1, 2, 2]
        assert inspect_idx(str(tmp_path / "absent.idx"))["error_type"] == "FileNotFoundError"


# =============================================================================
# CSV
# =============================================================================

class TestCsv:
    def test_read(self, tmp_path):
        path = tmp_path / "train.csv"
        path.write_text("label,f0,f1\n0,0.5,1.5\n1,-2,3\n")
        features, labels = read_csv_dataset(str(path))
        np.testing.assert_array_equal(features, [[0.5, 1.5], [-2.0, 3.0]])
        assert labels.tolist() == [0, 1]

    def test_write_then_read(self, tmp_path, rng):
        path = str(tmp_path / "data.csv")
        write_csv_dataset(path, rng.standard_normal((4, 3)), np.array([0, 1, 1, 0]))
        features, labels = read_csv_dataset(path)
        assert features.shape == (4, 3)
        assert labels.tolist() == [0, 1, 1, 0]

    def test_wrong_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("y,x0\n0,1\n")
        with pytest.raises(FormatError, match="header"):
            read_csv_dataset(str(path))

    def test_label_only(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("label\n0\n")
        with pytest.raises(FormatError):
            read_csv_dataset(str(path))

    def test_fractional_labels(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("label,f0\n0.5,1\n")
        with pytest.raises(InputError):
            read_csv_dataset(str(path))

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(FormatError):
            read_csv_dataset(str(path))


# =============================================================================
# Synthetic blobs
# =============================================================================

class TestBlobs:
    def test_deterministic(self):
        spec = DatasetSpec(n=50, classes=3, dim=4)
        a = gen_blobs(spec, np.random.default_rng(9))
        b = gen_blobs(spec, np.random.default_rng(9))
        np.testing.assert_array_equal(a.train.x, b.train.x)
        np.testing.assert_array_equal(a.test.y, b.test.y)

    def test_zero_noise_sits_on_centers(self):
        spec = DatasetSpec(n=12, classes=3, dim=2, noise=0.0, test_fraction=0.0)
        split = gen_blobs(spec, np.random.default_rng(2))
        centers = draw_centers(3, 2, 0.0, np.random.default_rng(2))
        np.testing.assert_array_equal(split.train.x, centers[split.train.y])

    def test_balanced_labels(self):
        split = gen_blobs(DatasetSpec(n=90, classes=3, test_fraction=0.0), np.random.default_rng(0))
        assert np.bincount(split.train.y).tolist() == [30, 30, 30]

    def test_centers_are_separated(self):
        centers = draw_centers(4, 2, 0.5, np.random.default_rng(1))
        gaps = [np.linalg.norm(a - b) for i, a in enumerate(centers) for b in centers[i + 1:]]
        assert min(gaps) >= 2.0

    @pytest.mark.parametrize("seed", range(5))
    def test_linearly_separable(self, seed):
        """Least-squares linear classifier on the default two-class blobs."""
        spec = DatasetSpec(n=1000, classes=2, dim=2, noise=0.5, test_fraction=0.0)
        split = gen_blobs(spec, np.random.default_rng(seed))
        features = np.hstack([split.train.x, np.ones((len(split.train), 1))])
        targets = np.where(split.train.y == 1, 1.0, -1.0)
        w, *_ = np.linalg.lstsq(features, targets, rcond=None)
        accuracy = np.mean((features @ w > 0) == (split.train.y == 1))
        assert accuracy >= 0.95

    def test_split_sizes(self):
        split = gen_blobs(DatasetSpec(n=100, test_fraction=0.2), np.random.default_rng(0))
        assert (len(split.train), len(split.test)) == (80, 20)


# =============================================================================
# Datasets and loading
# =============================================================================

class TestLoader:
    def test_label_out_of_range(self):
        with pytest.raises(InputError):
            Dataset(np.zeros((2, 2)), np.array([0, 2]), 2)

    def test_length_mismatch(self):
        with pytest.raises(InputError):
            Dataset(np.zeros((3, 2)), np.array([0, 1]), 2)

    def test_batches_cover_every_example(self, toy_data):
        data = toy_data(n=10)
        seen = np.concatenate([yb for _, yb in data.batches(4, np.random.default_rng(0))])
        assert sorted(seen.tolist()) == sorted(data.y.tolist())
        assert [len(yb) for _, yb in data.batches(4)] == [4, 4, 2]

    def test_standardize_uses_training_statistics(self, rng):
        train = Dataset(rng.standard_normal((20, 3)) * 5 + 2, np.zeros(20, dtype=np.int64), 2)
        test = Dataset(np.ones((4, 3)), np.zeros(4, dtype=np.int64), 2)
        split = standardize(DataSplit(train, test))
        np.testing.assert_allclose(split.train.x.mean(axis=0), 0.0, atol=1e-12)
        np.testing.assert_allclose(split.train.x.std(axis=0), 1.0, atol=1e-12)

    def test_standardize_keeps_constant_features(self):
        train = Dataset(np.array([[1.0, 2.0], [1.0, 4.0]]), np.array([0, 1]), 2)
        split = standardize(DataSplit(train, train))
        assert split.train.x[:, 0].tolist() == [0.0, 0.0]

    def test_limits(self):
        spec = DatasetSpec(n=100, limit_train=10, limit_test=5)
        split = load_split(spec, np.random.default_rng(0))
        assert (len(split.train), len(split.test)) == (10, 5)

    def test_csv_split(self, tmp_path):
        train_path, test_path = tmp_path / "train.csv", tmp_path / "test.csv"
        train_path.write_text("label,f0\n0,1\n1,2\n")
        test_path.write_text("label,f0\n1,3\n")
        spec = DatasetSpec(format="csv", train_csv=str(train_path), test_csv=str(test_path))
        split = load_split(spec, np.random.default_rng(0))
        assert (len(split.train), len(split.test)) == (2, 1)

    def test_csv_needs_both_files(self, tmp_path):
        with pytest.raises(ValueError):
            DatasetSpec(format="csv", train_csv=str(tmp_path / "train.csv"))

    def test_idx_split(self, tmp_path):
        images = encode_idx(np.zeros((3, 2, 2), dtype=np.uint8))
        labels = encode_idx(np.array([0, 1, 1], dtype=np.uint8))
        for name, payload in (("ti", images), ("tl", labels), ("vi", images), ("vl", labels)):
            (tmp_path / name).write_bytes(payload)
        spec = DatasetSpec(format="idx", train_images=str(tmp_path / "ti"), train_labels=str(tmp_path / "tl"),
                           test_images=str(tmp_path / "vi"), test_labels=str(tmp_path / "vl"))
        split = load_split(spec, np.random.default_rng(0))
        assert split.input_shape == (1, 2, 2)

    def test_idx_labels_and_images_swapped(self, tmp_path):
        images = encode_idx(np.zeros((3, 2, 2), dtype=np.uint8))
        labels = encode_idx(np.array([0, 1, 1], dtype=np.uint8))
        (tmp_path / "i").write_bytes(images)
        (tmp_path / "l").write_bytes(labels)
        spec = DatasetSpec(format="idx", train_images=str(tmp_path / "l"), train_labels=str(tmp_path / "i"),
                           test_images=str(tmp_path / "i"), test_labels=str(tmp_path / "l"))
        with pytest.raises(InputError):
            load_split(spec, np.random.default_rng(0))

    def test_load_tool(self):
        result = load_dataset({"n": 40, "classes": 2, "dim": 3}, seed=1)
        assert result["status"] == "success"
        assert result["train_records"] + result["test_records"] == 40
        assert result["input_shape"] == [3]
        assert sum(result["train_class_counts"]) == result["train_records"]
