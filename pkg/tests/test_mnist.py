import gzip
import struct

import numpy as np
import pytest

from spikewin import synthdata
from spikewin.mnist import (
    IMAGE_MAGIC,
    LABEL_MAGIC,
    Dataset,
    IdxFormatError,
    build_dataset,
    load_mnist_dir,
    parse_idx_images,
    parse_idx_labels,
    read_idx_bytes,
    write_idx_images,
    write_idx_labels,
)


class TestIdxImages:
    def test_round_trip_small_fixture(self):
        rng = np.random.default_rng(0)
        images = rng.integers(0, 256, size=(2, 2, 2), dtype=np.uint8)
        data = write_idx_images(images)
        assert len(data) == 16 + 8
        np.testing.assert_array_equal(parse_idx_images(data), images)
        assert write_idx_images(parse_idx_images(data)) == data

    def test_wrong_magic_rejected(self):
        data = struct.pack(">IIII", LABEL_MAGIC, 1, 2, 2) + bytes(4)
        with pytest.raises(IdxFormatError, match="magic"):
            parse_idx_images(data)

    def test_truncated_payload_rejected(self):
        data = write_idx_images(np.zeros((3, 4, 4), dtype=np.uint8))
        with pytest.raises(IdxFormatError, match="expected"):
            parse_idx_images(data[:-1])
        with pytest.raises(IdxFormatError):
            parse_idx_images(data + b"\0")

    def test_short_header_rejected(self):
        with pytest.raises(IdxFormatError):
            parse_idx_images(b"\x00\x00\x08\x03")


class TestIdxLabels:
    def test_round_trip(self):
        labels = np.array([7, 0, 9], dtype=np.uint8)
        data = write_idx_labels(labels)
        np.testing.assert_array_equal(parse_idx_labels(data), [7, 0, 9])
        assert write_idx_labels(parse_idx_labels(data)) == data

    def test_wrong_magic_rejected(self):
        data = struct.pack(">II", IMAGE_MAGIC, 1) + bytes(1)
        with pytest.raises(IdxFormatError, match="magic"):
            parse_idx_labels(data)

    def test_out_of_range_label_rejected(self):
        data = struct.pack(">II", LABEL_MAGIC, 2) + bytes([3, 12])
        with pytest.raises(IdxFormatError, match="12"):
            parse_idx_labels(data)

    def test_truncation_rejected(self):
        data = struct.pack(">II", LABEL_MAGIC, 5) + bytes([1, 2, 3])
        with pytest.raises(IdxFormatError):
            parse_idx_labels(data)


class TestGzipPath:
    def test_reads_gzipped_and_plain(self, tmp_path):
        payload = write_idx_labels(np.array([1, 2, 3], dtype=np.uint8))
        plain = tmp_path / "labels-idx1-ubyte"
        plain.write_bytes(payload)
        with gzip.open(tmp_path / "labels-idx1-ubyte.gz", "wb") as fh:
            fh.write(payload)
        assert read_idx_bytes(plain) == payload
        assert read_idx_bytes(tmp_path / "labels-idx1-ubyte.gz") == payload


class TestBuildDataset:
    def images(self, n=10, seed=0):
        rng = np.random.default_rng(seed)
        images = rng.integers(0, 256, size=(n, 28, 28), dtype=np.uint8)
        labels = rng.integers(0, 10, size=n).astype(np.uint8)
        return images, labels

    def test_normalization_endpoints(self):
        images = np.zeros((1, 28, 28), dtype=np.uint8)
        images[0, 0, 0] = 255
        ds = build_dataset(images, np.array([3], dtype=np.uint8))
        pixels, label = ds[0]
        assert pixels[0] == 1.0
        assert pixels[1] == 0.0
        assert label == 3
        assert pixels.min() >= 0.0 and pixels.max() <= 1.0

    def test_class_filter(self):
        images, labels = self.images(50)
        ds = build_dataset(images, labels, class_filter=(0, 1))
        assert set(ds.labels.tolist()) <= {0, 1}
        assert len(ds) == int(np.isin(labels, [0, 1]).sum())

    def test_cap_is_seed_stable(self):
        images, labels = self.images(40)
        a = build_dataset(images, labels, cap=11, seed=4)
        b = build_dataset(images, labels, cap=11, seed=4)
        c = build_dataset(images, labels, cap=11, seed=5)
        np.testing.assert_array_equal(a.images, b.images)
        np.testing.assert_array_equal(a.labels, b.labels)
        assert len(a) == 11
        assert not np.array_equal(a.images, c.images)

    def test_count_mismatch_rejected(self):
        images, labels = self.images(10)
        with pytest.raises(IdxFormatError):
            build_dataset(images, labels[:-1])

    def test_empty_dataset_rejected(self):
        images, labels = self.images(10)
        labels[:] = 5
        with pytest.raises(ValueError):
            build_dataset(images, labels, class_filter=(0,))

    def test_dataset_requires_matching_lengths(self):
        with pytest.raises(IdxFormatError):
            Dataset(np.zeros((2, 4), dtype=np.uint8), np.zeros(3, dtype=np.int64))


class TestLoadDir:
    def test_loads_corpus_dir(self, tmp_path):
        synthdata.write_corpus(tmp_path, 40, 20, seed=0, classes=(0, 1, 2))
        train = load_mnist_dir(tmp_path, train=True)
        test = load_mnist_dir(tmp_path, train=False, class_filter=(0, 1), cap=10, seed=1)
        assert len(train) == 40
        assert len(test) == 10
        assert set(test.labels.tolist()) <= {0, 1}

    def test_missing_file_raises(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_mnist_dir(tmp_path, train=True)


class TestSynthData:
    def test_render_shapes_and_determinism(self):
        a = synthdata.render_digit(3, np.random.default_rng(5))
        b = synthdata.render_digit(3, np.random.default_rng(5))
        assert a.shape == (28, 28) and a.dtype == np.uint8
        np.testing.assert_array_equal(a, b)
        assert a.max() > 150  # visible ink

    def test_make_corpus_classes(self):
        images, labels = synthdata.make_corpus(30, seed=2, classes=(4, 7))
        assert images.shape == (30, 28, 28)
        assert set(labels.tolist()) == {4, 7}

    def test_classes_are_distinct(self):
        rng = np.random.default_rng(0)
        zero = synthdata.render_digit(0, rng).astype(float)
        one = synthdata.render_digit(1, rng).astype(float)
        overlap = (zero * one).sum() / np.sqrt((zero**2).sum() * (one**2).sum())
        assert overlap < 0.5

    def test_write_corpus_reproducible(self, tmp_path):
        a_dir = tmp_path / "a"
        b_dir = tmp_path / "b"
        synthdata.write_corpus(a_dir, 10, 5, seed=3)
        synthdata.write_corpus(b_dir, 10, 5, seed=3)
        for name in ("train-images-idx3-ubyte.gz", "t10k-labels-idx1-ubyte.gz"):
            assert (a_dir / name).read_bytes() == (b_dir / name).read_bytes()
