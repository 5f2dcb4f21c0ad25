"""Bit-exact IDX ingestion for MNIST-style image and label files.

IDX layout (big endian): 4-byte magic, one 4-byte dimension per axis, then
the unsigned-byte payload in row-major order. Magic 0x00000803 marks an
image file (count x rows x cols), 0x00000801 a label file (count). Files
ending in .gz are decompressed transparently.
"""
from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801

TRAIN_IMAGES = "train-images-idx3-ubyte"
TRAIN_LABELS = "train-labels-idx1-ubyte"
TEST_IMAGES = "t10k-images-idx3-ubyte"
TEST_LABELS = "t10k-labels-idx1-ubyte"


class IdxFormatError(ValueError):
    pass


class Sample(NamedTuple):
    pixels: np.ndarray  # flat, float64 in [0, 1]
    label: int


def parse_idx_images(data: bytes) -> np.ndarray:
    if len(data) < 16:
        raise IdxFormatError("image file shorter than its 16-byte header")
    magic, count, rows, cols = struct.unpack(">IIII", data[:16])
    if magic != IMAGE_MAGIC:
        raise IdxFormatError(f"bad image magic 0x{magic:08x}, expected 0x{IMAGE_MAGIC:08x}")
    expected = 16 + count * rows * cols
    if len(data) != expected:
        raise IdxFormatError(f"image payload holds {len(data)} bytes, expected {expected}")
    return np.frombuffer(data, dtype=np.uint8, offset=16).reshape(count, rows, cols)


def parse_idx_labels(data: bytes) -> np.ndarray:
    if len(data) < 8:
        raise IdxFormatError("label file shorter than its 8-byte header")
    magic, count = struct.unpack(">II", data[:8])
    if magic != LABEL_MAGIC:
        raise IdxFormatError(f"bad label magic 0x{magic:08x}, expected 0x{LABEL_MAGIC:08x}")
    if len(data) != 8 + count:
        raise IdxFormatError(f"label payload holds {len(data)} bytes, expected {8 + count}")
    labels = np.frombuffer(data, dtype=np.uint8, offset=8)
    if labels.size and labels.max() > 9:
        raise IdxFormatError(f"label {int(labels.max())} outside 0..9")
    return labels


def write_idx_images(images: np.ndarray) -> bytes:
    images = np.asarray(images, dtype=np.uint8)
    count, rows, cols = images.shape
    return struct.pack(">IIII", IMAGE_MAGIC, count, rows, cols) + images.tobytes()


def write_idx_labels(labels: np.ndarray) -> bytes:
    labels = np.asarray(labels, dtype=np.uint8)
    return struct.pack(">II", LABEL_MAGIC, labels.size) + labels.tobytes()


def read_idx_bytes(path: Path | str) -> bytes:
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rb") as fh:
        return fh.read()


@dataclass
class Dataset:
    """Normalized samples plus how they were selected."""

    images: np.ndarray  # (n, pixels) uint8, normalized lazily per sample
    labels: np.ndarray  # (n,) int64
    provenance: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if len(self.images) != len(self.labels):
            raise IdxFormatError(
                f"{len(self.images)} images but {len(self.labels)} labels"
            )
        if len(self.images) == 0:
            raise ValueError("dataset is empty")

    def __len__(self) -> int:
        return len(self.images)

    def __getitem__(self, i: int) -> Sample:
        return Sample(self.images[i].astype(np.float64) / 255.0, int(self.labels[i]))


def build_dataset(
    images: np.ndarray,
    labels: np.ndarray,
    class_filter: tuple[int, ...] | None = None,
    cap: int | None = None,
    seed: int = 0,
    provenance: dict | None = None,
) -> Dataset:
    """Flatten, filter to the listed classes and subsample to ``cap``.

    Subsampling draws uniformly without replacement with the given seed and
    keeps the surviving samples in their original file order.
    """
    images = np.asarray(images, dtype=np.uint8)
    labels = np.asarray(labels).astype(np.int64)
    if len(images) != len(labels):
        raise IdxFormatError(f"{len(images)} images but {len(labels)} labels")
    flat = images.reshape(len(images), -1)

    keep = np.arange(len(flat))
    if class_filter is not None:
        keep = keep[np.isin(labels, np.asarray(class_filter))]
    if cap is not None and cap < keep.size:
        rng = np.random.default_rng(seed)
        keep = np.sort(rng.choice(keep, size=cap, replace=False))

    prov = dict(provenance or {})
    prov.update({"class_filter": class_filter, "cap": cap, "seed": seed})
    return Dataset(flat[keep], labels[keep], prov)


def _resolve(data_dir: Path, stem: str) -> Path:
    for name in (stem, stem + ".gz"):
        candidate = data_dir / name
        if candidate.exists():
            return candidate
    raise FileNotFoundError(f"{stem}[.gz] not found under {data_dir}")


def load_mnist_dir(
    data_dir: Path | str,
    train: bool = True,
    class_filter: tuple[int, ...] | None = None,
    cap: int | None = None,
    seed: int = 0,
    images_name: str | None = None,
    labels_name: str | None = None,
) -> Dataset:
    """Load one split from a directory of IDX files (optionally gzipped)."""
    data_dir = Path(data_dir)
    img_stem = images_name or (TRAIN_IMAGES if train else TEST_IMAGES)
    lbl_stem = labels_name or (TRAIN_LABELS if train else TEST_LABELS)
    img_path = _resolve(data_dir, img_stem)
    lbl_path = _resolve(data_dir, lbl_stem)
    images = parse_idx_images(read_idx_bytes(img_path))
    labels = parse_idx_labels(read_idx_bytes(lbl_path))
    return build_dataset(
        images,
        labels,
        class_filter=class_filter,
        cap=cap,
        seed=seed,
        provenance={"images": str(img_path), "labels": str(lbl_path)},
    )
