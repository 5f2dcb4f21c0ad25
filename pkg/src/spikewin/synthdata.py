"""Procedural 28x28 digit corpus in the MNIST container format.

Real MNIST files are not always available offline, so this renders crude
stroke glyphs for the digits 0-9 with per-image jitter (shift, rotation,
stroke width, contrast) and writes them as gzipped IDX files under the
official file names. Classes stay visually distinct, which is all the
desk-scale experiments need.
"""
from __future__ import annotations

import gzip
from pathlib import Path

import numpy as np

from . import mnist

SIZE = 28

# Per-digit strokes as polylines in pixel coordinates (x right, y down).
_ELLIPSE = [
    (14 + 5.0 * np.sin(a), 14 - 7.5 * np.cos(a))
    for a in np.linspace(0.0, 2.0 * np.pi, 17)
]
_TOP_RING = [
    (14 + 3.9 * np.sin(a), 10.0 - 3.6 * np.cos(a))
    for a in np.linspace(0.0, 2.0 * np.pi, 13)
]
_BOTTOM_RING = [
    (14 + 4.3 * np.sin(a), 17.8 - 4.0 * np.cos(a))
    for a in np.linspace(0.0, 2.0 * np.pi, 13)
]

GLYPHS: dict[int, list[list[tuple[float, float]]]] = {
    0: [_ELLIPSE],
    1: [[(11.5, 9.0), (14.5, 6.0), (14.5, 22.0)]],
    2: [[(10.0, 9.5), (12.0, 6.5), (16.0, 6.5), (18.0, 9.5), (17.5, 12.0),
         (10.0, 21.0), (18.5, 21.0)]],
    3: [[(10.5, 8.0), (13.5, 6.0), (17.0, 8.0), (17.0, 11.0), (13.5, 13.5)],
        [(13.5, 13.5), (17.5, 16.0), (17.5, 19.0), (14.0, 22.0), (10.0, 20.0)]],
    4: [[(16.5, 6.0), (9.0, 17.0), (19.5, 17.0)], [(16.5, 10.0), (16.5, 22.0)]],
    5: [[(18.0, 6.5), (10.5, 6.5), (10.0, 13.0), (14.5, 12.0), (17.5, 14.5),
         (17.5, 18.5), (14.0, 21.5), (10.0, 20.0)]],
    6: [[(16.5, 6.0), (12.0, 11.5), (10.5, 16.0)], _BOTTOM_RING],
    7: [[(9.5, 6.5), (18.5, 6.5), (13.0, 22.0)]],
    8: [_TOP_RING, _BOTTOM_RING],
    9: [_TOP_RING, [(17.8, 11.0), (17.0, 16.5), (13.5, 22.0)]],
}


def _segment_distance(px: np.ndarray, py: np.ndarray,
                      a: tuple[float, float], b: tuple[float, float]) -> np.ndarray:
    ax, ay = a
    bx, by = b
    dx, dy = bx - ax, by - ay
    norm2 = dx * dx + dy * dy
    if norm2 == 0.0:
        return np.hypot(px - ax, py - ay)
    t = np.clip(((px - ax) * dx + (py - ay) * dy) / norm2, 0.0, 1.0)
    return np.hypot(px - (ax + t * dx), py - (ay + t * dy))


def render_digit(digit: int, rng: np.random.Generator) -> np.ndarray:
    """One jittered 28x28 uint8 image of the requested digit."""
    if digit not in GLYPHS:
        raise ValueError(f"no glyph for digit {digit}")
    angle = rng.uniform(-0.12, 0.12)
    shift = rng.uniform(-1.8, 1.8, size=2)
    thickness = rng.uniform(1.2, 2.0)
    contrast = rng.uniform(0.82, 1.0)

    ys, xs = np.mgrid[0:SIZE, 0:SIZE]
    xs = xs.astype(np.float64).ravel()
    ys = ys.astype(np.float64).ravel()
    # Sample the glyph in a frame rotated/shifted around the image center.
    cos_a, sin_a = np.cos(angle), np.sin(angle)
    rx = cos_a * (xs - 14 - shift[0]) - sin_a * (ys - 14 - shift[1]) + 14
    ry = sin_a * (xs - 14 - shift[0]) + cos_a * (ys - 14 - shift[1]) + 14

    intensity = np.zeros(SIZE * SIZE)
    for stroke in GLYPHS[digit]:
        for a, b in zip(stroke[:-1], stroke[1:]):
            d = _segment_distance(rx, ry, a, b)
            np.maximum(intensity, np.clip(1.0 - (d - thickness / 2.0) / 0.9, 0.0, 1.0),
                       out=intensity)
    intensity *= contrast
    return np.round(intensity * 255.0).astype(np.uint8).reshape(SIZE, SIZE)


def make_corpus(n: int, seed: int,
                classes: tuple[int, ...] = tuple(range(10))) -> tuple[np.ndarray, np.ndarray]:
    """n images cycling through the classes, with per-image jitter."""
    rng = np.random.default_rng(seed)
    labels = np.asarray([classes[i % len(classes)] for i in range(n)], dtype=np.uint8)
    labels = rng.permutation(labels)
    images = np.stack([render_digit(int(lbl), rng) for lbl in labels])
    return images, labels


def write_corpus(out_dir: Path | str, n_train: int, n_test: int, seed: int,
                 classes: tuple[int, ...] = tuple(range(10))) -> Path:
    """Write train/test IDX .gz files with official MNIST names."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for n, sub_seed, img_name, lbl_name in (
        (n_train, seed, mnist.TRAIN_IMAGES, mnist.TRAIN_LABELS),
        (n_test, seed + 1, mnist.TEST_IMAGES, mnist.TEST_LABELS),
    ):
        images, labels = make_corpus(n, sub_seed, classes)
        # mtime=0 keeps the gzip container reproducible byte for byte.
        for name, payload in (
            (img_name, mnist.write_idx_images(images)),
            (lbl_name, mnist.write_idx_labels(labels)),
        ):
            with open(out_dir / (name + ".gz"), "wb") as fh:
                with gzip.GzipFile(fileobj=fh, mode="wb", mtime=0) as gz:
                    gz.write(payload)
    return out_dir
