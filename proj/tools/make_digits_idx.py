#!/usr/bin/env python3
"""Build an IDX-format handwritten-digit dataset for the test harness.

Upsamples the bundled scikit-learn 8x8 digits corpus to MNIST geometry
(28x28, uint8, IDX container) and augments it with small deterministic
shifts. Train and eval splits use disjoint source images. Canonical MNIST
files can replace these outputs without any code changes.
"""

import struct
import sys
from pathlib import Path

import numpy as np
from scipy import ndimage
from sklearn.datasets import load_digits

TRAIN_SAMPLES = 6000
EVAL_SAMPLES = 1000
SEED = 12345
MAX_SHIFT = 2


def upsample(img8):
    # 8x8 (0..16) -> 20x20 bilinear -> centered on a 28x28 canvas
    img = ndimage.zoom(img8.astype(np.float64) / 16.0, 20.0 / 8.0, order=1)
    img = np.clip(img, 0.0, 1.0)
    canvas = np.zeros((28, 28))
    canvas[4:24, 4:24] = img
    return canvas


def shifted(img, dy, dx):
    out = np.zeros_like(img)
    ys, yd = (dy, 0) if dy >= 0 else (0, -dy)
    xs, xd = (dx, 0) if dx >= 0 else (0, -dx)
    h = img.shape[0] - abs(dy)
    w = img.shape[1] - abs(dx)
    out[ys:ys + h, xs:xs + w] = img[yd:yd + h, xd:xd + w]
    return out


def write_idx_images(path, images):
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, len(images), 28, 28))
        for img in images:
            f.write((np.clip(img, 0, 1) * 255.0).round().astype(np.uint8).tobytes())


def write_idx_labels(path, labels):
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(np.asarray(labels, dtype=np.uint8).tobytes())


def build_split(bases, labels, count, rng):
    images, out_labels = [], []
    order = rng.permutation(len(bases))
    i = 0
    while len(images) < count:
        idx = order[i % len(order)]
        dy = int(rng.integers(-MAX_SHIFT, MAX_SHIFT + 1))
        dx = int(rng.integers(-MAX_SHIFT, MAX_SHIFT + 1))
        images.append(shifted(bases[idx], dy, dx))
        out_labels.append(labels[idx])
        i += 1
    return images, out_labels


def main():
    out_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("data")
    out_dir.mkdir(parents=True, exist_ok=True)
    targets = [
        out_dir / "train-images-idx3-ubyte",
        out_dir / "train-labels-idx1-ubyte",
        out_dir / "t10k-images-idx3-ubyte",
        out_dir / "t10k-labels-idx1-ubyte",
    ]
    if all(t.exists() for t in targets):
        print(f"dataset already present in {out_dir}")
        return

    digits = load_digits()
    rng = np.random.default_rng(SEED)
    order = rng.permutation(len(digits.images))
    bases = [upsample(digits.images[i]) for i in order]
    labels = [int(digits.target[i]) for i in order]

    n_eval_bases = 500
    eval_bases, eval_base_labels = bases[:n_eval_bases], labels[:n_eval_bases]
    train_bases, train_base_labels = bases[n_eval_bases:], labels[n_eval_bases:]

    train_images, train_labels = build_split(train_bases, train_base_labels, TRAIN_SAMPLES, rng)
    eval_images, eval_labels = build_split(eval_bases, eval_base_labels, EVAL_SAMPLES, rng)

    write_idx_images(targets[0], train_images)
    write_idx_labels(targets[1], train_labels)
    write_idx_images(targets[2], eval_images)
    write_idx_labels(targets[3], eval_labels)
    print(f"wrote {TRAIN_SAMPLES} train / {EVAL_SAMPLES} eval samples to {out_dir}")


if __name__ == "__main__":
    main()
