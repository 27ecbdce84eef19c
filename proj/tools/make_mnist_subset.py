#!/usr/bin/env python3
"""Write the 5000-image MNIST subset bundled with mlxtend as IDX files.

Usage: make_mnist_subset.py <mlxtend wheel or mnist_5k.csv.gz> <out dir>

The rows are shuffled with a fixed seed, then split into 4000 training and
1000 test images (train-*/t10k-* IDX pairs, same layout as the original set).
"""
import gzip
import io
import struct
import sys
import zipfile
from pathlib import Path

import numpy as np


def read_rows(src: Path) -> np.ndarray:
    if src.suffix == ".whl":
        with zipfile.ZipFile(src) as z:
            raw = z.read("mlxtend/data/data/mnist_5k.csv.gz")
    else:
        raw = src.read_bytes()
    return np.loadtxt(io.BytesIO(gzip.decompress(raw)), delimiter=",")


def write_idx(out: Path, stem: str, images: np.ndarray, labels: np.ndarray) -> None:
    with open(out / f"{stem}-images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, len(images), 28, 28))
        f.write(images.astype(np.uint8).tobytes())
    with open(out / f"{stem}-labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(labels.astype(np.uint8).tobytes())


def main() -> None:
    src, out = Path(sys.argv[1]), Path(sys.argv[2])
    out.mkdir(parents=True, exist_ok=True)
    rows = read_rows(src)
    order = np.random.default_rng(20200101).permutation(len(rows))
    rows = rows[order]
    images, labels = rows[:, :-1], rows[:, -1]
    write_idx(out, "train", images[:4000], labels[:4000])
    write_idx(out, "t10k", images[4000:], labels[4000:])


if __name__ == "__main__":
    main()
