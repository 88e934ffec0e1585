#!/usr/bin/env python3
"""Write the 5,000-sample MNIST subset bundled with mlxtend as IDX files.

The subset is sorted by label, so each class contributes its first 400
samples to the train split and its last 100 to the test split; both splits
are then shuffled with a fixed seed. Usage: make_mnist_subset.py <mlxtend wheel or mnist_5k.csv.gz> <out_dir>
"""
import gzip
import io
import struct
import sys
import zipfile
from pathlib import Path

import numpy as np

CSV_MEMBER = "mlxtend/data/data/mnist_5k.csv.gz"


def read_rows(src: Path) -> np.ndarray:
    if src.suffix == ".whl":
        raw = zipfile.ZipFile(src).read(CSV_MEMBER)
    else:
        raw = src.read_bytes()
    return np.loadtxt(io.BytesIO(gzip.decompress(raw)), delimiter=",")


def write_idx(images: np.ndarray, labels: np.ndarray, stem: Path) -> None:
    n = images.shape[0]
    with open(f"{stem}-images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 2051, n, 28, 28))
        f.write(images.astype(np.uint8).tobytes())
    with open(f"{stem}-labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 2049, n))
        f.write(labels.astype(np.uint8).tobytes())


def main() -> None:
    src, out = Path(sys.argv[1]), Path(sys.argv[2])
    out.mkdir(parents=True, exist_ok=True)
    rows = read_rows(src)
    labels = rows[:, -1].astype(int)
    train_idx, test_idx = [], []
    for k in range(10):
        idx = np.flatnonzero(labels == k)
        train_idx.extend(idx[:400])
        test_idx.extend(idx[400:])
    rng = np.random.default_rng(20240601)
    for name, idx in (("train", train_idx), ("t10k", test_idx)):
        idx = rng.permutation(np.asarray(idx))
        write_idx(rows[idx, :-1], labels[idx], out / name)


if __name__ == "__main__":
    main()
