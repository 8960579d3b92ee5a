#!/usr/bin/env python3
"""Write IDX files from the 5000-image MNIST sample shipped in the mlxtend wheel.

Each class is split 400/100 into a training pool and a held-out set; both are
shuffled with a fixed seed (the sample itself is sorted by class).

    pip download --no-deps -d /tmp/wheels mlxtend
    python3 tools/make_mnist_sample.py /tmp/wheels/mlxtend-*.whl data/mnist
"""
import gzip
import pathlib
import random
import struct
import sys
import zipfile

MEMBER = "mlxtend/data/data/mnist_5k.csv.gz"
TRAIN_PER_CLASS = 400
SEED = 20141001


def write_images(path, rows):
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, len(rows), 28, 28))
        for r in rows:
            f.write(bytes(r))


def write_labels(path, labels):
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(bytes(labels))


def main():
    wheel, out = sys.argv[1], pathlib.Path(sys.argv[2])
    out.mkdir(parents=True, exist_ok=True)
    text = gzip.decompress(zipfile.ZipFile(wheel).read(MEMBER)).decode()
    images, labels = [], []
    for line in text.splitlines():
        values = [int(float(v)) for v in line.split(",")]
        images.append(values[:784])
        labels.append(values[784])
    train, test = [], []
    for c in range(10):
        idx = [n for n, y in enumerate(labels) if y == c]
        train += idx[:TRAIN_PER_CLASS]
        test += idx[TRAIN_PER_CLASS:]
    rng = random.Random(SEED)
    rng.shuffle(train)
    rng.shuffle(test)
    for name, idx in (("train", train), ("test", test)):
        write_images(out / f"{name}-images-idx3-ubyte", [images[n] for n in idx])
        write_labels(out / f"{name}-labels-idx1-ubyte", [labels[n] for n in idx])


if __name__ == "__main__":
    main()
