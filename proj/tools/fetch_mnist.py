#!/usr/bin/env python3
"""Fetch the MNIST IDX files and keep the first M training images.

The files come from the npm package `mnist-data`, which ships the original
train-*-ubyte files unchanged.  The output pair is a valid IDX pair whose
count field is rewritten to M.

    tools/fetch_mnist.py data/mnist --count 10000
"""
import argparse
import pathlib
import shutil
import struct
import subprocess
import tarfile
import tempfile

IMAGES = "train-images-idx3-ubyte"
LABELS = "train-labels-idx1-ubyte"


def head(src: pathlib.Path, dst: pathlib.Path, magic: int, count: int):
    data = src.read_bytes()
    got, total = struct.unpack(">II", data[:8])
    if got != magic:
        raise SystemExit(f"{src}: magic {got}, expected {magic}")
    if count > total:
        raise SystemExit(f"{src}: only {total} items")
    if magic == 2051:
        rows, cols = struct.unpack(">II", data[8:16])
        body = data[16:16 + count * rows * cols]
        dst.write_bytes(struct.pack(">IIII", magic, count, rows, cols) + body)
    else:
        dst.write_bytes(struct.pack(">II", magic, count) + data[8:8 + count])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out", type=pathlib.Path, help="output directory")
    ap.add_argument("--count", type=int, default=10000)
    ap.add_argument("--package-dir", type=pathlib.Path, help="already unpacked mnist-data package")
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    with tempfile.TemporaryDirectory() as tmp:
        pkg = args.package_dir
        if pkg is None:
            subprocess.run(["npm", "pack", "--silent", "mnist-data", "--pack-destination", tmp], check=True,
                           stdout=subprocess.DEVNULL)
            tgz = next(pathlib.Path(tmp).glob("mnist-data-*.tgz"))
            with tarfile.open(tgz) as tar:
                tar.extractall(tmp)
            pkg = pathlib.Path(tmp) / "package"
        head(pkg / "data" / IMAGES, args.out / "images.idx", 2051, args.count)
        head(pkg / "data" / LABELS, args.out / "labels.idx", 2049, args.count)
    print(f"wrote {args.count} images to {args.out}")


if __name__ == "__main__":
    main()
