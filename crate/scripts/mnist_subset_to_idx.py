"""Convert the 5,000-image MNIST subset bundled with mlxtend into gzipped IDX files.

Usage: python3 scripts/mnist_subset_to_idx.py <mlxtend wheel or mnist_5k.csv.gz> <out dir>
"""
import gzip
import struct
import sys
import zipfile
from pathlib import Path


def load_rows(src: Path):
    if src.suffix == ".whl":
        raw = zipfile.ZipFile(src).read("mlxtend/data/data/mnist_5k.csv.gz")
    else:
        raw = src.read_bytes()
    text = gzip.decompress(raw).decode()
    for line in text.strip().splitlines():
        cols = [int(float(v)) for v in line.split(",")]
        yield cols[:-1], cols[-1]


def main():
    src, out = Path(sys.argv[1]), Path(sys.argv[2])
    out.mkdir(parents=True, exist_ok=True)
    rows = list(load_rows(src))
    images = bytearray(struct.pack(">IIII", 0x803, len(rows), 28, 28))
    labels = bytearray(struct.pack(">II", 0x801, len(rows)))
    for pixels, label in rows:
        assert len(pixels) == 784
        images.extend(bytes(pixels))
        labels.append(label)
    # mtime=0 keeps the archives byte-stable across regenerations
    with open(out / "images-idx3-ubyte.gz", "wb") as f:
        f.write(gzip.compress(bytes(images), mtime=0))
    with open(out / "labels-idx1-ubyte.gz", "wb") as f:
        f.write(gzip.compress(bytes(labels), mtime=0))
    print(f"wrote {len(rows)} images to {out}")


if __name__ == "__main__":
    main()
