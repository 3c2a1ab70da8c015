"""Build the small MNIST fixture in ``tests/data`` from a CSV dump.

The CSV has one image per row: 784 intensities (0-255) followed by the label.
The first ``--per-class`` images of every digit are written as gzipped IDX
files with the standard training-split names (the dump comes from the training split), so the fixture directory can be used
directly as ``$CONVQAE_DATA_DIR``.

    python scripts/make_mnist_fixture.py mnist_5k.csv tests/data --per-class 30
"""

import argparse
from pathlib import Path

import numpy as np

from convqae import io


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("csv")
    parser.add_argument("outdir")
    parser.add_argument("--per-class", type=int, default=30)
    args = parser.parse_args(argv)

    data = np.loadtxt(args.csv, delimiter=",", dtype=np.int64)
    images = data[:, :784].reshape(-1, 28, 28)
    labels = data[:, 784]
    keep = np.concatenate(
        [np.flatnonzero(labels == c)[: args.per_class] for c in range(10)]
    )
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    io.write_idx_images(out / "train-images-idx3-ubyte.gz", images[keep])
    io.write_idx_labels(out / "train-labels-idx1-ubyte.gz", labels[keep])
    print(f"wrote {len(keep)} images to {out}")


if __name__ == "__main__":
    main()
