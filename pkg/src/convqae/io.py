"""File formats: text grids, plain PGM, MNIST IDX, CSV tables and run manifests."""

from __future__ import annotations

import csv
import gzip
import os
import struct
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .convfilter import PATCH, PatchWeightStore
from .grid import NeighborGraph, WeightSet, check_binary_image, check_gray_image

IDX_IMAGE_MAGIC = 2051
IDX_LABEL_MAGIC = 2049
DATA_DIR_ENV = "CONVQAE_DATA_DIR"


class ParseError(ValueError):
    """Malformed input file; ``line`` is 1-based when known."""

    def __init__(self, message: str, path=None, line: int | None = None):
        where = str(path) if path is not None else "<input>"
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {message}")
        self.path = path
        self.line = line


# -- text grid -------------------------------------------------------------------


def read_grid(path) -> np.ndarray:
    """Read ``W H`` followed by ``H`` rows of ``W`` tokens (0 white, 1 black)."""
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise ParseError("empty file", path, 1)
    header = lines[0].split()
    if len(header) != 2 or not all(t.isdigit() for t in header):
        raise ParseError(f"header must be 'W H', got {lines[0]!r}", path, 1)
    w, h = int(header[0]), int(header[1])
    if w < 1 or h < 1:
        raise ParseError("grid dimensions must be positive", path, 1)
    rows = []
    for k in range(h):
        lineno = k + 2
        if lineno > len(lines):
            raise ParseError(f"expected {h} rows, file ends after {k}", path, lineno)
        tokens = lines[lineno - 1].split()
        if len(tokens) != w:
            raise ParseError(f"expected {w} tokens, got {len(tokens)}", path, lineno)
        bad = [t for t in tokens if t not in ("0", "1")]
        if bad:
            raise ParseError(f"invalid pixel token {bad[0]!r}", path, lineno)
        rows.append([int(t) for t in tokens])
    extra = [i for i, ln in enumerate(lines[h + 1 :], start=h + 2) if ln.strip()]
    if extra:
        raise ParseError("unexpected content after the last row", path, extra[0])
    return np.array(rows, dtype=np.uint8)


def write_grid(path, image) -> None:
    img = check_binary_image(image)
    h, w = img.shape
    body = "\n".join(" ".join(str(int(v)) for v in row) for row in img)
    Path(path).write_text(f"{w} {h}\n{body}\n")


# -- plain PGM -----------------------------------------------------------------------


def _pgm_tokens(text: str):
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0]
        for tok in line.split():
            yield lineno, tok


def read_pgm(path) -> np.ndarray:
    """Read an ASCII ``P2`` PGM with maxval 255 into intensities in [0, 1]."""
    tokens = list(_pgm_tokens(Path(path).read_text(errors="replace")))
    if not tokens:
        raise ParseError("empty file", path, 1)
    lineno, magic = tokens[0]
    if magic != "P2":
        raise ParseError(f"unsupported magic {magic!r} (only plain P2)", path, lineno)
    if len(tokens) < 4:
        raise ParseError("truncated header", path, tokens[-1][0])
    try:
        w, h, maxval = (int(t) for _, t in tokens[1:4])
    except ValueError:
        raise ParseError("non-integer header field", path, tokens[1][0]) from None
    if maxval != 255:
        raise ParseError(f"maxval must be 255, got {maxval}", path, tokens[3][0])
    if w < 1 or h < 1:
        raise ParseError("image dimensions must be positive", path, tokens[1][0])
    body = tokens[4:]
    if len(body) < w * h:
        raise ParseError(
            f"expected {w * h} pixel values, got {len(body)}",
            path,
            body[-1][0] if body else tokens[3][0],
        )
    values = []
    for lineno, tok in body[: w * h]:
        if not tok.isdigit() or int(tok) > 255:
            raise ParseError(f"invalid pixel value {tok!r}", path, lineno)
        values.append(int(tok))
    if len(body) > w * h:
        raise ParseError("unexpected data after pixel values", path, body[w * h][0])
    return np.array(values, dtype=float).reshape(h, w) / 255.0


def write_pgm(path, image) -> None:
    img = check_gray_image(image)
    h, w = img.shape
    vals = np.rint(img * 255).astype(int)
    rows = "\n".join(" ".join(str(v) for v in row) for row in vals)
    Path(path).write_text(f"P2\n{w} {h}\n255\n{rows}\n")


def binary_to_gray(image) -> np.ndarray:
    """Black pixels become intensity 1 (ink), white pixels 0."""
    return check_binary_image(image).astype(float)


# -- MNIST IDX ---------------------------------------------------------------------


def _read_bytes(path) -> bytes:
    path = Path(path)
    if path.suffix == ".gz":
        with gzip.open(path, "rb") as fh:
            return fh.read()
    return path.read_bytes()


def read_idx_images(path) -> np.ndarray:
    """All images of an IDX3 file as ``uint8`` of shape ``(n, rows, cols)``."""
    raw = _read_bytes(path)
    if len(raw) < 16:
        raise ParseError("truncated IDX image header", path)
    magic, n, rows, cols = struct.unpack(">iiii", raw[:16])
    if magic != IDX_IMAGE_MAGIC:
        raise ParseError(f"bad image magic {magic} (expected {IDX_IMAGE_MAGIC})", path)
    need = n * rows * cols
    if len(raw) - 16 < need:
        raise ParseError(f"truncated payload: need {need} bytes, have {len(raw) - 16}", path)
    return np.frombuffer(raw, dtype=np.uint8, count=need, offset=16).reshape(n, rows, cols)


def read_idx_labels(path) -> np.ndarray:
    raw = _read_bytes(path)
    if len(raw) < 8:
        raise ParseError("truncated IDX label header", path)
    magic, n = struct.unpack(">ii", raw[:8])
    if magic != IDX_LABEL_MAGIC:
        raise ParseError(f"bad label magic {magic} (expected {IDX_LABEL_MAGIC})", path)
    if len(raw) - 8 < n:
        raise ParseError(f"truncated payload: need {n} labels, have {len(raw) - 8}", path)
    return np.frombuffer(raw, dtype=np.uint8, count=n, offset=8)


def read_mnist_idx(
    images_path, labels_path, count: int | None = None, offset: int = 0
) -> list[tuple[np.ndarray, int]]:
    """``(image, label)`` pairs with intensities scaled to [0, 1]."""
    images = read_idx_images(images_path)
    labels = read_idx_labels(labels_path)
    if len(images) != len(labels):
        raise ParseError(
            f"{len(images)} images but {len(labels)} labels", labels_path
        )
    if count is None:
        count = len(images) - offset
    if offset < 0 or count < 0 or offset + count > len(images):
        raise ParseError(
            f"range [{offset}, {offset + count}) outside {len(images)} records",
            images_path,
        )
    sl = slice(offset, offset + count)
    return [(img.astype(float) / 255.0, int(lab)) for img, lab in zip(images[sl], labels[sl])]


def write_idx_images(path, images) -> None:
    arr = np.asarray(images, dtype=np.uint8)
    n, rows, cols = arr.shape
    payload = struct.pack(">iiii", IDX_IMAGE_MAGIC, n, rows, cols) + arr.tobytes()
    _write_bytes(path, payload)


def write_idx_labels(path, labels) -> None:
    arr = np.asarray(labels, dtype=np.uint8)
    _write_bytes(path, struct.pack(">ii", IDX_LABEL_MAGIC, len(arr)) + arr.tobytes())


def _write_bytes(path, payload: bytes) -> None:
    path = Path(path)
    if path.suffix == ".gz":
        # mtime=0 keeps the output byte-identical across runs
        with open(path, "wb") as raw, gzip.GzipFile(fileobj=raw, mode="wb", mtime=0) as fh:
            fh.write(payload)
    else:
        path.write_bytes(payload)


_IDX_NAMES = {
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
}


def find_mnist(split: str = "test", data_dir=None) -> tuple[Path, Path]:
    """Locate IDX files for ``split`` in ``data_dir`` or ``$CONVQAE_DATA_DIR``.

    Both the raw and the ``.gz`` file names are accepted.
    """
    base = data_dir or os.environ.get(DATA_DIR_ENV)
    if not base:
        raise FileNotFoundError(f"no data directory given and ${DATA_DIR_ENV} is unset")
    found = []
    for name in _IDX_NAMES[split]:
        for cand in (Path(base) / name, Path(base) / f"{name}.gz"):
            if cand.exists():
                found.append(cand)
                break
        else:
            raise FileNotFoundError(f"{name}[.gz] not found in {base}")
    return found[0], found[1]


def first_per_class(
    records: Sequence[tuple[np.ndarray, int]], classes: Iterable[int], per_class: int
) -> list[tuple[np.ndarray, int]]:
    """The first ``per_class`` records of each class, in class order."""
    out = []
    for c in classes:
        picked = [r for r in records if r[1] == c][:per_class]
        if len(picked) < per_class:
            raise ValueError(f"only {len(picked)} images of class {c}")
        out.extend(picked)
    return out


# -- CSV and manifests -------------------------------------------------------------------

STATS_HEADER = ("trial", "wrong_pixels", "complete")
FEATURES_HEADER = ("label", "f_right", "f_down")
BENCH_HEADER = ("mode", "n", "seconds")


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError("empty CSV", path, 1)
    return rows[0], rows[1:]


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if v is None:
        return ""
    return v


def write_manifest(path, params: dict) -> None:
    """Flat ``key = value`` text, keys sorted."""
    lines = [f"{k} = {_manifest_value(v)}" for k, v in sorted(params.items())]
    Path(path).write_text("\n".join(lines) + "\n")


def _manifest_value(v) -> str:
    s = repr(float(v)) if isinstance(v, float) else str(v)
    if "\n" in s:
        raise ValueError("manifest values must be single-line")
    return s


def read_manifest(path) -> dict[str, str]:
    """Parse ``key = value`` lines; blank lines and ``#`` comments are skipped.

    Values come back as strings; callers convert them.
    """
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {line!r}", path, lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ParseError("empty key", path, lineno)
        out[key] = value
    return out


# -- weight files ------------------------------------------------------------------

WEIGHTS_MAGIC = "convqae-weights"
STORE_MAGIC = "convqae-store"
FORMAT_VERSION = 1


def _check_header(lines, magic, path):
    if not lines:
        raise ParseError("empty file", path, 1)
    head = lines[0].split()
    if len(head) != 2 or head[0] != magic:
        raise ParseError(f"expected '{magic} <version>' header", path, 1)
    if head[1] != str(FORMAT_VERSION):
        raise ParseError(f"unsupported format version {head[1]!r}", path, 1)


def _ints(tokens, path, lineno, what):
    try:
        return [int(t) for t in tokens]
    except ValueError:
        raise ParseError(f"non-integer {what}", path, lineno) from None


def _floats(tokens, path, lineno):
    try:
        vals = [float(t) for t in tokens]
    except ValueError:
        raise ParseError("non-numeric weight", path, lineno) from None
    if not all(np.isfinite(vals)):
        raise ParseError("weights must be finite", path, lineno)
    return vals


def write_weights(path, weights: WeightSet) -> None:
    """Whole-image weights: header, ``W H converged epochs``, one ``i j w`` per edge."""
    g = weights.graph
    lines = [
        f"{WEIGHTS_MAGIC} {FORMAT_VERSION}",
        f"{g.width} {g.height} {int(weights.converged)} {weights.epochs}",
    ]
    lines += [f"{i} {j} {float(w)!r}" for (i, j), w in zip(g.edges, weights.values)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_weights(path) -> WeightSet:
    lines = Path(path).read_text().splitlines()
    _check_header(lines, WEIGHTS_MAGIC, path)
    if len(lines) < 2:
        raise ParseError("missing dimension line", path, 2)
    dims = lines[1].split()
    if len(dims) != 4:
        raise ParseError("expected 'W H converged epochs'", path, 2)
    w, h, conv, epochs = _ints(dims, path, 2, "dimension")
    if w < 3 or h < 3:
        raise ParseError("weights need a grid of at least 3x3", path, 2)
    graph = NeighborGraph.torus(w, h)
    body = [(k, ln) for k, ln in enumerate(lines[2:], start=3) if ln.strip()]
    if len(body) != graph.num_edges:
        raise ParseError(
            f"expected {graph.num_edges} edge lines, got {len(body)}", path, len(lines)
        )
    values = np.empty(graph.num_edges)
    for k, (lineno, line) in enumerate(body):
        tok = line.split()
        if len(tok) != 3:
            raise ParseError("expected 'i j weight'", path, lineno)
        i, j = _ints(tok[:2], path, lineno, "node index")
        if (i, j) != tuple(graph.edges[k]):
            raise ParseError(f"edge ({i}, {j}) out of order or not in the grid", path, lineno)
        values[k] = _floats(tok[2:], path, lineno)[0]
    return WeightSet(graph, values, converged=bool(conv), epochs=epochs)


def write_store(path, store) -> None:
    """Patch store: header, ``W H``, then ``x y w_0 .. w_17 converged`` per pixel."""
    lines = [f"{STORE_MAGIC} {FORMAT_VERSION}", f"{store.width} {store.height}"]
    for x, y in store.centers():
        ws = store[(x, y)]
        vals = " ".join(repr(float(v)) for v in ws.values)
        lines.append(f"{x} {y} {vals} {int(ws.converged)}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_store(path):
    lines = Path(path).read_text().splitlines()
    _check_header(lines, STORE_MAGIC, path)
    if len(lines) < 2 or len(lines[1].split()) != 2:
        raise ParseError("expected 'W H'", path, 2)
    w, h = _ints(lines[1].split(), path, 2, "dimension")
    graph = NeighborGraph.torus(PATCH, PATCH)
    weights = {}
    for lineno, line in enumerate(lines[2:], start=3):
        tok = line.split()
        if not tok:
            continue
        if len(tok) != graph.num_edges + 3:
            raise ParseError(
                f"expected {graph.num_edges + 3} fields, got {len(tok)}", path, lineno
            )
        x, y = _ints(tok[:2], path, lineno, "coordinate")
        if not (0 <= x < w and 0 <= y < h):
            raise ParseError(f"centre ({x}, {y}) outside {w}x{h}", path, lineno)
        if (x, y) in weights:
            raise ParseError(f"duplicate centre ({x}, {y})", path, lineno)
        if tok[-1] not in ("0", "1"):
            raise ParseError("convergence flag must be 0 or 1", path, lineno)
        vals = np.array(_floats(tok[2:-1], path, lineno))
        weights[(x, y)] = WeightSet(graph, vals, converged=tok[-1] == "1")
    if len(weights) != w * h:
        raise ParseError(f"expected {w * h} records, got {len(weights)}", path, len(lines))
    return PatchWeightStore(w, h, weights)
