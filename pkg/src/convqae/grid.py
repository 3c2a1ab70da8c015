"""Binary and grayscale images on a periodic pixel lattice.

Images are plain numpy arrays indexed ``[y, x]``. Binary images hold ``0`` for
white and ``1`` for black; pixel ``(x, y)`` is spin ``y * width + x``.
White maps to spin ``+1`` and black to ``-1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

WHITE = 0
BLACK = 1


def check_binary_image(image, min_size: int = 1) -> np.ndarray:
    """Validate a 2-D 0/1 image and return it as ``uint8``."""
    img = np.asarray(image)
    if img.ndim != 2:
        raise ValueError(f"expected a 2-D image, got shape {img.shape}")
    if min(img.shape) < min_size:
        raise ValueError(
            f"image must be at least {min_size}x{min_size}, got {img.shape[1]}x{img.shape[0]}"
        )
    if img.size and not np.all((img == WHITE) | (img == BLACK)):
        raise ValueError("binary image pixels must be 0 (white) or 1 (black)")
    return img.astype(np.uint8, copy=False)


def check_gray_image(image) -> np.ndarray:
    img = np.asarray(image, dtype=float)
    if img.ndim != 2 or img.size == 0:
        raise ValueError(f"expected a non-empty 2-D image, got shape {img.shape}")
    if np.any(img < 0) or np.any(img > 1) or not np.all(np.isfinite(img)):
        raise ValueError("gray intensities must lie in [0, 1]")
    return img


def image_to_spins(image) -> np.ndarray:
    """Row-major spins: white -> +1, black -> -1."""
    img = check_binary_image(image)
    return (1 - 2 * img.ravel().astype(np.int8)).astype(np.int8)


def spins_to_image(spins, width: int, height: int) -> np.ndarray:
    s = np.asarray(spins).reshape(height, width)
    return (s < 0).astype(np.uint8)


@dataclass(frozen=True)
class NeighborGraph:
    """Four-neighbour lattice with periodic wrap in both axes.

    ``right[i]`` and ``down[i]`` give, for cell ``i``, the edge index joining it
    to its right and lower neighbour. On grids narrower than 3 cells some of
    those coincide or would be self loops; self loops are dropped (index -1).
    """

    width: int
    height: int
    edges: np.ndarray = field(repr=False)
    right: np.ndarray = field(repr=False)
    down: np.ndarray = field(repr=False)

    @classmethod
    def torus(cls, width: int, height: int) -> "NeighborGraph":
        if width < 1 or height < 1:
            raise ValueError("grid dimensions must be positive")
        index: dict[tuple[int, int], int] = {}
        n = width * height
        right = np.full(n, -1, dtype=np.int64)
        down = np.full(n, -1, dtype=np.int64)
        pairs = []
        for y in range(height):
            for x in range(width):
                i = y * width + x
                for j, slot in (
                    (y * width + (x + 1) % width, right),
                    (((y + 1) % height) * width + x, down),
                ):
                    if i == j:
                        continue
                    key = (min(i, j), max(i, j))
                    if key not in index:
                        index[key] = len(pairs)
                        pairs.append(key)
                    slot[i] = index[key]
        order = sorted(range(len(pairs)), key=lambda k: pairs[k])
        rank = np.empty(len(pairs), dtype=np.int64)
        rank[order] = np.arange(len(pairs))
        edges = np.array([pairs[k] for k in order], dtype=np.int64).reshape(-1, 2)
        right = np.where(right >= 0, rank[np.maximum(right, 0)], -1)
        down = np.where(down >= 0, rank[np.maximum(down, 0)], -1)
        return cls(width, height, edges, right, down)

    @property
    def num_nodes(self) -> int:
        return self.width * self.height

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.num_nodes)


@dataclass
class WeightSet:
    """Couplings on the edges of a :class:`NeighborGraph`."""

    graph: NeighborGraph
    values: np.ndarray
    converged: bool = True
    epochs: int = 0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.graph.num_edges,):
            raise ValueError(
                f"expected {self.graph.num_edges} weights, got {self.values.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("weights must be finite")

    @property
    def shape(self) -> tuple[int, int]:
        return self.graph.height, self.graph.width

    def couplings(self) -> dict[tuple[int, int], float]:
        return {
            (int(i), int(j)): float(w) for (i, j), w in zip(self.graph.edges, self.values)
        }

    def copy(self) -> "WeightSet":
        return WeightSet(self.graph, self.values.copy(), self.converged, self.epochs)
