"""Two-number image features from neighbour couplings, plus a PCA baseline.

Couplings are set straight from the image (``W_ij = 0.1 * s_i * s_j``) and
summed over every cell's right edge and every cell's down edge. Because only
products of neighbouring spins enter, the features measure how much
neighbouring pixels agree, not how much ink there is: inverting every pixel
leaves them unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .grid import (
    BLACK,
    WHITE,
    NeighborGraph,
    WeightSet,
    check_binary_image,
    check_gray_image,
    image_to_spins,
)

COUPLING_SCALE = 0.1


class RankError(ValueError):
    """The dataset has no variance to project."""


@dataclass(frozen=True)
class FeaturePoint:
    f_right: float
    f_down: float
    label: Optional[int] = None

    def __post_init__(self):
        if not (np.isfinite(self.f_right) and np.isfinite(self.f_down)):
            raise ValueError("feature coordinates must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.f_right, self.f_down])


def binarize(image, threshold: float = 0.5) -> np.ndarray:
    """Intensities strictly above ``threshold`` become black (ink)."""
    if not 0 <= threshold <= 1:
        raise ValueError(f"threshold must lie in [0, 1], got {threshold}")
    img = check_gray_image(image)
    return np.where(img > threshold, BLACK, WHITE).astype(np.uint8)


def weights_from_image(image) -> WeightSet:
    img = check_binary_image(image, min_size=3)
    graph = NeighborGraph.torus(img.shape[1], img.shape[0])
    s = image_to_spins(img)
    values = COUPLING_SCALE * s[graph.edges[:, 0]] * s[graph.edges[:, 1]]
    return WeightSet(graph, values.astype(float))


def reduce_to_2d(image, label: Optional[int] = None) -> FeaturePoint:
    """Sum of right-edge and down-edge couplings over all cells."""
    ws = weights_from_image(image)
    g = ws.graph
    return FeaturePoint(
        float(ws.values[g.right].sum()), float(ws.values[g.down].sum()), label
    )


@dataclass
class PCAResult:
    points: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray
    mean: np.ndarray

    def reconstruction_error(self, data) -> float:
        """Mean squared error of reconstructing ``data`` from the projection."""
        X = np.asarray(data, dtype=float).reshape(len(data), -1)
        centered = X - self.mean
        approx = (centered @ self.components.T) @ self.components
        return float(np.mean((centered - approx) ** 2))


def pca_project(dataset: Sequence, k: int = 2) -> PCAResult:
    """Project onto the top-``k`` eigenvectors of the sample covariance.

    Each eigenvector's sign is chosen so its largest-magnitude entry is
    positive.
    """
    if len(dataset) < 2:
        raise ValueError("PCA needs at least two images")
    shapes = {np.shape(img) for img in dataset}
    if len(shapes) != 1:
        raise ValueError(f"images differ in shape: {sorted(shapes)}")
    X = np.asarray(dataset, dtype=float).reshape(len(dataset), -1)
    if not 1 <= k <= X.shape[1]:
        raise ValueError(f"k must lie in 1..{X.shape[1]}")
    mean = X.mean(axis=0)
    centered = X - mean
    if np.allclose(centered, 0):
        raise RankError("dataset has zero variance")
    cov = centered.T @ centered / (len(X) - 1)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1][:k]
    comps = evecs[:, order].T
    pivot = np.argmax(np.abs(comps), axis=1)
    comps *= np.sign(comps[np.arange(k), pivot])[:, None]
    return PCAResult(centered @ comps.T, comps, evals[order], mean)


def centroid_classify(points, labels) -> float:
    """Leave-one-out nearest-centroid accuracy (Euclidean; ties go to the lower label).

    A held-out point whose class has no other members cannot be matched and
    counts as an error.
    """
    P = np.asarray(points, dtype=float)
    y = np.asarray(labels)
    if P.ndim != 2 or len(P) != len(y):
        raise ValueError("points must be (n, d) with one label per point")
    classes = np.unique(y)
    if len(classes) < 2:
        raise ValueError("need at least two classes")
    sums = np.stack([P[y == c].sum(axis=0) for c in classes])
    counts = np.array([np.sum(y == c) for c in classes], dtype=float)
    correct = 0
    for i in range(len(P)):
        ci = np.searchsorted(classes, y[i])
        s = sums.copy()
        n = counts.copy()
        s[ci] -= P[i]
        n[ci] -= 1
        valid = n > 0
        centroids = s[valid] / n[valid, None]
        d = np.linalg.norm(centroids - P[i], axis=1)
        pred = classes[valid][int(np.argmin(d))]
        correct += pred == y[i]
    return correct / len(P)


class CouplingReducer(TransformerMixin, BaseEstimator):
    """Map images to ``(f_right, f_down)``; gray inputs are binarized first."""

    def __init__(self, threshold=0.5):
        self.threshold = threshold

    def fit(self, X, y=None):
        X = self._as_binary(X)
        self.image_shape_ = X.shape[1:]
        return self

    def transform(self, X):
        check_is_fitted(self, "image_shape_")
        X = self._as_binary(X)
        if X.shape[1:] != self.image_shape_:
            raise ValueError(f"expected images of shape {self.image_shape_}")
        return np.array([reduce_to_2d(img).as_array() for img in X])

    def _as_binary(self, X):
        X = np.asarray(X)
        if X.ndim == 2:
            X = X[None]
        if X.ndim != 3:
            raise ValueError(f"expected (n, H, W) images, got shape {X.shape}")
        if np.issubdtype(X.dtype, np.integer) and np.all((X == 0) | (X == 1)):
            return X.astype(np.uint8)
        return np.stack([binarize(img, self.threshold) for img in X])
