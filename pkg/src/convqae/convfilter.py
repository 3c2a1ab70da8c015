"""Sliding 3x3 filter: denoise images of any size with 9-qubit solves.

Every pixel gets its own 3x3 patch (periodic wrap over the full image) and
its own weights trained on that patch of the clean image. The output pixel is
the centre of the denoised patch, so an image of ``n`` pixels costs ``n``
independent 9-spin solves.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from joblib import Parallel, delayed
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import autoencoder
from .adiabatic import DEFAULT_SCHEDULE, DEFAULT_SHOTS, Schedule
from .autoencoder import RestorationStats, TrainConfig, inject_noise
from .grid import WeightSet, check_binary_image

PATCH = 3
CENTER = (PATCH * PATCH) // 2


def extract_patch(image, x: int, y: int) -> np.ndarray:
    """3x3 window centred on ``(x, y)``, wrapping around the image borders."""
    img = check_binary_image(image)
    h, w = img.shape
    if not (0 <= x < w and 0 <= y < h):
        raise IndexError(f"centre ({x}, {y}) outside {w}x{h} image")
    rows = [(y + d) % h for d in (-1, 0, 1)]
    cols = [(x + d) % w for d in (-1, 0, 1)]
    return img[np.ix_(rows, cols)]


def patch_seed(base_seed: int, x: int, y: int) -> int:
    """Fixed hash of ``(base_seed, x, y)`` used to decorrelate patches."""
    return int(np.random.SeedSequence([base_seed, x, y]).generate_state(1)[0])


@dataclass
class PatchWeightStore:
    """Per-centre weights for an image of ``width`` x ``height`` pixels."""

    width: int
    height: int
    weights: dict[tuple[int, int], WeightSet] = field(repr=False)

    def __post_init__(self):
        expected = {(x, y) for y in range(self.height) for x in range(self.width)}
        if set(self.weights) != expected:
            raise ValueError("store must hold exactly one weight set per pixel")
        for ws in self.weights.values():
            if ws.graph.num_edges != 2 * PATCH * PATCH or ws.shape != (PATCH, PATCH):
                raise ValueError("every stored weight set must be a 3x3 torus")

    def __getitem__(self, key: tuple[int, int]) -> WeightSet:
        return self.weights[key]

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def shape(self) -> tuple[int, int]:
        return self.height, self.width

    def converged(self) -> np.ndarray:
        """``(height, width)`` boolean map of per-patch convergence."""
        out = np.zeros(self.shape, dtype=bool)
        for (x, y), ws in self.weights.items():
            out[y, x] = ws.converged
        return out

    def centers(self):
        return [(x, y) for y in range(self.height) for x in range(self.width)]


def _train_one(original, x, y, config):
    cfg = replace(config, seed=patch_seed(config.seed, x, y))
    return autoencoder.train_weights(extract_patch(original, x, y), cfg)


def train_patch_weights(
    original, config: TrainConfig = TrainConfig(), n_jobs: int | None = None
) -> PatchWeightStore:
    """Train one 3x3 weight set per pixel of ``original``."""
    img = check_binary_image(original)
    h, w = img.shape
    centers = [(x, y) for y in range(h) for x in range(w)]
    results = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(_train_one)(img, x, y, config) for x, y in centers
    )
    return PatchWeightStore(w, h, dict(zip(centers, results)))


def _denoise_center(noisy, store, x, y, schedule, shots, seed, field_x):
    out = autoencoder.denoise(
        extract_patch(noisy, x, y),
        store[(x, y)],
        schedule,
        shots,
        patch_seed(seed, x, y),
        field_x,
    )
    return out.flat[CENTER]


def conv_denoise(
    noisy,
    store: PatchWeightStore,
    schedule: Schedule = DEFAULT_SCHEDULE,
    shots: int = DEFAULT_SHOTS,
    seed: int = 0,
    field_x: float = 1.0,
    n_jobs: int | None = None,
) -> np.ndarray:
    """Denoise every patch independently and keep the centre pixels."""
    img = check_binary_image(noisy)
    if img.shape != store.shape:
        raise ValueError(
            f"noisy image is {img.shape[1]}x{img.shape[0]}, "
            f"store is for {store.width}x{store.height}"
        )
    centers = store.centers()
    pixels = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(_denoise_center)(img, store, x, y, schedule, shots, seed, field_x)
        for x, y in centers
    )
    return np.array(pixels, dtype=np.uint8).reshape(img.shape)


def evaluate_conv_restoration(
    original,
    store: PatchWeightStore,
    noise_rate: float,
    trials: int,
    tolerance: int = 0,
    schedule: Schedule = DEFAULT_SCHEDULE,
    shots: int = DEFAULT_SHOTS,
    base_seed: int = 0,
    n_jobs: int | None = None,
) -> RestorationStats:
    """Fresh noise each trial, denoised with the same patch store."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    img = check_binary_image(original)
    wrong = []
    for t in range(trials):
        noise_seed, solve_seed = autoencoder._trial_seeds(base_seed, t)
        noisy = inject_noise(img, noise_rate, noise_seed)
        out = conv_denoise(noisy, store, schedule, shots, solve_seed, n_jobs=n_jobs)
        wrong.append(int(np.sum(out != img)))
    return RestorationStats(np.array(wrong), tolerance, [base_seed + t for t in range(trials)])


def evaluate_retrained_conv_restoration(
    original,
    config: TrainConfig,
    noise_rate: float,
    trials: int,
    tolerance: int = 0,
    base_seed: int = 0,
    n_jobs: int | None = None,
) -> RestorationStats:
    """Every trial trains a fresh store with seed ``config.seed + t``."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    img = check_binary_image(original)
    wrong = []
    for t in range(trials):
        cfg = replace(config, seed=config.seed + t)
        store = train_patch_weights(img, cfg, n_jobs=n_jobs)
        noise_seed, solve_seed = autoencoder._trial_seeds(base_seed, t)
        noisy = inject_noise(img, noise_rate, noise_seed)
        out = conv_denoise(
            noisy, store, cfg.schedule, cfg.shots, solve_seed, cfg.field_x, n_jobs
        )
        wrong.append(int(np.sum(out != img)))
    return RestorationStats(np.array(wrong), tolerance, [base_seed + t for t in range(trials)])


class ConvolutionalQuantumAutoencoder(TransformerMixin, BaseEstimator):
    """Estimator wrapper around :func:`train_patch_weights` / :func:`conv_denoise`."""

    def __init__(
        self,
        learning_rate=autoencoder.DEFAULT_LEARNING_RATE,
        init_range=1.0,
        max_epochs=100,
        train_noise_rate=0.0,
        num_steps=DEFAULT_SCHEDULE.num_steps,
        total_time=DEFAULT_SCHEDULE.total_time,
        field_x=1.0,
        shots=DEFAULT_SHOTS,
        random_state=0,
        n_jobs=None,
    ):
        self.learning_rate = learning_rate
        self.init_range = init_range
        self.max_epochs = max_epochs
        self.train_noise_rate = train_noise_rate
        self.num_steps = num_steps
        self.total_time = total_time
        self.field_x = field_x
        self.shots = shots
        self.random_state = random_state
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        X = check_binary_image(X)
        config = TrainConfig(
            learning_rate=self.learning_rate,
            init_range=self.init_range,
            max_epochs=self.max_epochs,
            train_noise_rate=self.train_noise_rate,
            schedule=Schedule(self.num_steps, self.total_time),
            shots=self.shots,
            field_x=self.field_x,
            seed=self.random_state,
        )
        self.store_ = train_patch_weights(X, config, n_jobs=self.n_jobs)
        self.image_shape_ = X.shape
        return self

    def transform(self, X):
        check_is_fitted(self, "store_")
        X = np.asarray(X)
        single = X.ndim == 2
        stack = X[None] if single else X
        if stack.ndim != 3 or stack.shape[1:] != self.image_shape_:
            raise ValueError(
                f"expected images of shape {self.image_shape_}, got {X.shape}"
            )
        schedule = Schedule(self.num_steps, self.total_time)
        out = np.stack(
            [
                conv_denoise(
                    img, self.store_, schedule, self.shots,
                    self.random_state + k, self.field_x, self.n_jobs,
                )
                for k, img in enumerate(stack)
            ]
        )
        return out[0] if single else out
